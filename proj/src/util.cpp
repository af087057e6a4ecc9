// Copyright 2026 The vemul Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vemul/util.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <random>
#include <sstream>

#include "vemul/errors.hpp"

namespace vemul {

const char *errc_name(Errc c) {
  switch (c) {
    case Errc::duplicate_name: return "duplicate-name";
    case Errc::invalid_spec: return "invalid-spec";
    case Errc::unknown_endpoint: return "unknown-endpoint";
    case Errc::duplicate_tunnel_key: return "duplicate-tunnel-key";
    case Errc::self_loop: return "self-loop";
    case Errc::size_too_small: return "size-too-small";
    case Errc::engine_unreachable: return "engine-unreachable";
    case Errc::image_not_found: return "image-not-found";
    case Errc::name_conflict: return "name-conflict";
    case Errc::limit_rejected: return "limit-rejected";
    case Errc::node_not_running: return "node-not-running";
    case Errc::exec_timeout: return "timeout";
    case Errc::invalid_state: return "invalid-state";
    case Errc::namespace_unresolvable: return "namespace-unresolvable";
    case Errc::ifname_collision: return "ifname-collision";
    case Errc::privilege_denied: return "privilege-denied";
    case Errc::key_in_use: return "key-in-use";
    case Errc::peer_unreachable: return "peer-unreachable";
    case Errc::subnet_exhausted: return "subnet-exhausted";
    case Errc::already_destroyed: return "already-destroyed";
    case Errc::no_such_switch: return "no-such-switch";
    case Errc::no_such_bridge: return "no-such-bridge";
    case Errc::controller_connect_timeout: return "controller-connect-timeout";
    case Errc::no_such_node: return "no-such-node";
    case Errc::not_a_controller: return "node-not-a-controller";
    case Errc::unknown_node: return "unknown-node";
    case Errc::precondition_failed: return "precondition-failed";
    case Errc::rollback_failed: return "rollback-failed";
    case Errc::unreachable: return "unreachable";
    case Errc::tool_missing: return "tool-missing";
    case Errc::out_of_resources: return "out-of-resources";
    case Errc::schema_violation: return "schema-violation";
    case Errc::io_failure: return "io-failure";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

}  // namespace vemul

namespace vemul::util {

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> tokenize(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quote = false, have = false;
  for (char c : line) {
    if (c == '"') {
      in_quote = !in_quote;
      have = true;
      continue;
    }
    if (!in_quote && std::isspace(static_cast<unsigned char>(c))) {
      if (have || !cur.empty()) out.push_back(cur);
      cur.clear();
      have = false;
      continue;
    }
    cur += c;
  }
  if (have || !cur.empty()) out.push_back(cur);
  return out;
}

std::string trim(const std::string &s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) b++;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) e--;
  return s.substr(b, e - b);
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool starts_with(const std::string &s, const std::string &prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::string join(const std::vector<std::string> &parts, const std::string &sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string fmt_double(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::optional<double> parse_double(const std::string &s) {
  if (s.empty()) return std::nullopt;
  char *end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(const std::string &s) {
  if (s.empty()) return std::nullopt;
  char *end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::optional<uint32_t> parse_ipv4(const std::string &s) {
  auto parts = split(s, '.');
  if (parts.size() != 4) return std::nullopt;
  uint32_t addr = 0;
  for (auto &p : parts) {
    auto v = parse_int(p);
    if (!v || *v < 0 || *v > 255) return std::nullopt;
    addr = (addr << 8) | static_cast<uint32_t>(*v);
  }
  return addr;
}

std::string ipv4_to_string(uint32_t addr) {
  std::ostringstream os;
  os << ((addr >> 24) & 0xff) << '.' << ((addr >> 16) & 0xff) << '.' << ((addr >> 8) & 0xff) << '.'
     << (addr & 0xff);
  return os.str();
}

std::optional<std::pair<uint32_t, int>> parse_cidr(const std::string &s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return std::nullopt;
  auto ip = parse_ipv4(s.substr(0, slash));
  auto prefix = parse_int(s.substr(slash + 1));
  if (!ip || !prefix || *prefix < 0 || *prefix > 32) return std::nullopt;
  return std::make_pair(*ip, static_cast<int>(*prefix));
}

bool same_subnet(uint32_t a, uint32_t b, int prefix) {
  if (prefix <= 0) return true;
  uint32_t mask = prefix >= 32 ? 0xffffffffu : ~((1u << (32 - prefix)) - 1);
  return (a & mask) == (b & mask);
}

uint64_t fnv1a(const std::string &s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(uint64_t v, int digits) {
  static const char *d = "0123456789abcdef";
  std::string out(digits, '0');
  for (int i = digits - 1; i >= 0; --i) {
    out[i] = d[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string random_hex(int digits) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::string out;
  while (static_cast<int>(out.size()) < digits) out += hex(rng(), 16);
  out.resize(digits);
  return out;
}

int64_t mono_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

CmdResult run_cmd(const std::vector<std::string> &argv, int timeout_ms) {
  CmdResult r;
  if (argv.empty()) return r;
  int out_pipe[2], err_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) return r;
  pid_t pid = fork();
  if (pid < 0) return r;
  if (pid == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    close(err_pipe[1]);
    std::vector<char *> cargs;
    cargs.reserve(argv.size() + 1);
    for (auto &a : argv) cargs.push_back(const_cast<char *>(a.c_str()));
    cargs.push_back(nullptr);
    execvp(cargs[0], cargs.data());
    std::fprintf(stderr, "exec %s: %s\n", cargs[0], std::strerror(errno));
    _exit(127);
  }
  close(out_pipe[1]);
  close(err_pipe[1]);
  auto deadline = mono_ms() + timeout_ms;
  struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  bool open_out = true, open_err = true;
  char buf[4096];
  while (open_out || open_err) {
    int left = static_cast<int>(deadline - mono_ms());
    if (left <= 0) {
      kill(pid, SIGKILL);
      break;
    }
    fds[0].fd = open_out ? out_pipe[0] : -1;
    fds[1].fd = open_err ? err_pipe[0] : -1;
    int n = poll(fds, 2, std::min(left, 200));
    if (n < 0 && errno != EINTR) break;
    if (fds[0].revents & (POLLIN | POLLHUP)) {
      ssize_t got = read(out_pipe[0], buf, sizeof(buf));
      if (got > 0)
        r.out.append(buf, static_cast<size_t>(got));
      else
        open_out = false;
    }
    if (fds[1].revents & (POLLIN | POLLHUP)) {
      ssize_t got = read(err_pipe[0], buf, sizeof(buf));
      if (got > 0)
        r.err.append(buf, static_cast<size_t>(got));
      else
        open_err = false;
    }
  }
  close(out_pipe[0]);
  close(err_pipe[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status)) r.exit_code = 128 + WTERMSIG(status);
  return r;
}

}  // namespace vemul::util
