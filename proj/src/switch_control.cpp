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

#include "vemul/switch_control.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <json.hpp>
#include <optional>

#include "vemul/errors.hpp"
#include "vemul/util.hpp"

namespace vemul {

using nlohmann::json;

namespace {

int connect_with_timeout(const std::string &ip, int port, int timeout_ms) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(Errc::io_failure, std::string("socket: ") + strerror(errno));
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<uint16_t>(port));
  if (inet_pton(AF_INET, ip.c_str(), &sa.sin_addr) != 1) {
    ::close(fd);
    throw Error(Errc::unreachable, "bad address " + ip);
  }
  fcntl(fd, F_SETFL, fcntl(fd, F_GETFL, 0) | O_NONBLOCK);
  int rc = ::connect(fd, reinterpret_cast<sockaddr *>(&sa), sizeof(sa));
  if (rc != 0 && errno != EINPROGRESS) {
    ::close(fd);
    return -1;
  }
  if (rc != 0) {
    pollfd p{fd, POLLOUT, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) {
      ::close(fd);
      return -1;
    }
    int err = 0;
    socklen_t len = sizeof(err);
    getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      ::close(fd);
      return -1;
    }
  }
  fcntl(fd, F_SETFL, fcntl(fd, F_GETFL, 0) & ~O_NONBLOCK);
  timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  return fd;
}

// Pulls one complete top-level JSON value off the front of buf, if present.
std::optional<json> take_json(std::string &buf) {
  int depth = 0;
  bool in_str = false, esc = false;
  size_t start = std::string::npos;
  for (size_t i = 0; i < buf.size(); ++i) {
    char c = buf[i];
    if (in_str) {
      if (esc)
        esc = false;
      else if (c == '\\')
        esc = true;
      else if (c == '"')
        in_str = false;
      continue;
    }
    if (c == '"') {
      in_str = true;
    } else if (c == '{' || c == '[') {
      if (depth == 0) start = i;
      depth++;
    } else if (c == '}' || c == ']') {
      depth--;
      if (depth == 0 && start != std::string::npos) {
        std::string one = buf.substr(start, i - start + 1);
        buf.erase(0, i + 1);
        return json::parse(one, nullptr, false);
      }
    }
  }
  return std::nullopt;
}

// Minimal OVSDB JSON-RPC session. Answers server-initiated echo pings so a
// slow transact does not get the connection dropped.
class OvsdbSession {
 public:
  OvsdbSession(const std::string &ip, int port, int timeout_ms) : timeout_ms_(timeout_ms) {
    fd_ = connect_with_timeout(ip, port, timeout_ms);
    if (fd_ < 0)
      throw Error(Errc::unreachable, "ovsdb at " + ip + ":" + std::to_string(port));
  }
  ~OvsdbSession() {
    if (fd_ >= 0) ::close(fd_);
  }
  OvsdbSession(const OvsdbSession &) = delete;
  OvsdbSession &operator=(const OvsdbSession &) = delete;

  json call(const std::string &method, const json &params) {
    int id = next_id_++;
    send_msg(json{{"method", method}, {"params", params}, {"id", id}});
    int64_t deadline = util::mono_ms() + timeout_ms_;
    while (util::mono_ms() < deadline) {
      auto msg = take_json(buf_);
      if (!msg) {
        char chunk[4096];
        ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
        if (n <= 0) throw Error(Errc::unreachable, "ovsdb connection lost");
        buf_.append(chunk, static_cast<size_t>(n));
        continue;
      }
      if (msg->is_discarded()) throw Error(Errc::io_failure, "ovsdb sent malformed json");
      if (msg->value("method", "") == "echo") {
        send_msg(json{{"result", (*msg)["params"]}, {"error", nullptr}, {"id", (*msg)["id"]}});
        continue;
      }
      if (msg->contains("id") && (*msg)["id"] == id) {
        if (msg->contains("error") && !(*msg)["error"].is_null())
          throw Error(Errc::io_failure, "ovsdb error: " + (*msg)["error"].dump());
        return (*msg)["result"];
      }
    }
    throw Error(Errc::unreachable, "ovsdb reply timed out");
  }

 private:
  void send_msg(const json &msg) {
    std::string wire = msg.dump();
    size_t off = 0;
    while (off < wire.size()) {
      ssize_t n = ::send(fd_, wire.data() + off, wire.size() - off, MSG_NOSIGNAL);
      if (n <= 0) throw Error(Errc::unreachable, "ovsdb connection lost");
      off += static_cast<size_t>(n);
    }
  }

  int fd_ = -1;
  int next_id_ = 1;
  int timeout_ms_;
  std::string buf_;
};

// A transact result is one entry per operation; any entry with "error" set
// means that op failed even though the RPC itself succeeded.
void check_transact(const json &result, const std::string &what) {
  if (!result.is_array())
    throw Error(Errc::io_failure, what + ": unexpected transact result " + result.dump());
  for (const auto &op : result) {
    if (op.is_object() && op.contains("error"))
      throw Error(Errc::io_failure, what + ": " + op.dump());
  }
}

int mutate_count(const json &result, size_t index) {
  if (result.is_array() && index < result.size() && result[index].is_object())
    return result[index].value("count", 0);
  return 0;
}

}  // namespace

void OvsdbSwitchControl::create_bridge(const NodeHandle &sw, const std::string &bridge) {
  OvsdbSession s(sw.mgmt_ip, port_, timeout_ms_);
  json params = json::array(
      {"Open_vSwitch",
       json{{"op", "insert"},
            {"table", "Interface"},
            {"row", {{"name", bridge}, {"type", "internal"}}},
            {"uuid-name", "rowif"}},
       json{{"op", "insert"},
            {"table", "Port"},
            {"row", {{"name", bridge}, {"interfaces", json::array({"named-uuid", "rowif"})}}},
            {"uuid-name", "rowport"}},
       json{{"op", "insert"},
            {"table", "Bridge"},
            {"row",
             {{"name", bridge},
              {"ports", json::array({"named-uuid", "rowport"})},
              {"fail_mode", "secure"}}},
            {"uuid-name", "rowbr"}},
       json{{"op", "mutate"},
            {"table", "Open_vSwitch"},
            {"where", json::array()},
            {"mutations",
             json::array({json::array(
                 {"bridges", "insert",
                  json::array({"set", json::array({json::array({"named-uuid", "rowbr"})})})})})}}});
  check_transact(s.call("transact", params), sw.node_name + " create_bridge " + bridge);
}

void OvsdbSwitchControl::add_port(const NodeHandle &sw, const std::string &bridge,
                                  const std::string &ifname) {
  OvsdbSession s(sw.mgmt_ip, port_, timeout_ms_);
  json params = json::array(
      {"Open_vSwitch",
       json{{"op", "insert"},
            {"table", "Interface"},
            {"row", {{"name", ifname}}},
            {"uuid-name", "rowif"}},
       json{{"op", "insert"},
            {"table", "Port"},
            {"row", {{"name", ifname}, {"interfaces", json::array({"named-uuid", "rowif"})}}},
            {"uuid-name", "rowport"}},
       json{{"op", "mutate"},
            {"table", "Bridge"},
            {"where", json::array({json::array({"name", "==", bridge})})},
            {"mutations",
             json::array({json::array(
                 {"ports", "insert",
                  json::array({"set",
                               json::array({json::array({"named-uuid", "rowport"})})})})})}}});
  json result = s.call("transact", params);
  check_transact(result, sw.node_name + " add_port " + ifname);
  if (mutate_count(result, 2) != 1)
    throw Error(Errc::no_such_bridge, bridge + " on " + sw.node_name);
}

bool OvsdbSwitchControl::bridge_exists(const NodeHandle &sw, const std::string &bridge) {
  OvsdbSession s(sw.mgmt_ip, port_, timeout_ms_);
  json params = json::array(
      {"Open_vSwitch", json{{"op", "select"},
                            {"table", "Bridge"},
                            {"where", json::array({json::array({"name", "==", bridge})})},
                            {"columns", json::array({"name"})}}});
  json result = s.call("transact", params);
  check_transact(result, sw.node_name + " bridge_exists");
  return !result[0]["rows"].empty();
}

void OvsdbSwitchControl::set_controller(const NodeHandle &sw, const std::string &bridge,
                                        const std::string &target) {
  OvsdbSession s(sw.mgmt_ip, port_, timeout_ms_);
  json params = json::array(
      {"Open_vSwitch",
       json{{"op", "insert"},
            {"table", "Controller"},
            {"row", {{"target", target}}},
            {"uuid-name", "rowc"}},
       json{{"op", "mutate"},
            {"table", "Bridge"},
            {"where", json::array({json::array({"name", "==", bridge})})},
            {"mutations",
             json::array({json::array(
                 {"controller", "insert",
                  json::array({"set",
                               json::array({json::array({"named-uuid", "rowc"})})})})})}}});
  json result = s.call("transact", params);
  check_transact(result, sw.node_name + " set_controller");
  if (mutate_count(result, 1) != 1)
    throw Error(Errc::no_such_bridge, bridge + " on " + sw.node_name);
}

bool OvsdbSwitchControl::controller_connected(const NodeHandle &sw,
                                              const std::string &bridge) {
  OvsdbSession s(sw.mgmt_ip, port_, timeout_ms_);
  json sel = json::array(
      {"Open_vSwitch", json{{"op", "select"},
                            {"table", "Bridge"},
                            {"where", json::array({json::array({"name", "==", bridge})})},
                            {"columns", json::array({"controller"})}}});
  json result = s.call("transact", sel);
  check_transact(result, sw.node_name + " controller_connected");
  if (result[0]["rows"].empty())
    throw Error(Errc::no_such_bridge, bridge + " on " + sw.node_name);

  // controller is either ["uuid", u] or ["set", [["uuid", u], ...]].
  json ref = result[0]["rows"][0]["controller"];
  std::vector<std::string> uuids;
  if (ref.is_array() && ref.size() == 2) {
    if (ref[0] == "uuid") {
      uuids.push_back(ref[1].get<std::string>());
    } else if (ref[0] == "set") {
      for (const auto &u : ref[1])
        if (u.is_array() && u.size() == 2) uuids.push_back(u[1].get<std::string>());
    }
  }
  for (const auto &u : uuids) {
    json q = json::array(
        {"Open_vSwitch",
         json{{"op", "select"},
              {"table", "Controller"},
              {"where", json::array({json::array({"_uuid", "==", json::array({"uuid", u})})})},
              {"columns", json::array({"is_connected"})}}});
    json r = s.call("transact", q);
    check_transact(r, sw.node_name + " controller row");
    for (const auto &row : r[0]["rows"])
      if (row.value("is_connected", false)) return true;
  }
  return false;
}

// ---- SimSwitchControl -----------------------------------------------------

void SimSwitchControl::create_bridge(const NodeHandle &sw, const std::string &bridge) {
  engine_.http_post("/vemul-sim/ovs/bridge",
                    json{{"container", sw.container_id}, {"name", bridge}}.dump());
}

void SimSwitchControl::add_port(const NodeHandle &sw, const std::string &bridge,
                                const std::string &ifname) {
  engine_.http_post(
      "/vemul-sim/ovs/port",
      json{{"container", sw.container_id}, {"bridge", bridge}, {"ifname", ifname}}.dump());
}

bool SimSwitchControl::bridge_exists(const NodeHandle &sw, const std::string &bridge) {
  auto body = engine_.http_get("/vemul-sim/ovs/exists?container=" + sw.container_id +
                               "&bridge=" + bridge);
  return json::parse(body).value("exists", false);
}

void SimSwitchControl::set_controller(const NodeHandle &sw, const std::string &bridge,
                                      const std::string &target) {
  try {
    engine_.http_post(
        "/vemul-sim/ovs/controller",
        json{{"container", sw.container_id}, {"bridge", bridge}, {"target", target}}.dump());
  } catch (const Error &e) {
    if (std::string(e.what()).find("no such bridge") != std::string::npos)
      throw Error(Errc::no_such_bridge, bridge + " on " + sw.node_name);
    throw;
  }
}

bool SimSwitchControl::controller_connected(const NodeHandle &sw, const std::string &bridge) {
  auto body = engine_.http_get("/vemul-sim/ovs/connected?container=" + sw.container_id +
                               "&bridge=" + bridge);
  return json::parse(body).value("connected", false);
}

// ---- Probers --------------------------------------------------------------

bool RealProber::tcp_open(const std::string &ip, int port, int timeout_ms) {
  try {
    int fd = connect_with_timeout(ip, port, timeout_ms);
    if (fd < 0) return false;
    ::close(fd);
    return true;
  } catch (const Error &) {
    return false;
  }
}

bool SimProber::tcp_open(const std::string &ip, int port, int timeout_ms) {
  (void)timeout_ms;
  try {
    auto body = engine_.http_get("/vemul-sim/probe/tcp?ip=" + ip +
                                 "&port=" + std::to_string(port));
    return json::parse(body).value("open", false);
  } catch (const Error &) {
    return false;
  }
}

}  // namespace vemul
