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

#include "vemul/netbackend.hpp"

#include <json.hpp>

#include "vemul/engine.hpp"
#include "vemul/util.hpp"

namespace vemul {

using nlohmann::json;

// ---- RealNetBackend -------------------------------------------------------

namespace {

[[noreturn]] void map_ip_failure(const std::vector<std::string> &argv,
                                 const util::CmdResult &res) {
  std::string what = util::join(argv, " ") + ": " + util::trim(res.err);
  if (res.err.find("File exists") != std::string::npos)
    throw Error(Errc::ifname_collision, what);
  if (res.err.find("Operation not permitted") != std::string::npos ||
      res.err.find("permission denied") != std::string::npos)
    throw Error(Errc::privilege_denied, what);
  if (res.err.find("Cannot find device") != std::string::npos ||
      res.err.find("No such device") != std::string::npos ||
      res.err.find("does not exist") != std::string::npos)
    throw Error(Errc::already_destroyed, what);
  if (res.exit_code == -1 && res.err.find("exec") != std::string::npos)
    throw Error(Errc::tool_missing, what);
  throw Error(Errc::io_failure, what + " (exit " + std::to_string(res.exit_code) + ")");
}

}  // namespace

std::vector<std::string> RealNetBackend::ns_prefix(const std::string &ns) {
  if (ns == kRootNsToken) return {"ip"};
  return {"ip", "-n", ns};
}

void RealNetBackend::run(const std::vector<std::string> &argv) {
  auto res = util::run_cmd(argv);
  if (res.exit_code != 0) map_ip_failure(argv, res);
}

void RealNetBackend::check_privileges() {
  std::string probe = "vpr" + util::random_hex(6);
  auto res = util::run_cmd({"ip", "link", "add", probe, "type", "veth", "peer", "name",
                            probe + "p"});
  if (res.exit_code != 0) {
    if (res.err.find("Operation not permitted") != std::string::npos)
      throw Error(Errc::privilege_denied, "cannot create interfaces: " + util::trim(res.err));
    throw Error(Errc::tool_missing, "ip tool unusable: " + util::trim(res.err));
  }
  util::run_cmd({"ip", "link", "del", probe});
}

std::string RealNetBackend::register_ns(const std::string &node_name,
                                        const std::string &container_id, int pid) {
  (void)container_id;
  if (pid <= 0)
    throw Error(Errc::namespace_unresolvable, node_name + " has no live init process");
  std::string token = "vemul-" + node_name;
  util::run_cmd({"ip", "netns", "del", token});
  auto res = util::run_cmd({"ip", "netns", "attach", token, std::to_string(pid)});
  if (res.exit_code != 0)
    throw Error(Errc::namespace_unresolvable,
                node_name + " pid " + std::to_string(pid) + ": " + util::trim(res.err));
  return token;
}

void RealNetBackend::release_ns(const std::string &token) {
  util::run_cmd({"ip", "netns", "del", token});
}

void RealNetBackend::create_veth(const std::string &ns_a, const std::string &name_a,
                                 const std::string &ns_b, const std::string &name_b) {
  // Born in the root namespace under throwaway names, then moved and renamed;
  // direct creation would collide when both ends want the same final name.
  std::string ta = "vt" + util::random_hex(6);
  std::string tb = "vt" + util::random_hex(6);
  run({"ip", "link", "add", ta, "type", "veth", "peer", "name", tb});
  struct Leg {
    std::string tmp, ns, name;
  };
  for (const Leg &leg : {Leg{ta, ns_a, name_a}, Leg{tb, ns_b, name_b}}) {
    if (leg.ns == kRootNsToken) {
      run({"ip", "link", "set", leg.tmp, "name", leg.name});
    } else {
      run({"ip", "link", "set", leg.tmp, "netns", leg.ns});
      run({"ip", "-n", leg.ns, "link", "set", leg.tmp, "name", leg.name});
    }
  }
}

void RealNetBackend::create_bridge(const std::string &ns, const std::string &name) {
  auto argv = ns_prefix(ns);
  for (const char *a : {"link", "add", name.c_str(), "type", "bridge"}) argv.push_back(a);
  run(argv);
}

void RealNetBackend::enslave(const std::string &ns, const std::string &ifname,
                             const std::string &master) {
  auto argv = ns_prefix(ns);
  for (const char *a : {"link", "set", ifname.c_str(), "master", master.c_str()})
    argv.push_back(a);
  run(argv);
}

void RealNetBackend::add_addr(const std::string &ns, const std::string &ifname,
                              const std::string &cidr) {
  auto argv = ns_prefix(ns);
  for (const char *a : {"addr", "add", cidr.c_str(), "dev", ifname.c_str()}) argv.push_back(a);
  run(argv);
}

void RealNetBackend::set_state(const std::string &ns, const std::string &ifname, bool up) {
  auto argv = ns_prefix(ns);
  for (const char *a : {"link", "set", ifname.c_str(), up ? "up" : "down"}) argv.push_back(a);
  run(argv);
}

void RealNetBackend::set_mac(const std::string &ns, const std::string &ifname,
                             const std::string &mac) {
  auto argv = ns_prefix(ns);
  for (const char *a : {"link", "set", ifname.c_str(), "address", mac.c_str()})
    argv.push_back(a);
  run(argv);
}

void RealNetBackend::create_tunnel(const std::string &ns, const std::string &name,
                                   const std::string &kind, uint32_t key,
                                   const std::string &local, const std::string &remote) {
  auto argv = ns_prefix(ns);
  argv.insert(argv.end(), {"link", "add", name, "type"});
  if (kind == "gretap") {
    argv.insert(argv.end(),
                {"gretap", "local", local, "remote", remote, "key", std::to_string(key)});
  } else if (kind == "vxlan") {
    argv.insert(argv.end(), {"vxlan", "id", std::to_string(key), "local", local, "remote",
                             remote, "dstport", "4789"});
  } else {
    throw Error(Errc::invalid_spec, "unknown tunnel kind " + kind);
  }
  run(argv);
}

void RealNetBackend::del_link(const std::string &ns, const std::string &ifname) {
  auto argv = ns_prefix(ns);
  for (const char *a : {"link", "del", ifname.c_str()}) argv.push_back(a);
  run(argv);
}

std::vector<std::string> RealNetBackend::list_ifnames(const std::string &ns) {
  auto argv = ns_prefix(ns);
  for (const char *a : {"-o", "link", "show"}) argv.push_back(a);
  auto res = util::run_cmd(argv);
  if (res.exit_code != 0) map_ip_failure(argv, res);
  std::vector<std::string> out;
  for (const auto &line : util::split(res.out, '\n')) {
    auto fields = util::tokenize(line);
    if (fields.size() < 2) continue;
    std::string name = fields[1];
    if (!name.empty() && name.back() == ':') name.pop_back();
    auto at = name.find('@');
    if (at != std::string::npos) name = name.substr(0, at);
    out.push_back(name);
  }
  return out;
}

// ---- SimNetBackend --------------------------------------------------------

namespace {

// The engine reports plumbing errors as HTTP failures; recast the ones the
// fabric contract names.
template <typename F>
auto remap(F f) {
  try {
    return f();
  } catch (const Error &e) {
    const std::string what = e.what();
    if (what.find("File exists") != std::string::npos)
      throw Error(Errc::ifname_collision, what);
    if (what.find("no such namespace") != std::string::npos)
      throw Error(Errc::namespace_unresolvable, what);
    if (what.find("Cannot find device") != std::string::npos)
      throw Error(Errc::already_destroyed, what);
    throw;
  }
}

}  // namespace

std::string SimNetBackend::register_ns(const std::string &node_name,
                                       const std::string &container_id, int pid) {
  (void)pid;
  return remap([&] {
    try {
      auto body = engine_.http_get("/vemul-sim/net/resolve-ns?container=" + container_id);
      return json::parse(body).at("ns").get<std::string>();
    } catch (const Error &e) {
      if (e.code() == Errc::no_such_node || e.code() == Errc::invalid_state)
        throw Error(Errc::namespace_unresolvable, node_name + ": " + e.what());
      throw;
    }
  });
}

void SimNetBackend::create_veth(const std::string &ns_a, const std::string &name_a,
                                const std::string &ns_b, const std::string &name_b) {
  remap([&] {
    engine_.http_post("/vemul-sim/net/veth", json{{"ns_a", ns_a},
                                                  {"name_a", name_a},
                                                  {"ns_b", ns_b},
                                                  {"name_b", name_b}}
                                                 .dump());
  });
}

void SimNetBackend::create_bridge(const std::string &ns, const std::string &name) {
  remap([&] {
    engine_.http_post("/vemul-sim/net/bridge", json{{"ns", ns}, {"name", name}}.dump());
  });
}

void SimNetBackend::enslave(const std::string &ns, const std::string &ifname,
                            const std::string &master) {
  remap([&] {
    engine_.http_post("/vemul-sim/net/enslave",
                      json{{"ns", ns}, {"ifname", ifname}, {"master", master}}.dump());
  });
}

void SimNetBackend::add_addr(const std::string &ns, const std::string &ifname,
                             const std::string &cidr) {
  remap([&] {
    engine_.http_post("/vemul-sim/net/addr",
                      json{{"ns", ns}, {"ifname", ifname}, {"cidr", cidr}}.dump());
  });
}

void SimNetBackend::set_state(const std::string &ns, const std::string &ifname, bool up) {
  remap([&] {
    engine_.http_post("/vemul-sim/net/state",
                      json{{"ns", ns}, {"ifname", ifname}, {"up", up}}.dump());
  });
}

void SimNetBackend::set_mac(const std::string &ns, const std::string &ifname,
                            const std::string &mac) {
  remap([&] {
    engine_.http_post("/vemul-sim/net/mac",
                      json{{"ns", ns}, {"ifname", ifname}, {"mac", mac}}.dump());
  });
}

void SimNetBackend::create_tunnel(const std::string &ns, const std::string &name,
                                  const std::string &kind, uint32_t key,
                                  const std::string &local, const std::string &remote) {
  remap([&] {
    engine_.http_post("/vemul-sim/net/tunnel", json{{"ns", ns},
                                                    {"name", name},
                                                    {"kind", kind},
                                                    {"key", key},
                                                    {"local", local},
                                                    {"remote", remote}}
                                                   .dump());
  });
}

void SimNetBackend::del_link(const std::string &ns, const std::string &ifname) {
  remap([&] {
    engine_.http_post("/vemul-sim/net/del", json{{"ns", ns}, {"ifname", ifname}}.dump());
  });
}

std::vector<std::string> SimNetBackend::list_ifnames(const std::string &ns) {
  return remap([&] {
    auto body = engine_.http_get("/vemul-sim/net/ifaces?ns=" + ns);
    return json::parse(body).get<std::vector<std::string>>();
  });
}

}  // namespace vemul
