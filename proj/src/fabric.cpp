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

#include "vemul/fabric.hpp"

#include <algorithm>
#include <mutex>

#include "vemul/util.hpp"

namespace vemul {

const char *to_string(LinkState s) {
  switch (s) {
    case LinkState::up: return "up";
    case LinkState::down: return "down";
    case LinkState::destroyed: return "destroyed";
  }
  return "?";
}

const PortBinding *find_binding(const LinkHandle &handle, const std::string &node_name) {
  for (const auto &b : handle.bindings)
    if (b.node_name == node_name) return &b;
  return nullptr;
}

Fabric::Fabric(NetBackend &backend, EngineClient &engine, std::string run_id,
               int mgmt_start_host)
    : backend_(backend), engine_(engine), run_id_(std::move(run_id)),
      next_mgmt_host_(mgmt_start_host) {}

void Fabric::check_privileges() { backend_.check_privileges(); }

void Fabric::note(const std::string &msg) {
  if (log_) log_(msg);
}

std::string Fabric::make_mac(const std::string &run_id, const std::string &node_name,
                             const std::string &ifname) {
  uint64_t h = util::fnv1a(run_id + "|" + node_name + "|" + ifname);
  std::string mac = "02";
  for (int i = 0; i < 5; ++i) {
    mac += ":" + util::hex((h >> (8 * (4 - i))) & 0xff, 2);
  }
  return mac;
}

std::string Fabric::ns_for(const NodeHandle &node) {
  {
    std::shared_lock rd(mu_);
    auto it = ns_tokens_.find(node.node_name);
    if (it != ns_tokens_.end()) return it->second;
  }
  int pid = engine_.inspect_pid(node);
  std::string token = backend_.register_ns(node.node_name, node.container_id, pid);
  std::unique_lock wr(mu_);
  ns_tokens_[node.node_name] = token;
  return token;
}

std::string Fabric::ns_of(const std::string &node_name) const {
  std::shared_lock rd(mu_);
  auto it = ns_tokens_.find(node_name);
  if (it == ns_tokens_.end())
    throw Error(Errc::namespace_unresolvable, node_name + " is not registered");
  return it->second;
}

std::string Fabric::alloc_mgmt_ip() {
  if (next_mgmt_host_ > 65534)
    throw Error(Errc::subnet_exhausted, "management subnet 172.31.0.0/16 is full");
  int n = next_mgmt_host_++;
  return "172.31." + std::to_string(n >> 8) + "." + std::to_string(n & 0xff);
}

std::string Fabric::next_data_ifname(const std::string &node_name) {
  int n = next_data_[node_name]++;
  return "data" + std::to_string(n);
}

void Fabric::quiet_del(const std::string &ns, const std::string &ifname) {
  try {
    backend_.del_link(ns, ifname);
  } catch (const Error &e) {
    if (e.code() != Errc::already_destroyed) note(std::string("teardown: ") + e.what());
  }
}

LinkHandle Fabric::create_veth_link(const std::string &name, const NodeHandle &a,
                                    const NodeHandle &b) {
  if (a.node_name == b.node_name)
    throw Error(Errc::self_loop, name + ": both ends are " + a.node_name);
  std::string ns_a = ns_for(a);
  std::string ns_b = ns_for(b);
  std::unique_lock wr(mu_);
  std::string if_a = next_data_ifname(a.node_name);
  std::string if_b = next_data_ifname(b.node_name);
  LinkHandle h;
  h.link_name = name;
  h.model = "veth";
  h.bindings = {{a.node_name, if_a, make_mac(run_id_, a.node_name, if_a), "", ""},
                {b.node_name, if_b, make_mac(run_id_, b.node_name, if_b), "", ""}};
  try {
    backend_.create_veth(ns_a, if_a, ns_b, if_b);
    backend_.set_mac(ns_a, if_a, h.bindings[0].mac);
    backend_.set_mac(ns_b, if_b, h.bindings[1].mac);
    backend_.set_state(ns_a, if_a, true);
    backend_.set_state(ns_b, if_b, true);
  } catch (...) {
    quiet_del(ns_a, if_a);
    next_data_[a.node_name]--;
    next_data_[b.node_name]--;
    throw;
  }
  h.state = LinkState::up;
  return h;
}

LinkHandle Fabric::create_tunnel_link(const std::string &name, const NodeHandle &a,
                                      const NodeHandle &b, const std::string &kind,
                                      uint32_t key) {
  if (a.node_name == b.node_name)
    throw Error(Errc::self_loop, name + ": both ends are " + a.node_name);
  if (kind != "gre" && kind != "vxlan")
    throw Error(Errc::invalid_spec, name + ": tunnel kind " + kind);
  std::string ns_a = ns_for(a);
  std::string ns_b = ns_for(b);
  std::unique_lock wr(mu_);
  auto addr_a = mgmt_addrs_.find(a.node_name);
  auto addr_b = mgmt_addrs_.find(b.node_name);
  if (addr_a == mgmt_addrs_.end() || addr_b == mgmt_addrs_.end())
    throw Error(Errc::peer_unreachable,
                name + ": " +
                    (addr_a == mgmt_addrs_.end() ? a.node_name : b.node_name) +
                    " has no management address");
  if (used_keys_.count(key))
    throw Error(Errc::key_in_use, name + ": tunnel key " + std::to_string(key));
  std::string dev_kind = kind == "gre" ? "gretap" : "vxlan";
  std::string if_a = next_data_ifname(a.node_name);
  std::string if_b = next_data_ifname(b.node_name);
  LinkHandle h;
  h.link_name = name;
  h.model = kind + "-tunnel";
  h.tunnel_key = key;
  h.bindings = {{a.node_name, if_a, make_mac(run_id_, a.node_name, if_a), "", ""},
                {b.node_name, if_b, make_mac(run_id_, b.node_name, if_b), "", ""}};
  try {
    backend_.create_tunnel(ns_a, if_a, dev_kind, key, addr_a->second, addr_b->second);
    backend_.create_tunnel(ns_b, if_b, dev_kind, key, addr_b->second, addr_a->second);
    backend_.set_mac(ns_a, if_a, h.bindings[0].mac);
    backend_.set_mac(ns_b, if_b, h.bindings[1].mac);
    backend_.set_state(ns_a, if_a, true);
    backend_.set_state(ns_b, if_b, true);
  } catch (...) {
    quiet_del(ns_a, if_a);
    quiet_del(ns_b, if_b);
    next_data_[a.node_name]--;
    next_data_[b.node_name]--;
    throw;
  }
  used_keys_.insert(key);
  h.state = LinkState::up;
  return h;
}

PortBinding Fabric::attach_member(const std::string &bus_name, const std::string &bridge,
                                  const NodeHandle &node) {
  // Caller holds the write lock and has the namespace registered.
  std::string ns = ns_tokens_.at(node.node_name);
  std::string leg =
      "vmp" + util::hex(util::fnv1a(run_id_ + "|" + bus_name + "|" + node.node_name), 8);
  PortBinding b;
  b.node_name = node.node_name;
  b.ifname = "mgmt0";
  b.mac = make_mac(run_id_, node.node_name, "mgmt0");
  b.root_ifname = leg;
  std::string ip = alloc_mgmt_ip();
  b.addr = ip + "/16";
  try {
    backend_.create_veth(kRootNsToken, leg, ns, "mgmt0");
    backend_.enslave(kRootNsToken, leg, bridge);
    backend_.set_mac(ns, "mgmt0", b.mac);
    backend_.add_addr(ns, "mgmt0", b.addr);
    backend_.set_state(kRootNsToken, leg, true);
    backend_.set_state(ns, "mgmt0", true);
  } catch (...) {
    quiet_del(kRootNsToken, leg);
    throw;
  }
  mgmt_addrs_[node.node_name] = ip;
  return b;
}

LinkHandle Fabric::create_bus(const std::string &name,
                              const std::vector<NodeHandle> &members) {
  if (members.size() < 2)
    throw Error(Errc::precondition_failed,
                name + ": a bus needs at least 2 members, got " +
                    std::to_string(members.size()));
  for (const auto &m : members) ns_for(m);
  std::unique_lock wr(mu_);
  LinkHandle h;
  h.link_name = name;
  h.model = "bus";
  h.bridge = "vmb" + util::hex(util::fnv1a(run_id_ + "|" + name), 6);
  try {
    backend_.create_bridge(kRootNsToken, h.bridge);
    backend_.add_addr(kRootNsToken, h.bridge, "172.31.0.1/16");
    backend_.set_state(kRootNsToken, h.bridge, true);
    for (const auto &m : members) h.bindings.push_back(attach_member(name, h.bridge, m));
  } catch (...) {
    for (const auto &b : h.bindings) {
      quiet_del(ns_tokens_.at(b.node_name), b.ifname);
      mgmt_addrs_.erase(b.node_name);
    }
    quiet_del(kRootNsToken, h.bridge);
    throw;
  }
  h.state = LinkState::up;
  return h;
}

PortBinding Fabric::add_bus_member(LinkHandle &bus, const NodeHandle &node) {
  if (bus.state == LinkState::destroyed)
    throw Error(Errc::already_destroyed, bus.link_name);
  ns_for(node);
  std::unique_lock wr(mu_);
  if (find_binding(bus, node.node_name))
    throw Error(Errc::duplicate_name, node.node_name + " is already on " + bus.link_name);
  PortBinding b = attach_member(bus.link_name, bus.bridge, node);
  bus.bindings.push_back(b);
  return b;
}

void Fabric::remove_bus_member(LinkHandle &bus, const std::string &node_name) {
  std::unique_lock wr(mu_);
  auto it = std::find_if(bus.bindings.begin(), bus.bindings.end(),
                         [&](const PortBinding &b) { return b.node_name == node_name; });
  if (it == bus.bindings.end()) return;
  auto ns = ns_tokens_.find(node_name);
  if (ns != ns_tokens_.end()) quiet_del(ns->second, it->ifname);
  quiet_del(kRootNsToken, it->root_ifname);
  mgmt_addrs_.erase(node_name);
  bus.bindings.erase(it);
}

void Fabric::set_link_state(LinkHandle &handle, bool up) {
  if (handle.state == LinkState::destroyed)
    throw Error(Errc::already_destroyed, handle.link_name);
  std::unique_lock wr(mu_);
  for (const auto &b : handle.bindings) {
    auto ns = ns_tokens_.find(b.node_name);
    if (ns == ns_tokens_.end())
      throw Error(Errc::namespace_unresolvable, b.node_name);
    backend_.set_state(ns->second, b.ifname, up);
    if (!b.root_ifname.empty()) backend_.set_state(kRootNsToken, b.root_ifname, up);
  }
  handle.state = up ? LinkState::up : LinkState::down;
}

void Fabric::destroy_link(LinkHandle &handle) {
  if (handle.state == LinkState::destroyed) return;
  std::unique_lock wr(mu_);
  for (const auto &b : handle.bindings) {
    auto ns = ns_tokens_.find(b.node_name);
    if (ns != ns_tokens_.end()) quiet_del(ns->second, b.ifname);
    if (!b.root_ifname.empty()) quiet_del(kRootNsToken, b.root_ifname);
    if (handle.model == "bus") mgmt_addrs_.erase(b.node_name);
  }
  if (!handle.bridge.empty()) quiet_del(kRootNsToken, handle.bridge);
  if (handle.tunnel_key) used_keys_.erase(handle.tunnel_key);
  handle.state = LinkState::destroyed;
}

void Fabric::assign_addr(const std::string &node_name, const std::string &ifname,
                         const std::string &cidr) {
  std::unique_lock wr(mu_);
  auto ns = ns_tokens_.find(node_name);
  if (ns == ns_tokens_.end())
    throw Error(Errc::namespace_unresolvable, node_name + " is not registered");
  backend_.add_addr(ns->second, ifname, cidr);
}

void Fabric::forget_node(const std::string &node_name) {
  std::unique_lock wr(mu_);
  auto it = ns_tokens_.find(node_name);
  if (it != ns_tokens_.end()) {
    backend_.release_ns(it->second);
    ns_tokens_.erase(it);
  }
  mgmt_addrs_.erase(node_name);
  next_data_.erase(node_name);
}

std::vector<std::string> Fabric::snapshot_root_ifnames() {
  std::shared_lock rd(mu_);
  auto names = backend_.list_ifnames(kRootNsToken);
  std::sort(names.begin(), names.end());
  return names;
}

std::string Fabric::mgmt_ip(const std::string &node_name) const {
  std::shared_lock rd(mu_);
  auto it = mgmt_addrs_.find(node_name);
  if (it == mgmt_addrs_.end())
    throw Error(Errc::no_such_node, node_name + " has no management address");
  return it->second;
}

}  // namespace vemul
