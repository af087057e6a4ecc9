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

#include "vemul/topology.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "vemul/util.hpp"

namespace vemul {

const char *to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Host: return "host";
    case NodeKind::WhiteboxSwitch: return "whitebox-switch";
    case NodeKind::Controller: return "controller";
  }
  return "?";
}

const char *to_string(HostRole r) {
  switch (r) {
    case HostRole::None: return "none";
    case HostRole::Client: return "client";
    case HostRole::Server: return "server";
  }
  return "?";
}

const char *to_string(LinkModel m) {
  switch (m) {
    case LinkModel::Veth: return "veth";
    case LinkModel::GreTunnel: return "gre-tunnel";
    case LinkModel::VxlanTunnel: return "vxlan-tunnel";
  }
  return "?";
}

const char *to_string(LinkClass c) {
  switch (c) {
    case LinkClass::PointToPoint: return "point-to-point";
    case LinkClass::Bus: return "bus";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from(const std::string &s) {
  if (s == "host") return NodeKind::Host;
  if (s == "whitebox-switch") return NodeKind::WhiteboxSwitch;
  if (s == "controller") return NodeKind::Controller;
  return std::nullopt;
}

std::optional<HostRole> host_role_from(const std::string &s) {
  if (s == "none") return HostRole::None;
  if (s == "client") return HostRole::Client;
  if (s == "server") return HostRole::Server;
  return std::nullopt;
}

std::optional<LinkModel> link_model_from(const std::string &s) {
  if (s == "veth") return LinkModel::Veth;
  if (s == "gre-tunnel") return LinkModel::GreTunnel;
  if (s == "vxlan-tunnel") return LinkModel::VxlanTunnel;
  return std::nullopt;
}

std::optional<LinkClass> link_class_from(const std::string &s) {
  if (s == "point-to-point") return LinkClass::PointToPoint;
  if (s == "bus") return LinkClass::Bus;
  return std::nullopt;
}

void Topology::check_node(const NodeSpec &spec) const {
  if (spec.name.empty())
    throw Error(Errc::invalid_spec, "node name must be non-empty (field: name)");
  if (node_index_.count(spec.name))
    throw Error(Errc::duplicate_name, "node '" + spec.name + "' already present");
  if (spec.ip_config && spec.kind != NodeKind::Host)
    throw Error(Errc::invalid_spec,
                "node '" + spec.name + "': ip_config is only valid for hosts (field: ip_config)");
  if (spec.role != HostRole::None && spec.kind != NodeKind::Host)
    throw Error(Errc::invalid_spec,
                "node '" + spec.name + "': role is only valid for hosts (field: role)");
  if (spec.ip_config) {
    if (!util::parse_ipv4(spec.ip_config->address))
      throw Error(Errc::invalid_spec,
                  "node '" + spec.name + "': bad address '" + spec.ip_config->address +
                      "' (field: ip_config)");
    if (spec.ip_config->prefix_len < 0 || spec.ip_config->prefix_len > 32)
      throw Error(Errc::invalid_spec,
                  "node '" + spec.name + "': bad prefix length (field: ip_config)");
  }
  if (spec.limits) {
    if (spec.limits->cpu_quota && *spec.limits->cpu_quota <= 0)
      throw Error(Errc::invalid_spec,
                  "node '" + spec.name + "': cpu_quota must be > 0 (field: cpu_quota)");
    if (spec.limits->memory_bytes && *spec.limits->memory_bytes == 0)
      throw Error(Errc::invalid_spec,
                  "node '" + spec.name + "': memory_bytes must be > 0 (field: memory_bytes)");
  }
}

void Topology::check_link(const LinkSpec &spec) const {
  if (spec.name.empty())
    throw Error(Errc::invalid_spec, "link name must be non-empty (field: name)");
  if (link_index_.count(spec.name))
    throw Error(Errc::duplicate_name, "link '" + spec.name + "' already present");
  if (spec.topology_class == LinkClass::PointToPoint) {
    if (spec.endpoint_a == spec.endpoint_b)
      throw Error(Errc::self_loop, "link '" + spec.name + "' connects '" + spec.endpoint_a +
                                       "' to itself");
    for (const auto *ep : {&spec.endpoint_a, &spec.endpoint_b}) {
      if (!node_index_.count(*ep))
        throw Error(Errc::unknown_endpoint,
                    "link '" + spec.name + "' references unknown node '" + *ep + "'");
    }
  } else {
    std::set<std::string> uniq(spec.members.begin(), spec.members.end());
    if (uniq.size() < 2)
      throw Error(Errc::invalid_spec,
                  "bus link '" + spec.name + "' needs >= 2 distinct members (field: members)");
    for (const auto &m : spec.members)
      if (!node_index_.count(m))
        throw Error(Errc::unknown_endpoint,
                    "bus link '" + spec.name + "' references unknown node '" + m + "'");
  }
  bool is_tunnel = spec.model != LinkModel::Veth;
  if (is_tunnel != spec.tunnel_key.has_value())
    throw Error(Errc::invalid_spec, "link '" + spec.name +
                                        "': tunnel_key must be present exactly for tunnel models "
                                        "(field: tunnel_key)");
  if (spec.tunnel_key) {
    for (const auto &l : links_)
      if (l.tunnel_key && *l.tunnel_key == *spec.tunnel_key)
        throw Error(Errc::duplicate_tunnel_key,
                    "link '" + spec.name + "': tunnel key " + std::to_string(*spec.tunnel_key) +
                        " already used by '" + l.name + "'");
  }
}

const std::string &Topology::add_node(const NodeSpec &spec) {
  check_node(spec);
  nodes_.push_back(spec);
  node_index_[spec.name] = nodes_.size() - 1;
  return nodes_.back().name;
}

const std::string &Topology::add_link(const LinkSpec &spec) {
  check_link(spec);
  links_.push_back(spec);
  link_index_[spec.name] = links_.size() - 1;
  return links_.back().name;
}

std::vector<std::string> Topology::remove_node(const std::string &name) {
  if (!node_index_.count(name)) throw Error(Errc::unknown_node, name);
  std::vector<std::string> dropped;
  std::vector<LinkSpec> kept;
  for (auto &l : links_) {
    bool touches = l.endpoint_a == name || l.endpoint_b == name ||
                   std::find(l.members.begin(), l.members.end(), name) != l.members.end();
    if (touches)
      dropped.push_back(l.name);
    else
      kept.push_back(std::move(l));
  }
  links_ = std::move(kept);
  nodes_.erase(nodes_.begin() + static_cast<long>(node_index_[name]));
  node_index_.clear();
  link_index_.clear();
  for (size_t i = 0; i < nodes_.size(); ++i) node_index_[nodes_[i].name] = i;
  for (size_t i = 0; i < links_.size(); ++i) link_index_[links_[i].name] = i;
  return dropped;
}

void Topology::remove_link(const std::string &name) {
  auto it = link_index_.find(name);
  if (it == link_index_.end()) throw Error(Errc::unknown_node, "link " + name);
  links_.erase(links_.begin() + static_cast<long>(it->second));
  link_index_.clear();
  for (size_t i = 0; i < links_.size(); ++i) link_index_[links_[i].name] = i;
}

const NodeSpec *Topology::find_node(const std::string &name) const {
  auto it = node_index_.find(name);
  return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

const LinkSpec *Topology::find_link(const std::string &name) const {
  auto it = link_index_.find(name);
  return it == link_index_.end() ? nullptr : &links_[it->second];
}

std::vector<const NodeSpec *> Topology::nodes_of_kind(NodeKind k) const {
  std::vector<const NodeSpec *> out;
  for (const auto &n : nodes_)
    if (n.kind == k) out.push_back(&n);
  return out;
}

std::vector<Violation> Topology::validate() const {
  std::vector<Violation> v;
  std::set<std::string> names;
  for (const auto &n : nodes_) {
    if (!names.insert(n.name).second)
      v.push_back({n.name, "name", "duplicate node name"});
    if (n.ip_config && n.kind != NodeKind::Host)
      v.push_back({n.name, "ip_config", "ip_config on non-host node"});
    if (n.role != HostRole::None && n.kind != NodeKind::Host)
      v.push_back({n.name, "role", "role on non-host node"});
  }
  std::set<std::string> link_names;
  std::set<uint32_t> keys;
  for (const auto &l : links_) {
    if (!link_names.insert(l.name).second)
      v.push_back({l.name, "name", "duplicate link name"});
    if (l.topology_class == LinkClass::PointToPoint) {
      for (const auto *ep : {&l.endpoint_a, &l.endpoint_b})
        if (!node_index_.count(*ep))
          v.push_back({l.name, "endpoint", "unknown node '" + *ep + "'"});
      if (l.endpoint_a == l.endpoint_b)
        v.push_back({l.name, "endpoint", "self loop"});
    } else {
      std::set<std::string> uniq(l.members.begin(), l.members.end());
      if (uniq.size() < 2)
        v.push_back({l.name, "members", "bus needs >= 2 distinct members"});
      for (const auto &m : l.members)
        if (!node_index_.count(m))
          v.push_back({l.name, "members", "unknown node '" + m + "'"});
    }
    if (l.tunnel_key) {
      if (l.model == LinkModel::Veth)
        v.push_back({l.name, "tunnel_key", "tunnel_key on veth link"});
      else if (!keys.insert(*l.tunnel_key).second)
        v.push_back({l.name, "tunnel_key", "duplicate tunnel key"});
    } else if (l.model != LinkModel::Veth) {
      v.push_back({l.name, "tunnel_key", "tunnel model without tunnel_key"});
    }
  }

  if (runnable_) {
    // Data-plane graph over hosts and switches must be one component.
    std::map<std::string, std::vector<std::string>> adj;
    std::vector<std::string> members;
    for (const auto &n : nodes_)
      if (n.kind != NodeKind::Controller) members.push_back(n.name);
    for (const auto &l : links_) {
      if (l.topology_class != LinkClass::PointToPoint) continue;
      const auto *a = find_node(l.endpoint_a);
      const auto *b = find_node(l.endpoint_b);
      if (!a || !b || a->kind == NodeKind::Controller || b->kind == NodeKind::Controller) continue;
      adj[l.endpoint_a].push_back(l.endpoint_b);
      adj[l.endpoint_b].push_back(l.endpoint_a);
    }
    if (members.size() > 1) {
      std::set<std::string> seen;
      std::deque<std::string> q{members.front()};
      seen.insert(members.front());
      while (!q.empty()) {
        auto cur = q.front();
        q.pop_front();
        for (const auto &nb : adj[cur])
          if (seen.insert(nb).second) q.push_back(nb);
      }
      for (const auto &m : members)
        if (!seen.count(m))
          v.push_back({m, "connectivity", "unreachable from '" + members.front() + "'"});
    }
  }
  return v;
}

Topology Topology::without_hosts() const {
  Topology out;
  for (const auto &n : nodes_)
    if (n.kind != NodeKind::Host) out.add_node(n);
  for (const auto &l : links_) {
    if (l.topology_class == LinkClass::PointToPoint) {
      if (out.has_node(l.endpoint_a) && out.has_node(l.endpoint_b)) out.add_link(l);
    } else {
      LinkSpec copy = l;
      std::erase_if(copy.members, [&](const std::string &m) { return !out.has_node(m); });
      std::set<std::string> uniq(copy.members.begin(), copy.members.end());
      if (uniq.size() >= 2) out.add_link(copy);
    }
  }
  out.set_runnable(runnable_);
  return out;
}

namespace {

std::string sw_name(int i) { return "sw" + std::to_string(i); }

NodeSpec switch_spec(int i) {
  NodeSpec s;
  s.name = sw_name(i);
  s.kind = NodeKind::WhiteboxSwitch;
  return s;
}

NodeSpec host_spec(int i) {
  NodeSpec h;
  h.name = "h" + std::to_string(i);
  h.kind = NodeKind::Host;
  h.ip_config = IpConfig{"10.0.0." + std::to_string(i), 24};
  return h;
}

LinkSpec p2p(const std::string &name, const std::string &a, const std::string &b) {
  LinkSpec l;
  l.name = name;
  l.endpoint_a = a;
  l.endpoint_b = b;
  return l;
}

// Probe hosts go to a switch pair at maximum graph distance; ties resolve to
// the earliest-created pair so repeated generation is identical.
std::pair<int, int> max_distance_pair(int n, const std::vector<std::vector<int>> &adj) {
  int best_a = 0, best_b = 1, best_d = -1;
  for (int s = 0; s < n; ++s) {
    std::vector<int> dist(n, -1);
    std::deque<int> q{s};
    dist[s] = 0;
    while (!q.empty()) {
      int cur = q.front();
      q.pop_front();
      for (int nb : adj[cur])
        if (dist[nb] < 0) {
          dist[nb] = dist[cur] + 1;
          q.push_back(nb);
        }
    }
    for (int t = s + 1; t < n; ++t)
      if (dist[t] > best_d) {
        best_d = dist[t];
        best_a = s;
        best_b = t;
      }
  }
  return {best_a + 1, best_b + 1};  // switch numbering is 1-based
}

void attach_probe_hosts(Topology &t, int sw_a, int sw_b) {
  t.add_node(host_spec(1));
  t.add_node(host_spec(2));
  t.add_link(p2p("lh1", "h1", sw_name(sw_a)));
  t.add_link(p2p("lh2", "h2", sw_name(sw_b)));
}

void require_size(int switch_count) {
  if (switch_count < 2)
    throw Error(Errc::size_too_small,
                "need at least 2 switches, got " + std::to_string(switch_count));
}

}  // namespace

Topology generate_star(int switch_count) {
  require_size(switch_count);
  Topology t;
  for (int i = 1; i <= switch_count; ++i) t.add_node(switch_spec(i));
  for (int i = 2; i <= switch_count; ++i)
    t.add_link(p2p("l" + std::to_string(i - 1), sw_name(1), sw_name(i)));
  // All leaf pairs sit at distance 2; earliest pair is (sw2, sw3). With a
  // single leaf the only pair is hub plus leaf.
  if (switch_count >= 3)
    attach_probe_hosts(t, 2, 3);
  else
    attach_probe_hosts(t, 1, 2);
  t.set_runnable(true);
  return t;
}

Topology generate_tree(int switch_count) {
  require_size(switch_count);
  Topology t;
  for (int i = 1; i <= switch_count; ++i) t.add_node(switch_spec(i));
  std::vector<std::vector<int>> adj(switch_count);
  for (int i = 2; i <= switch_count; ++i) {
    int parent = i / 2;  // breadth-first heap layout
    t.add_link(p2p("l" + std::to_string(i - 1), sw_name(parent), sw_name(i)));
    adj[parent - 1].push_back(i - 1);
    adj[i - 1].push_back(parent - 1);
  }
  auto [a, b] = max_distance_pair(switch_count, adj);
  attach_probe_hosts(t, a, b);
  t.set_runnable(true);
  return t;
}

Topology generate_mesh(int switch_count) {
  require_size(switch_count);
  Topology t;
  for (int i = 1; i <= switch_count; ++i) t.add_node(switch_spec(i));
  int idx = 1;
  for (int i = 1; i <= switch_count; ++i)
    for (int j = i + 1; j <= switch_count; ++j)
      t.add_link(p2p("l" + std::to_string(idx++), sw_name(i), sw_name(j)));
  attach_probe_hosts(t, 1, 2);
  t.set_runnable(true);
  return t;
}

Topology generate_fidelity_tree() {
  Topology t;
  NodeSpec core;
  core.name = "core1";
  core.kind = NodeKind::WhiteboxSwitch;
  t.add_node(core);
  for (int e = 1; e <= 4; ++e) {
    NodeSpec edge;
    edge.name = "edge" + std::to_string(e);
    edge.kind = NodeKind::WhiteboxSwitch;
    t.add_node(edge);
  }
  for (int i = 1; i <= 16; ++i) {
    NodeSpec h = host_spec(i);
    // h1 drives the measured flow into h16; h2..h8 pair with h9..h15 as load.
    if (i == 1 || (i >= 2 && i <= 8))
      h.role = HostRole::Client;
    else
      h.role = HostRole::Server;
    t.add_node(h);
  }
  for (int e = 1; e <= 4; ++e)
    t.add_link(p2p("lc" + std::to_string(e), "core1", "edge" + std::to_string(e)));
  for (int i = 1; i <= 16; ++i) {
    int edge = (i - 1) / 4 + 1;
    t.add_link(p2p("lh" + std::to_string(i), "h" + std::to_string(i),
                   "edge" + std::to_string(edge)));
  }
  t.set_runnable(true);
  return t;
}

}  // namespace vemul
