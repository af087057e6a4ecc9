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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vemul/errors.hpp"

namespace vemul {

enum class NodeKind { Host, WhiteboxSwitch, Controller };
enum class HostRole { None, Client, Server };
enum class LinkModel { Veth, GreTunnel, VxlanTunnel };
enum class LinkClass { PointToPoint, Bus };

const char *to_string(NodeKind k);
const char *to_string(HostRole r);
const char *to_string(LinkModel m);
const char *to_string(LinkClass c);
std::optional<NodeKind> node_kind_from(const std::string &s);
std::optional<HostRole> host_role_from(const std::string &s);
std::optional<LinkModel> link_model_from(const std::string &s);
std::optional<LinkClass> link_class_from(const std::string &s);

struct ResourceLimits {
  std::optional<double> cpu_quota;       // fraction of one core
  std::optional<uint64_t> memory_bytes;
  bool operator==(const ResourceLimits &) const = default;
};

struct IpConfig {
  std::string address;  // dotted quad
  int prefix_len = 24;
  bool operator==(const IpConfig &) const = default;
};

struct NodeSpec {
  std::string name;
  NodeKind kind = NodeKind::Host;
  std::string image;  // empty means: resolved from per-kind defaults at bring-up
  HostRole role = HostRole::None;
  std::optional<IpConfig> ip_config;
  std::optional<ResourceLimits> limits;
  bool operator==(const NodeSpec &) const = default;
};

struct LinkSpec {
  std::string name;
  std::string endpoint_a;
  std::string endpoint_b;
  LinkModel model = LinkModel::Veth;
  LinkClass topology_class = LinkClass::PointToPoint;
  std::vector<std::string> members;       // bus only
  std::optional<uint32_t> tunnel_key;     // tunnels only
  bool operator==(const LinkSpec &) const = default;
};

struct Violation {
  std::string subject;  // node/link name, or "topology"
  std::string field;
  std::string message;
};

// Declarative blueprint of an emulated network. Node/link insertion order is
// preserved; generators and the file loader both rely on it for determinism.
class Topology {
 public:
  const std::string &add_node(const NodeSpec &spec);
  const std::string &add_link(const LinkSpec &spec);

  // Drops the node plus every link referencing it; returns the dropped link
  // names. Run-time removal support; throws unknown-node.
  std::vector<std::string> remove_node(const std::string &name);
  void remove_link(const std::string &name);

  std::vector<Violation> validate() const;
  bool is_valid() const { return validate().empty(); }

  bool runnable() const { return runnable_; }
  void set_runnable(bool v) { runnable_ = v; }

  const std::vector<NodeSpec> &nodes() const { return nodes_; }
  const std::vector<LinkSpec> &links() const { return links_; }
  const NodeSpec *find_node(const std::string &name) const;
  const LinkSpec *find_link(const std::string &name) const;
  bool has_node(const std::string &name) const { return node_index_.count(name) > 0; }

  std::vector<const NodeSpec *> nodes_of_kind(NodeKind k) const;

  // Copy containing switches/controllers and their links only; resource-metric
  // sweeps build this variant (probe hosts matter only to traffic runs).
  Topology without_hosts() const;

  bool operator==(const Topology &o) const {
    return nodes_ == o.nodes_ && links_ == o.links_ && runnable_ == o.runnable_;
  }

 private:
  void check_node(const NodeSpec &spec) const;
  void check_link(const LinkSpec &spec) const;

  std::vector<NodeSpec> nodes_;
  std::vector<LinkSpec> links_;
  std::map<std::string, size_t> node_index_;
  std::map<std::string, size_t> link_index_;
  bool runnable_ = false;
};

// Topology families for the scalability sweeps. Hub-and-spoke star, breadth-first
// binary tree, and full mesh over switches; each carries two probe hosts placed at
// maximum switch-graph distance (earliest-created pair on ties).
Topology generate_star(int switch_count);
Topology generate_tree(int switch_count);
Topology generate_mesh(int switch_count);

// Traffic-fidelity scenario: 1 core switch, 4 edge switches, 4 hosts per edge
// switch; h1 (client) and h16 (server) sit on different edge switches so the
// measured flow crosses the core.
Topology generate_fidelity_tree();

}  // namespace vemul
