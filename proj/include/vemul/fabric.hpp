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

#include <functional>
#include <map>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "vemul/engine.hpp"
#include "vemul/errors.hpp"
#include "vemul/netbackend.hpp"

namespace vemul {

struct PortBinding {
  std::string node_name;
  std::string ifname;
  std::string mac;
  std::string addr;           // CIDR, empty when unaddressed
  std::string root_ifname;    // bus legs only: the root-side veth end
};

enum class LinkState { up, down, destroyed };

const char *to_string(LinkState s);

struct LinkHandle {
  std::string link_name;
  std::string model;          // veth | gre-tunnel | vxlan-tunnel | bus
  std::vector<PortBinding> bindings;
  LinkState state = LinkState::up;
  std::string bridge;         // bus only: root-namespace bridge name
  uint32_t tunnel_key = 0;
};

const PortBinding *find_binding(const LinkHandle &handle, const std::string &node_name);

// Owns every interface the emulator pushes into namespaces. All mutation is
// serialized behind one lock; interface-rename races inside the kernel are
// the dominant failure mode and not worth finer grain.
class Fabric {
 public:
  Fabric(NetBackend &backend, EngineClient &engine, std::string run_id,
         int mgmt_start_host = 2);

  void check_privileges();

  LinkHandle create_veth_link(const std::string &name, const NodeHandle &a,
                              const NodeHandle &b);
  LinkHandle create_tunnel_link(const std::string &name, const NodeHandle &a,
                                const NodeHandle &b, const std::string &kind,
                                uint32_t key);
  LinkHandle create_bus(const std::string &name, const std::vector<NodeHandle> &members);
  PortBinding add_bus_member(LinkHandle &bus, const NodeHandle &node);
  void remove_bus_member(LinkHandle &bus, const std::string &node_name);

  void set_link_state(LinkHandle &handle, bool up);
  void destroy_link(LinkHandle &handle);

  // Node-model helpers used after links exist.
  void assign_addr(const std::string &node_name, const std::string &ifname,
                   const std::string &cidr);
  void forget_node(const std::string &node_name);

  std::vector<std::string> snapshot_root_ifnames();
  std::string mgmt_ip(const std::string &node_name) const;

  static std::string make_mac(const std::string &run_id, const std::string &node_name,
                              const std::string &ifname);

  void set_log(std::function<void(const std::string &)> log) { log_ = std::move(log); }

 private:
  std::string ns_for(const NodeHandle &node);
  std::string ns_of(const std::string &node_name) const;
  std::string alloc_mgmt_ip();
  std::string next_data_ifname(const std::string &node_name);
  PortBinding attach_member(const std::string &bus_name, const std::string &bridge,
                            const NodeHandle &node);
  void quiet_del(const std::string &ns, const std::string &ifname);
  void note(const std::string &msg);

  NetBackend &backend_;
  EngineClient &engine_;
  std::string run_id_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::string> ns_tokens_;
  std::map<std::string, std::string> mgmt_addrs_;
  std::map<std::string, int> next_data_;
  std::set<uint32_t> used_keys_;
  int next_mgmt_host_;
  std::function<void(const std::string &)> log_;
};

}  // namespace vemul
