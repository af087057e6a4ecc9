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

// Kernel-level network plumbing seam. The real backend drives the iproute2
// administrative tooling; the sim backend drives the engine's extension
// endpoints. Namespaces are addressed by opaque tokens; "root" is the
// root namespace.

#include <string>
#include <vector>

#include "vemul/errors.hpp"

namespace vemul {

class EngineClient;

inline constexpr const char *kRootNsToken = "root";

class NetBackend {
 public:
  virtual ~NetBackend() = default;

  // Verifies the backend can actually mutate interfaces; throws
  // privilege-denied otherwise. Called once at startup.
  virtual void check_privileges() = 0;

  // Maps a running container to a namespace token usable in later calls.
  virtual std::string register_ns(const std::string &node_name, const std::string &container_id,
                                  int pid) = 0;
  virtual void release_ns(const std::string &token) { (void)token; }

  // Creates a veth pair with the given final names, one end per namespace.
  virtual void create_veth(const std::string &ns_a, const std::string &name_a,
                           const std::string &ns_b, const std::string &name_b) = 0;
  virtual void create_bridge(const std::string &ns, const std::string &name) = 0;
  virtual void enslave(const std::string &ns, const std::string &ifname,
                       const std::string &master) = 0;
  virtual void add_addr(const std::string &ns, const std::string &ifname,
                        const std::string &cidr) = 0;
  virtual void set_state(const std::string &ns, const std::string &ifname, bool up) = 0;
  virtual void set_mac(const std::string &ns, const std::string &ifname,
                       const std::string &mac) = 0;
  // kind: "gretap" | "vxlan"; endpoints are underlay addresses.
  virtual void create_tunnel(const std::string &ns, const std::string &name,
                             const std::string &kind, uint32_t key, const std::string &local,
                             const std::string &remote) = 0;
  virtual void del_link(const std::string &ns, const std::string &ifname) = 0;
  virtual std::vector<std::string> list_ifnames(const std::string &ns) = 0;
};

// Shells out to the `ip` tool; namespace tokens are named netns entries
// attached to container init processes.
class RealNetBackend : public NetBackend {
 public:
  void check_privileges() override;
  std::string register_ns(const std::string &node_name, const std::string &container_id,
                          int pid) override;
  void release_ns(const std::string &token) override;
  void create_veth(const std::string &ns_a, const std::string &name_a, const std::string &ns_b,
                   const std::string &name_b) override;
  void create_bridge(const std::string &ns, const std::string &name) override;
  void enslave(const std::string &ns, const std::string &ifname,
               const std::string &master) override;
  void add_addr(const std::string &ns, const std::string &ifname,
                const std::string &cidr) override;
  void set_state(const std::string &ns, const std::string &ifname, bool up) override;
  void set_mac(const std::string &ns, const std::string &ifname, const std::string &mac) override;
  void create_tunnel(const std::string &ns, const std::string &name, const std::string &kind,
                     uint32_t key, const std::string &local, const std::string &remote) override;
  void del_link(const std::string &ns, const std::string &ifname) override;
  std::vector<std::string> list_ifnames(const std::string &ns) override;

 private:
  std::vector<std::string> ns_prefix(const std::string &ns);
  void run(const std::vector<std::string> &argv);
};

// Drives the simulation engine's /vemul-sim/net endpoints.
class SimNetBackend : public NetBackend {
 public:
  explicit SimNetBackend(EngineClient &engine) : engine_(engine) {}

  void check_privileges() override {}
  std::string register_ns(const std::string &node_name, const std::string &container_id,
                          int pid) override;
  void create_veth(const std::string &ns_a, const std::string &name_a, const std::string &ns_b,
                   const std::string &name_b) override;
  void create_bridge(const std::string &ns, const std::string &name) override;
  void enslave(const std::string &ns, const std::string &ifname,
               const std::string &master) override;
  void add_addr(const std::string &ns, const std::string &ifname,
                const std::string &cidr) override;
  void set_state(const std::string &ns, const std::string &ifname, bool up) override;
  void set_mac(const std::string &ns, const std::string &ifname, const std::string &mac) override;
  void create_tunnel(const std::string &ns, const std::string &name, const std::string &kind,
                     uint32_t key, const std::string &local, const std::string &remote) override;
  void del_link(const std::string &ns, const std::string &ifname) override;
  std::vector<std::string> list_ifnames(const std::string &ns) override;

 private:
  EngineClient &engine_;
};

}  // namespace vemul
