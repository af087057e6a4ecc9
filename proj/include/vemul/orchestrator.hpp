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

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vemul/engine.hpp"
#include "vemul/fabric.hpp"
#include "vemul/switch_control.hpp"
#include "vemul/topology.hpp"

namespace vemul {

struct ControllerTarget {
  std::string transport = "tcp";
  std::string ip;
  int port = 6653;

  std::string render() const { return transport + ":" + ip + ":" + std::to_string(port); }
};

enum class Phase { building, up, tearing_down, down };
const char *to_string(Phase p);

struct EmulationOptions {
  std::string socket;       // empty: engine default resolution
  std::string fabric_mode = "auto";  // auto | sim | real
  std::string run_id;       // empty: generated
  ImageConfig images;
  int controller_ready_timeout_ms = 120000;
  int controller_connect_timeout_ms = 15000;
};

// One live experiment: owns the engine connection, the fabric, and every
// container and link created under its run id. API layer of the stack.
class Emulation {
 public:
  explicit Emulation(EmulationOptions opts = {});
  ~Emulation();
  Emulation(const Emulation &) = delete;
  Emulation &operator=(const Emulation &) = delete;

  void up(const Topology &t);
  void down();

  void set_controller(const std::string &switch_name, const ControllerTarget &target,
                      const std::string &bridge = "br_oper0");
  ControllerTarget get_controller_endpoint(const std::string &controller_name);

  NodeHandle add_node_live(const NodeSpec &spec);
  void remove_node_live(const std::string &name);
  LinkHandle add_link_live(const LinkSpec &spec);
  void remove_link_live(const std::string &name);

  const std::string &run_id() const { return run_id_; }
  Phase phase() const { return phase_; }
  const Topology &topology() const { return topology_; }
  const std::map<std::string, NodeHandle> &handles() const { return handles_; }
  const std::map<std::string, LinkHandle> &links() const { return links_; }
  const LinkHandle &bus() const { return bus_; }
  const std::vector<std::string> &last_residue() const { return residue_; }

  NodeHandle &handle(const std::string &name);          // throws no-such-node
  LinkHandle &link(const std::string &name);            // throws unknown-node style
  void set_link_state(const std::string &link_name, bool up);

  EngineClient &engine() { return *engine_; }
  Fabric &fabric() { return *fabric_; }
  SwitchControl &switch_control() { return *swctl_; }
  Prober &prober() { return *prober_; }
  bool sim() const { return sim_; }

 private:
  void bring_up_node(const NodeSpec &spec);
  std::vector<std::string> data_ifnames(const std::string &node_name) const;
  void teardown(std::vector<std::string> &residue);

  EmulationOptions opts_;
  std::string run_id_;
  bool sim_ = false;
  std::unique_ptr<EngineClient> engine_;
  std::unique_ptr<NetBackend> backend_;
  std::unique_ptr<Fabric> fabric_;
  std::unique_ptr<SwitchControl> swctl_;
  std::unique_ptr<Prober> prober_;

  std::mutex mu_;
  Phase phase_ = Phase::down;
  Topology topology_;
  std::map<std::string, NodeHandle> handles_;
  std::map<std::string, LinkHandle> links_;
  LinkHandle bus_;
  std::vector<std::string> residue_;
};

}  // namespace vemul
