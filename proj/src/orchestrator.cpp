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

#include "vemul/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "vemul/util.hpp"

namespace vemul {

const char *to_string(Phase p) {
  switch (p) {
    case Phase::building: return "building";
    case Phase::up: return "up";
    case Phase::tearing_down: return "tearing-down";
    case Phase::down: return "down";
  }
  return "?";
}

Emulation::Emulation(EmulationOptions opts) : opts_(std::move(opts)) {
  run_id_ = opts_.run_id.empty() ? "r" + util::random_hex(8) : opts_.run_id;
  std::string socket = opts_.socket.empty() ? EngineClient::default_socket() : opts_.socket;
  engine_ = std::make_unique<EngineClient>(socket);
  engine_->connect();
  if (opts_.fabric_mode == "auto")
    sim_ = engine_->is_sim();
  else if (opts_.fabric_mode == "sim")
    sim_ = true;
  else if (opts_.fabric_mode == "real")
    sim_ = false;
  else
    throw Error(Errc::invalid_spec, "fabric mode " + opts_.fabric_mode);
  if (sim_) {
    backend_ = std::make_unique<SimNetBackend>(*engine_);
    swctl_ = std::make_unique<SimSwitchControl>(*engine_);
    prober_ = std::make_unique<SimProber>(*engine_);
  } else {
    backend_ = std::make_unique<RealNetBackend>();
    swctl_ = std::make_unique<OvsdbSwitchControl>();
    prober_ = std::make_unique<RealProber>();
  }
  fabric_ = std::make_unique<Fabric>(*backend_, *engine_, run_id_);
}

Emulation::~Emulation() {
  try {
    down();
  } catch (...) {
  }
}

NodeHandle &Emulation::handle(const std::string &name) {
  auto it = handles_.find(name);
  if (it == handles_.end()) throw Error(Errc::no_such_node, name);
  return it->second;
}

LinkHandle &Emulation::link(const std::string &name) {
  auto it = links_.find(name);
  if (it == links_.end()) throw Error(Errc::unknown_node, "link " + name);
  return it->second;
}

void Emulation::set_link_state(const std::string &link_name, bool up) {
  fabric_->set_link_state(link(link_name), up);
}

std::vector<std::string> Emulation::data_ifnames(const std::string &node_name) const {
  std::vector<std::string> out;
  for (const auto &[name, lh] : links_) {
    for (const auto &b : lh.bindings)
      if (b.node_name == node_name) out.push_back(b.ifname);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Emulation::bring_up_node(const NodeSpec &spec) {
  NodeHandle &h = handles_.at(spec.name);
  switch (spec.kind) {
    case NodeKind::WhiteboxSwitch: {
      swctl_->create_bridge(h, "br_oper0");
      // Name order fixes OpenFlow port numbering across runs.
      for (const auto &ifname : data_ifnames(spec.name))
        swctl_->add_port(h, "br_oper0", ifname);
      break;
    }
    case NodeKind::Host: {
      if (spec.ip_config) {
        auto ports = data_ifnames(spec.name);
        if (std::find(ports.begin(), ports.end(), "data0") != ports.end())
          fabric_->assign_addr(spec.name, "data0",
                               spec.ip_config->address + "/" +
                                   std::to_string(spec.ip_config->prefix_len));
      }
      break;
    }
    case NodeKind::Controller: {
      int64_t deadline = util::mono_ms() + opts_.controller_ready_timeout_ms;
      bool ready = false;
      while (util::mono_ms() < deadline) {
        if (prober_->tcp_open(h.mgmt_ip, 6653, 500)) {
          ready = true;
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      if (!ready)
        throw Error(Errc::controller_connect_timeout,
                    "not listening on 6653 within " +
                        std::to_string(opts_.controller_ready_timeout_ms / 1000) + "s");
      break;
    }
  }
}

void Emulation::up(const Topology &t) {
  std::lock_guard lk(mu_);
  if (phase_ != Phase::down)
    throw Error(Errc::precondition_failed, std::string("up() while ") + to_string(phase_));
  auto violations = t.validate();
  if (!violations.empty())
    throw Error(Errc::precondition_failed, "topology invalid: " + violations[0].subject +
                                               "." + violations[0].field + ": " +
                                               violations[0].message);
  int bus_links = 0;
  std::string bus_name = "mgmt";
  for (const auto &l : t.links())
    if (l.topology_class == LinkClass::Bus) {
      bus_links++;
      bus_name = l.name;
    }
  if (bus_links > 1)
    throw Error(Errc::invalid_spec, "at most one bus link per topology");

  topology_ = t;
  phase_ = Phase::building;
  residue_.clear();
  try {
    for (const NodeSpec &n : topology_.nodes()) {
      try {
        handles_[n.name] = engine_->create_container(n, run_id_, opts_.images);
      } catch (const Error &e) {
        throw Error(e.code(), "node " + n.name + ": " + e.what());
      }
    }
    // Every node joins the management bus; a declared bus link only names it.
    std::vector<NodeHandle> members;
    for (const NodeSpec &n : topology_.nodes()) members.push_back(handles_.at(n.name));
    bus_ = fabric_->create_bus(bus_name, members);
    for (const auto &b : bus_.bindings)
      handles_.at(b.node_name).mgmt_ip = b.addr.substr(0, b.addr.find('/'));

    for (const LinkSpec &l : topology_.links()) {
      if (l.topology_class == LinkClass::Bus) continue;
      try {
        if (l.model == LinkModel::Veth)
          links_[l.name] = fabric_->create_veth_link(l.name, handles_.at(l.endpoint_a),
                                                     handles_.at(l.endpoint_b));
        else
          links_[l.name] = fabric_->create_tunnel_link(
              l.name, handles_.at(l.endpoint_a), handles_.at(l.endpoint_b),
              l.model == LinkModel::GreTunnel ? "gre" : "vxlan", l.tunnel_key.value_or(0));
      } catch (const Error &e) {
        throw Error(e.code(), "link " + l.name + ": " + e.what());
      }
    }

    for (const NodeSpec &n : topology_.nodes()) {
      try {
        bring_up_node(n);
      } catch (const Error &e) {
        throw Error(e.code(), "node " + n.name + ": " + e.what());
      }
    }
  } catch (...) {
    std::vector<std::string> strays;
    teardown(strays);
    phase_ = Phase::down;
    if (!strays.empty()) {
      try {
        throw;
      } catch (const std::exception &e) {
        throw Error(Errc::rollback_failed,
                    std::string(e.what()) + "; strays: " + util::join(strays, ", "));
      }
    }
    throw;
  }
  phase_ = Phase::up;
}

void Emulation::teardown(std::vector<std::string> &residue) {
  phase_ = Phase::tearing_down;
  for (auto &[name, lh] : links_) {
    try {
      fabric_->destroy_link(lh);
    } catch (const std::exception &) {
      residue.push_back("link " + name);
    }
  }
  links_.clear();
  if (!bus_.link_name.empty()) {
    try {
      fabric_->destroy_link(bus_);
    } catch (const std::exception &) {
      residue.push_back("bus " + bus_.link_name);
    }
  }
  bus_ = LinkHandle{};

  // Sweep by label, not by the handle map: containers that were created but
  // never recorded (mid-create failure) still carry the run id.
  std::vector<NodeHandle> listed;
  try {
    listed = engine_->list_managed(run_id_);
  } catch (const std::exception &) {
  }
  for (auto &h : listed) {
    try {
      engine_->destroy_container(h);
    } catch (const Error &e) {
      if (e.code() != Errc::no_such_node)
        residue.push_back("container " +
                          (h.node_name.empty() ? h.container_id : h.node_name));
    }
  }
  for (auto &[name, h] : handles_) fabric_->forget_node(name);
  handles_.clear();
  topology_ = Topology{};
  residue_ = residue;
}

void Emulation::down() {
  std::lock_guard lk(mu_);
  if (phase_ == Phase::down) return;
  std::vector<std::string> residue;
  teardown(residue);
  phase_ = Phase::down;
}

void Emulation::set_controller(const std::string &switch_name, const ControllerTarget &target,
                               const std::string &bridge) {
  std::lock_guard lk(mu_);
  auto it = handles_.find(switch_name);
  const NodeSpec *spec = topology_.find_node(switch_name);
  if (it == handles_.end() || !spec || spec->kind != NodeKind::WhiteboxSwitch)
    throw Error(Errc::no_such_switch, switch_name);
  if (it->second.state != NodeState::Running)
    throw Error(Errc::node_not_running, switch_name);
  if (!swctl_->bridge_exists(it->second, bridge))
    throw Error(Errc::no_such_bridge, bridge + " on " + switch_name);
  swctl_->set_controller(it->second, bridge, target.render());
  int64_t deadline = util::mono_ms() + opts_.controller_connect_timeout_ms;
  while (util::mono_ms() < deadline) {
    if (swctl_->controller_connected(it->second, bridge)) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  throw Error(Errc::controller_connect_timeout,
              switch_name + " -> " + target.render());
}

ControllerTarget Emulation::get_controller_endpoint(const std::string &controller_name) {
  std::lock_guard lk(mu_);
  auto it = handles_.find(controller_name);
  const NodeSpec *spec = topology_.find_node(controller_name);
  if (it == handles_.end() || !spec) throw Error(Errc::no_such_node, controller_name);
  if (spec->kind != NodeKind::Controller)
    throw Error(Errc::not_a_controller, controller_name);
  if (it->second.mgmt_ip.empty())
    throw Error(Errc::precondition_failed, controller_name + " has no management address");
  return ControllerTarget{"tcp", it->second.mgmt_ip, 6653};
}

NodeHandle Emulation::add_node_live(const NodeSpec &spec) {
  std::lock_guard lk(mu_);
  if (phase_ != Phase::up)
    throw Error(Errc::precondition_failed, std::string("add while ") + to_string(phase_));
  topology_.add_node(spec);
  bool created = false;
  try {
    NodeHandle h = engine_->create_container(spec, run_id_, opts_.images);
    created = true;
    handles_[spec.name] = h;
    PortBinding b = fabric_->add_bus_member(bus_, h);
    handles_[spec.name].mgmt_ip = b.addr.substr(0, b.addr.find('/'));
    bring_up_node(spec);
    return handles_[spec.name];
  } catch (...) {
    if (created) {
      fabric_->remove_bus_member(bus_, spec.name);
      try {
        engine_->destroy_container(handles_[spec.name]);
      } catch (...) {
      }
      fabric_->forget_node(spec.name);
      handles_.erase(spec.name);
    }
    topology_.remove_node(spec.name);
    throw;
  }
}

LinkHandle Emulation::add_link_live(const LinkSpec &spec) {
  std::lock_guard lk(mu_);
  if (phase_ != Phase::up)
    throw Error(Errc::precondition_failed, std::string("add while ") + to_string(phase_));
  if (spec.topology_class == LinkClass::Bus)
    throw Error(Errc::invalid_spec, "the bus is fixed at bring-up");
  topology_.add_link(spec);
  try {
    LinkHandle h;
    if (spec.model == LinkModel::Veth)
      h = fabric_->create_veth_link(spec.name, handles_.at(spec.endpoint_a),
                                    handles_.at(spec.endpoint_b));
    else
      h = fabric_->create_tunnel_link(spec.name, handles_.at(spec.endpoint_a),
                                      handles_.at(spec.endpoint_b),
                                      spec.model == LinkModel::GreTunnel ? "gre" : "vxlan",
                                      spec.tunnel_key.value_or(0));
    links_[spec.name] = h;
    for (const auto &b : h.bindings) {
      const NodeSpec *node = topology_.find_node(b.node_name);
      if (!node) continue;
      if (node->kind == NodeKind::WhiteboxSwitch)
        swctl_->add_port(handles_.at(b.node_name), "br_oper0", b.ifname);
      else if (node->kind == NodeKind::Host && node->ip_config && b.ifname == "data0")
        fabric_->assign_addr(b.node_name, "data0",
                             node->ip_config->address + "/" +
                                 std::to_string(node->ip_config->prefix_len));
    }
    return links_.at(spec.name);
  } catch (...) {
    auto it = links_.find(spec.name);
    if (it != links_.end()) {
      try {
        fabric_->destroy_link(it->second);
      } catch (...) {
      }
      links_.erase(it);
    }
    topology_.remove_link(spec.name);
    throw;
  }
}

void Emulation::remove_link_live(const std::string &name) {
  std::lock_guard lk(mu_);
  if (phase_ != Phase::up)
    throw Error(Errc::precondition_failed, std::string("remove while ") + to_string(phase_));
  auto it = links_.find(name);
  if (it == links_.end()) throw Error(Errc::unknown_node, "link " + name);
  fabric_->destroy_link(it->second);
  links_.erase(it);
  topology_.remove_link(name);
}

void Emulation::remove_node_live(const std::string &name) {
  std::lock_guard lk(mu_);
  if (phase_ != Phase::up)
    throw Error(Errc::precondition_failed, std::string("remove while ") + to_string(phase_));
  auto it = handles_.find(name);
  if (it == handles_.end()) throw Error(Errc::unknown_node, name);
  for (const auto &ln : topology_.remove_node(name)) {
    auto lit = links_.find(ln);
    if (lit == links_.end()) continue;
    try {
      fabric_->destroy_link(lit->second);
    } catch (...) {
    }
    links_.erase(lit);
  }
  fabric_->remove_bus_member(bus_, name);
  try {
    engine_->destroy_container(it->second);
  } catch (const Error &e) {
    if (e.code() != Errc::no_such_node) throw;
  }
  fabric_->forget_node(name);
  handles_.erase(it);
}

}  // namespace vemul
