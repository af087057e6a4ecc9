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

#include <string>

#include "vemul/engine.hpp"

namespace vemul {

// Talks the switch's own management plane from outside the container, over
// the bus. Keeps images free of CLI tooling requirements.
class SwitchControl {
 public:
  virtual ~SwitchControl() = default;
  virtual void create_bridge(const NodeHandle &sw, const std::string &bridge) = 0;
  virtual void add_port(const NodeHandle &sw, const std::string &bridge,
                        const std::string &ifname) = 0;
  virtual bool bridge_exists(const NodeHandle &sw, const std::string &bridge) = 0;
  virtual void set_controller(const NodeHandle &sw, const std::string &bridge,
                              const std::string &target) = 0;
  virtual bool controller_connected(const NodeHandle &sw, const std::string &bridge) = 0;
};

// OVSDB over TCP to <mgmt_ip>:<port>. One short-lived session per call.
class OvsdbSwitchControl : public SwitchControl {
 public:
  explicit OvsdbSwitchControl(int port = 6640, int timeout_ms = 5000)
      : port_(port), timeout_ms_(timeout_ms) {}

  void create_bridge(const NodeHandle &sw, const std::string &bridge) override;
  void add_port(const NodeHandle &sw, const std::string &bridge,
                const std::string &ifname) override;
  bool bridge_exists(const NodeHandle &sw, const std::string &bridge) override;
  void set_controller(const NodeHandle &sw, const std::string &bridge,
                      const std::string &target) override;
  bool controller_connected(const NodeHandle &sw, const std::string &bridge) override;

 private:
  int port_;
  int timeout_ms_;
};

class SimSwitchControl : public SwitchControl {
 public:
  explicit SimSwitchControl(EngineClient &engine) : engine_(engine) {}

  void create_bridge(const NodeHandle &sw, const std::string &bridge) override;
  void add_port(const NodeHandle &sw, const std::string &bridge,
                const std::string &ifname) override;
  bool bridge_exists(const NodeHandle &sw, const std::string &bridge) override;
  void set_controller(const NodeHandle &sw, const std::string &bridge,
                      const std::string &target) override;
  bool controller_connected(const NodeHandle &sw, const std::string &bridge) override;

 private:
  EngineClient &engine_;
};

// Answers "is anything accepting on ip:port".
class Prober {
 public:
  virtual ~Prober() = default;
  virtual bool tcp_open(const std::string &ip, int port, int timeout_ms) = 0;
};

class RealProber : public Prober {
 public:
  bool tcp_open(const std::string &ip, int port, int timeout_ms) override;
};

class SimProber : public Prober {
 public:
  explicit SimProber(EngineClient &engine) : engine_(engine) {}
  bool tcp_open(const std::string &ip, int port, int timeout_ms) override;

 private:
  EngineClient &engine_;
};

}  // namespace vemul
