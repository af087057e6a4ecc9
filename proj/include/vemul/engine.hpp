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

// Adapter to the local container engine's HTTP API over a unix socket.
// Safe for concurrent calls on distinct handles: every request uses its
// own connection.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vemul/errors.hpp"
#include "vemul/topology.hpp"

namespace vemul {

inline constexpr const char *kOwnerLabel = "vemul.owner";
inline constexpr const char *kNodeLabel = "vemul.node";

enum class NodeState { Created, Running, Paused, Removed };

std::string to_string(NodeState s);

struct NodeHandle {
  std::string node_name;
  std::string container_id;
  std::string mgmt_ip;  // filled once the fabric attaches the bus
  NodeState state = NodeState::Created;
};

struct StatSnapshot {
  int64_t timestamp_ms = 0;
  double cpu_percent = 0;
  uint64_t memory_bytes = 0;
};

struct ExecResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Thrown on exec deadline; carries whatever output arrived before the cut.
class ExecTimeout : public Error {
 public:
  ExecTimeout(const std::string &msg, ExecResult partial)
      : Error(Errc::exec_timeout, msg), partial(std::move(partial)) {}
  ExecResult partial;
};

struct ImageConfig {
  std::string whitebox_switch = "vemul/openvswitch:latest";
  std::string controller = "vemul/onos:latest";
  std::string host = "vemul/host:latest";

  const std::string &for_kind(NodeKind k) const {
    switch (k) {
      case NodeKind::WhiteboxSwitch: return whitebox_switch;
      case NodeKind::Controller: return controller;
      default: return host;
    }
  }
};

class EngineClient {
 public:
  explicit EngineClient(std::string socket_path = default_socket());

  static std::string default_socket();

  // GET /version; learns the API prefix and whether the peer is the
  // simulation engine. Throws engine-unreachable.
  void connect();
  bool connected() const { return !api_version_.empty(); }
  bool is_sim() const { return is_sim_; }
  const std::string &api_version() const { return api_version_; }
  const std::string &socket_path() const { return socket_path_; }

  NodeHandle create_container(const NodeSpec &spec, const std::string &run_id,
                              const ImageConfig &images = {});
  void destroy_container(NodeHandle &handle);
  ExecResult exec_in_node(const NodeHandle &handle, const std::vector<std::string> &argv,
                          int timeout_ms);
  void pause_node(NodeHandle &handle);
  void resume_node(NodeHandle &handle);
  StatSnapshot sample_stats(const NodeHandle &handle);
  std::vector<NodeHandle> list_managed(const std::string &run_id = "");

  // One-shot counter read: cumulative cpu ns and resident bytes.
  std::pair<double, uint64_t> read_counters(const NodeHandle &handle);
  std::string inspect_raw(const NodeHandle &handle);
  int inspect_pid(const NodeHandle &handle);

  // Raw passthrough for extension endpoints (sim seams). Throws on HTTP
  // error status with the server's message.
  std::string http_get(const std::string &path);
  std::string http_post(const std::string &path, const std::string &json_body);

 private:
  std::string versioned(const std::string &path) const;
  void ensure_connected();

  std::string socket_path_;
  std::string api_version_;
  bool is_sim_ = false;
};

}  // namespace vemul
