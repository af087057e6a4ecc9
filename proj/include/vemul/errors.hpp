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

#include <stdexcept>
#include <string>

namespace vemul {

enum class Errc {
  // topology
  duplicate_name,
  invalid_spec,
  unknown_endpoint,
  duplicate_tunnel_key,
  self_loop,
  size_too_small,
  // runtime
  engine_unreachable,
  image_not_found,
  name_conflict,
  limit_rejected,
  node_not_running,
  exec_timeout,
  invalid_state,
  // fabric
  namespace_unresolvable,
  ifname_collision,
  privilege_denied,
  key_in_use,
  peer_unreachable,
  subnet_exhausted,
  already_destroyed,
  // orchestrator
  no_such_switch,
  no_such_bridge,
  controller_connect_timeout,
  no_such_node,
  not_a_controller,
  unknown_node,
  precondition_failed,
  rollback_failed,
  // metrics / shell
  unreachable,
  tool_missing,
  out_of_resources,
  schema_violation,
  io_failure,
  internal,
};

const char *errc_name(Errc c);

// Single exception type for the whole stack. The code keeps the machine-readable
// category, what() carries the human context.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace vemul
