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

#include "vemul/topology.hpp"

namespace vemul {

// Declarative topology document. JSON object with top-level keys `nodes` and
// `links`; field names are fixed (nodes: name/kind/image/ip/mask/role/
// cpu_quota/memory_bytes, links: name/a/b/model/class/members/tunnel_key) and
// unknown keys are rejected with a schema-violation naming the offender.
Topology topology_from_json_text(const std::string &text);
Topology load_topology_file(const std::string &path);
std::string topology_to_json_text(const Topology &t);
void save_topology_file(const Topology &t, const std::string &path);

}  // namespace vemul
