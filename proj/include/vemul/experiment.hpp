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
#include <string>

#include "vemul/orchestrator.hpp"

namespace vemul {

// Declarative experiment files. Schema, all unknown fields rejected:
//
//   {
//     "name": "baseline",              // optional, defaults to the file stem
//     "repetitions": 3,                // optional, >= 1, defaults to 1
//     "attach_controller": true,       // optional; skipped when no controller node
//     "topology": { ... },             // required, inline topology document
//     "events": [                      // required, may be empty
//       {"action": "exec", "node": "h1", "command": ["uname"], "timeout_ms": 5000},
//       {"action": "ping", "src": "h1", "dst": "h2", "count": 10, "interval_s": 1.0},
//       {"action": "udp-flow", "src": "h1", "dst": "h2", "rate_mbps": 100,
//        "duration_s": 10, "port": 5001, "parallel": true},
//       {"action": "link-up" | "link-down", "link": "l1"},
//       {"action": "pause" | "resume", "node": "h1"},
//       {"action": "create-node", "spec": { ...node document... }},
//       {"action": "delete-node", "node": "h3"},
//       {"action": "create-link", "spec": {"name":..,"a":..,"b":..,"model":..,"key":..}},
//       {"action": "delete-link", "link": "l2"},
//       {"action": "sleep", "seconds": 1.5}
//     ],
//     "report": "out.json"             // optional, defaults to <stem>-report.json
//   }
//
// Consecutive events marked "parallel": true form one group run concurrently;
// only measurement actions (exec, ping, udp-flow, sleep) may be grouped.
struct ExperimentOptions {
  EmulationOptions emulation;
  std::function<void(const std::string &)> progress;  // optional status lines
};

// Validates the whole file before touching the engine, then runs every
// repetition against a fresh emulation, always tearing down, and writes the
// report. Returns the report path. Schema problems raise schema-violation
// naming the offending field; any event failure aborts after teardown.
std::string run_experiment_file(const std::string &path,
                                const ExperimentOptions &opts = {});

}  // namespace vemul
