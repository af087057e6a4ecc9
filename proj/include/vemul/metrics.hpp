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
#include <optional>
#include <string>
#include <vector>

#include "vemul/orchestrator.hpp"

namespace vemul {

struct LatencyRecord {
  std::string src;
  std::string dst;
  double first_ping_ms = 0;
  std::vector<double> subsequent_ms;
};

struct ThroughputSample {
  int second = 0;
  double measured_mbps = 0;
};

struct ThroughputSeries {
  std::string flow_id;
  double requested_mbps = 0;
  std::vector<ThroughputSample> samples;

  double mean_mbps() const;
};

struct RepRow {
  int rep = 0;
  double cpu_percent = 0;
  double memory_mb = 0;
  double first_ping_ms = 0;
  double throughput_mbps = 0;
};

struct SweepResult {
  std::string family;
  int switch_count = 0;
  int repetitions = 0;  // completed; means are over these only
  int attempted = 0;
  double cpu_percent_mean = 0;
  double memory_mb_mean = 0;
  double latency_ms_mean = 0;
  double throughput_mbps_mean = 0;
  std::vector<RepRow> rows;
  std::vector<std::string> incomplete;  // per-failure notes, size or rep tagged
};

// The paper's baseline measurements, exact transcription. Hardware-bound:
// reported side by side, never asserted against.
class ReferenceTable {
 public:
  // emulator: mininet|vsdnemul; family: star|mesh|tree;
  // metric: cpu_percent|memory_mb|first_ping_ms
  std::optional<double> lookup(const std::string &emulator, const std::string &family,
                               int switch_count, const std::string &metric) const;
  void set(const std::string &emulator, const std::string &family, int switch_count,
           const std::string &metric, double value);
  size_t size() const { return cells_.size(); }

  static const ReferenceTable &paper();

 private:
  std::map<std::string, double> cells_;
};

// Output parsers, exposed for direct testing against captured tool output.
namespace parse {

struct PingStats {
  std::vector<double> rtt_ms;
  int transmitted = 0;
  int received = 0;
};

std::optional<PingStats> ping_output(const std::string &text);

// Per-second receiver samples; the cumulative 0.0-N line is excluded by its
// width. Rates normalized to Mbps.
std::vector<ThroughputSample> iperf_server_intervals(const std::string &text);

}  // namespace parse

struct FlowOptions {
  int port = 5001;
  std::string flow_id;       // default "<src>><dst>"
  double ping_interval_s = 1.0;
};

LatencyRecord measure_first_ping(Emulation &emu, const std::string &src,
                                 const std::string &dst, int echo_count,
                                 double interval_s = 1.0);

ThroughputSeries run_udp_flow(Emulation &emu, const std::string &src,
                              const std::string &dst, double rate_mbps, int duration_s,
                              const FlowOptions &opts = {});

struct SweepOptions {
  int reps = 15;
  int sample_window_s = 30;   // steady-state window, 1 Hz
  int flow_duration_s = 10;
  double flow_rate_mbps = 100;
  int ping_echoes = 11;
  double ping_interval_s = 1.0;
  int mesh_cap = 65;
  bool allow_large_mesh = false;
  EmulationOptions emulation;
  std::function<void(const std::string &)> progress;  // optional status lines
};

std::vector<SweepResult> run_scalability_sweep(const std::string &family,
                                               const std::vector<int> &sizes,
                                               const SweepOptions &opts = {});

struct FidelityOptions {
  int fg_port = 5001;
  int first_bg_port = 5002;
  EmulationOptions emulation;
  bool measure_capacity = true;
  std::function<void(const std::string &)> progress;
};

struct FidelityResult {
  ThroughputSeries foreground;
  std::vector<ThroughputSeries> background;
  double requested_total_mbps = 0;
  double capacity_mbps = 0;  // ceiling seen by a saturating flow; 0 if skipped
};

FidelityResult run_fidelity_scenario(double fg_rate_mbps, double bg_rate_mbps,
                                     int duration_s, double scale,
                                     const FidelityOptions &opts = {});

std::string emit_report(const std::vector<SweepResult> &results,
                        const ReferenceTable &reference, const std::string &out_path);

std::string emit_fidelity_report(const FidelityResult &result, const std::string &out_path);

}  // namespace vemul
