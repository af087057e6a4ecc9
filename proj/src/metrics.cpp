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

#include "vemul/metrics.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <regex>
#include <thread>

#include "vemul/util.hpp"

namespace vemul {

double ThroughputSeries::mean_mbps() const {
  if (samples.empty()) return 0;
  double sum = 0;
  for (const auto &s : samples) sum += s.measured_mbps;
  return sum / static_cast<double>(samples.size());
}

// ---- parsers --------------------------------------------------------------

namespace parse {

std::optional<PingStats> ping_output(const std::string &text) {
  PingStats ps;
  bool saw_summary = false;
  for (const auto &line : util::split(text, '\n')) {
    auto tp = line.find("time=");
    if (tp != std::string::npos && line.find("bytes from") != std::string::npos) {
      std::string rest = line.substr(tp + 5);
      auto sp = rest.find(' ');
      auto v = util::parse_double(sp == std::string::npos ? rest : rest.substr(0, sp));
      if (v) ps.rtt_ms.push_back(*v);
    } else if (line.find("packets transmitted") != std::string::npos) {
      auto toks = util::tokenize(line);
      if (toks.size() >= 4) {
        ps.transmitted = static_cast<int>(util::parse_int(toks[0]).value_or(0));
        ps.received = static_cast<int>(util::parse_int(toks[3]).value_or(0));
        saw_summary = true;
      }
    }
  }
  if (!saw_summary && ps.rtt_ms.empty()) return std::nullopt;
  if (!saw_summary) {
    ps.transmitted = static_cast<int>(ps.rtt_ms.size());
    ps.received = ps.transmitted;
  }
  return ps;
}

std::vector<ThroughputSample> iperf_server_intervals(const std::string &text) {
  static const std::regex re(
      R"(^\[\s*\d+\]\s+([0-9]+\.[0-9]+)-\s*([0-9]+\.[0-9]+)\s+sec\s+[0-9.]+\s+[KMG]?Bytes\s+([0-9.]+)\s+([KMG]?)bits/sec)");
  std::map<int, double> by_second;
  for (const auto &line : util::split(text, '\n')) {
    std::smatch m;
    if (!std::regex_search(line, m, re)) continue;
    double start = util::parse_double(m[1].str()).value_or(-1);
    double end = util::parse_double(m[2].str()).value_or(-1);
    double width = end - start;
    if (start < 0 || width < 0.5 || width > 1.5) continue;  // cumulative or junk
    double rate = util::parse_double(m[3].str()).value_or(0);
    std::string unit = m[4].str();
    if (unit == "G")
      rate *= 1000.0;
    else if (unit == "K")
      rate /= 1000.0;
    else if (unit.empty())
      rate /= 1e6;
    by_second.emplace(static_cast<int>(std::lround(start)), rate);
  }
  std::vector<ThroughputSample> out;
  for (const auto &[sec, rate] : by_second) out.push_back({sec, rate});
  return out;
}

}  // namespace parse

// ---- single measurements --------------------------------------------------

namespace {

std::string data_ip_of(Emulation &emu, const std::string &node) {
  const NodeSpec *spec = emu.topology().find_node(node);
  if (!spec) throw Error(Errc::no_such_node, node);
  if (!spec->ip_config)
    throw Error(Errc::precondition_failed, node + " has no data address");
  return spec->ip_config->address;
}

std::string fmt_bw(double mbps) {
  // iperf bandwidth spec; integral rates render without a fraction.
  if (std::abs(mbps - std::round(mbps)) < 1e-9)
    return std::to_string(static_cast<long long>(std::llround(mbps))) + "M";
  return util::fmt_double(mbps, 2) + "M";
}

bool looks_tool_missing(const ExecResult &r) {
  return r.exit_code == 127 ||
         r.err.find("executable file not found") != std::string::npos;
}

}  // namespace

LatencyRecord measure_first_ping(Emulation &emu, const std::string &src,
                                 const std::string &dst, int echo_count,
                                 double interval_s) {
  if (src == dst)
    throw Error(Errc::invalid_spec, "src equals dst (" + src + "), no such pair");
  if (echo_count < 1) throw Error(Errc::precondition_failed, "echo_count must be >= 1");
  NodeHandle &src_h = emu.handle(src);
  emu.handle(dst);
  std::string dst_ip = data_ip_of(emu, dst);

  std::vector<std::string> argv = {"ping", "-c", std::to_string(echo_count)};
  if (interval_s != 1.0) {
    argv.push_back("-i");
    argv.push_back(util::fmt_double(interval_s, 1));
  }
  argv.push_back(dst_ip);
  int timeout_ms =
      static_cast<int>((static_cast<double>(echo_count) * interval_s + 15.0) * 1000.0);
  ExecResult r = emu.engine().exec_in_node(src_h, argv, timeout_ms);
  if (looks_tool_missing(r))
    throw Error(Errc::tool_missing, src + ": ping: " + util::trim(r.err));
  auto stats = parse::ping_output(r.out);
  if (!stats || stats->received == 0)
    throw Error(Errc::unreachable,
                src + " -> " + dst_ip + ": " +
                    (r.err.empty() ? "100% packet loss" : util::trim(r.err)));
  LatencyRecord rec;
  rec.src = src;
  rec.dst = dst;
  rec.first_ping_ms = stats->rtt_ms.front();
  rec.subsequent_ms.assign(stats->rtt_ms.begin() + 1, stats->rtt_ms.end());
  return rec;
}

ThroughputSeries run_udp_flow(Emulation &emu, const std::string &src,
                              const std::string &dst, double rate_mbps, int duration_s,
                              const FlowOptions &opts) {
  if (rate_mbps <= 0) throw Error(Errc::precondition_failed, "rate must be > 0 Mbps");
  if (duration_s <= 0) throw Error(Errc::precondition_failed, "duration must be > 0 s");
  NodeHandle &src_h = emu.handle(src);
  NodeHandle &dst_h = emu.handle(dst);
  std::string dst_ip = data_ip_of(emu, dst);
  std::string port_s = std::to_string(opts.port);

  // The server never exits on its own; it is reaped by its exec deadline and
  // the interval lines ride out in the timeout's partial output.
  std::string server_out;
  ExecResult server_res;
  std::atomic<bool> server_done{false};
  std::exception_ptr server_err;
  std::thread server([&] {
    try {
      server_res = emu.engine().exec_in_node(
          dst_h, {"iperf", "-s", "-u", "-p", port_s, "-i", "1"},
          (duration_s + 4) * 1000);
      server_out = server_res.out;
    } catch (ExecTimeout &t) {
      server_res.exit_code = 0;
      server_out = t.partial.out;
    } catch (...) {
      server_err = std::current_exception();
    }
    server_done = true;
  });

  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  if (server_done && server_err) {
    server.join();
    std::rethrow_exception(server_err);
  }
  if (server_done && looks_tool_missing(server_res)) {
    server.join();
    throw Error(Errc::tool_missing, dst + ": iperf: " + util::trim(server_res.err));
  }

  ExecResult cli;
  try {
    cli = emu.engine().exec_in_node(src_h,
                                    {"iperf", "-c", dst_ip, "-u", "-p", port_s, "-b",
                                     fmt_bw(rate_mbps), "-t", std::to_string(duration_s)},
                                    (duration_s + 15) * 1000);
  } catch (...) {
    server.join();
    throw;
  }
  server.join();
  if (server_err) std::rethrow_exception(server_err);
  if (looks_tool_missing(cli))
    throw Error(Errc::tool_missing, src + ": iperf: " + util::trim(cli.err));
  if (looks_tool_missing(server_res))
    throw Error(Errc::tool_missing, dst + ": iperf: " + util::trim(server_res.err));
  if (cli.exit_code != 0)
    throw Error(Errc::unreachable, src + " -> " + dst_ip + ": " + util::trim(cli.err));

  ThroughputSeries series;
  series.flow_id = opts.flow_id.empty() ? src + ">" + dst : opts.flow_id;
  series.requested_mbps = rate_mbps;
  series.samples = parse::iperf_server_intervals(server_out);
  return series;
}

// ---- scalability sweep ----------------------------------------------------

namespace {

Topology make_family(const std::string &family, int size) {
  if (family == "star") return generate_star(size);
  if (family == "tree") return generate_tree(size);
  if (family == "mesh") return generate_mesh(size);
  throw Error(Errc::invalid_spec, "unknown family " + family);
}

// Aggregate CPU% and memory over all managed containers, 1 Hz for window_s.
// CPU is the delta between consecutive per-node counter reads.
std::pair<double, double> sample_steady_state(Emulation &emu, int window_s) {
  struct Prev {
    double ns;
    int64_t t_ms;
  };
  std::map<std::string, Prev> prev;
  std::vector<double> cpu_samples, mem_samples;
  auto read_all = [&](bool record) {
    double cpu_total = 0, mem_total = 0;
    bool have_prev = !prev.empty();
    for (const auto &[name, h] : emu.handles()) {
      auto [ns, mem_bytes] = emu.engine().read_counters(h);
      int64_t t = util::mono_ms();
      auto it = prev.find(name);
      if (it != prev.end() && t > it->second.t_ms)
        cpu_total +=
            (ns - it->second.ns) / (static_cast<double>(t - it->second.t_ms) * 1e6) * 100.0;
      prev[name] = {ns, t};
      mem_total += static_cast<double>(mem_bytes) / 1e6;
    }
    if (record && have_prev) {
      cpu_samples.push_back(cpu_total);
      mem_samples.push_back(mem_total);
    }
  };
  read_all(false);
  for (int tick = 0; tick < window_s; ++tick) {
    std::this_thread::sleep_for(std::chrono::seconds(1));
    read_all(true);
  }
  double cpu = 0, mem = 0;
  for (double v : cpu_samples) cpu += v;
  for (double v : mem_samples) mem += v;
  size_t n = std::max<size_t>(1, cpu_samples.size());
  return {cpu / static_cast<double>(n), mem / static_cast<double>(n)};
}

void say(const SweepOptions &opts, const std::string &msg) {
  if (opts.progress) opts.progress(msg);
}

}  // namespace

std::vector<SweepResult> run_scalability_sweep(const std::string &family,
                                               const std::vector<int> &sizes,
                                               const SweepOptions &opts) {
  if (opts.reps < 1) throw Error(Errc::precondition_failed, "reps must be >= 1");
  std::vector<SweepResult> results;
  for (int size : sizes) {
    SweepResult res;
    res.family = family;
    res.switch_count = size;
    res.attempted = opts.reps;
    if (family == "mesh" && size > opts.mesh_cap && !opts.allow_large_mesh) {
      res.incomplete.push_back("S=" + std::to_string(size) + " skipped: " +
                               std::to_string(size * (size - 1) / 2) +
                               " links exceeds the default mesh cap of " +
                               std::to_string(opts.mesh_cap) +
                               " switches; pass the large-mesh override to run it");
      results.push_back(std::move(res));
      continue;
    }
    for (int rep = 1; rep <= opts.reps; ++rep) {
      RepRow row;
      row.rep = rep;
      try {
        {
          say(opts, family + " S=" + std::to_string(size) + " rep " + std::to_string(rep) +
                        "/" + std::to_string(opts.reps) + ": resources");
          Emulation emu(opts.emulation);
          emu.up(make_family(family, size).without_hosts());
          auto [cpu, mem] = sample_steady_state(emu, opts.sample_window_s);
          row.cpu_percent = cpu;
          row.memory_mb = mem;
          emu.down();
        }
        {
          say(opts, family + " S=" + std::to_string(size) + " rep " + std::to_string(rep) +
                        "/" + std::to_string(opts.reps) + ": traffic");
          Topology t = make_family(family, size);
          NodeSpec ctl;
          ctl.name = "ctl1";
          ctl.kind = NodeKind::Controller;
          t.add_node(ctl);
          Emulation emu(opts.emulation);
          emu.up(t);
          ControllerTarget target = emu.get_controller_endpoint("ctl1");
          std::vector<std::string> switches;
          for (const NodeSpec *sw : emu.topology().nodes_of_kind(NodeKind::WhiteboxSwitch))
            switches.push_back(sw->name);
          for (const auto &sw : switches) emu.set_controller(sw, target);
          LatencyRecord lat =
              measure_first_ping(emu, "h1", "h2", opts.ping_echoes, opts.ping_interval_s);
          row.first_ping_ms = lat.first_ping_ms;
          ThroughputSeries tput =
              run_udp_flow(emu, "h1", "h2", opts.flow_rate_mbps, opts.flow_duration_s);
          row.throughput_mbps = tput.mean_mbps();
          emu.down();
        }
        res.rows.push_back(row);
      } catch (const Error &e) {
        res.incomplete.push_back("S=" + std::to_string(size) + " rep " +
                                 std::to_string(rep) + ": " + e.what());
        if (e.code() == Errc::out_of_resources) break;
      }
    }
    res.repetitions = static_cast<int>(res.rows.size());
    if (res.repetitions > 0) {
      for (const auto &row : res.rows) {
        res.cpu_percent_mean += row.cpu_percent;
        res.memory_mb_mean += row.memory_mb;
        res.latency_ms_mean += row.first_ping_ms;
        res.throughput_mbps_mean += row.throughput_mbps;
      }
      res.cpu_percent_mean /= res.repetitions;
      res.memory_mb_mean /= res.repetitions;
      res.latency_ms_mean /= res.repetitions;
      res.throughput_mbps_mean /= res.repetitions;
    }
    results.push_back(std::move(res));
  }
  return results;
}

// ---- fidelity scenario ----------------------------------------------------

FidelityResult run_fidelity_scenario(double fg_rate_mbps, double bg_rate_mbps,
                                     int duration_s, double scale,
                                     const FidelityOptions &opts) {
  if (!(scale > 0.0) || scale > 1.0)
    throw Error(Errc::precondition_failed, "scale must be in (0, 1]");
  if (fg_rate_mbps <= 0) throw Error(Errc::precondition_failed, "foreground rate must be > 0");
  if (bg_rate_mbps < 0) throw Error(Errc::precondition_failed, "background rate must be >= 0");
  if (duration_s <= 0) throw Error(Errc::precondition_failed, "duration must be > 0 s");

  auto say = [&](const std::string &m) {
    if (opts.progress) opts.progress(m);
  };

  Topology t = generate_fidelity_tree();
  NodeSpec ctl;
  ctl.name = "ctl1";
  ctl.kind = NodeKind::Controller;
  t.add_node(ctl);
  Emulation emu(opts.emulation);
  say("bringing up fidelity tree");
  emu.up(t);
  ControllerTarget target = emu.get_controller_endpoint("ctl1");
  std::vector<std::string> switches;
  for (const NodeSpec *sw : emu.topology().nodes_of_kind(NodeKind::WhiteboxSwitch))
    switches.push_back(sw->name);
  for (const auto &sw : switches) emu.set_controller(sw, target);

  FidelityResult result;
  if (opts.measure_capacity) {
    say("measuring switching capacity ceiling");
    ThroughputSeries sat = run_udp_flow(emu, "h1", "h16", 20000.0, 4,
                                        {opts.fg_port, "capacity-probe", 1.0});
    result.capacity_mbps = sat.mean_mbps();
  }

  struct Job {
    std::string src, dst, id;
    double rate;
    int port;
  };
  std::vector<Job> jobs;
  jobs.push_back({"h1", "h16", "fg", fg_rate_mbps * scale, opts.fg_port});
  // Hi -> H(i+7) for i in 2..8: every background flow crosses the core.
  for (int i = 2; i <= 8; ++i)
    jobs.push_back({"h" + std::to_string(i), "h" + std::to_string(i + 7),
                    "bg" + std::to_string(i), bg_rate_mbps * scale,
                    opts.first_bg_port + (i - 2)});

  say("starting 1 foreground + 7 background flows for " + std::to_string(duration_s) + "s");
  std::vector<ThroughputSeries> series(jobs.size());
  std::vector<std::thread> threads;
  std::mutex errmu;
  std::exception_ptr first_err;
  for (size_t i = 0; i < jobs.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        if (jobs[i].rate <= 0) return;  // background disabled
        series[i] = run_udp_flow(emu, jobs[i].src, jobs[i].dst, jobs[i].rate, duration_s,
                                 {jobs[i].port, jobs[i].id, 1.0});
      } catch (...) {
        std::lock_guard lk(errmu);
        if (!first_err) first_err = std::current_exception();
      }
    });
  }
  for (auto &th : threads) th.join();
  if (first_err) std::rethrow_exception(first_err);

  result.foreground = std::move(series[0]);
  result.background.assign(std::make_move_iterator(series.begin() + 1),
                           std::make_move_iterator(series.end()));
  result.requested_total_mbps = fg_rate_mbps * scale + 7.0 * bg_rate_mbps * scale;
  emu.down();
  return result;
}

// ---- reports --------------------------------------------------------------

std::string emit_report(const std::vector<SweepResult> &results,
                        const ReferenceTable &reference, const std::string &out_path) {
  if (results.empty()) throw Error(Errc::precondition_failed, "no results to report");
  std::ofstream f(out_path);
  if (!f) throw Error(Errc::io_failure, "cannot write " + out_path);
  f << "family,switch_count,rep,cpu_percent,memory_mb,first_ping_ms,throughput_mbps,"
       "ref_cpu_percent,ref_memory_mb,ref_first_ping_ms\n";
  auto cell = [&](std::optional<double> v) { return v ? util::fmt_double(*v, 2) : ""; };
  for (const auto &res : results) {
    auto rc = reference.lookup("vsdnemul", res.family, res.switch_count, "cpu_percent");
    auto rm = reference.lookup("vsdnemul", res.family, res.switch_count, "memory_mb");
    auto rp = reference.lookup("vsdnemul", res.family, res.switch_count, "first_ping_ms");
    for (const auto &row : res.rows) {
      f << res.family << ',' << res.switch_count << ',' << row.rep << ','
        << util::fmt_double(row.cpu_percent, 2) << ',' << util::fmt_double(row.memory_mb, 2)
        << ',' << util::fmt_double(row.first_ping_ms, 2) << ','
        << util::fmt_double(row.throughput_mbps, 2) << ',' << cell(rc) << ',' << cell(rm)
        << ',' << cell(rp) << '\n';
    }
  }
  f << "\n# means over completed reps, side by side with the paper's tables\n";
  for (const auto &res : results) {
    f << "# " << res.family << " S=" << res.switch_count << " (" << res.repetitions << "/"
      << res.attempted << " reps)";
    if (res.repetitions > 0) {
      auto line = [&](const char *name, double mean, const std::string &metric) {
        f << ' ' << name << '=' << util::fmt_double(mean, 2);
        auto mn = reference.lookup("mininet", res.family, res.switch_count, metric);
        auto vs = reference.lookup("vsdnemul", res.family, res.switch_count, metric);
        if (mn || vs)
          f << " (paper: mininet " << cell(mn) << ", vsdnemul " << cell(vs) << ")";
      };
      line("cpu%", res.cpu_percent_mean, "cpu_percent");
      line("mem_mb", res.memory_mb_mean, "memory_mb");
      line("first_ping_ms", res.latency_ms_mean, "first_ping_ms");
      f << " throughput_mbps=" << util::fmt_double(res.throughput_mbps_mean, 2);
    }
    f << '\n';
    for (const auto &note : res.incomplete) f << "#   incomplete: " << note << '\n';
  }
  return out_path;
}

std::string emit_fidelity_report(const FidelityResult &result, const std::string &out_path) {
  std::ofstream f(out_path);
  if (!f) throw Error(Errc::io_failure, "cannot write " + out_path);
  f << "flow,role,requested_mbps,second,measured_mbps\n";
  auto rows = [&](const ThroughputSeries &s, const char *role) {
    for (const auto &sample : s.samples)
      f << s.flow_id << ',' << role << ',' << util::fmt_double(s.requested_mbps, 2) << ','
        << sample.second << ',' << util::fmt_double(sample.measured_mbps, 2) << '\n';
  };
  rows(result.foreground, "foreground");
  for (const auto &bg : result.background) rows(bg, "background");
  f << "\n# requested aggregate " << util::fmt_double(result.requested_total_mbps, 2)
    << " Mbps";
  if (result.capacity_mbps > 0)
    f << "; measured switching capacity " << util::fmt_double(result.capacity_mbps, 2)
      << " Mbps";
  f << '\n';
  return out_path;
}

}  // namespace vemul
