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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vemul/metrics.hpp"
#include "vemul/orchestrator.hpp"
#include "vemul/sim/engine.hpp"

using namespace vemul;

namespace {

std::optional<Errc> thrown_code(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  return std::nullopt;
}

std::string slurp(const std::string &path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string &text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct TmpPath {
  std::string path;
  explicit TmpPath(const std::string &stem)
      : path("/tmp/" + stem + "-" + std::to_string(::getpid()) + ".csv") {}
  ~TmpPath() { ::unlink(path.c_str()); }
};

struct MetricsFixture {
  sim::SimEngine server;
  EngineClient client;

  MetricsFixture() : server(sock_path(), 23), client(server.socket_path()) {
    REQUIRE(server.start());
    client.connect();
  }
  ~MetricsFixture() { server.stop(); }

  // The controller image fakes a long boot; shrink it before the world
  // reads its environment.
  static std::string sock_path() {
    ::setenv("VEMUL_SIM_ONOS_BOOT_MS", "200", 1);
    return "/tmp/vemul-metrics-test-" + std::to_string(::getpid()) + ".sock";
  }

  EmulationOptions opts(const std::string &run_id) {
    EmulationOptions o;
    o.socket = server.socket_path();
    o.run_id = run_id;
    return o;
  }
};

NodeSpec host(const std::string &name, const std::string &ip) {
  NodeSpec n;
  n.name = name;
  n.ip_config = IpConfig{ip, 24};
  return n;
}

// Two regular hosts and one without userland tools, all on one switch.
Topology probe_topology() {
  Topology t;
  t.add_node(host("h1", "10.0.0.1"));
  t.add_node(host("h2", "10.0.0.2"));
  NodeSpec bare = host("h3", "10.0.0.3");
  bare.image = "vemul/host-notool:latest";
  t.add_node(bare);
  NodeSpec sw;
  sw.name = "sw1";
  sw.kind = NodeKind::WhiteboxSwitch;
  t.add_node(sw);
  NodeSpec ctl;
  ctl.name = "ctl1";
  ctl.kind = NodeKind::Controller;
  t.add_node(ctl);
  for (int i = 1; i <= 3; ++i) {
    LinkSpec l;
    l.name = "l" + std::to_string(i);
    l.endpoint_a = "h" + std::to_string(i);
    l.endpoint_b = "sw1";
    t.add_link(l);
  }
  t.set_runnable(true);
  return t;
}

void attach(Emulation &emu) {
  emu.set_controller("sw1", emu.get_controller_endpoint("ctl1"));
}

}  // namespace

// ---- parsers ---------------------------------------------------------------

TEST_CASE("ping output parsing handles summaries, truncation and junk") {
  const std::string full =
      "PING 10.0.0.2 (10.0.0.2) 56(84) bytes of data.\n"
      "64 bytes from 10.0.0.2: icmp_seq=1 ttl=64 time=23.4 ms\n"
      "64 bytes from 10.0.0.2: icmp_seq=2 ttl=64 time=0.081 ms\n"
      "64 bytes from 10.0.0.2: icmp_seq=3 ttl=64 time=0.079 ms\n"
      "\n"
      "--- 10.0.0.2 ping statistics ---\n"
      "3 packets transmitted, 3 received, 0% packet loss, time 2003ms\n"
      "rtt min/avg/max/mdev = 0.079/7.853/23.400/10.992 ms\n";
  auto ps = parse::ping_output(full);
  REQUIRE(ps.has_value());
  REQUIRE(ps->rtt_ms.size() == 3);
  CHECK(ps->rtt_ms[0] == doctest::Approx(23.4));
  CHECK(ps->rtt_ms[1] == doctest::Approx(0.081));
  CHECK(ps->rtt_ms[2] == doctest::Approx(0.079));
  CHECK(ps->transmitted == 3);
  CHECK(ps->received == 3);

  const std::string lossy =
      "PING 10.0.0.9 (10.0.0.9) 56(84) bytes of data.\n"
      "64 bytes from 10.0.0.9: icmp_seq=1 ttl=64 time=104 ms\n"
      "64 bytes from 10.0.0.9: icmp_seq=4 ttl=64 time=0.110 ms\n"
      "\n"
      "--- 10.0.0.9 ping statistics ---\n"
      "4 packets transmitted, 2 received, 50% packet loss, time 3010ms\n";
  auto lp = parse::ping_output(lossy);
  REQUIRE(lp.has_value());
  REQUIRE(lp->rtt_ms.size() == 2);
  CHECK(lp->rtt_ms[0] == doctest::Approx(104.0));
  CHECK(lp->transmitted == 4);
  CHECK(lp->received == 2);

  // Truncated capture: echo lines but no statistics block. A time= that is
  // not an echo reply stays out of the series.
  const std::string truncated =
      "estimated time=9.9 ms for setup\n"
      "64 bytes from 10.0.0.2: icmp_seq=1 ttl=64 time=1.5 ms\n"
      "64 bytes from 10.0.0.2: icmp_seq=2 ttl=64 time=0.2 ms\n";
  auto tp = parse::ping_output(truncated);
  REQUIRE(tp.has_value());
  REQUIRE(tp->rtt_ms.size() == 2);
  CHECK(tp->rtt_ms[0] == doctest::Approx(1.5));
  CHECK(tp->transmitted == 2);
  CHECK(tp->received == 2);

  const std::string all_lost =
      "PING 10.0.0.3 (10.0.0.3) 56(84) bytes of data.\n"
      "\n"
      "--- 10.0.0.3 ping statistics ---\n"
      "2 packets transmitted, 0 received, 100% packet loss, time 1014ms\n";
  auto ap = parse::ping_output(all_lost);
  REQUIRE(ap.has_value());
  CHECK(ap->rtt_ms.empty());
  CHECK(ap->transmitted == 2);
  CHECK(ap->received == 0);

  CHECK_FALSE(parse::ping_output("").has_value());
  CHECK_FALSE(parse::ping_output("no ping here\n").has_value());
}

TEST_CASE("iperf interval parsing normalizes rates and drops the cumulative line") {
  const std::string capture =
      "------------------------------------------------------------\n"
      "Server listening on UDP port 5001\n"
      "Receiving 1470 byte datagrams\n"
      "UDP buffer size:  208 KByte (default)\n"
      "------------------------------------------------------------\n"
      "[  3] local 10.0.0.2 port 5001 connected with 10.0.0.1 port 50003\n"
      "[ ID] Interval       Transfer     Bandwidth        Jitter   Lost/Total Datagrams\n"
      "[  3]  0.0- 1.0 sec   120 KBytes   983 Kbits/sec   0.012 ms    0/   85 (0%)\n"
      "[  3]  1.0- 2.0 sec  1.2 MBytes  9.8 Mbits/sec   0.010 ms    0/  850 (0%)\n"
      "[  3]  2.0- 3.0 sec  150 MBytes  1.25 Gbits/sec   0.009 ms   12/102041 (0.012%)\n"
      "[  3]  3.0- 4.0 sec  0.1 KBytes  512 bits/sec   0.011 ms    0/    1 (0%)\n"
      "[  4]  1.0- 2.0 sec  0.6 MBytes  5.0 Mbits/sec   0.010 ms    0/  425 (0%)\n"
      "[  3]  4.8- 5.0 sec  10 KBytes  400 Kbits/sec   0.010 ms    0/    7 (0%)\n"
      "[  3]  0.0-10.0 sec  12.5 MBytes  10.5 Mbits/sec   0.010 ms    0/ 8503 (0%)\n";
  auto samples = parse::iperf_server_intervals(capture);
  REQUIRE(samples.size() == 4);
  CHECK(samples[0].second == 0);
  CHECK(samples[0].measured_mbps == doctest::Approx(0.983));
  CHECK(samples[1].second == 1);
  // The second flow's 1.0-2.0 line lands on an occupied second and is dropped.
  CHECK(samples[1].measured_mbps == doctest::Approx(9.8));
  CHECK(samples[2].second == 2);
  CHECK(samples[2].measured_mbps == doctest::Approx(1250.0));
  CHECK(samples[3].second == 3);
  CHECK(samples[3].measured_mbps == doctest::Approx(0.000512));

  CHECK(parse::iperf_server_intervals("").empty());
  CHECK(parse::iperf_server_intervals("Server listening on UDP port 5001\n").empty());

  ThroughputSeries series;
  CHECK(series.mean_mbps() == 0);
  series.samples = {{0, 2.0}, {1, 4.0}};
  CHECK(series.mean_mbps() == doctest::Approx(3.0));
}

// ---- reference data --------------------------------------------------------

TEST_CASE("the reference table transcribes the baseline tables") {
  const ReferenceTable &t = ReferenceTable::paper();
  // 7 sizes, 3 families, 2 emulators, 3 metrics.
  CHECK(t.size() == 126);

  CHECK(t.lookup("mininet", "star", 9, "cpu_percent").value_or(-1) == doctest::Approx(1.06));
  CHECK(t.lookup("vsdnemul", "star", 9, "cpu_percent").value_or(-1) ==
        doctest::Approx(2.70));
  CHECK(t.lookup("vsdnemul", "star", 65, "cpu_percent").value_or(-1) ==
        doctest::Approx(41.32));
  CHECK(t.lookup("vsdnemul", "mesh", 513, "memory_mb").value_or(-1) ==
        doctest::Approx(7276.7));
  CHECK(t.lookup("mininet", "tree", 513, "memory_mb").value_or(-1) ==
        doctest::Approx(347.0));
  CHECK(t.lookup("mininet", "mesh", 129, "first_ping_ms").value_or(-1) ==
        doctest::Approx(181.1));
  CHECK(t.lookup("vsdnemul", "tree", 513, "first_ping_ms").value_or(-1) ==
        doctest::Approx(609.9));

  CHECK_FALSE(t.lookup("mininet", "star", 10, "cpu_percent").has_value());
  CHECK_FALSE(t.lookup("docker", "star", 9, "cpu_percent").has_value());
  CHECK_FALSE(t.lookup("mininet", "ring", 9, "cpu_percent").has_value());
  CHECK_FALSE(t.lookup("mininet", "star", 9, "jitter_ms").has_value());

  ReferenceTable mine;
  CHECK(mine.size() == 0);
  mine.set("vemul", "star", 3, "cpu_percent", 1.5);
  CHECK(mine.lookup("vemul", "star", 3, "cpu_percent").value_or(-1) == doctest::Approx(1.5));
  mine.set("vemul", "star", 3, "cpu_percent", 2.5);
  CHECK(mine.size() == 1);
  CHECK(mine.lookup("vemul", "star", 3, "cpu_percent").value_or(-1) == doctest::Approx(2.5));
}

// ---- live measurements -----------------------------------------------------

TEST_CASE("first ping pays flow setup, later echoes ride the flow table") {
  MetricsFixture fx;
  Emulation emu(fx.opts("met-p"));
  emu.up(probe_topology());

  // Without a controller the whitebox drops everything.
  CHECK(thrown_code([&] { measure_first_ping(emu, "h1", "h2", 2, 0.2); }) ==
        Errc::unreachable);

  attach(emu);
  LatencyRecord rec = measure_first_ping(emu, "h1", "h2", 4, 0.2);
  CHECK(rec.src == "h1");
  CHECK(rec.dst == "h2");
  REQUIRE(rec.subsequent_ms.size() == 3);
  CHECK(rec.first_ping_ms > 0.5);
  for (double ms : rec.subsequent_ms) {
    CHECK(ms < 0.5);
    CHECK(rec.first_ping_ms > ms);
  }

  CHECK(thrown_code([&] { measure_first_ping(emu, "h1", "h1", 2); }) == Errc::invalid_spec);
  CHECK(thrown_code([&] { measure_first_ping(emu, "h1", "h2", 0); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { measure_first_ping(emu, "ghost", "h2", 2); }) ==
        Errc::no_such_node);
  CHECK(thrown_code([&] { measure_first_ping(emu, "h1", "ghost", 2); }) ==
        Errc::no_such_node);
  CHECK(thrown_code([&] { measure_first_ping(emu, "h1", "sw1", 2); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { measure_first_ping(emu, "h3", "h2", 2, 0.2); }) ==
        Errc::tool_missing);
  emu.down();
}

TEST_CASE("udp flows report per second receiver samples") {
  MetricsFixture fx;
  Emulation emu(fx.opts("met-f"));
  emu.up(probe_topology());
  attach(emu);

  ThroughputSeries s = run_udp_flow(emu, "h1", "h2", 5.0, 3);
  CHECK(s.flow_id == "h1>h2");
  CHECK(s.requested_mbps == doctest::Approx(5.0));
  REQUIRE(s.samples.size() >= 2);
  CHECK(s.samples.size() <= 4);
  for (const auto &smp : s.samples) {
    CHECK(smp.measured_mbps > 3.5);
    CHECK(smp.measured_mbps < 6.5);
  }
  CHECK(s.mean_mbps() > 3.5);

  FlowOptions fo;
  fo.port = 5002;
  fo.flow_id = "probe";
  ThroughputSeries named = run_udp_flow(emu, "h1", "h2", 2.0, 2, fo);
  CHECK(named.flow_id == "probe");
  CHECK(named.samples.size() >= 1);

  CHECK(thrown_code([&] { run_udp_flow(emu, "h1", "h2", 0.0, 2); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { run_udp_flow(emu, "h1", "h2", 2.0, 0); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { run_udp_flow(emu, "h1", "h3", 1.0, 1); }) == Errc::tool_missing);

  emu.set_link_state("l1", false);
  CHECK(thrown_code([&] { run_udp_flow(emu, "h1", "h2", 1.0, 1); }) == Errc::unreachable);
  emu.down();
}

// ---- sweep -----------------------------------------------------------------

TEST_CASE("sweep guards: repetitions and the mesh cap") {
  SweepOptions bad;
  bad.reps = 0;
  CHECK(thrown_code([&] { run_scalability_sweep("star", {2}, bad); }) ==
        Errc::precondition_failed);

  // A capped mesh size is skipped before any engine work.
  SweepOptions capped;
  capped.reps = 2;
  auto rs = run_scalability_sweep("mesh", {129}, capped);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].family == "mesh");
  CHECK(rs[0].switch_count == 129);
  CHECK(rs[0].attempted == 2);
  CHECK(rs[0].repetitions == 0);
  CHECK(rs[0].rows.empty());
  REQUIRE(rs[0].incomplete.size() == 1);
  const std::string &note = rs[0].incomplete[0];
  CHECK(note.find("S=129 skipped") != std::string::npos);
  CHECK(note.find("8256 links") != std::string::npos);
  CHECK(note.find("mesh cap of 65") != std::string::npos);
  CHECK(note.find("pass the large-mesh override") != std::string::npos);
}

TEST_CASE("a small scalability sweep aggregates completed reps") {
  MetricsFixture fx;
  SweepOptions so;
  so.reps = 2;
  so.sample_window_s = 1;
  so.flow_duration_s = 2;
  so.flow_rate_mbps = 20;
  so.ping_echoes = 2;
  so.ping_interval_s = 0.2;
  so.emulation = fx.opts("");
  std::vector<std::string> progress;
  so.progress = [&](const std::string &m) { progress.push_back(m); };

  auto rs = run_scalability_sweep("star", {2}, so);
  REQUIRE(rs.size() == 1);
  const SweepResult &r = rs[0];
  CHECK(r.family == "star");
  CHECK(r.switch_count == 2);
  CHECK(r.attempted == 2);
  CHECK(r.repetitions == 2);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.incomplete.empty());
  CHECK(r.rows[0].rep == 1);
  CHECK(r.rows[1].rep == 2);
  for (const auto &row : r.rows) {
    CHECK(row.cpu_percent >= 0);
    CHECK(row.memory_mb > 5);
    CHECK(row.first_ping_ms > 0.5);
    CHECK(row.throughput_mbps > 15);
    CHECK(row.throughput_mbps < 25);
  }
  CHECK(r.memory_mb_mean > 5);
  CHECK(r.latency_ms_mean > 0.5);
  CHECK(r.throughput_mbps_mean > 15);
  REQUIRE(!progress.empty());
  CHECK(progress[0] == "star S=2 rep 1/2: resources");
  bool saw_traffic = false;
  for (const auto &m : progress)
    if (m == "star S=2 rep 2/2: traffic") saw_traffic = true;
  CHECK(saw_traffic);

  // The override lets a tiny mesh run past a deliberately low cap.
  SweepOptions mo = so;
  mo.reps = 1;
  mo.mesh_cap = 2;
  mo.allow_large_mesh = true;
  mo.progress = nullptr;
  auto mesh_rs = run_scalability_sweep("mesh", {3}, mo);
  REQUIRE(mesh_rs.size() == 1);
  CHECK(mesh_rs[0].repetitions == 1);
  CHECK(mesh_rs[0].incomplete.empty());
  CHECK(mesh_rs[0].throughput_mbps_mean > 15);

  // An unknown family surfaces per rep instead of aborting the sweep.
  SweepOptions bo = so;
  bo.reps = 1;
  bo.progress = nullptr;
  auto bad_rs = run_scalability_sweep("ring", {2}, bo);
  REQUIRE(bad_rs.size() == 1);
  CHECK(bad_rs[0].repetitions == 0);
  REQUIRE(bad_rs[0].incomplete.size() == 1);
  CHECK(bad_rs[0].incomplete[0].find("S=2 rep 1") != std::string::npos);
  CHECK(bad_rs[0].incomplete[0].find("unknown family ring") != std::string::npos);
}

// ---- fidelity --------------------------------------------------------------

TEST_CASE("fidelity scenario rejects bad knobs before touching the engine") {
  FidelityOptions fo;
  CHECK(thrown_code([&] { run_fidelity_scenario(4, 1, 2, 0.0, fo); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { run_fidelity_scenario(4, 1, 2, 1.5, fo); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { run_fidelity_scenario(0, 1, 2, 1.0, fo); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { run_fidelity_scenario(4, -1, 2, 1.0, fo); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { run_fidelity_scenario(4, 1, 0, 1.0, fo); }) ==
        Errc::precondition_failed);
}

TEST_CASE("fidelity scenario drives one foreground and seven background flows") {
  MetricsFixture fx;
  FidelityOptions fo;
  fo.emulation = fx.opts("met-fid");
  fo.measure_capacity = false;
  std::vector<std::string> progress;
  fo.progress = [&](const std::string &m) { progress.push_back(m); };

  FidelityResult fr = run_fidelity_scenario(4.0, 1.0, 2, 0.5, fo);
  CHECK(fr.capacity_mbps == 0);
  CHECK(fr.requested_total_mbps == doctest::Approx(5.5));
  CHECK(fr.foreground.flow_id == "fg");
  CHECK(fr.foreground.requested_mbps == doctest::Approx(2.0));
  REQUIRE(fr.foreground.samples.size() >= 1);
  CHECK(fr.foreground.mean_mbps() > 1.0);
  CHECK(fr.foreground.mean_mbps() < 3.0);
  REQUIRE(fr.background.size() == 7);
  for (size_t i = 0; i < fr.background.size(); ++i) {
    const ThroughputSeries &bg = fr.background[i];
    CHECK(bg.flow_id == "bg" + std::to_string(i + 2));
    CHECK(bg.requested_mbps == doctest::Approx(0.5));
    REQUIRE(bg.samples.size() >= 1);
    CHECK(bg.mean_mbps() > 0.05);
    CHECK(bg.mean_mbps() < 1.0);
  }

  bool saw_up = false, saw_flows = false;
  for (const auto &m : progress) {
    if (m == "bringing up fidelity tree") saw_up = true;
    if (m == "starting 1 foreground + 7 background flows for 2s") saw_flows = true;
  }
  CHECK(saw_up);
  CHECK(saw_flows);
  CHECK(fx.client.list_managed("met-fid").empty());
}

// ---- reports ---------------------------------------------------------------

TEST_CASE("the sweep report renders csv rows beside the reference") {
  SweepResult nine;
  nine.family = "star";
  nine.switch_count = 9;
  nine.attempted = 3;
  nine.rows = {{1, 2.5, 120.0, 17.25, 94.2}, {2, 3.5, 130.0, 18.75, 95.8}};
  nine.repetitions = 2;
  nine.cpu_percent_mean = 3.0;
  nine.memory_mb_mean = 125.0;
  nine.latency_ms_mean = 18.0;
  nine.throughput_mbps_mean = 95.0;
  nine.incomplete = {"S=9 rep 3: engine unreachable"};

  SweepResult five;
  five.family = "star";
  five.switch_count = 5;
  five.attempted = 1;
  five.rows = {{1, 1.0, 40.0, 3.5, 90.0}};
  five.repetitions = 1;
  five.cpu_percent_mean = 1.0;
  five.memory_mb_mean = 40.0;
  five.latency_ms_mean = 3.5;
  five.throughput_mbps_mean = 90.0;

  TmpPath out("vemul-sweep-report");
  CHECK(emit_report({nine, five}, ReferenceTable::paper(), out.path) == out.path);
  auto lines = split_lines(slurp(out.path));
  REQUIRE(lines.size() == 9);
  CHECK(lines[0] ==
        "family,switch_count,rep,cpu_percent,memory_mb,first_ping_ms,throughput_mbps,"
        "ref_cpu_percent,ref_memory_mb,ref_first_ping_ms");
  CHECK(lines[1] == "star,9,1,2.50,120.00,17.25,94.20,2.70,117.60,16.70");
  CHECK(lines[2] == "star,9,2,3.50,130.00,18.75,95.80,2.70,117.60,16.70");
  // No reference row exists for 5 switches; those cells stay empty.
  CHECK(lines[3] == "star,5,1,1.00,40.00,3.50,90.00,,,");
  CHECK(lines[4] == "");
  CHECK(lines[5] == "# means over completed reps, side by side with the paper's tables");
  CHECK(lines[6] ==
        "# star S=9 (2/3 reps) cpu%=3.00 (paper: mininet 1.06, vsdnemul 2.70) "
        "mem_mb=125.00 (paper: mininet 116.70, vsdnemul 117.60) first_ping_ms=18.00 "
        "(paper: mininet 18.70, vsdnemul 16.70) throughput_mbps=95.00");
  CHECK(lines[7] == "#   incomplete: S=9 rep 3: engine unreachable");
  CHECK(lines[8].find("# star S=5 (1/1 reps)") == 0);
  CHECK(lines[8].find("(paper:") == std::string::npos);

  CHECK(thrown_code([&] { emit_report({}, ReferenceTable::paper(), out.path); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] {
          emit_report({nine}, ReferenceTable::paper(), "/no-such-dir-zz/report.csv");
        }) == Errc::io_failure);
}

TEST_CASE("the fidelity report lists every flow sample") {
  FidelityResult fr;
  fr.foreground.flow_id = "fg";
  fr.foreground.requested_mbps = 2.0;
  fr.foreground.samples = {{0, 1.9}, {1, 2.1}};
  ThroughputSeries bg;
  bg.flow_id = "bg2";
  bg.requested_mbps = 0.5;
  bg.samples = {{0, 0.5}};
  fr.background.push_back(bg);
  fr.requested_total_mbps = 5.5;
  fr.capacity_mbps = 812.25;

  TmpPath out("vemul-fidelity-report");
  CHECK(emit_fidelity_report(fr, out.path) == out.path);
  auto lines = split_lines(slurp(out.path));
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "flow,role,requested_mbps,second,measured_mbps");
  CHECK(lines[1] == "fg,foreground,2.00,0,1.90");
  CHECK(lines[2] == "fg,foreground,2.00,1,2.10");
  CHECK(lines[3] == "bg2,background,0.50,0,0.50");
  CHECK(lines[4] == "");
  CHECK(lines[5] ==
        "# requested aggregate 5.50 Mbps; measured switching capacity 812.25 Mbps");

  fr.capacity_mbps = 0;
  CHECK(emit_fidelity_report(fr, out.path) == out.path);
  auto quiet = split_lines(slurp(out.path));
  REQUIRE(quiet.size() == 6);
  CHECK(quiet[5] == "# requested aggregate 5.50 Mbps");

  CHECK(thrown_code([&] { emit_fidelity_report(fr, "/no-such-dir-zz/fid.csv"); }) ==
        Errc::io_failure);
}
