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

#include <unistd.h>

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vemul/experiment.hpp"
#include "vemul/metrics.hpp"
#include "vemul/orchestrator.hpp"
#include "vemul/shell.hpp"
#include "vemul/sim/engine.hpp"
#include "vemul/topology_io.hpp"
#include "vemul/util.hpp"

namespace {

void add_engine_flags(CLI::App *cmd, vemul::EmulationOptions &opts) {
  cmd->add_option("--engine", opts.socket,
                  "Engine socket path (default: $VEMUL_ENGINE_SOCKET or the Docker socket)");
  cmd->add_option("--fabric", opts.fabric_mode, "Fabric backend: auto, sim or real")
      ->check(CLI::IsMember({"auto", "sim", "real"}));
  cmd->add_option("--run-id", opts.run_id, "Run id label (default: generated)");
}

std::vector<int> parse_sizes(const std::string &csv) {
  std::vector<int> sizes;
  for (const auto &tok : vemul::util::split(csv, ',')) {
    auto v = vemul::util::parse_int(vemul::util::trim(tok));
    if (!v || *v < 2)
      throw vemul::Error(vemul::Errc::invalid_spec, "bad size '" + tok + "' in --sizes");
    sizes.push_back(static_cast<int>(*v));
  }
  if (sizes.empty())
    throw vemul::Error(vemul::Errc::invalid_spec, "--sizes needs at least one value");
  return sizes;
}

void attach_first_controller(vemul::Emulation &emu) {
  std::string ctl;
  for (const auto &n : emu.topology().nodes())
    if (n.kind == vemul::NodeKind::Controller) {
      ctl = n.name;
      break;
    }
  if (ctl.empty()) return;
  vemul::ControllerTarget target = emu.get_controller_endpoint(ctl);
  for (const auto &n : emu.topology().nodes())
    if (n.kind == vemul::NodeKind::WhiteboxSwitch) {
      std::cerr << "attaching " << n.name << " -> " << target.render() << "\n";
      emu.set_controller(n.name, target);
    }
}

int interactive(const vemul::Topology &t, const vemul::EmulationOptions &eopts,
                bool with_controller) {
  vemul::Emulation emu(eopts);
  std::cerr << "run id " << emu.run_id() << "\n";
  emu.up(t);
  if (with_controller) attach_first_controller(emu);
  std::cerr << emu.handles().size() << " nodes up\n";

  vemul::ShellOptions sopts;
  sopts.prompt = isatty(STDIN_FILENO) != 0;
  int rc = vemul::repl(emu, std::cin, std::cout, sopts);
  emu.down();
  std::cerr << "torn down\n";
  return rc;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"vemul: container-based SDN network emulator"};
  app.require_subcommand(1);

  vemul::EmulationOptions eopts;

  // up
  std::string topo_path;
  bool no_controller = false;
  auto *up = app.add_subcommand("up", "Bring a topology file up, then steer it from a REPL");
  up->add_option("topology", topo_path, "Topology JSON file")->required();
  up->add_flag("--no-controller", no_controller, "Skip controller attachment");
  add_engine_flags(up, eopts);

  // repl
  std::string repl_topo;
  auto *repl_cmd = app.add_subcommand(
      "repl", "REPL over a topology file, or over a two-host scratch emulation");
  repl_cmd->add_option("topology", repl_topo, "Topology JSON file (optional)");
  add_engine_flags(repl_cmd, eopts);

  // run
  std::string exp_path;
  auto *run = app.add_subcommand("run", "Run a declarative experiment file");
  run->add_option("experiment", exp_path, "Experiment JSON file")->required();
  add_engine_flags(run, eopts);

  // sweep
  std::string family = "star", sizes_csv = "9,17,33,65,129,257,513";
  std::string sweep_out = "sweep.csv";
  vemul::SweepOptions sw;
  auto *sweep = app.add_subcommand("sweep", "Scalability sweep with paper-style CSV report");
  sweep->add_option("family", family, "Topology family: star, mesh or tree")
      ->check(CLI::IsMember({"star", "mesh", "tree"}));
  sweep->add_option("--sizes", sizes_csv, "Comma-separated switch counts");
  sweep->add_option("--reps", sw.reps, "Repetitions per size")->check(CLI::PositiveNumber);
  sweep->add_option("--window", sw.sample_window_s, "Steady-state sample window, seconds")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--flow-duration", sw.flow_duration_s, "UDP flow duration, seconds")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--flow-rate", sw.flow_rate_mbps, "UDP flow rate, Mbps")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--pings", sw.ping_echoes, "Echo count per latency measurement")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--ping-interval", sw.ping_interval_s, "Seconds between echoes")
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--allow-large-mesh", sw.allow_large_mesh,
                  "Run mesh sizes past the resource guard");
  sweep->add_option("--out", sweep_out, "Report CSV path");
  add_engine_flags(sweep, eopts);

  // fidelity
  double fg = 1000, bg = 400, scale = 1.0;
  int duration = 60;
  bool no_capacity = false;
  std::string fid_out = "fidelity.csv";
  auto *fid = app.add_subcommand("fidelity", "Foreground/background throughput fidelity run");
  fid->add_option("--fg", fg, "Foreground rate, Mbps")->check(CLI::PositiveNumber);
  fid->add_option("--bg", bg, "Background rate per flow, Mbps")
      ->check(CLI::NonNegativeNumber);
  fid->add_option("--duration", duration, "Flow duration, seconds")
      ->check(CLI::PositiveNumber);
  fid->add_option("--scale", scale, "Rate scale factor in (0, 1]");
  fid->add_flag("--no-capacity", no_capacity, "Skip the capacity probe");
  fid->add_option("--out", fid_out, "Report CSV path");
  add_engine_flags(fid, eopts);

  // clean
  std::string clean_run_id;
  auto *clean = app.add_subcommand("clean", "Destroy stray managed containers by label");
  clean->add_option("--run-id", clean_run_id, "Only this run id (default: every vemul label)");
  clean->add_option("--engine", eopts.socket, "Engine socket path");

  // simengine
  std::string sim_socket = "/tmp/vemul-sim.sock";
  uint64_t sim_seed = 42;
  auto *sim = app.add_subcommand("simengine", "Serve the simulated container engine");
  sim->add_option("--socket", sim_socket, "Unix socket path to listen on");
  sim->add_option("--seed", sim_seed, "World RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*up) {
      return interactive(vemul::load_topology_file(topo_path), eopts, !no_controller);
    }
    if (*repl_cmd) {
      if (!repl_topo.empty())
        return interactive(vemul::load_topology_file(repl_topo), eopts, true);
      // The management bus wants two members, so the scratch world seeds two
      // plain hosts; everything else is created live from the prompt.
      vemul::Topology t;
      vemul::NodeSpec seed;
      seed.name = "h1";
      t.add_node(seed);
      seed.name = "h2";
      t.add_node(seed);
      t.set_runnable(true);
      return interactive(t, eopts, false);
    }
    if (*run) {
      vemul::ExperimentOptions opts;
      opts.emulation = eopts;
      opts.progress = [](const std::string &s) { std::cerr << s << "\n"; };
      std::cout << vemul::run_experiment_file(exp_path, opts) << "\n";
      return 0;
    }
    if (*sweep) {
      sw.emulation = eopts;
      sw.progress = [](const std::string &s) { std::cerr << s << "\n"; };
      auto results = vemul::run_scalability_sweep(family, parse_sizes(sizes_csv), sw);
      std::cout << vemul::emit_report(results, vemul::ReferenceTable::paper(), sweep_out)
                << "\n";
      return 0;
    }
    if (*fid) {
      vemul::FidelityOptions opts;
      opts.emulation = eopts;
      opts.measure_capacity = !no_capacity;
      opts.progress = [](const std::string &s) { std::cerr << s << "\n"; };
      auto result = vemul::run_fidelity_scenario(fg, bg, duration, scale, opts);
      std::cout << vemul::emit_fidelity_report(result, fid_out) << "\n";
      return 0;
    }
    if (*clean) {
      vemul::EngineClient engine(eopts.socket.empty() ? vemul::EngineClient::default_socket()
                                                      : eopts.socket);
      engine.connect();
      auto strays = engine.list_managed(clean_run_id);
      for (auto &h : strays) {
        std::cerr << "destroying " << h.node_name << " (" << h.container_id.substr(0, 12)
                  << ")\n";
        engine.destroy_container(h);
      }
      std::cout << strays.size() << " containers removed\n";
      return 0;
    }
    if (*sim) {
      vemul::sim::SimEngine server(sim_socket, sim_seed);
      std::cerr << "sim engine on " << sim_socket << "\n";
      return server.serve_blocking() ? 0 : 3;
    }
  } catch (const vemul::Error &e) {
    std::cerr << "vemul: " << e.what() << "\n";
    return e.code() == vemul::Errc::schema_violation ? 2 : 3;
  } catch (const std::exception &e) {
    std::cerr << "vemul: internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
