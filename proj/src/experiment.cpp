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

#include "vemul/experiment.hpp"

#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vemul/metrics.hpp"
#include "vemul/topology_io.hpp"
#include "vemul/util.hpp"

namespace vemul {

using nlohmann::json;

namespace {

[[noreturn]] void schema_err(const std::string &where, const std::string &msg) {
  throw Error(Errc::schema_violation, where + ": " + msg);
}

void reject_unknown(const json &obj, const std::set<std::string> &allowed,
                    const std::string &where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) schema_err(where, "unknown key '" + it.key() + "'");
}

std::string want_string(const json &obj, const std::string &key, const std::string &where) {
  if (!obj.contains(key)) schema_err(where, "missing key '" + key + "'");
  if (!obj[key].is_string()) schema_err(where, "'" + key + "' must be a string");
  return obj[key].get<std::string>();
}

double want_number(const json &obj, const std::string &key, const std::string &where) {
  if (!obj.contains(key)) schema_err(where, "missing key '" + key + "'");
  if (!obj[key].is_number()) schema_err(where, "'" + key + "' must be a number");
  return obj[key].get<double>();
}

int opt_int(const json &obj, const std::string &key, int fallback, const std::string &where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) schema_err(where, "'" + key + "' must be an integer");
  return obj[key].get<int>();
}

double opt_number(const json &obj, const std::string &key, double fallback,
                  const std::string &where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) schema_err(where, "'" + key + "' must be a number");
  return obj[key].get<double>();
}

struct Event {
  std::string action;
  bool parallel = false;
  std::string node;
  std::string src, dst;
  std::string link;
  std::vector<std::string> command;
  int timeout_ms = 120000;
  int count = 10;
  double interval_s = 1.0;
  double rate_mbps = 0;
  int duration_s = 0;
  int port = 5001;
  std::string flow_id;
  NodeSpec node_spec;
  LinkSpec link_spec;
  double seconds = 0;
};

struct ExperimentDoc {
  std::string name;
  int repetitions = 1;
  bool attach_controller = true;
  Topology topology;
  std::vector<Event> events;
  std::string report_path;
};

bool is_measurement(const std::string &action) {
  return action == "exec" || action == "ping" || action == "udp-flow" || action == "sleep";
}

Event parse_event(const json &je, size_t index) {
  std::string where = "events[" + std::to_string(index) + "]";
  if (!je.is_object()) schema_err(where, "must be an object");
  Event ev;
  ev.action = want_string(je, "action", where);
  where += " (" + ev.action + ")";
  if (je.contains("parallel")) {
    if (!je["parallel"].is_boolean()) schema_err(where, "'parallel' must be a boolean");
    ev.parallel = je["parallel"].get<bool>();
  }
  if (ev.parallel && !is_measurement(ev.action))
    schema_err(where, "'parallel' is limited to exec/ping/udp-flow/sleep");

  if (ev.action == "exec") {
    reject_unknown(je, {"action", "parallel", "node", "command", "timeout_ms"}, where);
    ev.node = want_string(je, "node", where);
    if (!je.contains("command") || !je["command"].is_array() || je["command"].empty())
      schema_err(where, "'command' must be a non-empty array of strings");
    for (const auto &a : je["command"]) {
      if (!a.is_string()) schema_err(where, "'command' entries must be strings");
      ev.command.push_back(a.get<std::string>());
    }
    ev.timeout_ms = opt_int(je, "timeout_ms", ev.timeout_ms, where);
    if (ev.timeout_ms <= 0) schema_err(where, "'timeout_ms' must be > 0");
  } else if (ev.action == "ping") {
    reject_unknown(je, {"action", "parallel", "src", "dst", "count", "interval_s"}, where);
    ev.src = want_string(je, "src", where);
    ev.dst = want_string(je, "dst", where);
    ev.count = opt_int(je, "count", ev.count, where);
    if (ev.count < 1) schema_err(where, "'count' must be >= 1");
    ev.interval_s = opt_number(je, "interval_s", ev.interval_s, where);
    if (ev.interval_s <= 0) schema_err(where, "'interval_s' must be > 0");
  } else if (ev.action == "udp-flow") {
    reject_unknown(je, {"action", "parallel", "src", "dst", "rate_mbps", "duration_s",
                        "port", "id"},
                   where);
    ev.src = want_string(je, "src", where);
    ev.dst = want_string(je, "dst", where);
    ev.rate_mbps = want_number(je, "rate_mbps", where);
    if (ev.rate_mbps <= 0) schema_err(where, "'rate_mbps' must be > 0");
    ev.duration_s = opt_int(je, "duration_s", 0, where);
    if (!je.contains("duration_s")) schema_err(where, "missing key 'duration_s'");
    if (ev.duration_s < 1) schema_err(where, "'duration_s' must be >= 1");
    ev.port = opt_int(je, "port", ev.port, where);
    if (je.contains("id")) ev.flow_id = want_string(je, "id", where);
  } else if (ev.action == "link-up" || ev.action == "link-down" ||
             ev.action == "delete-link") {
    reject_unknown(je, {"action", "parallel", "link"}, where);
    ev.link = want_string(je, "link", where);
  } else if (ev.action == "pause" || ev.action == "resume" || ev.action == "delete-node") {
    reject_unknown(je, {"action", "parallel", "node"}, where);
    ev.node = want_string(je, "node", where);
  } else if (ev.action == "create-node") {
    reject_unknown(je, {"action", "parallel", "spec"}, where);
    if (!je.contains("spec") || !je["spec"].is_object())
      schema_err(where, "'spec' must be a node object");
    json wrap;
    wrap["nodes"] = json::array({je["spec"]});
    try {
      ev.node_spec = topology_from_json_text(wrap.dump()).nodes().at(0);
    } catch (const Error &e) {
      schema_err(where, e.what());
    }
  } else if (ev.action == "create-link") {
    reject_unknown(je, {"action", "parallel", "spec"}, where);
    if (!je.contains("spec") || !je["spec"].is_object())
      schema_err(where, "'spec' must be a link object");
    const json &js = je["spec"];
    std::string lwhere = where + ".spec";
    reject_unknown(js, {"name", "a", "b", "model", "key"}, lwhere);
    ev.link_spec.name = want_string(js, "name", lwhere);
    ev.link_spec.endpoint_a = want_string(js, "a", lwhere);
    ev.link_spec.endpoint_b = want_string(js, "b", lwhere);
    if (js.contains("model")) {
      auto m = link_model_from(want_string(js, "model", lwhere));
      if (!m) schema_err(lwhere, "bad 'model'");
      ev.link_spec.model = *m;
    }
    if (js.contains("key")) {
      int key = opt_int(js, "key", 0, lwhere);
      if (key < 0) schema_err(lwhere, "'key' must be >= 0");
      ev.link_spec.tunnel_key = static_cast<uint32_t>(key);
    }
  } else if (ev.action == "sleep") {
    reject_unknown(je, {"action", "parallel", "seconds"}, where);
    ev.seconds = want_number(je, "seconds", where);
    if (ev.seconds < 0) schema_err(where, "'seconds' must be >= 0");
  } else {
    schema_err(where, "unknown action '" + ev.action + "'");
  }
  return ev;
}

ExperimentDoc parse_experiment(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();

  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::exception &e) {
    throw Error(Errc::schema_violation, path + ": " + e.what());
  }
  if (!doc.is_object()) schema_err(path, "document must be an object");
  reject_unknown(doc, {"name", "repetitions", "attach_controller", "topology", "events",
                       "report"},
                 path);

  ExperimentDoc exp;
  std::filesystem::path p(path);
  exp.name = doc.contains("name") ? want_string(doc, "name", path) : p.stem().string();
  exp.repetitions = opt_int(doc, "repetitions", 1, path);
  if (exp.repetitions < 1) schema_err(path, "'repetitions' must be >= 1");
  if (doc.contains("attach_controller")) {
    if (!doc["attach_controller"].is_boolean())
      schema_err(path, "'attach_controller' must be a boolean");
    exp.attach_controller = doc["attach_controller"].get<bool>();
  }
  if (!doc.contains("topology")) schema_err(path, "missing key 'topology'");
  exp.topology = topology_from_json_text(doc["topology"].dump());
  auto violations = exp.topology.validate();
  if (!violations.empty())
    schema_err(path, "topology: " + violations[0].subject + "." + violations[0].field +
                         ": " + violations[0].message);
  if (!doc.contains("events") || !doc["events"].is_array())
    schema_err(path, "'events' must be an array");
  size_t i = 0;
  for (const auto &je : doc["events"]) exp.events.push_back(parse_event(je, i++));
  if (doc.contains("report"))
    exp.report_path = want_string(doc, "report", path);
  else
    exp.report_path = (p.parent_path() / (p.stem().string() + "-report.json")).string();
  return exp;
}

json run_ping(Emulation &emu, const Event &ev) {
  const NodeSpec *dst = nullptr;
  for (const auto &n : emu.topology().nodes())
    if (n.name == ev.dst) dst = &n;
  if (!dst || !dst->ip_config)
    throw Error(Errc::precondition_failed, "ping target '" + ev.dst + "' has no address");

  std::vector<std::string> argv{"ping", "-c", std::to_string(ev.count)};
  if (ev.interval_s != 1.0) {
    argv.push_back("-i");
    argv.push_back(util::fmt_double(ev.interval_s, 1));
  }
  argv.push_back(dst->ip_config->address);
  int timeout_ms = static_cast<int>((ev.count * ev.interval_s + 15.0) * 1000);
  ExecResult r = emu.engine().exec_in_node(emu.handle(ev.src), argv, timeout_ms);
  auto stats = parse::ping_output(r.out);
  if (!stats) throw Error(Errc::io_failure, "unparseable ping output from " + ev.src);

  double loss = stats->transmitted == 0
                    ? 100.0
                    : 100.0 * (stats->transmitted - stats->received) / stats->transmitted;
  double avg = 0;
  for (double v : stats->rtt_ms) avg += v;
  if (!stats->rtt_ms.empty()) avg /= static_cast<double>(stats->rtt_ms.size());

  json out;
  out["action"] = "ping";
  out["src"] = ev.src;
  out["dst"] = ev.dst;
  out["transmitted"] = stats->transmitted;
  out["received"] = stats->received;
  out["loss_pct"] = loss;
  out["rtt_first_ms"] = stats->rtt_ms.empty() ? 0.0 : stats->rtt_ms.front();
  out["rtt_avg_ms"] = avg;
  return out;
}

json run_flow(Emulation &emu, const Event &ev) {
  FlowOptions fo;
  fo.port = ev.port;
  fo.flow_id = ev.flow_id;
  ThroughputSeries s = run_udp_flow(emu, ev.src, ev.dst, ev.rate_mbps, ev.duration_s, fo);
  json out;
  out["action"] = "udp-flow";
  out["src"] = ev.src;
  out["dst"] = ev.dst;
  out["flow_id"] = s.flow_id;
  out["requested_mbps"] = s.requested_mbps;
  out["mean_mbps"] = s.mean_mbps();
  json samples = json::array();
  for (const auto &smp : s.samples)
    samples.push_back({{"second", smp.second}, {"mbps", smp.measured_mbps}});
  out["samples"] = samples;
  return out;
}

json run_event(Emulation &emu, const Event &ev) {
  json out;
  if (ev.action == "exec") {
    ExecResult r = emu.engine().exec_in_node(emu.handle(ev.node), ev.command, ev.timeout_ms);
    out["action"] = "exec";
    out["node"] = ev.node;
    out["exit_code"] = r.exit_code;
    out["out"] = r.out;
    out["err"] = r.err;
  } else if (ev.action == "ping") {
    out = run_ping(emu, ev);
  } else if (ev.action == "udp-flow") {
    out = run_flow(emu, ev);
  } else if (ev.action == "link-up" || ev.action == "link-down") {
    emu.set_link_state(ev.link, ev.action == "link-up");
    out["action"] = ev.action;
    out["link"] = ev.link;
  } else if (ev.action == "pause") {
    emu.engine().pause_node(emu.handle(ev.node));
    out["action"] = "pause";
    out["node"] = ev.node;
  } else if (ev.action == "resume") {
    emu.engine().resume_node(emu.handle(ev.node));
    out["action"] = "resume";
    out["node"] = ev.node;
  } else if (ev.action == "create-node") {
    NodeHandle h = emu.add_node_live(ev.node_spec);
    out["action"] = "create-node";
    out["node"] = h.node_name;
    out["mgmt_ip"] = h.mgmt_ip;
  } else if (ev.action == "delete-node") {
    emu.remove_node_live(ev.node);
    out["action"] = "delete-node";
    out["node"] = ev.node;
  } else if (ev.action == "create-link") {
    LinkHandle h = emu.add_link_live(ev.link_spec);
    out["action"] = "create-link";
    out["link"] = h.link_name;
  } else if (ev.action == "delete-link") {
    emu.remove_link_live(ev.link);
    out["action"] = "delete-link";
    out["link"] = ev.link;
  } else if (ev.action == "sleep") {
    std::this_thread::sleep_for(
        std::chrono::milliseconds(static_cast<int64_t>(ev.seconds * 1000)));
    out["action"] = "sleep";
    out["seconds"] = ev.seconds;
  }
  return out;
}

void attach_controller(Emulation &emu, const Topology &t,
                       const std::function<void(const std::string &)> &progress) {
  std::string ctl;
  for (const auto &n : t.nodes())
    if (n.kind == NodeKind::Controller) {
      ctl = n.name;
      break;
    }
  if (ctl.empty()) return;
  ControllerTarget target = emu.get_controller_endpoint(ctl);
  for (const auto &n : t.nodes())
    if (n.kind == NodeKind::WhiteboxSwitch) {
      if (progress) progress("  attach " + n.name + " -> " + target.render());
      emu.set_controller(n.name, target);
    }
}

json run_once(const ExperimentDoc &exp, const ExperimentOptions &opts, int rep) {
  auto progress = [&](const std::string &s) {
    if (opts.progress)
      opts.progress("rep " + std::to_string(rep) + "/" + std::to_string(exp.repetitions) +
                    ": " + s);
  };

  Emulation emu(opts.emulation);
  json events = json::array();
  uint64_t t0 = util::mono_ms();
  try {
    progress("bring-up, " + std::to_string(exp.topology.nodes().size()) + " nodes");
    emu.up(exp.topology);
    if (exp.attach_controller) attach_controller(emu, exp.topology, opts.progress);

    size_t i = 0;
    while (i < exp.events.size()) {
      size_t group_end = i + 1;
      if (exp.events[i].parallel)
        while (group_end < exp.events.size() && exp.events[group_end].parallel) ++group_end;

      std::vector<json> results(group_end - i);
      std::vector<uint64_t> starts(group_end - i), ends(group_end - i);
      if (group_end - i == 1) {
        progress("event " + std::to_string(i) + " " + exp.events[i].action);
        starts[0] = util::mono_ms() - t0;
        results[0] = run_event(emu, exp.events[i]);
        ends[0] = util::mono_ms() - t0;
      } else {
        progress("events " + std::to_string(i) + ".." + std::to_string(group_end - 1) +
                 " in parallel");
        std::vector<std::thread> threads;
        std::exception_ptr first_err;
        std::mutex err_mu;
        for (size_t k = i; k < group_end; ++k) {
          threads.emplace_back([&, k] {
            try {
              starts[k - i] = util::mono_ms() - t0;
              results[k - i] = run_event(emu, exp.events[k]);
              ends[k - i] = util::mono_ms() - t0;
            } catch (...) {
              std::lock_guard<std::mutex> g(err_mu);
              if (!first_err) first_err = std::current_exception();
            }
          });
        }
        for (auto &th : threads) th.join();
        if (first_err) std::rethrow_exception(first_err);
      }
      for (size_t k = i; k < group_end; ++k) {
        results[k - i]["t_start_ms"] = starts[k - i];
        results[k - i]["t_end_ms"] = ends[k - i];
        if (exp.events[k].parallel) results[k - i]["parallel"] = true;
        events.push_back(results[k - i]);
      }
      i = group_end;
    }
    emu.down();
  } catch (...) {
    try {
      emu.down();
    } catch (...) {
    }
    throw;
  }

  json run;
  run["rep"] = rep;
  run["duration_ms"] = util::mono_ms() - t0;
  run["events"] = events;
  return run;
}

}  // namespace

std::string run_experiment_file(const std::string &path, const ExperimentOptions &opts) {
  ExperimentDoc exp = parse_experiment(path);

  json report;
  report["experiment"] = exp.name;
  report["repetitions"] = exp.repetitions;
  report["topology"] = json::parse(topology_to_json_text(exp.topology));
  report["runs"] = json::array();

  // label -> metric -> per-run values
  std::map<std::string, std::map<std::string, std::vector<double>>> series;
  for (int rep = 1; rep <= exp.repetitions; ++rep) {
    json run = run_once(exp, opts, rep);
    size_t idx = 0;
    for (const auto &evr : run["events"]) {
      std::string label = "e" + std::to_string(idx++);
      std::string action = evr["action"].get<std::string>();
      if (action == "ping") {
        label += ":ping:" + evr["src"].get<std::string>() + ">" +
                 evr["dst"].get<std::string>();
        series[label]["loss_pct"].push_back(evr["loss_pct"].get<double>());
        series[label]["rtt_first_ms"].push_back(evr["rtt_first_ms"].get<double>());
        series[label]["rtt_avg_ms"].push_back(evr["rtt_avg_ms"].get<double>());
      } else if (action == "udp-flow") {
        label += ":udp-flow:" + evr["src"].get<std::string>() + ">" +
                 evr["dst"].get<std::string>();
        series[label]["mean_mbps"].push_back(evr["mean_mbps"].get<double>());
      }
    }
    report["runs"].push_back(std::move(run));
  }

  json means = json::object();
  for (const auto &[label, metrics] : series) {
    json m = json::object();
    for (const auto &[metric, values] : metrics) {
      double sum = 0;
      for (double v : values) sum += v;
      m[metric] = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
    }
    means[label] = m;
  }
  report["means"] = means;

  std::ofstream out(exp.report_path);
  if (!out) throw Error(Errc::io_failure, "cannot write '" + exp.report_path + "'");
  out << report.dump(2) << "\n";
  out.close();
  if (opts.progress) opts.progress("report: " + exp.report_path);
  return exp.report_path;
}

}  // namespace vemul
