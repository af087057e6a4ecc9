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

#include "vemul/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "vemul/util.hpp"

namespace vemul::sim {

using nlohmann::json;

namespace {

constexpr const char *kRootNs = "root";

struct ImageProfile {
  double mem_mb;
  double cpu_cores;
  bool has_net_tools;
  bool is_switch;
  bool is_controller;
};

const std::map<std::string, ImageProfile> &image_catalog() {
  static const std::map<std::string, ImageProfile> cat = {
      {"vemul/openvswitch:latest", {13.2, 0.0030, true, true, false}},
      {"vemul/onos:latest", {740.0, 0.0500, true, false, true}},
      {"vemul/host:latest", {3.2, 0.0005, true, false, false}},
      {"vemul/host-notool:latest", {3.2, 0.0005, false, false, false}},
      {"busybox:latest", {1.2, 0.0002, true, false, false}},
  };
  return cat;
}

std::string ikey(const std::string &ns, const std::string &name) { return ns + "/" + name; }

double env_double(const char *name, double fallback) {
  const char *v = std::getenv(name);
  if (!v || !*v) return fallback;
  auto p = util::parse_double(v);
  return p ? *p : fallback;
}

std::string fmt_rate(double mbps) {
  char buf[48];
  if (mbps >= 1000.0)
    std::snprintf(buf, sizeof buf, "%.2f Gbits/sec", mbps / 1000.0);
  else
    std::snprintf(buf, sizeof buf, "%.1f Mbits/sec", mbps);
  return buf;
}

std::string fmt_bytes(double bytes) {
  char buf[48];
  double mb = bytes / 1e6;
  if (mb >= 1000.0)
    std::snprintf(buf, sizeof buf, "%.2f GBytes", mb / 1000.0);
  else if (mb >= 1.0)
    std::snprintf(buf, sizeof buf, "%.1f MBytes", mb);
  else
    std::snprintf(buf, sizeof buf, "%.0f KBytes", bytes / 1e3);
  return buf;
}

std::string fmt_ping_ms(double ms) {
  char buf[32];
  if (ms < 1.0)
    std::snprintf(buf, sizeof buf, "%.3f", ms);
  else if (ms < 10.0)
    std::snprintf(buf, sizeof buf, "%.2f", ms);
  else if (ms < 100.0)
    std::snprintf(buf, sizeof buf, "%.1f", ms);
  else
    std::snprintf(buf, sizeof buf, "%.0f", ms);
  return buf;
}

}  // namespace

std::set<std::string> known_images() {
  std::set<std::string> out;
  for (const auto &[k, v] : image_catalog()) out.insert(k);
  return out;
}

// ---- ExecSession ----------------------------------------------------------

void ExecSession::emit(int stream, const std::string &data) {
  std::lock_guard<std::mutex> lk(mu);
  if (done) return;
  frames.emplace_back(stream, data);
  cv.notify_all();
}

void ExecSession::finish(int code) {
  std::lock_guard<std::mutex> lk(mu);
  exit_code = code;
  done = true;
  cv.notify_all();
}

bool ExecSession::next_frame(std::pair<int, std::string> &out) {
  std::unique_lock<std::mutex> lk(mu);
  cv.wait(lk, [&] { return !frames.empty() || done; });
  if (frames.empty()) return false;
  out = std::move(frames.front());
  frames.pop_front();
  return true;
}

// ---- World basics ---------------------------------------------------------

World::World(uint64_t seed) : seed_(seed), rng_(seed) {
  epoch_ = util::mono_ms() / 1000.0;
  onos_boot_s_ = env_double("VEMUL_SIM_ONOS_BOOT_MS", 1500.0) / 1000.0;
  capacity_mbps_ = env_double("VEMUL_SIM_CAPACITY_MBPS", 6600.0);
}

double World::now() const { return util::mono_ms() / 1000.0 - epoch_; }

double World::gauss(double mean, double stddev) {
  std::normal_distribution<double> d(mean, stddev);
  return d(rng_);
}

std::string World::fresh_id(size_t bytes) {
  std::string out;
  out.reserve(bytes * 2);
  for (size_t i = 0; i < bytes; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", static_cast<unsigned>(rng_() & 0xff));
    out += buf;
  }
  return out;
}

Container *World::find_container_ptr(const std::string &ref) {
  for (auto &c : containers_) {
    if (c->id == ref || c->name == ref) return c.get();
    if (ref.size() >= 12 && c->id.compare(0, ref.size(), ref) == 0) return c.get();
  }
  return nullptr;
}

Container &World::find_container(const std::string &ref) {
  Container *c = find_container_ptr(ref);
  if (!c) throw ApiError{404, "No such container: " + ref};
  return *c;
}

void World::advance_cpu(Container &c) {
  double t = now();
  if (c.state == "running") {
    double rate = c.base_cpu + c.extra_cpu;
    if (c.nano_cpus > 0) rate = std::min(rate, c.nano_cpus / 1e9);
    c.cpu_accum_ns += rate * (t - c.cpu_last) * 1e9;
  }
  c.cpu_last = t;
}

void World::set_extra_cpu(Container &c, double delta) {
  advance_cpu(c);
  c.extra_cpu = std::max(0.0, c.extra_cpu + delta);
}

double World::mem_mb(const Container &c) {
  size_t ifcount = 0;
  for (const auto &[k, inf] : ifaces_)
    if (inf.ns == c.id) ++ifcount;
  double m = c.base_mem_mb + 0.002 * static_cast<double>(ifcount);
  auto prof = image_catalog().find(c.image);
  if (prof != image_catalog().end() && prof->second.is_controller)
    m += 0.4 * connected_switches();
  if (c.memory_bytes > 0) m = std::min(m, c.memory_bytes / 1e6);
  return m;
}

bool World::controller_ready(const Container &c) {
  auto prof = image_catalog().find(c.image);
  if (prof == image_catalog().end() || !prof->second.is_controller) return false;
  return c.state == "running" && now() >= c.started_at + onos_boot_s_;
}

const Container *World::controller_for_target(const std::string &target) {
  auto parts = util::split(target, ':');
  if (parts.size() != 3 || parts[0] != "tcp") return nullptr;
  const std::string &ip = parts[1];
  for (const auto &[k, inf] : ifaces_) {
    for (const auto &cidr : inf.addrs) {
      auto slash = cidr.find('/');
      if (cidr.substr(0, slash) != ip) continue;
      Container *c = find_container_ptr(inf.ns);
      if (c && controller_ready(*c)) return c;
    }
  }
  return nullptr;
}

int World::connected_switches() {
  int n = 0;
  for (auto &[k, b] : ovs_)
    if (b.controller_set_at >= 0 && controller_for_target(b.controller_target)) ++n;
  return n;
}

bool World::bridge_forwards(const OvsBridge &b) {
  if (b.fail_mode != "secure") return true;
  if (b.controller_set_at < 0) return false;
  const Container *ctl = controller_for_target(b.controller_target);
  if (!ctl) return false;
  double ready_at = ctl->started_at + onos_boot_s_;
  return now() >= std::max(b.controller_set_at, ready_at) + 0.25;
}

// ---- containers -----------------------------------------------------------

std::string World::create_container(const std::string &name, const std::string &image,
                                    const std::vector<std::string> &cmd,
                                    const std::vector<std::string> &env,
                                    const std::map<std::string, std::string> &labels,
                                    int64_t nano_cpus, int64_t memory_bytes) {
  std::lock_guard<std::mutex> lk(mu_);
  if (faults_.fail_create_after >= 0 && faults_.fail_create_after-- == 0)
    throw ApiError{500, "simulated fault: create"};
  if (faults_.reject_limits && (nano_cpus > 0 || memory_bytes > 0))
    throw ApiError{400, "invalid resource limits"};
  auto prof = image_catalog().find(image);
  if (prof == image_catalog().end()) throw ApiError{404, "No such image: " + image};
  if (find_container_ptr(name))
    throw ApiError{409, "Conflict. The container name \"/" + name + "\" is already in use"};
  auto c = std::make_unique<Container>();
  c->id = fresh_id(32);
  c->name = name;
  c->image = image;
  c->cmd = cmd;
  c->env = env;
  c->labels = labels;
  c->nano_cpus = nano_cpus;
  c->memory_bytes = memory_bytes;
  c->base_mem_mb = prof->second.mem_mb;
  c->base_cpu = prof->second.cpu_cores;
  std::string id = c->id;
  containers_.push_back(std::move(c));
  return id;
}

void World::start_container(const std::string &ref) {
  std::lock_guard<std::mutex> lk(mu_);
  if (faults_.fail_start_after >= 0 && faults_.fail_start_after-- == 0)
    throw ApiError{500, "simulated fault: start"};
  Container &c = find_container(ref);
  if (c.state == "running") return;
  if (c.state == "paused") throw ApiError{409, "Container " + c.name + " is paused"};
  c.state = "running";
  c.pid = next_pid_++;
  c.started_at = now();
  c.cpu_last = c.started_at;
}

void World::stop_container(const std::string &ref) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(ref);
  if (c.state != "running" && c.state != "paused") return;
  advance_cpu(c);
  c.state = "exited";
  for (auto &e : c.execs) e->cancel = true;
  double t = now();
  for (auto &f : flows_)
    if (f.end_time < 0 && (f.src_container == c.id || f.dst_container == c.id)) f.end_time = t;
  drop_namespace(c.id);
}

void World::pause_container(const std::string &ref) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(ref);
  if (c.state != "running")
    throw ApiError{409, "Container " + c.name + " is not running"};
  advance_cpu(c);
  c.state = "paused";
}

void World::unpause_container(const std::string &ref) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(ref);
  if (c.state != "paused")
    throw ApiError{409, "Container " + c.name + " is not paused"};
  c.cpu_last = now();
  c.state = "running";
}

void World::remove_container(const std::string &ref, bool force) {
  std::unique_lock<std::mutex> lk(mu_);
  Container *c = find_container_ptr(ref);
  if (!c) throw ApiError{404, "No such container: " + ref};
  if ((c->state == "running" || c->state == "paused") && !force)
    throw ApiError{409, "You cannot remove a running container"};
  for (auto &e : c->execs) e->cancel = true;
  double t = now();
  for (auto &f : flows_)
    if (f.end_time < 0 && (f.src_container == c->id || f.dst_container == c->id)) f.end_time = t;
  drop_namespace(c->id);
  for (auto it = ovs_.begin(); it != ovs_.end();)
    it = (it->second.container == c->id) ? ovs_.erase(it) : std::next(it);
  std::string id = c->id;
  containers_.erase(std::remove_if(containers_.begin(), containers_.end(),
                                   [&](const auto &p) { return p->id == id; }),
                    containers_.end());
}

std::string World::inspect_container(const std::string &ref) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(ref);
  json j;
  j["Id"] = c.id;
  j["Name"] = "/" + c.name;
  j["State"] = {{"Status", c.state},
                {"Running", c.state == "running"},
                {"Paused", c.state == "paused"},
                {"Pid", c.state == "running" || c.state == "paused" ? c.pid : 0},
                {"ExitCode", 0}};
  j["Config"] = {{"Image", c.image}, {"Labels", c.labels}, {"Hostname", c.name}};
  int64_t period = 100000;
  j["HostConfig"] = {{"NanoCpus", c.nano_cpus},
                     {"Memory", c.memory_bytes},
                     {"CpuPeriod", c.nano_cpus > 0 ? period : 0},
                     {"CpuQuota", c.nano_cpus > 0 ? c.nano_cpus / 10000 : 0},
                     {"NetworkMode", "none"}};
  j["NetworkSettings"] = {{"Networks", json::object()}};
  return j.dump();
}

std::string World::stats_container(const std::string &ref) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(ref);
  if (c.state != "running" && c.state != "paused")
    throw ApiError{409, "Container " + c.name + " is not running"};
  advance_cpu(c);
  double mem = mem_mb(c) * 1e6 * (1.0 + std::clamp(gauss(0, 0.002), -0.006, 0.006));
  json j;
  j["read"] = std::to_string(util::mono_ms());
  j["pids_stats"] = {{"current", 2}};
  j["cpu_stats"] = {{"cpu_usage", {{"total_usage", static_cast<int64_t>(c.cpu_accum_ns)}}},
                    {"system_cpu_usage", static_cast<int64_t>(now() * 8e9)},
                    {"online_cpus", 8}};
  j["precpu_stats"] = {{"cpu_usage", {{"total_usage", 0}}}};
  j["memory_stats"] = {{"usage", static_cast<int64_t>(mem)},
                       {"limit", c.memory_bytes > 0 ? c.memory_bytes : int64_t(64) << 30}};
  return j.dump();
}

std::string World::list_containers(bool all, const std::string &filters_json) {
  std::lock_guard<std::mutex> lk(mu_);
  std::vector<std::string> want_labels, want_names;
  if (!filters_json.empty()) {
    json f;
    try {
      f = json::parse(filters_json);
    } catch (const json::exception &) {
      throw ApiError{400, "invalid filters"};
    }
    if (f.contains("label"))
      for (const auto &l : f["label"]) want_labels.push_back(l.get<std::string>());
    if (f.contains("name"))
      for (const auto &n : f["name"]) want_names.push_back(n.get<std::string>());
  }
  json out = json::array();
  for (const auto &c : containers_) {
    if (!all && c->state != "running" && c->state != "paused") continue;
    bool keep = true;
    for (const auto &spec : want_labels) {
      auto eq = spec.find('=');
      if (eq == std::string::npos) {
        keep = keep && c->labels.count(spec);
      } else {
        auto it = c->labels.find(spec.substr(0, eq));
        keep = keep && it != c->labels.end() && it->second == spec.substr(eq + 1);
      }
    }
    if (!want_names.empty()) {
      bool any = false;
      for (const auto &n : want_names) any = any || c->name.find(n) != std::string::npos;
      keep = keep && any;
    }
    if (!keep) continue;
    out.push_back({{"Id", c->id},
                   {"Names", json::array({"/" + c->name})},
                   {"Image", c->image},
                   {"State", c->state},
                   {"Status", c->state},
                   {"Labels", c->labels}});
  }
  return out.dump();
}

// ---- net primitives -------------------------------------------------------

void World::check_ifname(const std::string &name) {
  if (name.empty() || name.size() > 15 || name.find('/') != std::string::npos ||
      name.find(' ') != std::string::npos)
    throw ApiError{400, "invalid interface name: " + name};
}

Iface *World::find_iface(const std::string &ns, const std::string &name) {
  auto it = ifaces_.find(ikey(ns, name));
  return it == ifaces_.end() ? nullptr : &it->second;
}

Iface &World::want_iface(const std::string &ns, const std::string &name) {
  Iface *i = find_iface(ns, name);
  if (!i) throw ApiError{404, "Cannot find device \"" + name + "\""};
  return *i;
}

void World::want_absent(const std::string &ns, const std::string &name) {
  if (find_iface(ns, name)) throw ApiError{409, "File exists: " + name};
}

namespace {
bool ns_valid(const std::string &ns) { return !ns.empty(); }
}  // namespace

void World::net_create_veth(const std::string &ns_a, const std::string &name_a,
                            const std::string &ns_b, const std::string &name_b) {
  std::lock_guard<std::mutex> lk(mu_);
  if (faults_.fail_veth_after >= 0 && faults_.fail_veth_after-- == 0)
    throw ApiError{500, "simulated fault: veth"};
  check_ifname(name_a);
  check_ifname(name_b);
  if (!ns_valid(ns_a) || !ns_valid(ns_b)) throw ApiError{400, "bad namespace"};
  for (const auto &ns : {ns_a, ns_b})
    if (ns != kRootNs) {
      Container *c = find_container_ptr(ns);
      if (!c || (c->state != "running" && c->state != "paused"))
        throw ApiError{404, "no such namespace: " + ns};
    }
  want_absent(ns_a, name_a);
  if (!(ns_a == ns_b && name_a == name_b)) want_absent(ns_b, name_b);
  if (ns_a == ns_b && name_a == name_b) throw ApiError{409, "File exists: " + name_a};
  Iface a{ns_a, name_a, "veth", ns_b, name_b, "", "", false, "", {}, 0, "", ""};
  Iface b{ns_b, name_b, "veth", ns_a, name_a, "", "", false, "", {}, 0, "", ""};
  ifaces_[ikey(ns_a, name_a)] = a;
  ifaces_[ikey(ns_b, name_b)] = b;
}

void World::net_create_bridge(const std::string &ns, const std::string &name) {
  std::lock_guard<std::mutex> lk(mu_);
  check_ifname(name);
  want_absent(ns, name);
  Iface br{ns, name, "bridge", "", "", "", "", false, "", {}, 0, "", ""};
  ifaces_[ikey(ns, name)] = br;
}

void World::net_enslave(const std::string &ns, const std::string &ifname,
                        const std::string &master) {
  std::lock_guard<std::mutex> lk(mu_);
  Iface &i = want_iface(ns, ifname);
  Iface &m = want_iface(ns, master);
  if (m.kind != "bridge") throw ApiError{400, master + " is not a bridge"};
  i.master = master;
}

void World::net_add_addr(const std::string &ns, const std::string &ifname,
                         const std::string &cidr) {
  std::lock_guard<std::mutex> lk(mu_);
  Iface &i = want_iface(ns, ifname);
  auto slash = cidr.find('/');
  if (slash == std::string::npos || !util::parse_ipv4(cidr.substr(0, slash)))
    throw ApiError{400, "invalid address: " + cidr};
  if (std::find(i.addrs.begin(), i.addrs.end(), cidr) == i.addrs.end()) i.addrs.push_back(cidr);
}

void World::net_set_state(const std::string &ns, const std::string &ifname, bool up) {
  std::lock_guard<std::mutex> lk(mu_);
  want_iface(ns, ifname).up = up;
}

void World::net_set_mac(const std::string &ns, const std::string &ifname,
                        const std::string &mac) {
  std::lock_guard<std::mutex> lk(mu_);
  want_iface(ns, ifname).mac = mac;
}

void World::net_rename(const std::string &ns, const std::string &old_name,
                       const std::string &new_name) {
  std::lock_guard<std::mutex> lk(mu_);
  check_ifname(new_name);
  Iface i = want_iface(ns, old_name);
  want_absent(ns, new_name);
  if (i.kind == "veth") {
    Iface *peer = find_iface(i.peer_ns, i.peer_name);
    if (peer) peer->peer_name = new_name;
  }
  ifaces_.erase(ikey(ns, old_name));
  i.name = new_name;
  ifaces_[ikey(ns, new_name)] = i;
}

void World::net_create_tunnel(const std::string &ns, const std::string &name,
                              const std::string &kind, uint32_t key, const std::string &local,
                              const std::string &remote) {
  std::lock_guard<std::mutex> lk(mu_);
  check_ifname(name);
  if (kind != "gretap" && kind != "vxlan") throw ApiError{400, "unknown tunnel kind: " + kind};
  want_absent(ns, name);
  Iface t{ns, name, kind, "", "", "", "", false, "", {}, key, local, remote};
  ifaces_[ikey(ns, name)] = t;
}

void World::delete_iface_locked(const std::string &ns, const std::string &name) {
  auto it = ifaces_.find(ikey(ns, name));
  if (it == ifaces_.end()) return;
  Iface copy = it->second;
  ifaces_.erase(it);
  if (copy.kind == "veth") ifaces_.erase(ikey(copy.peer_ns, copy.peer_name));
  if (copy.kind == "bridge")
    for (auto &[k, inf] : ifaces_)
      if (inf.ns == ns && inf.master == name) inf.master.clear();
}

void World::net_delete(const std::string &ns, const std::string &ifname) {
  std::lock_guard<std::mutex> lk(mu_);
  if (!find_iface(ns, ifname)) throw ApiError{404, "Cannot find device \"" + ifname + "\""};
  delete_iface_locked(ns, ifname);
}

std::vector<std::string> World::net_list(const std::string &ns) {
  std::lock_guard<std::mutex> lk(mu_);
  std::vector<std::string> out;
  for (const auto &[k, inf] : ifaces_)
    if (inf.ns == ns) out.push_back(inf.name);
  std::sort(out.begin(), out.end());
  return out;
}

std::string World::resolve_ns(const std::string &container_ref) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(container_ref);
  if (c.state != "running" && c.state != "paused")
    throw ApiError{409, "Container " + c.name + " is not running"};
  return c.id;
}

void World::drop_namespace(const std::string &ns) {
  std::vector<std::pair<std::string, std::string>> doomed;
  for (const auto &[k, inf] : ifaces_)
    if (inf.ns == ns) doomed.emplace_back(inf.ns, inf.name);
  for (const auto &[n, name] : doomed) delete_iface_locked(n, name);
}

// ---- ovs ------------------------------------------------------------------

void World::ovs_create_bridge(const std::string &container_ref, const std::string &name,
                              const std::string &fail_mode) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(container_ref);
  auto prof = image_catalog().find(c.image);
  if (prof == image_catalog().end() || !prof->second.is_switch)
    throw ApiError{400, "ovs-vswitchd is not running in " + c.name};
  if (c.state != "running") throw ApiError{409, "Container " + c.name + " is not running"};
  std::string key = c.id + "/" + name;
  auto it = ovs_.find(key);
  if (it != ovs_.end()) {
    if (it->second.fail_mode != fail_mode) throw ApiError{409, "bridge exists: " + name};
    return;
  }
  OvsBridge b;
  b.container = c.id;
  b.name = name;
  b.fail_mode = fail_mode.empty() ? "secure" : fail_mode;
  ovs_[key] = b;
  if (!find_iface(c.id, name)) {
    Iface br{c.id, name, "ovsbr", "", "", "", "", true, "", {}, 0, "", ""};
    ifaces_[ikey(c.id, name)] = br;
  }
}

void World::ovs_add_port(const std::string &container_ref, const std::string &bridge,
                         const std::string &ifname) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(container_ref);
  auto it = ovs_.find(c.id + "/" + bridge);
  if (it == ovs_.end()) throw ApiError{404, "no bridge named " + bridge};
  Iface *i = find_iface(c.id, ifname);
  if (!i) throw ApiError{404, "no such device " + ifname};
  i->ovs_bridge = bridge;
}

void World::ovs_set_controller(const std::string &container_ref, const std::string &bridge,
                               const std::string &target) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(container_ref);
  auto it = ovs_.find(c.id + "/" + bridge);
  if (it == ovs_.end()) throw ApiError{404, "no bridge named " + bridge};
  it->second.controller_target = target;
  it->second.controller_set_at = now();
}

bool World::ovs_connected(const std::string &container_ref, const std::string &bridge) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(container_ref);
  auto it = ovs_.find(c.id + "/" + bridge);
  if (it == ovs_.end()) throw ApiError{404, "no bridge named " + bridge};
  const OvsBridge &b = it->second;
  if (b.controller_set_at < 0) return false;
  const Container *ctl = controller_for_target(b.controller_target);
  if (!ctl) return false;
  return now() >= std::max(b.controller_set_at, ctl->started_at + onos_boot_s_) + 0.25;
}

bool World::ovs_bridge_exists(const std::string &container_ref, const std::string &bridge) {
  std::lock_guard<std::mutex> lk(mu_);
  Container *c = find_container_ptr(container_ref);
  if (!c) return false;
  return ovs_.count(c->id + "/" + bridge) > 0;
}

bool World::probe_tcp(const std::string &ip, int port) {
  std::lock_guard<std::mutex> lk(mu_);
  for (const auto &[k, inf] : ifaces_) {
    bool match = false;
    for (const auto &cidr : inf.addrs)
      if (cidr.substr(0, cidr.find('/')) == ip) match = true;
    if (!match) continue;
    if (inf.ns == kRootNs) return false;
    Container *c = find_container_ptr(inf.ns);
    if (!c) return false;
    auto prof = image_catalog().find(c->image);
    if (prof == image_catalog().end()) return false;
    if (port == 6653 || port == 8181) return controller_ready(*c);
    if (port == 6640) return prof->second.is_switch && c->state == "running";
    return false;
  }
  return false;
}

// ---- faults and debug -----------------------------------------------------

void World::set_fault(const std::string &what, int count) {
  std::lock_guard<std::mutex> lk(mu_);
  if (what == "create")
    faults_.fail_create_after = count;
  else if (what == "start")
    faults_.fail_start_after = count;
  else if (what == "veth")
    faults_.fail_veth_after = count;
  else if (what == "reset")
    faults_ = Faults{};
  else
    throw ApiError{400, "unknown fault: " + what};
}

void World::set_reject_limits(bool v) {
  std::lock_guard<std::mutex> lk(mu_);
  faults_.reject_limits = v;
}

std::string World::debug_state() {
  std::lock_guard<std::mutex> lk(mu_);
  json j;
  j["containers"] = json::array();
  for (const auto &c : containers_)
    j["containers"].push_back({{"name", c->name}, {"state", c->state}});
  std::vector<std::string> root;
  std::set<std::string> namespaces;
  for (const auto &[k, inf] : ifaces_) {
    if (inf.ns == kRootNs) root.push_back(inf.name);
    namespaces.insert(inf.ns);
  }
  std::sort(root.begin(), root.end());
  j["root_ifaces"] = root;
  j["namespaces"] = namespaces.size();
  j["ovs_bridges"] = ovs_.size();
  int active = 0;
  for (const auto &f : flows_)
    if (f.end_time < 0) ++active;
  j["flows_active"] = active;
  return j.dump();
}

// ---- path finding ---------------------------------------------------------

namespace {
struct Edge {
  std::string from, to;
  std::string token;       // capacity token, empty for none
  std::string bridge_key;  // ovs crossing
};
}  // namespace

PathResult World::find_path(const std::string &src_container, const std::string &src_ip_hint,
                            const std::string &dst_ip) {
  PathResult r;
  auto dst = util::parse_ipv4(dst_ip);
  if (!dst) return r;
  std::vector<std::string> starts;
  for (const auto &[k, inf] : ifaces_) {
    if (inf.ns != src_container || !inf.up) continue;
    for (const auto &cidr : inf.addrs) {
      auto pc = util::parse_cidr(cidr);
      if (!pc) continue;
      if (!src_ip_hint.empty() && cidr.substr(0, cidr.find('/')) != src_ip_hint) continue;
      if (util::same_subnet(pc->first, *dst, pc->second)) starts.push_back(k);
    }
  }
  if (starts.empty()) return r;

  std::map<std::string, Edge> parent;
  std::deque<std::string> q;
  std::set<std::string> visited;
  for (const auto &s : starts) {
    visited.insert(s);
    q.push_back(s);
  }
  std::string goal;
  auto offer = [&](const std::string &from, const std::string &to, const std::string &token,
                   const std::string &bridge_key) {
    if (visited.count(to)) return;
    auto it = ifaces_.find(to);
    if (it == ifaces_.end() || !it->second.up) return;
    visited.insert(to);
    parent[to] = Edge{from, to, token, bridge_key};
    q.push_back(to);
  };
  auto is_goal = [&](const std::string &key) {
    const Iface &inf = ifaces_.at(key);
    for (const auto &cidr : inf.addrs)
      if (cidr.substr(0, cidr.find('/')) == dst_ip) return true;
    return false;
  };

  for (const auto &s : starts)
    if (is_goal(s)) {
      r.reachable = true;
      r.hops = 0;
      return r;
    }

  while (!q.empty() && goal.empty()) {
    std::string cur = q.front();
    q.pop_front();
    const Iface inf = ifaces_.at(cur);
    // veth peer
    if (inf.kind == "veth") {
      std::string peer = ikey(inf.peer_ns, inf.peer_name);
      std::string token = "veth:" + std::min(cur, peer);
      offer(cur, peer, token, "");
    }
    // tunnels
    if (inf.kind == "gretap" || inf.kind == "vxlan") {
      for (const auto &[k2, other] : ifaces_) {
        if (k2 == cur || other.kind != inf.kind || other.tunnel_key != inf.tunnel_key) continue;
        if (other.tunnel_local != inf.tunnel_remote || other.tunnel_remote != inf.tunnel_local)
          continue;
        char tok[32];
        std::snprintf(tok, sizeof tok, "tun:%s:%u", inf.kind.c_str(), inf.tunnel_key);
        offer(cur, k2, tok, "");
      }
    }
    // linux bridge membership
    if (!inf.master.empty()) offer(cur, ikey(inf.ns, inf.master), "br:" + ikey(inf.ns, inf.master), "");
    if (inf.kind == "bridge") {
      for (const auto &[k2, other] : ifaces_)
        if (other.ns == inf.ns && other.master == inf.name)
          offer(cur, k2, "br:" + cur, "");
    }
    // ovs bridge crossing
    if (!inf.ovs_bridge.empty()) {
      auto bit = ovs_.find(inf.ns + "/" + inf.ovs_bridge);
      if (bit != ovs_.end()) {
        bool open = bridge_forwards(bit->second);
        Container *c = find_container_ptr(bit->second.container);
        if (c && c->state == "paused") {
          // frozen userspace forwards only flows already installed
          auto fwd = bit->second.flows.find(src_ip_hint + ">" + dst_ip);
          open = fwd != bit->second.flows.end();
        }
        if (open) {
          for (const auto &[k2, other] : ifaces_)
            if (other.ns == inf.ns && other.ovs_bridge == inf.ovs_bridge && k2 != cur)
              offer(cur, k2, "ovs:" + bit->first, bit->first);
        }
      }
    }
    for (const auto &s : q)
      if (goal.empty() && is_goal(s)) goal = s;
  }
  if (goal.empty()) return r;

  r.reachable = true;
  std::set<std::string> cset;
  std::string cur = goal;
  std::string last_token;
  while (parent.count(cur)) {
    const Edge &e = parent[cur];
    r.hops++;
    if (!e.token.empty() && e.token != last_token) {
      r.links.push_back(e.token);
      last_token = e.token;
    }
    if (!e.bridge_key.empty()) r.bridges.push_back(e.bridge_key);
    const Iface &inf = ifaces_.at(cur);
    if (inf.ns != kRootNs) cset.insert(inf.ns);
    cur = e.from;
  }
  const Iface &first = ifaces_.at(cur);
  if (first.ns != kRootNs) cset.insert(first.ns);
  std::reverse(r.links.begin(), r.links.end());
  std::reverse(r.bridges.begin(), r.bridges.end());
  r.containers.assign(cset.begin(), cset.end());
  return r;
}

double World::flow_setup_ms(const PathResult &path, const std::string &src_ip,
                            const std::string &dst_ip) {
  double ms = 0;
  double scale = 1.0 + connected_switches() / 48.0;
  double t = now();
  for (const auto &bk : path.bridges) {
    auto it = ovs_.find(bk);
    if (it == ovs_.end()) continue;
    Container *c = find_container_ptr(it->second.container);
    if (c && c->state == "paused") continue;
    for (const std::string &dir : {src_ip + ">" + dst_ip, dst_ip + ">" + src_ip}) {
      auto fit = it->second.flows.find(dir);
      if (fit == it->second.flows.end() || t - fit->second.last_used > idle_timeout_s_) {
        ms += std::max(0.4, gauss(1.3, 0.25)) * scale;
        it->second.flows[dir] = FlowEntry{t, t};
      }
    }
  }
  return ms;
}

bool World::flows_installed(const PathResult &path, const std::string &src_ip,
                            const std::string &dst_ip) {
  double t = now();
  for (const auto &bk : path.bridges) {
    auto it = ovs_.find(bk);
    if (it == ovs_.end()) return false;
    for (const std::string &dir : {src_ip + ">" + dst_ip, dst_ip + ">" + src_ip}) {
      auto fit = it->second.flows.find(dir);
      if (fit == it->second.flows.end() || t - fit->second.last_used > idle_timeout_s_)
        return false;
    }
  }
  return true;
}

void World::touch_flows(const PathResult &path, const std::string &src_ip,
                        const std::string &dst_ip) {
  double t = now();
  for (const auto &bk : path.bridges) {
    auto it = ovs_.find(bk);
    if (it == ovs_.end()) continue;
    for (const std::string &dir : {src_ip + ">" + dst_ip, dst_ip + ">" + src_ip}) {
      auto fit = it->second.flows.find(dir);
      if (fit != it->second.flows.end()) fit->second.last_used = t;
    }
  }
}

// ---- flow rate sharing ----------------------------------------------------

double World::flow_rate_at(const UdpFlow &f, double t) {
  if (f.blocked) return 0;
  if (t < f.start_time || (f.end_time >= 0 && t >= f.end_time)) return 0;
  double factor = 1.0;
  for (const auto &link : f.links) {
    double demand = 0;
    for (const auto &g : flows_) {
      if (g.blocked || t < g.start_time || (g.end_time >= 0 && t >= g.end_time)) continue;
      if (std::find(g.links.begin(), g.links.end(), link) != g.links.end())
        demand += g.requested_mbps;
    }
    if (demand > capacity_mbps_) factor = std::min(factor, capacity_mbps_ / demand);
  }
  return f.requested_mbps * factor;
}

double World::flow_bytes_between(const UdpFlow &f, double t0, double t1) {
  std::vector<double> cuts{t0, t1};
  for (const auto &g : flows_) {
    if (g.start_time > t0 && g.start_time < t1) cuts.push_back(g.start_time);
    if (g.end_time >= 0 && g.end_time > t0 && g.end_time < t1) cuts.push_back(g.end_time);
  }
  std::sort(cuts.begin(), cuts.end());
  double bytes = 0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double mid = (cuts[i] + cuts[i + 1]) / 2;
    bytes += flow_rate_at(f, mid) * 1e6 / 8.0 * (cuts[i + 1] - cuts[i]);
  }
  return bytes;
}

// ---- exec -----------------------------------------------------------------

std::string World::create_exec(const std::string &ref, const std::vector<std::string> &cmd) {
  std::lock_guard<std::mutex> lk(mu_);
  Container &c = find_container(ref);
  if (c.state == "paused") throw ApiError{409, "Container " + c.name + " is paused"};
  if (c.state != "running") throw ApiError{409, "Container " + c.name + " is not running"};
  if (cmd.empty()) throw ApiError{400, "empty command"};
  auto s = std::make_shared<ExecSession>();
  s->id = fresh_id(32);
  s->container = c.id;
  s->cmd = cmd;
  execs_[s->id] = s;
  c.execs.push_back(s);
  return s->id;
}

std::shared_ptr<ExecSession> World::start_exec(const std::string &exec_id) {
  std::shared_ptr<ExecSession> s;
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = execs_.find(exec_id);
    if (it == execs_.end()) throw ApiError{404, "No such exec instance: " + exec_id};
    s = it->second;
    if (s->started) throw ApiError{409, "exec already started"};
    s->started = true;
  }
  std::thread([this, s] { run_exec(s); }).detach();
  return s;
}

std::string World::inspect_exec(const std::string &exec_id) {
  std::shared_ptr<ExecSession> s;
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = execs_.find(exec_id);
    if (it == execs_.end()) throw ApiError{404, "No such exec instance: " + exec_id};
    s = it->second;
  }
  std::lock_guard<std::mutex> lk(s->mu);
  json j;
  j["ID"] = s->id;
  j["Running"] = !s->done;
  j["ExitCode"] = s->done ? s->exit_code : 0;
  return j.dump();
}

// Interpreter for the tiny toolbox the node images carry.
struct Interp {
  World &w;
  std::shared_ptr<ExecSession> s;

  bool cancelled() const { return s->cancel.load(); }

  bool nap(double seconds) {
    double deadline = util::mono_ms() / 1000.0 + seconds;
    while (util::mono_ms() / 1000.0 < deadline) {
      if (cancelled()) return false;
      double left = deadline - util::mono_ms() / 1000.0;
      std::this_thread::sleep_for(
          std::chrono::milliseconds(std::max(1, std::min(20, static_cast<int>(left * 1000)))));
    }
    return !cancelled();
  }

  void out(const std::string &t) { s->emit(1, t); }
  void err(const std::string &t) { s->emit(2, t); }

  bool tools_present() {
    std::lock_guard<std::mutex> lk(w.mu_);
    Container *c = w.find_container_ptr(s->container);
    if (!c) return false;
    auto prof = image_catalog().find(c->image);
    return prof != image_catalog().end() && prof->second.has_net_tools;
  }

  int run(const std::vector<std::string> &argv);

  int cmd_echo(const std::vector<std::string> &argv) {
    out(util::join(std::vector<std::string>(argv.begin() + 1, argv.end()), " ") + "\n");
    return 0;
  }

  int cmd_sleep(const std::vector<std::string> &argv) {
    if (argv.size() < 2) {
      err("sleep: missing operand\n");
      return 1;
    }
    auto secs = util::parse_double(argv[1]);
    if (!secs) {
      err("sleep: invalid time interval '" + argv[1] + "'\n");
      return 1;
    }
    nap(*secs);
    return 0;
  }

  int cmd_sh(const std::vector<std::string> &argv) {
    if (argv.size() < 3 || argv[1] != "-c") {
      err("sh: usage: sh -c <script>\n");
      return 2;
    }
    const std::string &script = argv[2];
    if (script.find_first_of("|<>&") != std::string::npos) {
      err("sh: syntax not supported\n");
      return 2;
    }
    int last = 0;
    for (const auto &piece : util::split(script, ';')) {
      std::string t = util::trim(piece);
      if (t.empty()) continue;
      last = run(util::tokenize(t));
      if (cancelled()) break;
    }
    return last;
  }

  int cmd_spin(const std::vector<std::string> &argv) {
    double secs = 1.0;
    if (argv.size() > 1) {
      auto v = util::parse_double(argv[1]);
      if (!v) {
        err("spin: invalid duration\n");
        return 1;
      }
      secs = *v;
    }
    {
      std::lock_guard<std::mutex> lk(w.mu_);
      Container *c = w.find_container_ptr(s->container);
      if (c) w.set_extra_cpu(*c, +1.0);
    }
    nap(secs);
    {
      std::lock_guard<std::mutex> lk(w.mu_);
      Container *c = w.find_container_ptr(s->container);
      if (c) w.set_extra_cpu(*c, -1.0);
    }
    return 0;
  }

  int cmd_ping(const std::vector<std::string> &argv);
  int cmd_iperf(const std::vector<std::string> &argv);
  int iperf_server(int port);
  int iperf_client(const std::string &dst_ip, int port, double rate_mbps, double duration);
};

int Interp::run(const std::vector<std::string> &argv) {
  if (argv.empty()) return 0;
  const std::string &c = argv[0];
  if (c == "true") return 0;
  if (c == "false") return 1;
  if (c == "echo") return cmd_echo(argv);
  if (c == "sleep") return cmd_sleep(argv);
  if (c == "sh") return cmd_sh(argv);
  if (c == "ping" || c == "iperf" || c == "spin") {
    if (!tools_present()) {
      err("exec: \"" + c + "\": executable file not found in $PATH\n");
      return 127;
    }
    if (c == "ping") return cmd_ping(argv);
    if (c == "iperf") return cmd_iperf(argv);
    return cmd_spin(argv);
  }
  err("exec: \"" + c + "\": executable file not found in $PATH\n");
  return 127;
}

int Interp::cmd_ping(const std::vector<std::string> &argv) {
  int count = -1;  // forever until cancel
  double interval = 1.0;
  std::string target;
  for (size_t i = 1; i < argv.size(); ++i) {
    const std::string &a = argv[i];
    if (a == "-c" && i + 1 < argv.size()) {
      auto v = util::parse_int(argv[++i]);
      if (!v || *v < 1) {
        err("ping: bad number of packets to transmit.\n");
        return 2;
      }
      count = static_cast<int>(*v);
    } else if (a == "-i" && i + 1 < argv.size()) {
      auto v = util::parse_double(argv[++i]);
      if (!v || *v < 0) {
        err("ping: bad timing interval\n");
        return 2;
      }
      interval = *v;
    } else if (a == "-W" && i + 1 < argv.size()) {
      ++i;
    } else if (!a.empty() && a[0] != '-') {
      target = a;
    }
  }
  if (target.empty()) {
    err("ping: usage error: Destination address required\n");
    return 2;
  }
  if (!util::parse_ipv4(target)) {
    err("ping: " + target + ": Name or service not known\n");
    return 2;
  }
  if (count < 0) count = 4;

  {
    std::lock_guard<std::mutex> lk(w.mu_);
    PathResult p = w.find_path(s->container, "", target);
    bool self = false;
    for (const auto &[k, inf] : w.ifaces_)
      if (inf.ns == s->container)
        for (const auto &cidr : inf.addrs)
          if (cidr.substr(0, cidr.find('/')) == target) self = true;
    if (!p.reachable && !self) {
      bool have_subnet = false;
      for (const auto &[k, inf] : w.ifaces_) {
        if (inf.ns != s->container || !inf.up) continue;
        for (const auto &cidr : inf.addrs) {
          auto pc = util::parse_cidr(cidr);
          auto dst = util::parse_ipv4(target);
          if (pc && dst && util::same_subnet(pc->first, *dst, pc->second)) have_subnet = true;
        }
      }
      if (!have_subnet) {
        err("ping: connect: Network is unreachable\n");
        return 2;
      }
    }
  }

  out("PING " + target + " (" + target + ") 56(84) bytes of data.\n");
  int received = 0;
  std::vector<double> rtts;
  std::string src_ip;
  for (int seq = 1; seq <= count; ++seq) {
    if (seq > 1 && !nap(interval)) break;
    double rtt = -1;
    {
      std::lock_guard<std::mutex> lk(w.mu_);
      PathResult p = w.find_path(s->container, "", target);
      bool self = false;
      for (const auto &[k, inf] : w.ifaces_)
        if (inf.ns == s->container)
          for (const auto &cidr : inf.addrs)
            if (cidr.substr(0, cidr.find('/')) == target) self = true;
      if (self) {
        rtt = 0.02 + std::abs(w.gauss(0, 0.005));
      } else if (p.reachable) {
        if (src_ip.empty()) {
          auto dst = util::parse_ipv4(target);
          for (const auto &[k, inf] : w.ifaces_) {
            if (inf.ns != s->container) continue;
            for (const auto &cidr : inf.addrs) {
              auto pc = util::parse_cidr(cidr);
              if (pc && dst && util::same_subnet(pc->first, *dst, pc->second))
                src_ip = cidr.substr(0, cidr.find('/'));
            }
          }
        }
        double setup = w.flow_setup_ms(p, src_ip, target);
        w.touch_flows(p, src_ip, target);
        rtt = 0.055 + 0.012 * p.hops + std::abs(w.gauss(0, 0.008)) + setup;
      }
    }
    if (rtt >= 0) {
      ++received;
      rtts.push_back(rtt);
      out("64 bytes from " + target + ": icmp_seq=" + std::to_string(seq) +
          " ttl=64 time=" + fmt_ping_ms(rtt) + " ms\n");
    }
    if (cancelled()) break;
  }
  int transmitted = count;
  int loss = transmitted > 0 ? (transmitted - received) * 100 / transmitted : 0;
  char tail[160];
  std::snprintf(tail, sizeof tail,
                "\n--- %s ping statistics ---\n%d packets transmitted, %d received, "
                "%d%% packet loss, time %dms\n",
                target.c_str(), transmitted, received, loss,
                static_cast<int>((count - 1) * interval * 1000));
  out(tail);
  if (received > 0) {
    double mn = rtts[0], mx = rtts[0], sum = 0;
    for (double v : rtts) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      sum += v;
    }
    double avg = sum / rtts.size();
    double var = 0;
    for (double v : rtts) var += (v - avg) * (v - avg);
    double mdev = std::sqrt(var / rtts.size());
    char line[160];
    std::snprintf(line, sizeof line, "rtt min/avg/max/mdev = %.3f/%.3f/%.3f/%.3f ms\n", mn, avg,
                  mx, mdev);
    out(line);
  }
  return received > 0 ? 0 : 1;
}

int Interp::cmd_iperf(const std::vector<std::string> &argv) {
  bool server = false, udp = false;
  int port = 5001;
  std::string client_target;
  double rate = 1.0;  // iperf UDP default 1 Mbps
  double duration = 10.0;
  for (size_t i = 1; i < argv.size(); ++i) {
    const std::string &a = argv[i];
    if (a == "-s") server = true;
    else if (a == "-u") udp = true;
    else if (a == "-i" && i + 1 < argv.size()) ++i;
    else if (a == "-p" && i + 1 < argv.size()) {
      auto v = util::parse_int(argv[++i]);
      if (!v) { err("iperf: bad port\n"); return 1; }
      port = static_cast<int>(*v);
    } else if (a == "-c" && i + 1 < argv.size()) {
      client_target = argv[++i];
    } else if (a == "-b" && i + 1 < argv.size()) {
      std::string spec = argv[++i];
      double mult = 1.0 / 1e6;
      if (!spec.empty() && (spec.back() == 'K' || spec.back() == 'k')) { mult = 1e3 / 1e6; spec.pop_back(); }
      else if (!spec.empty() && (spec.back() == 'M' || spec.back() == 'm')) { mult = 1.0; spec.pop_back(); }
      else if (!spec.empty() && (spec.back() == 'G' || spec.back() == 'g')) { mult = 1e3; spec.pop_back(); }
      auto v = util::parse_double(spec);
      if (!v || *v <= 0) { err("iperf: bad bandwidth\n"); return 1; }
      rate = *v * mult;
    } else if (a == "-t" && i + 1 < argv.size()) {
      auto v = util::parse_double(argv[++i]);
      if (!v || *v <= 0) { err("iperf: bad duration\n"); return 1; }
      duration = *v;
    }
  }
  if (!udp) {
    err("iperf: only UDP (-u) is supported by this image\n");
    return 1;
  }
  if (server) return iperf_server(port);
  if (client_target.empty()) {
    err("iperf: need -s or -c\n");
    return 1;
  }
  return iperf_client(client_target, port, rate, duration);
}

int Interp::iperf_server(int port) {
  out("------------------------------------------------------------\n");
  out("Server listening on UDP port " + std::to_string(port) + "\n");
  out("Receiving 1470 byte datagrams\n");
  out("UDP buffer size:  208 KByte (default)\n");
  out("------------------------------------------------------------\n");
  struct FlowView {
    int id_num;
    int next_interval = 0;
    bool announced = false;
    bool finished = false;
    double requested = 0;
    std::string peer_ip;
  };
  std::map<uint64_t, FlowView> seen;
  int next_id_num = 3;
  while (!cancelled()) {
    std::vector<std::string> lines;
    {
      std::lock_guard<std::mutex> lk(w.mu_);
      double t = w.now();
      std::string my_ip;
      for (const auto &[k, inf] : w.ifaces_)
        if (inf.ns == s->container && !inf.addrs.empty() && inf.name != "mgmt0")
          my_ip = inf.addrs[0].substr(0, inf.addrs[0].find('/'));
      for (auto &f : w.flows_) {
        if (f.dst_container != s->container || f.port != port || f.blocked) continue;
        auto &view = seen[f.id];
        if (view.requested == 0) {
          view.id_num = next_id_num++;
          view.requested = f.requested_mbps;
          view.peer_ip = f.src_ip;
        }
        if (!view.announced && t >= f.start_time) {
          view.announced = true;
          char line[160];
          std::snprintf(line, sizeof line,
                        "[%3d] local %s port %d connected with %s port %d\n", view.id_num,
                        my_ip.c_str(), port, f.src_ip.c_str(), 50000 + view.id_num);
          lines.push_back(line);
          lines.push_back(
              "[ ID] Interval       Transfer     Bandwidth        Jitter   Lost/Total "
              "Datagrams\n");
        }
        while (view.announced && !view.finished &&
               t >= f.start_time + view.next_interval + 1) {
          double a = f.start_time + view.next_interval;
          double bytes = w.flow_bytes_between(f, a, a + 1);
          bytes *= 1.0 + std::clamp(w.gauss(0, 0.003), -0.008, 0.008);
          double mbps = bytes * 8.0 / 1e6;
          long total = std::lround(f.requested_mbps * 1e6 / 8.0 / 1470.0);
          long got = std::lround(bytes / 1470.0);
          long lost = std::max(0L, total - got);
          double jitter = 0.008 + std::abs(w.gauss(0, 0.004));
          char line[200];
          std::snprintf(line, sizeof line,
                        "[%3d] %4.1f-%4.1f sec  %s  %s  %.3f ms %4ld/%5ld (%.2g%%)\n",
                        view.id_num, static_cast<double>(view.next_interval),
                        static_cast<double>(view.next_interval + 1), fmt_bytes(bytes).c_str(),
                        fmt_rate(mbps).c_str(), jitter, lost, total,
                        total > 0 ? 100.0 * lost / total : 0.0);
          lines.push_back(line);
          ++view.next_interval;
          if (f.end_time >= 0 && a + 1 >= f.end_time - 1e-9) {
            double whole = w.flow_bytes_between(f, f.start_time, f.end_time);
            double dur = f.end_time - f.start_time;
            double avg = whole * 8.0 / 1e6 / std::max(1e-9, dur);
            long totall = std::lround(f.requested_mbps * 1e6 / 8.0 / 1470.0 * dur);
            long gotl = std::lround(whole / 1470.0);
            char sum[200];
            std::snprintf(sum, sizeof sum,
                          "[%3d]  0.0-%.1f sec  %s  %s  %.3f ms %4ld/%5ld (%.2g%%)\n",
                          view.id_num, dur, fmt_bytes(whole).c_str(), fmt_rate(avg).c_str(),
                          jitter, std::max(0L, totall - gotl), totall,
                          totall > 0 ? 100.0 * std::max(0L, totall - gotl) / totall : 0.0);
            lines.push_back(sum);
            view.finished = true;
            break;
          }
        }
        if (view.announced && !view.finished && f.end_time >= 0 &&
            t >= f.end_time + 0.5) {
          double whole = w.flow_bytes_between(f, f.start_time, f.end_time);
          double dur = f.end_time - f.start_time;
          double avg = whole * 8.0 / 1e6 / std::max(1e-9, dur);
          char sum[200];
          std::snprintf(sum, sizeof sum, "[%3d]  0.0-%.1f sec  %s  %s  0.010 ms    0/    0 (0%%)\n",
                        view.id_num, dur, fmt_bytes(whole).c_str(), fmt_rate(avg).c_str());
          lines.push_back(sum);
          view.finished = true;
        }
      }
    }
    for (const auto &l : lines) out(l);
    if (!nap(0.1)) break;
  }
  return 0;
}

int Interp::iperf_client(const std::string &dst_ip, int port, double rate_mbps, double duration) {
  uint64_t flow_id = 0;
  std::string src_ip;
  bool blocked = false;
  {
    std::lock_guard<std::mutex> lk(w.mu_);
    PathResult p = w.find_path(s->container, "", dst_ip);
    auto dst = util::parse_ipv4(dst_ip);
    bool have_subnet = false;
    for (const auto &[k, inf] : w.ifaces_) {
      if (inf.ns != s->container || !inf.up) continue;
      for (const auto &cidr : inf.addrs) {
        auto pc = util::parse_cidr(cidr);
        if (pc && dst && util::same_subnet(pc->first, *dst, pc->second)) {
          have_subnet = true;
          src_ip = cidr.substr(0, cidr.find('/'));
        }
      }
    }
    if (!have_subnet) {
      err("connect failed: Network is unreachable\n");
      return 1;
    }
    blocked = !p.reachable;
    if (p.reachable) {
      w.flow_setup_ms(p, src_ip, dst_ip);
      w.touch_flows(p, src_ip, dst_ip);
    }
    UdpFlow f;
    f.id = w.next_flow_id_++;
    flow_id = f.id;
    f.src_container = s->container;
    f.src_ip = src_ip;
    f.dst_ip = dst_ip;
    f.port = port;
    f.requested_mbps = rate_mbps;
    f.start_time = w.now();
    f.blocked = blocked;
    f.links = p.links;
    f.containers = p.containers;
    for (const auto &[k, inf] : w.ifaces_) {
      bool match = false;
      for (const auto &cidr : inf.addrs)
        if (cidr.substr(0, cidr.find('/')) == dst_ip) match = true;
      if (match && inf.ns != kRootNs) f.dst_container = inf.ns;
    }
    for (const auto &cid : f.containers) {
      Container *c = w.find_container_ptr(cid);
      if (c) w.set_extra_cpu(*c, 0.00002 * rate_mbps);
    }
    w.flows_.push_back(f);
  }
  out("------------------------------------------------------------\n");
  out("Client connecting to " + dst_ip + ", UDP port " + std::to_string(port) + "\n");
  out("Sending 1470 byte datagrams\n");
  out("UDP buffer size:  208 KByte (default)\n");
  out("------------------------------------------------------------\n");
  char hdr[160];
  std::snprintf(hdr, sizeof hdr, "[  3] local %s port %d connected with %s port %d\n",
                src_ip.c_str(), 50003, dst_ip.c_str(), port);
  out(hdr);

  nap(duration);

  double sent_bytes = 0, got_bytes = 0, dur = duration;
  {
    std::lock_guard<std::mutex> lk(w.mu_);
    for (auto &f : w.flows_) {
      if (f.id != flow_id) continue;
      f.end_time = w.now();
      dur = f.end_time - f.start_time;
      sent_bytes = f.requested_mbps * 1e6 / 8.0 * dur;
      got_bytes = w.flow_bytes_between(f, f.start_time, f.end_time);
      for (const auto &cid : f.containers) {
        Container *c = w.find_container_ptr(cid);
        if (c) w.set_extra_cpu(*c, -0.00002 * f.requested_mbps);
      }
    }
  }
  out("[ ID] Interval       Transfer     Bandwidth\n");
  char line[200];
  std::snprintf(line, sizeof line, "[  3]  0.0-%.1f sec  %s  %s\n", dur,
                fmt_bytes(sent_bytes).c_str(), fmt_rate(sent_bytes * 8.0 / 1e6 / dur).c_str());
  out(line);
  long sent = std::lround(sent_bytes / 1470.0);
  out("[  3] Sent " + std::to_string(sent) + " datagrams\n");
  if (blocked) {
    out("[  3] WARNING: did not receive ack of last datagram after 10 tries.\n");
  } else {
    out("[  3] Server Report:\n");
    long got = std::lround(got_bytes / 1470.0);
    std::snprintf(line, sizeof line, "[  3]  0.0-%.1f sec  %s  %s   0.011 ms %4ld/%5ld (%.2g%%)\n",
                  dur, fmt_bytes(got_bytes).c_str(),
                  fmt_rate(got_bytes * 8.0 / 1e6 / std::max(1e-9, dur)).c_str(),
                  std::max(0L, sent - got), sent,
                  sent > 0 ? 100.0 * std::max(0L, sent - got) / sent : 0.0);
    out(line);
  }
  return 0;
}

void World::run_exec(std::shared_ptr<ExecSession> s) {
  Interp interp{*this, s};
  int code = 137;
  try {
    code = interp.run(s->cmd);
  } catch (const ApiError &e) {
    s->emit(2, e.message + "\n");
    code = 1;
  } catch (const std::exception &e) {
    s->emit(2, std::string("internal: ") + e.what() + "\n");
    code = 1;
  }
  if (s->cancel.load()) code = 137;
  s->finish(code);
}

}  // namespace vemul::sim
