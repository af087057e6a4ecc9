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

// In-memory model behind the emulation engine: containers, network
// namespaces, interfaces, bridges, flow state and resource accounting.
// All public methods are thread safe; ApiError carries the HTTP status
// the engine front end should answer with.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace vemul::sim {

struct ApiError {
  int status;
  std::string message;
};

struct Iface {
  std::string ns;
  std::string name;
  std::string kind;  // veth | bridge | gretap | vxlan | plain
  std::string peer_ns, peer_name;
  std::string master;      // linux bridge enslaved to, same ns
  std::string ovs_bridge;  // attached as a port of this OVS bridge
  bool up = false;
  std::string mac;
  std::vector<std::string> addrs;  // cidr
  uint32_t tunnel_key = 0;
  std::string tunnel_local, tunnel_remote;
};

struct FlowEntry {
  double installed_at = 0;
  double last_used = 0;
};

struct OvsBridge {
  std::string container;  // container id
  std::string name;
  std::string fail_mode = "secure";
  std::string controller_target;
  double controller_set_at = -1;
  std::map<std::string, FlowEntry> flows;  // "src>dst" per direction
};

// One running exec; output is streamed through frames and the session can
// be cancelled from the outside (container stop, client hang-up).
struct ExecSession {
  std::string id;
  std::string container;
  std::vector<std::string> cmd;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::pair<int, std::string>> frames;  // stream type, payload
  bool done = false;
  std::atomic<bool> cancel{false};
  int exit_code = -1;
  bool started = false;

  void emit(int stream, const std::string &data);
  void finish(int code);
  // Returns false when the session is finished and drained.
  bool next_frame(std::pair<int, std::string> &out);
};

struct Container {
  std::string id;
  std::string name;
  std::string image;
  std::string state = "created";  // created | running | paused | exited
  std::map<std::string, std::string> labels;
  std::vector<std::string> env;
  std::vector<std::string> cmd;
  int64_t nano_cpus = 0;
  int64_t memory_bytes = 0;
  int pid = 0;
  double started_at = 0;
  double cpu_accum_ns = 0;
  double cpu_rate = 0;  // cores, includes idle base
  double cpu_last = 0;
  double base_cpu = 0;
  double base_mem_mb = 0;
  double extra_cpu = 0;  // active execs and flows
  std::vector<std::shared_ptr<ExecSession>> execs;
};

struct UdpFlow {
  uint64_t id = 0;
  std::string src_container, dst_container;
  std::string src_ip, dst_ip;
  int port = 5001;
  double requested_mbps = 0;
  double start_time = 0;
  double end_time = -1;  // -1 while active
  std::vector<std::string> links;  // capacity tokens along the path
  std::vector<std::string> containers;
  bool blocked = false;
};

struct PathResult {
  bool reachable = false;
  int hops = 0;
  std::vector<std::string> bridges;  // OVS bridge keys "cid/name"
  std::vector<std::string> links;
  std::vector<std::string> containers;
};

struct Faults {
  int fail_create_after = -1;
  int fail_start_after = -1;
  int fail_veth_after = -1;
  bool reject_limits = false;
};

class World {
 public:
  explicit World(uint64_t seed);

  // -- containers ---------------------------------------------------------
  std::string create_container(const std::string &name, const std::string &image,
                               const std::vector<std::string> &cmd,
                               const std::vector<std::string> &env,
                               const std::map<std::string, std::string> &labels,
                               int64_t nano_cpus, int64_t memory_bytes);
  void start_container(const std::string &ref);
  void stop_container(const std::string &ref);
  void pause_container(const std::string &ref);
  void unpause_container(const std::string &ref);
  void remove_container(const std::string &ref, bool force);
  std::string inspect_container(const std::string &ref);       // json text
  std::string stats_container(const std::string &ref);         // json text
  std::string list_containers(bool all, const std::string &filters_json);

  // -- exec ---------------------------------------------------------------
  std::string create_exec(const std::string &ref, const std::vector<std::string> &cmd);
  // Launches the interpreter thread; frames are pulled via the session.
  std::shared_ptr<ExecSession> start_exec(const std::string &exec_id);
  std::string inspect_exec(const std::string &exec_id);  // json text

  // -- net primitives (the sim side of the fabric seam) -------------------
  void net_create_veth(const std::string &ns_a, const std::string &name_a,
                       const std::string &ns_b, const std::string &name_b);
  void net_create_bridge(const std::string &ns, const std::string &name);
  void net_enslave(const std::string &ns, const std::string &ifname, const std::string &master);
  void net_add_addr(const std::string &ns, const std::string &ifname, const std::string &cidr);
  void net_set_state(const std::string &ns, const std::string &ifname, bool up);
  void net_set_mac(const std::string &ns, const std::string &ifname, const std::string &mac);
  void net_rename(const std::string &ns, const std::string &old_name, const std::string &new_name);
  void net_create_tunnel(const std::string &ns, const std::string &name, const std::string &kind,
                         uint32_t key, const std::string &local, const std::string &remote);
  void net_delete(const std::string &ns, const std::string &ifname);
  std::vector<std::string> net_list(const std::string &ns);
  std::string resolve_ns(const std::string &container_ref);

  // -- ovs (the sim side of the switch-control seam) ----------------------
  void ovs_create_bridge(const std::string &container_ref, const std::string &name,
                         const std::string &fail_mode);
  void ovs_add_port(const std::string &container_ref, const std::string &bridge,
                    const std::string &ifname);
  void ovs_set_controller(const std::string &container_ref, const std::string &bridge,
                          const std::string &target);
  bool ovs_connected(const std::string &container_ref, const std::string &bridge);
  bool ovs_bridge_exists(const std::string &container_ref, const std::string &bridge);

  bool probe_tcp(const std::string &ip, int port);

  void set_fault(const std::string &what, int count);
  void set_reject_limits(bool v);
  std::string debug_state();  // json text

  uint64_t seed() const { return seed_; }

 private:
  friend struct Interp;

  double now() const;
  double gauss(double mean, double stddev);
  std::string fresh_id(size_t bytes);

  Container &find_container(const std::string &ref);          // throws 404
  Container *find_container_ptr(const std::string &ref);
  Iface *find_iface(const std::string &ns, const std::string &name);
  Iface &want_iface(const std::string &ns, const std::string &name);
  void want_absent(const std::string &ns, const std::string &name);
  void check_ifname(const std::string &name);
  void delete_iface_locked(const std::string &ns, const std::string &name);
  void drop_namespace(const std::string &ns);
  void advance_cpu(Container &c);
  void set_extra_cpu(Container &c, double delta);
  double mem_mb(const Container &c);
  bool bridge_forwards(const OvsBridge &b);
  bool controller_ready(const Container &c);
  const Container *controller_for_target(const std::string &target);
  int connected_switches();

  PathResult find_path(const std::string &src_container, const std::string &src_ip_hint,
                       const std::string &dst_ip);
  // Per-direction reactive flow setup cost in ms; installs entries.
  double flow_setup_ms(const PathResult &path, const std::string &src_ip,
                       const std::string &dst_ip);
  bool flows_installed(const PathResult &path, const std::string &src_ip,
                       const std::string &dst_ip);
  void touch_flows(const PathResult &path, const std::string &src_ip, const std::string &dst_ip);

  double flow_rate_at(const UdpFlow &f, double t);  // Mbps after sharing
  double flow_bytes_between(const UdpFlow &f, double t0, double t1);

  void run_exec(std::shared_ptr<ExecSession> s);

  mutable std::mutex mu_;
  uint64_t seed_;
  std::mt19937_64 rng_;
  double epoch_;
  int next_pid_ = 12000;
  uint64_t next_flow_id_ = 1;

  std::vector<std::unique_ptr<Container>> containers_;
  std::map<std::string, Iface> ifaces_;  // key ns + "/" + name
  std::map<std::string, OvsBridge> ovs_;  // key cid + "/" + name
  std::map<std::string, std::shared_ptr<ExecSession>> execs_;
  std::vector<UdpFlow> flows_;
  Faults faults_;
  double onos_boot_s_ = 1.5;
  double capacity_mbps_ = 6600.0;
  double idle_timeout_s_ = 10.0;
};

std::set<std::string> known_images();

}  // namespace vemul::sim
