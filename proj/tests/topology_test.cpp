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

#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <set>

#include "vemul/errors.hpp"
#include "vemul/topology.hpp"
#include "vemul/topology_io.hpp"

using namespace vemul;

namespace {

const int kSweepSizes[] = {9, 17, 33, 65, 129, 257, 513};

int switch_links(const Topology &t) {
  int n = 0;
  for (const auto &l : t.links())
    if (t.find_node(l.endpoint_a)->kind == NodeKind::WhiteboxSwitch &&
        t.find_node(l.endpoint_b)->kind == NodeKind::WhiteboxSwitch)
      ++n;
  return n;
}

// Hop count between two switches over inter-switch links only.
int switch_distance(const Topology &t, const std::string &from, const std::string &to) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto &l : t.links()) {
    if (t.find_node(l.endpoint_a)->kind != NodeKind::WhiteboxSwitch) continue;
    if (t.find_node(l.endpoint_b)->kind != NodeKind::WhiteboxSwitch) continue;
    adj[l.endpoint_a].push_back(l.endpoint_b);
    adj[l.endpoint_b].push_back(l.endpoint_a);
  }
  std::map<std::string, int> dist{{from, 0}};
  std::deque<std::string> q{from};
  while (!q.empty()) {
    auto cur = q.front();
    q.pop_front();
    for (const auto &nb : adj[cur])
      if (!dist.count(nb)) {
        dist[nb] = dist[cur] + 1;
        q.push_back(nb);
      }
  }
  return dist.count(to) ? dist[to] : -1;
}

std::string host_switch(const Topology &t, const std::string &host) {
  for (const auto &l : t.links()) {
    if (l.endpoint_a == host) return l.endpoint_b;
    if (l.endpoint_b == host) return l.endpoint_a;
  }
  return "";
}

}  // namespace

TEST_CASE("star generator counts across the sweep sizes") {
  for (int s : kSweepSizes) {
    CAPTURE(s);
    Topology t = generate_star(s);
    CHECK(t.nodes_of_kind(NodeKind::WhiteboxSwitch).size() == static_cast<size_t>(s));
    CHECK(t.nodes_of_kind(NodeKind::Host).size() == 2);
    CHECK(switch_links(t) == s - 1);
    CHECK(t.links().size() == static_cast<size_t>(s + 1));
    CHECK(t.validate().empty());
  }
}

TEST_CASE("tree generator counts across the sweep sizes") {
  for (int s : kSweepSizes) {
    CAPTURE(s);
    Topology t = generate_tree(s);
    CHECK(t.nodes_of_kind(NodeKind::WhiteboxSwitch).size() == static_cast<size_t>(s));
    CHECK(switch_links(t) == s - 1);
    CHECK(t.validate().empty());
  }
}

TEST_CASE("mesh generator counts") {
  CHECK(switch_links(generate_mesh(3)) == 3);
  CHECK(switch_links(generate_mesh(9)) == 36);
  CHECK(switch_links(generate_mesh(17)) == 136);
  CHECK(generate_mesh(9).nodes().size() == 11);
  CHECK(generate_mesh(9).validate().empty());
}

TEST_CASE("tree of 9 switches fills breadth first") {
  Topology t = generate_tree(9);
  // Depth from sw1 over inter-switch links; heap layout gives 1,2,4,2 per level.
  std::map<int, int> per_level;
  for (int i = 1; i <= 9; ++i)
    per_level[switch_distance(t, "sw1", "sw" + std::to_string(i))]++;
  CHECK(per_level[0] == 1);
  CHECK(per_level[1] == 2);
  CHECK(per_level[2] == 4);
  CHECK(per_level[3] == 2);
}

TEST_CASE("probe hosts sit at maximum switch distance") {
  for (auto gen : {generate_star, generate_tree, generate_mesh}) {
    Topology t = gen(9);
    std::string sa = host_switch(t, "h1"), sb = host_switch(t, "h2");
    REQUIRE(!sa.empty());
    REQUIRE(!sb.empty());
    CHECK(sa != sb);
    int d = switch_distance(t, sa, sb);
    int best = 0;
    for (int i = 1; i <= 9; ++i)
      for (int j = i + 1; j <= 9; ++j)
        best = std::max(best,
                        switch_distance(t, "sw" + std::to_string(i), "sw" + std::to_string(j)));
    CHECK(d == best);
  }
}

TEST_CASE("hosts get Fig. 6 style addresses in creation order") {
  Topology t = generate_star(9);
  REQUIRE(t.find_node("h1")->ip_config.has_value());
  CHECK(t.find_node("h1")->ip_config->address == "10.0.0.1");
  CHECK(t.find_node("h2")->ip_config->address == "10.0.0.2");
  CHECK(t.find_node("h1")->ip_config->prefix_len == 24);
}

TEST_CASE("generators are deterministic") {
  CHECK(generate_star(17) == generate_star(17));
  CHECK(generate_tree(33) == generate_tree(33));
  CHECK(generate_mesh(9) == generate_mesh(9));
  CHECK(generate_fidelity_tree() == generate_fidelity_tree());
}

TEST_CASE("generators reject sizes below 2") {
  CHECK_THROWS_AS(generate_star(1), Error);
  CHECK_THROWS_AS(generate_tree(0), Error);
  CHECK_THROWS_AS(generate_mesh(-5), Error);
  try {
    generate_star(1);
  } catch (const Error &e) {
    CHECK(e.code() == Errc::size_too_small);
  }
}

TEST_CASE("fidelity tree shape") {
  Topology t = generate_fidelity_tree();
  CHECK(t.nodes_of_kind(NodeKind::WhiteboxSwitch).size() == 5);
  CHECK(t.nodes_of_kind(NodeKind::Host).size() == 16);
  CHECK(t.links().size() == 20);
  CHECK(t.validate().empty());
  std::string e1 = host_switch(t, "h1"), e16 = host_switch(t, "h16");
  CHECK(e1 != e16);
  CHECK(e1 != "core1");
  CHECK(e16 != "core1");
  CHECK(t.find_node("h1")->role == HostRole::Client);
  CHECK(t.find_node("h16")->role == HostRole::Server);
}

TEST_CASE("add_node rejects bad specs without mutating") {
  Topology t;
  NodeSpec n;
  n.name = "a";
  t.add_node(n);

  CHECK_THROWS_AS(t.add_node(n), Error);  // duplicate

  NodeSpec sw;
  sw.name = "s";
  sw.kind = NodeKind::WhiteboxSwitch;
  sw.ip_config = IpConfig{"10.0.0.9", 24};
  CHECK_THROWS_AS(t.add_node(sw), Error);  // ip on a switch

  NodeSpec bad_ip;
  bad_ip.name = "b";
  bad_ip.ip_config = IpConfig{"999.1.1.1", 24};
  CHECK_THROWS_AS(t.add_node(bad_ip), Error);

  NodeSpec bad_quota;
  bad_quota.name = "c";
  bad_quota.limits = ResourceLimits{-1.0, {}};
  CHECK_THROWS_AS(t.add_node(bad_quota), Error);

  CHECK(t.nodes().size() == 1);  // all-or-nothing
}

TEST_CASE("add_link rejects bad specs without mutating") {
  Topology t;
  NodeSpec n;
  n.name = "a";
  t.add_node(n);
  n.name = "b";
  t.add_node(n);
  n.name = "c";
  t.add_node(n);

  LinkSpec self;
  self.name = "l0";
  self.endpoint_a = "a";
  self.endpoint_b = "a";
  CHECK_THROWS_AS(t.add_link(self), Error);

  LinkSpec ghost;
  ghost.name = "l0";
  ghost.endpoint_a = "a";
  ghost.endpoint_b = "zz";
  try {
    t.add_link(ghost);
    FAIL("expected unknown endpoint");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::unknown_endpoint);
  }

  LinkSpec keyless_tunnel;
  keyless_tunnel.name = "l0";
  keyless_tunnel.endpoint_a = "a";
  keyless_tunnel.endpoint_b = "b";
  keyless_tunnel.model = LinkModel::GreTunnel;
  CHECK_THROWS_AS(t.add_link(keyless_tunnel), Error);  // tunnel without key

  LinkSpec ok;
  ok.name = "l1";
  ok.endpoint_a = "a";
  ok.endpoint_b = "b";
  ok.model = LinkModel::VxlanTunnel;
  ok.tunnel_key = 7;
  t.add_link(ok);

  LinkSpec dup_key;
  dup_key.name = "l2";
  dup_key.endpoint_a = "b";
  dup_key.endpoint_b = "c";
  dup_key.model = LinkModel::GreTunnel;
  dup_key.tunnel_key = 7;
  try {
    t.add_link(dup_key);
    FAIL("expected duplicate tunnel key");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::duplicate_tunnel_key);
  }

  LinkSpec thin_bus;
  thin_bus.name = "bus0";
  thin_bus.topology_class = LinkClass::Bus;
  thin_bus.members = {"a", "a"};
  CHECK_THROWS_AS(t.add_link(thin_bus), Error);  // two, but not distinct

  CHECK(t.links().size() == 1);
}

TEST_CASE("remove_node drops its links and reports them") {
  Topology t = generate_star(5);
  auto dropped = t.remove_node("sw1");  // hub: 4 spoke links die with it
  CHECK(dropped.size() == 4);
  CHECK(!t.has_node("sw1"));
  CHECK(t.links().size() == 2);  // the two host attachments survive
  CHECK(t.find_node("sw2") != nullptr);

  CHECK_THROWS_AS(t.remove_node("nope"), Error);
  try {
    t.remove_node("nope");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::unknown_node);
  }
}

TEST_CASE("remove_link leaves nodes alone") {
  Topology t = generate_star(3);
  size_t nodes_before = t.nodes().size();
  t.remove_link("l1");
  CHECK(t.find_link("l1") == nullptr);
  CHECK(t.nodes().size() == nodes_before);
  CHECK_THROWS_AS(t.remove_link("l1"), Error);
}

TEST_CASE("without_hosts keeps switch fabric only") {
  Topology t = generate_star(9).without_hosts();
  CHECK(t.nodes_of_kind(NodeKind::Host).empty());
  CHECK(t.nodes_of_kind(NodeKind::WhiteboxSwitch).size() == 9);
  CHECK(t.links().size() == 8);
  CHECK(t.validate().empty());
}

TEST_CASE("json round trip preserves the topology") {
  Topology t = generate_tree(9);
  std::string text = topology_to_json_text(t);
  Topology back = topology_from_json_text(text);
  CHECK(back == t);
}

TEST_CASE("file round trip") {
  std::string path = "/tmp/vemul-topo-roundtrip.json";
  Topology t = generate_mesh(5);
  save_topology_file(t, path);
  Topology back = load_topology_file(path);
  CHECK(back == t);
  std::remove(path.c_str());
}

TEST_CASE("loader rejects malformed documents") {
  CHECK_THROWS_AS(topology_from_json_text("not json"), Error);
  try {
    topology_from_json_text(R"({"nodes": [], "surprise": 1})");
    FAIL("expected schema violation");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::schema_violation);
    CHECK(std::string(e.what()).find("surprise") != std::string::npos);
  }
  // ip without mask
  CHECK_THROWS_AS(
      topology_from_json_text(R"({"nodes":[{"name":"h","kind":"host","ip":"10.0.0.1"}]})"),
      Error);
  // unknown kind
  CHECK_THROWS_AS(
      topology_from_json_text(R"({"nodes":[{"name":"h","kind":"router"}]})"), Error);
  // unknown node field
  CHECK_THROWS_AS(
      topology_from_json_text(R"({"nodes":[{"name":"h","kind":"host","mtu":9000}]})"),
      Error);
}

TEST_CASE("loading a missing file is an io failure") {
  try {
    load_topology_file("/tmp/definitely-not-here-874213.json");
    FAIL("expected io failure");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::io_failure);
  }
}

TEST_CASE("validate flags assembled inconsistencies") {
  // validate() double-checks what add_* enforces, for topologies arriving
  // through other construction paths; exercise it via a legal build plus
  // removals that strand a link. remove_node cannot strand links by design,
  // so check the runnable connectivity rule instead.
  Topology t;
  NodeSpec a;
  a.name = "a";
  t.add_node(a);
  NodeSpec b;
  b.name = "b";
  t.add_node(b);
  t.set_runnable(true);
  auto v = t.validate();  // two hosts, no links: disconnected data plane
  REQUIRE(!v.empty());
  CHECK(v[0].field == "connectivity");
}
