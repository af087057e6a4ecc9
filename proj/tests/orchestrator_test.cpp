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

#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <vector>

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

struct OrchFixture {
  sim::SimEngine server;
  EngineClient client;
  SimNetBackend backend;

  OrchFixture()
      : server(sock_path(), 11), client(server.socket_path()), backend(client) {
    REQUIRE(server.start());
    client.connect();
  }
  ~OrchFixture() { server.stop(); }

  // The controller image fakes a long boot; shrink it before the world
  // reads its environment.
  static std::string sock_path() {
    ::setenv("VEMUL_SIM_ONOS_BOOT_MS", "200", 1);
    return "/tmp/vemul-orch-test-" + std::to_string(::getpid()) + ".sock";
  }

  EmulationOptions opts(const std::string &run_id) {
    EmulationOptions o;
    o.socket = server.socket_path();
    o.run_id = run_id;
    return o;
  }

  void inject(const std::string &body) { client.http_post("/vemul-sim/fault", body); }

  std::vector<std::string> root_ifaces() { return backend.list_ifnames(kRootNsToken); }
};

LinkSpec veth(const std::string &name, const std::string &a, const std::string &b) {
  LinkSpec l;
  l.name = name;
  l.endpoint_a = a;
  l.endpoint_b = b;
  return l;
}

NodeSpec host(const std::string &name, const std::string &ip) {
  NodeSpec n;
  n.name = name;
  if (!ip.empty()) n.ip_config = IpConfig{ip, 24};
  return n;
}

// Two hosts, one switch, one controller: the smallest world that exercises
// every node kind.
Topology fig_small() {
  Topology t;
  t.add_node(host("h1", "10.0.0.1"));
  t.add_node(host("h2", "10.0.0.2"));
  NodeSpec sw;
  sw.name = "sw1";
  sw.kind = NodeKind::WhiteboxSwitch;
  t.add_node(sw);
  NodeSpec ctl;
  ctl.name = "ctl1";
  ctl.kind = NodeKind::Controller;
  t.add_node(ctl);
  t.add_link(veth("l1", "h1", "sw1"));
  t.add_link(veth("l2", "h2", "sw1"));
  t.set_runnable(true);
  return t;
}

Topology host_pair(const std::string &a, const std::string &b, const std::string &net) {
  Topology t;
  t.add_node(host(a, net + ".1"));
  t.add_node(host(b, net + ".2"));
  t.add_link(veth("p0", a, b));
  t.set_runnable(true);
  return t;
}

int ping_rc(Emulation &emu, const std::string &src, const std::string &dst_ip) {
  auto r = emu.engine().exec_in_node(emu.handle(src),
                                     {"ping", "-c", "2", "-i", "0.2", dst_ip}, 30000);
  return r.exit_code;
}

}  // namespace

TEST_CASE("construction validates mode and engine reachability") {
  OrchFixture fx;

  auto o = fx.opts("orch-m");
  o.fabric_mode = "bogus";
  CHECK(thrown_code([&] { Emulation e(o); }) == Errc::invalid_spec);

  EmulationOptions dead;
  dead.socket = "/tmp/vemul-no-engine-here.sock";
  CHECK(thrown_code([&] { Emulation e(dead); }) == Errc::engine_unreachable);

  Emulation emu(fx.opts("orch-m"));
  CHECK(emu.sim());
  CHECK(emu.run_id() == "orch-m");
  CHECK(emu.phase() == Phase::down);
}

TEST_CASE("up binds the topology and down clears every trace") {
  OrchFixture fx;
  Emulation emu(fx.opts("orch-a"));

  emu.up(fig_small());
  CHECK(emu.phase() == Phase::up);
  CHECK(emu.handles().size() == 4);
  CHECK(emu.links().size() == 2);

  // Bus addresses follow topology order.
  CHECK(emu.handle("h1").mgmt_ip == "172.31.0.2");
  CHECK(emu.handle("h2").mgmt_ip == "172.31.0.3");
  CHECK(emu.handle("sw1").mgmt_ip == "172.31.0.4");
  CHECK(emu.handle("ctl1").mgmt_ip == "172.31.0.5");
  CHECK(emu.bus().link_name == "mgmt");
  CHECK(emu.bus().bindings.size() == 4);
  for (const auto &[name, h] : emu.handles()) CHECK(h.state == NodeState::Running);
  CHECK(emu.engine().list_managed("orch-a").size() == 4);
  CHECK(emu.switch_control().bridge_exists(emu.handle("sw1"), "br_oper0"));

  // The whitebox forwards only once its controller is attached.
  emu.set_controller("sw1", emu.get_controller_endpoint("ctl1"));
  CHECK(ping_rc(emu, "h1", "10.0.0.2") == 0);

  CHECK(thrown_code([&] { emu.handle("zzz"); }) == Errc::no_such_node);
  CHECK(thrown_code([&] { emu.link("zzz"); }) == Errc::unknown_node);

  emu.down();
  CHECK(emu.phase() == Phase::down);
  CHECK(emu.handles().empty());
  CHECK(emu.links().empty());
  CHECK(emu.last_residue().empty());
  CHECK(emu.engine().list_managed("orch-a").empty());
  CHECK(fx.root_ifaces().empty());
  emu.down();
  CHECK(emu.phase() == Phase::down);
}

TEST_CASE("a declared bus link names the management bus") {
  OrchFixture fx;
  Topology t = host_pair("h1", "h2", "10.3.0");
  LinkSpec bus;
  bus.name = "ctlbus";
  bus.topology_class = LinkClass::Bus;
  bus.members = {"h1", "h2"};
  t.add_link(bus);

  Emulation emu(fx.opts("orch-b"));
  emu.up(t);
  CHECK(emu.bus().link_name == "ctlbus");
  CHECK(emu.links().count("ctlbus") == 0);
  CHECK(emu.links().count("p0") == 1);
  emu.down();

  LinkSpec bus2 = bus;
  bus2.name = "ctlbus2";
  t.add_link(bus2);
  CHECK(thrown_code([&] { emu.up(t); }) == Errc::invalid_spec);
  CHECK(emu.phase() == Phase::down);
}

TEST_CASE("up refuses bad preconditions") {
  OrchFixture fx;
  Emulation emu(fx.opts("orch-c"));

  Topology broken;
  broken.add_node(host("h1", "10.0.0.1"));
  broken.add_node(host("h2", "10.0.0.2"));
  broken.set_runnable(true);
  try {
    emu.up(broken);
    FAIL("expected precondition-failed");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::precondition_failed);
    CHECK(std::string(e.what()).find("connectivity") != std::string::npos);
  }
  CHECK(emu.phase() == Phase::down);
  CHECK(emu.engine().list_managed("orch-c").empty());

  emu.up(host_pair("h1", "h2", "10.3.0"));
  CHECK(thrown_code([&] { emu.up(host_pair("h3", "h4", "10.4.0")); }) ==
        Errc::precondition_failed);
  emu.down();

  emu.up(host_pair("h1", "h2", "10.3.0"));
  CHECK(emu.phase() == Phase::up);
  emu.down();
}

TEST_CASE("bring-up failures roll back to a zero footprint") {
  OrchFixture fx;
  Emulation emu(fx.opts("orch-r"));

  SUBCASE("container creation fails") {
    fx.inject(R"({"op":"fail-after","what":"create","count":2})");
    try {
      emu.up(fig_small());
      FAIL("expected the injected fault");
    } catch (const Error &e) {
      CHECK(e.code() == Errc::internal);
      CHECK(std::string(e.what()).find("node sw1") != std::string::npos);
    }
  }

  SUBCASE("container start fails") {
    fx.inject(R"({"op":"fail-after","what":"start","count":2})");
    CHECK(thrown_code([&] { emu.up(fig_small()); }) == Errc::internal);
  }

  SUBCASE("link plumbing fails after the bus is up") {
    // Four bus legs consume the first four veth calls; the fault lands on
    // the second data link.
    fx.inject(R"({"op":"fail-after","what":"veth","count":5})");
    try {
      emu.up(fig_small());
      FAIL("expected the injected fault");
    } catch (const Error &e) {
      CHECK(e.code() == Errc::internal);
      CHECK(std::string(e.what()).find("link l2") != std::string::npos);
    }
  }

  CHECK(emu.phase() == Phase::down);
  CHECK(emu.handles().empty());
  CHECK(emu.last_residue().empty());
  CHECK(emu.engine().list_managed("orch-r").empty());
  CHECK(fx.root_ifaces().empty());

  emu.up(fig_small());
  CHECK(emu.phase() == Phase::up);
  emu.set_controller("sw1", emu.get_controller_endpoint("ctl1"));
  CHECK(ping_rc(emu, "h1", "10.0.0.2") == 0);
  emu.down();
}

TEST_CASE("controller endpoint lookup and switch attachment") {
  OrchFixture fx;
  auto o = fx.opts("orch-k");
  o.controller_connect_timeout_ms = 1200;
  Emulation emu(o);
  emu.up(fig_small());

  ControllerTarget target = emu.get_controller_endpoint("ctl1");
  CHECK(target.render() == "tcp:172.31.0.5:6653");
  CHECK(thrown_code([&] { emu.get_controller_endpoint("h1"); }) == Errc::not_a_controller);
  CHECK(thrown_code([&] { emu.get_controller_endpoint("nope"); }) == Errc::no_such_node);

  CHECK(thrown_code([&] { emu.set_controller("h1", target); }) == Errc::no_such_switch);
  CHECK(thrown_code([&] { emu.set_controller("ghost", target); }) == Errc::no_such_switch);
  CHECK(thrown_code([&] { emu.set_controller("sw1", target, "br_none"); }) ==
        Errc::no_such_bridge);

  emu.set_controller("sw1", target);
  CHECK(emu.switch_control().controller_connected(emu.handle("sw1"), "br_oper0"));

  ControllerTarget nowhere{"tcp", "172.31.0.99", 6653};
  CHECK(thrown_code([&] { emu.set_controller("sw1", nowhere); }) ==
        Errc::controller_connect_timeout);
  emu.down();
}

TEST_CASE("live mutation while up") {
  OrchFixture fx;
  Emulation emu(fx.opts("orch-l"));
  emu.up(fig_small());
  emu.set_controller("sw1", emu.get_controller_endpoint("ctl1"));

  NodeHandle h3 = emu.add_node_live(host("h3", "10.0.0.3"));
  CHECK(h3.mgmt_ip == "172.31.0.6");
  CHECK(emu.handles().size() == 5);
  CHECK(emu.topology().has_node("h3"));

  emu.add_link_live(veth("l3", "h3", "sw1"));
  CHECK(emu.links().count("l3") == 1);
  CHECK(ping_rc(emu, "h1", "10.0.0.3") == 0);

  CHECK(thrown_code([&] { emu.add_node_live(host("h3", "10.0.0.9")); }) ==
        Errc::duplicate_name);
  CHECK(emu.handles().size() == 5);

  NodeSpec ghost = host("h4", "10.0.0.4");
  ghost.image = "vemul/ghost:latest";
  CHECK(thrown_code([&] { emu.add_node_live(ghost); }) == Errc::image_not_found);
  CHECK(emu.handles().size() == 5);
  CHECK(!emu.topology().has_node("h4"));
  CHECK(emu.engine().list_managed("orch-l").size() == 5);

  LinkSpec busy;
  busy.name = "b1";
  busy.topology_class = LinkClass::Bus;
  busy.members = {"h1", "h2"};
  CHECK(thrown_code([&] { emu.add_link_live(busy); }) == Errc::invalid_spec);
  CHECK(thrown_code([&] { emu.add_link_live(veth("l9", "h1", "nope")); }) ==
        Errc::unknown_endpoint);

  emu.set_link_state("l1", false);
  CHECK(ping_rc(emu, "h1", "10.0.0.2") != 0);
  emu.set_link_state("l1", true);
  CHECK(ping_rc(emu, "h1", "10.0.0.2") == 0);

  emu.remove_link_live("l2");
  CHECK(emu.links().count("l2") == 0);
  CHECK(ping_rc(emu, "h1", "10.0.0.2") != 0);
  CHECK(thrown_code([&] { emu.remove_link_live("l2"); }) == Errc::unknown_node);

  emu.remove_node_live("h2");
  CHECK(emu.handles().count("h2") == 0);
  CHECK(!emu.topology().has_node("h2"));
  CHECK(emu.engine().list_managed("orch-l").size() == 4);
  CHECK(thrown_code([&] { emu.remove_node_live("h2"); }) == Errc::unknown_node);

  emu.down();
  CHECK(emu.engine().list_managed("orch-l").empty());
  CHECK(fx.root_ifaces().empty());
}

TEST_CASE("mutations demand the up phase") {
  OrchFixture fx;
  Emulation emu(fx.opts("orch-p"));

  CHECK(thrown_code([&] { emu.add_node_live(host("h9", "10.0.0.9")); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { emu.add_link_live(veth("l9", "a", "b")); }) ==
        Errc::precondition_failed);
  CHECK(thrown_code([&] { emu.remove_node_live("h1"); }) == Errc::precondition_failed);
  CHECK(thrown_code([&] { emu.remove_link_live("l1"); }) == Errc::precondition_failed);
  CHECK(thrown_code([&] { emu.get_controller_endpoint("ctl1"); }) == Errc::no_such_node);
}

TEST_CASE("run ids isolate concurrent emulations") {
  OrchFixture fx;
  Emulation e1(fx.opts("orch-i1"));
  Emulation e2(fx.opts("orch-i2"));

  e1.up(host_pair("a1", "a2", "10.1.0"));
  e2.up(host_pair("b1", "b2", "10.2.0"));

  CHECK(e1.engine().list_managed("orch-i1").size() == 2);
  CHECK(e2.engine().list_managed("orch-i2").size() == 2);
  CHECK(e1.bus().bridge != e2.bus().bridge);
  CHECK(ping_rc(e1, "a1", "10.1.0.2") == 0);
  CHECK(ping_rc(e2, "b1", "10.2.0.2") == 0);

  e1.down();
  CHECK(e2.engine().list_managed("orch-i2").size() == 2);
  CHECK(ping_rc(e2, "b1", "10.2.0.2") == 0);
  // Only e2's bridge and two legs remain in the root namespace.
  CHECK(fx.root_ifaces().size() == 3);

  e2.down();
  CHECK(fx.root_ifaces().empty());
}
