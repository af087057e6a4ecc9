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

#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vemul/engine.hpp"
#include "vemul/sim/engine.hpp"

using namespace vemul;
using nlohmann::json;

namespace {

struct Fixture {
  sim::SimEngine server;
  EngineClient client;

  Fixture()
      : server("/tmp/vemul-runtime-test-" + std::to_string(::getpid()) + ".sock", 99),
        client(server.socket_path()) {
    REQUIRE(server.start());
    client.connect();
  }
  ~Fixture() { server.stop(); }

  NodeSpec host_spec(const std::string &name) {
    NodeSpec s;
    s.name = name;
    s.kind = NodeKind::Host;
    return s;
  }

  void inject(const std::string &body) { client.http_post("/vemul-sim/fault", body); }
};

}  // namespace

TEST_CASE("connect learns the api version and recognizes the sim") {
  Fixture fx;
  CHECK(fx.client.connected());
  CHECK(fx.client.api_version() == "1.43");
  CHECK(fx.client.is_sim());
}

TEST_CASE("unreachable socket raises engine-unreachable") {
  EngineClient dead("/tmp/vemul-no-engine-here.sock");
  try {
    dead.connect();
    FAIL("expected engine-unreachable");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::engine_unreachable);
  }
}

TEST_CASE("create_container yields a running labeled handle") {
  Fixture fx;
  NodeHandle h = fx.client.create_container(fx.host_spec("sw1"), "run-a");
  CHECK(h.state == NodeState::Running);
  CHECK(h.container_id.size() == 64);
  CHECK(h.node_name == "sw1");

  json ins = json::parse(fx.client.inspect_raw(h));
  CHECK(ins["Config"]["Hostname"] == "sw1");
  CHECK(ins["Config"]["Labels"][kOwnerLabel] == "run-a");
  CHECK(ins["Config"]["Labels"][kNodeLabel] == "sw1");

  auto mine = fx.client.list_managed("run-a");
  REQUIRE(mine.size() == 1);
  CHECK(mine[0].node_name == "sw1");
  CHECK(mine[0].state == NodeState::Running);
  CHECK(fx.client.list_managed("run-b").empty());

  CHECK(fx.client.inspect_pid(h) > 0);
  fx.client.destroy_container(h);
}

TEST_CASE("resource limits are applied and readable back") {
  Fixture fx;
  NodeSpec s = fx.host_spec("limited");
  s.limits = ResourceLimits{0.5, uint64_t{64} * 1024 * 1024};
  NodeHandle h = fx.client.create_container(s, "run-lim");
  json ins = json::parse(fx.client.inspect_raw(h));
  CHECK(ins["HostConfig"]["NanoCpus"].get<int64_t>() == 500000000);
  CHECK(ins["HostConfig"]["Memory"].get<int64_t>() == 64 * 1024 * 1024);
  fx.client.destroy_container(h);
}

TEST_CASE("engine image and name errors surface typed") {
  Fixture fx;
  NodeSpec s = fx.host_spec("ghost");
  s.image = "does/not:exist";
  try {
    fx.client.create_container(s, "run-x");
    FAIL("expected image-not-found");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::image_not_found);
  }

  NodeHandle h = fx.client.create_container(fx.host_spec("taken"), "run-x");
  try {
    fx.client.create_container(fx.host_spec("taken"), "run-x");
    FAIL("expected name-conflict");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::name_conflict);
  }
  fx.client.destroy_container(h);
}

TEST_CASE("limit rejection maps to limit-rejected") {
  Fixture fx;
  fx.inject(R"({"op":"reject-limits","value":true})");
  NodeSpec s = fx.host_spec("greedy");
  s.limits = ResourceLimits{2.0, {}};
  try {
    fx.client.create_container(s, "run-l");
    FAIL("expected limit-rejected");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::limit_rejected);
  }
  fx.inject(R"({"op":"reject-limits","value":false})");
}

TEST_CASE("destroy is idempotent and survives external removal") {
  Fixture fx;
  NodeHandle h = fx.client.create_container(fx.host_spec("d1"), "run-d");
  fx.client.destroy_container(h);
  CHECK(h.state == NodeState::Removed);
  fx.client.destroy_container(h);  // second call is a no-op
  CHECK(fx.client.list_managed("run-d").empty());

  NodeHandle h2 = fx.client.create_container(fx.host_spec("d2"), "run-d");
  // Someone else removes it behind our back.
  httplib::Client raw(fx.server.socket_path());
  raw.set_address_family(AF_UNIX);
  auto res = raw.Delete("/v1.43/containers/" + h2.container_id + "?force=true");
  REQUIRE(res);
  REQUIRE(res->status == 204);
  fx.client.destroy_container(h2);  // tolerated
  CHECK(h2.state == NodeState::Removed);
}

TEST_CASE("exec captures streams and exit codes") {
  Fixture fx;
  NodeHandle h = fx.client.create_container(fx.host_spec("x1"), "run-e");

  ExecResult r = fx.client.exec_in_node(h, {"echo", "over", "the", "wire"}, 5000);
  CHECK(r.exit_code == 0);
  CHECK(r.out == "over the wire\n");
  CHECK(r.err.empty());

  CHECK(fx.client.exec_in_node(h, {"false"}, 5000).exit_code == 1);

  r = fx.client.exec_in_node(h, {"no-such-tool"}, 5000);
  CHECK(r.exit_code == 127);
  CHECK(r.err.find("executable file not found") != std::string::npos);

  fx.client.destroy_container(h);
}

TEST_CASE("exec on a non-running node is refused") {
  Fixture fx;
  NodeHandle h = fx.client.create_container(fx.host_spec("gone"), "run-g");
  fx.client.destroy_container(h);
  try {
    fx.client.exec_in_node(h, {"true"}, 1000);
    FAIL("expected node-not-running");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::node_not_running);
  }
}

TEST_CASE("exec timeout carries partial output") {
  Fixture fx;
  NodeHandle h = fx.client.create_container(fx.host_spec("slow"), "run-t");
  auto t0 = std::chrono::steady_clock::now();
  try {
    fx.client.exec_in_node(h, {"sh", "-c", "echo early; sleep 30"}, 700);
    FAIL("expected timeout");
  } catch (const ExecTimeout &t) {
    CHECK(t.partial.out.find("early") != std::string::npos);
  }
  auto waited =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  CHECK(waited.count() < 10000);  // killed at the deadline, not at command end
  fx.client.destroy_container(h);
}

TEST_CASE("pause and resume gate exec and flip handle state") {
  Fixture fx;
  NodeHandle h = fx.client.create_container(fx.host_spec("p1"), "run-p");
  fx.client.pause_node(h);
  CHECK(h.state == NodeState::Paused);
  try {
    NodeHandle running_view = h;  // pretend a caller with a stale state
    running_view.state = NodeState::Running;
    fx.client.exec_in_node(running_view, {"true"}, 1000);
    FAIL("expected refusal while paused");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::node_not_running);
  }
  fx.client.resume_node(h);
  CHECK(h.state == NodeState::Running);
  CHECK(fx.client.exec_in_node(h, {"true"}, 1000).exit_code == 0);
  fx.client.destroy_container(h);
}

TEST_CASE("stats snapshots are monotonic and nonnegative") {
  Fixture fx;
  NodeHandle h = fx.client.create_container(fx.host_spec("m1"), "run-s");
  StatSnapshot a = fx.client.sample_stats(h);
  CHECK(a.cpu_percent >= 0);
  CHECK(a.memory_bytes > 0);
  std::this_thread::sleep_for(std::chrono::milliseconds(120));
  StatSnapshot b = fx.client.sample_stats(h);
  CHECK(b.timestamp_ms > a.timestamp_ms);

  auto [cpu1, mem1] = fx.client.read_counters(h);
  std::this_thread::sleep_for(std::chrono::milliseconds(120));
  auto [cpu2, mem2] = fx.client.read_counters(h);
  CHECK(cpu2 >= cpu1);
  CHECK(mem2 > 0);
  fx.client.destroy_container(h);
}

TEST_CASE("spin raises measured cpu usage") {
  Fixture fx;
  NodeHandle h = fx.client.create_container(fx.host_spec("busy"), "run-b");
  auto [cpu_a, mem_a] = fx.client.read_counters(h);
  (void)mem_a;
  std::thread burner([&] {
    try {
      fx.client.exec_in_node(h, {"spin", "1"}, 5000);
    } catch (const Error &) {
    }
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(800));
  auto [cpu_b, mem_b] = fx.client.read_counters(h);
  (void)mem_b;
  burner.join();
  // A spinning exec burns roughly a core; idle hosts burn well under 1%.
  CHECK(cpu_b - cpu_a > 0.3e9);
  fx.client.destroy_container(h);
}
