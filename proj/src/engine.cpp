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

#include "vemul/engine.hpp"

#include <sys/socket.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vemul/util.hpp"

namespace vemul {

using nlohmann::json;

namespace {

std::string engine_message(const std::string &body) {
  try {
    json j = json::parse(body);
    if (j.contains("message")) return j["message"].get<std::string>();
  } catch (const json::exception &) {
  }
  return body.empty() ? "(no message)" : body;
}

[[noreturn]] void throw_http(int status, const std::string &body, const std::string &context) {
  std::string msg = context + ": " + engine_message(body);
  if (status == 404 && engine_message(body).find("No such image") != std::string::npos)
    throw Error(Errc::image_not_found, msg);
  if (status == 409 && engine_message(body).find("already in use") != std::string::npos)
    throw Error(Errc::name_conflict, msg);
  if (status == 400 && engine_message(body).find("limit") != std::string::npos)
    throw Error(Errc::limit_rejected, msg);
  if (status == 409) throw Error(Errc::invalid_state, msg);
  if (status == 404) throw Error(Errc::no_such_node, msg);
  throw Error(Errc::internal, msg + " (http " + std::to_string(status) + ")");
}

// Incremental decoder for the engine's multiplexed stream framing:
// 8-byte header [type, 0, 0, 0, len_be32] then payload.
struct FrameDecoder {
  std::string buf;
  std::string out, err;

  void feed(const char *data, size_t n) {
    buf.append(data, n);
    while (buf.size() >= 8) {
      uint32_t len = (uint8_t(buf[4]) << 24) | (uint8_t(buf[5]) << 16) | (uint8_t(buf[6]) << 8) |
                     uint8_t(buf[7]);
      if (buf.size() < 8 + len) break;
      int type = uint8_t(buf[0]);
      if (type == 2)
        err.append(buf, 8, len);
      else
        out.append(buf, 8, len);
      buf.erase(0, 8 + len);
    }
  }
};

}  // namespace

std::string to_string(NodeState s) {
  switch (s) {
    case NodeState::Created: return "created";
    case NodeState::Running: return "running";
    case NodeState::Paused: return "paused";
    case NodeState::Removed: return "removed";
  }
  return "?";
}

EngineClient::EngineClient(std::string socket_path) : socket_path_(std::move(socket_path)) {}

std::string EngineClient::default_socket() {
  const char *env = std::getenv("VEMUL_ENGINE_SOCKET");
  if (env && *env) return env;
  return "/var/run/docker.sock";
}

namespace {
httplib::Client make_client(const std::string &socket_path, int timeout_ms = 30000) {
  httplib::Client cli(socket_path);
  cli.set_address_family(AF_UNIX);
  // A dead socket is refused instantly; this only paces a live but busy
  // listener, so give concurrent exec bursts room to queue.
  cli.set_connection_timeout(5, 0);
  cli.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  cli.set_write_timeout(10, 0);
  return cli;
}
}  // namespace

void EngineClient::connect() {
  auto cli = make_client(socket_path_, 5000);
  auto res = cli.Get("/version");
  if (!res || res->status != 200)
    throw Error(Errc::engine_unreachable, "no engine at " + socket_path_);
  try {
    json j = json::parse(res->body);
    api_version_ = j.value("ApiVersion", "1.41");
    is_sim_ = j.contains("Platform") && j["Platform"].value("Name", "") == "vemul-simengine";
  } catch (const json::exception &) {
    throw Error(Errc::engine_unreachable, "bad version payload from " + socket_path_);
  }
}

void EngineClient::ensure_connected() {
  if (!connected()) connect();
}

std::string EngineClient::versioned(const std::string &path) const {
  return "/v" + (api_version_.empty() ? "1.41" : api_version_) + path;
}

std::string EngineClient::http_get(const std::string &path) {
  ensure_connected();
  auto cli = make_client(socket_path_);
  auto res = cli.Get(path);
  if (!res) throw Error(Errc::engine_unreachable, "GET " + path + " failed");
  if (res->status >= 400) throw_http(res->status, res->body, "GET " + path);
  return res->body;
}

std::string EngineClient::http_post(const std::string &path, const std::string &json_body) {
  ensure_connected();
  auto cli = make_client(socket_path_);
  auto res = cli.Post(path, json_body, "application/json");
  if (!res) throw Error(Errc::engine_unreachable, "POST " + path + " failed");
  if (res->status >= 400) throw_http(res->status, res->body, "POST " + path);
  return res->body;
}

NodeHandle EngineClient::create_container(const NodeSpec &spec, const std::string &run_id,
                                          const ImageConfig &images) {
  ensure_connected();
  std::string image = spec.image.empty() ? images.for_kind(spec.kind) : spec.image;
  json body;
  body["Image"] = image;
  body["Hostname"] = spec.name;
  body["Labels"] = {{kOwnerLabel, run_id},
                    {kNodeLabel, spec.name},
                    {"vemul.kind", to_string(spec.kind)}};
  body["HostConfig"] = {{"NetworkMode", "none"}, {"Privileged", true}};
  if (spec.limits) {
    if (spec.limits->cpu_quota)
      body["HostConfig"]["NanoCpus"] = static_cast<int64_t>(*spec.limits->cpu_quota * 1e9);
    if (spec.limits->memory_bytes)
      body["HostConfig"]["Memory"] = static_cast<int64_t>(*spec.limits->memory_bytes);
  }

  auto cli = make_client(socket_path_);
  auto res = cli.Post(versioned("/containers/create?name=" + spec.name), body.dump(),
                      "application/json");
  if (!res) throw Error(Errc::engine_unreachable, "create " + spec.name + " failed");
  if (res->status >= 400) throw_http(res->status, res->body, "create " + spec.name);
  NodeHandle h;
  h.node_name = spec.name;
  h.container_id = json::parse(res->body).at("Id").get<std::string>();
  h.state = NodeState::Created;

  auto start = cli.Post(versioned("/containers/" + h.container_id + "/start"), "", "text/plain");
  if (!start) throw Error(Errc::engine_unreachable, "start " + spec.name + " failed");
  if (start->status >= 400) throw_http(start->status, start->body, "start " + spec.name);
  h.state = NodeState::Running;
  return h;
}

void EngineClient::destroy_container(NodeHandle &handle) {
  ensure_connected();
  if (handle.state == NodeState::Removed) return;
  auto cli = make_client(socket_path_);
  auto res = cli.Delete(versioned("/containers/" + handle.container_id + "?force=1"));
  if (!res) throw Error(Errc::engine_unreachable, "remove " + handle.node_name + " failed");
  if (res->status >= 400 && res->status != 404)
    throw_http(res->status, res->body, "remove " + handle.node_name);
  handle.state = NodeState::Removed;
}

ExecResult EngineClient::exec_in_node(const NodeHandle &handle,
                                      const std::vector<std::string> &argv, int timeout_ms) {
  ensure_connected();
  if (handle.state != NodeState::Running)
    throw Error(Errc::node_not_running, handle.node_name + " is " + to_string(handle.state));

  json create_body;
  create_body["AttachStdout"] = true;
  create_body["AttachStderr"] = true;
  create_body["Cmd"] = argv;
  auto cli = make_client(socket_path_);
  auto created = cli.Post(versioned("/containers/" + handle.container_id + "/exec"),
                          create_body.dump(), "application/json");
  if (!created) throw Error(Errc::engine_unreachable, "exec create failed");
  if (created->status >= 400) {
    if (created->status == 409)
      throw Error(Errc::node_not_running, handle.node_name + ": " + engine_message(created->body));
    throw_http(created->status, created->body, "exec create on " + handle.node_name);
  }
  std::string exec_id = json::parse(created->body).at("Id").get<std::string>();

  FrameDecoder dec;
  int64_t deadline = util::mono_ms() + timeout_ms;
  auto stream_cli = make_client(socket_path_, timeout_ms + 250);

  httplib::Request req;
  req.method = "POST";
  req.path = versioned("/exec/" + exec_id + "/start");
  req.set_header("Content-Type", "application/json");
  req.body = R"({"Detach":false,"Tty":false})";
  bool deadline_hit = false;
  req.content_receiver = [&](const char *data, size_t n, uint64_t, uint64_t) {
    dec.feed(data, n);
    if (util::mono_ms() > deadline) {
      deadline_hit = true;
      return false;
    }
    return true;
  };
  auto res = stream_cli.send(req);

  if (!res || deadline_hit || util::mono_ms() > deadline) {
    if (deadline_hit || (res.error() == httplib::Error::Read && util::mono_ms() >= deadline) ||
        res.error() == httplib::Error::Canceled) {
      ExecResult partial{-1, dec.out, dec.err};
      throw ExecTimeout("exec " + (argv.empty() ? "" : argv[0]) + " on " + handle.node_name +
                            " exceeded " + std::to_string(timeout_ms) + " ms",
                        partial);
    }
    if (!res) throw Error(Errc::engine_unreachable, "exec stream failed");
  }
  if (res->status >= 400) throw_http(res->status, res->body, "exec start on " + handle.node_name);

  auto inspect = cli.Get(versioned("/exec/" + exec_id + "/json"));
  if (!inspect || inspect->status >= 400)
    throw Error(Errc::engine_unreachable, "exec inspect failed");
  int code = json::parse(inspect->body).value("ExitCode", -1);
  return ExecResult{code, dec.out, dec.err};
}

void EngineClient::pause_node(NodeHandle &handle) {
  ensure_connected();
  auto cli = make_client(socket_path_);
  auto res = cli.Post(versioned("/containers/" + handle.container_id + "/pause"), "", "text/plain");
  if (!res) throw Error(Errc::engine_unreachable, "pause failed");
  if (res->status >= 400) {
    if (res->status == 409)
      throw Error(Errc::invalid_state, handle.node_name + ": " + engine_message(res->body));
    throw_http(res->status, res->body, "pause " + handle.node_name);
  }
  handle.state = NodeState::Paused;
}

void EngineClient::resume_node(NodeHandle &handle) {
  ensure_connected();
  auto cli = make_client(socket_path_);
  auto res =
      cli.Post(versioned("/containers/" + handle.container_id + "/unpause"), "", "text/plain");
  if (!res) throw Error(Errc::engine_unreachable, "unpause failed");
  if (res->status >= 400) {
    if (res->status == 409)
      throw Error(Errc::invalid_state, handle.node_name + ": " + engine_message(res->body));
    throw_http(res->status, res->body, "unpause " + handle.node_name);
  }
  handle.state = NodeState::Running;
}

std::pair<double, uint64_t> EngineClient::read_counters(const NodeHandle &handle) {
  ensure_connected();
  auto cli = make_client(socket_path_);
  auto res = cli.Get(versioned("/containers/" + handle.container_id + "/stats?stream=false"));
  if (!res) throw Error(Errc::engine_unreachable, "stats failed");
  if (res->status >= 400) {
    if (res->status == 409)
      throw Error(Errc::node_not_running, handle.node_name + ": " + engine_message(res->body));
    throw_http(res->status, res->body, "stats " + handle.node_name);
  }
  json j = json::parse(res->body);
  double cpu_ns = j["cpu_stats"]["cpu_usage"].value("total_usage", int64_t(0));
  uint64_t mem = j["memory_stats"].value("usage", uint64_t(0));
  return {cpu_ns, mem};
}

StatSnapshot EngineClient::sample_stats(const NodeHandle &handle) {
  if (handle.state != NodeState::Running)
    throw Error(Errc::node_not_running, handle.node_name + " is " + to_string(handle.state));
  auto [ns0, mem0] = read_counters(handle);
  int64_t t0 = util::mono_ms();
  std::this_thread::sleep_for(std::chrono::milliseconds(110));
  auto [ns1, mem1] = read_counters(handle);
  int64_t t1 = util::mono_ms();
  (void)mem0;
  StatSnapshot s;
  s.timestamp_ms = t1;
  s.cpu_percent = t1 > t0 ? std::max(0.0, (ns1 - ns0) / ((t1 - t0) * 1e6) * 100.0) : 0.0;
  s.memory_bytes = mem1;
  return s;
}

std::vector<NodeHandle> EngineClient::list_managed(const std::string &run_id) {
  ensure_connected();
  json filt;
  filt["label"] = json::array();
  filt["label"].push_back(run_id.empty() ? std::string(kOwnerLabel)
                                         : std::string(kOwnerLabel) + "=" + run_id);
  auto cli = make_client(socket_path_);
  httplib::Params params{{"all", "1"}, {"filters", filt.dump()}};
  auto res = cli.Get(versioned("/containers/json") + "?" +
                     httplib::detail::params_to_query_str(params));
  if (!res) throw Error(Errc::engine_unreachable, "list failed");
  if (res->status >= 400) throw_http(res->status, res->body, "list containers");
  std::vector<NodeHandle> out;
  for (const auto &c : json::parse(res->body)) {
    NodeHandle h;
    h.container_id = c.value("Id", "");
    if (c.contains("Labels") && c["Labels"].contains(kNodeLabel))
      h.node_name = c["Labels"][kNodeLabel].get<std::string>();
    else if (c.contains("Names") && !c["Names"].empty())
      h.node_name = c["Names"][0].get<std::string>().substr(1);
    std::string st = c.value("State", "");
    h.state = st == "running"  ? NodeState::Running
              : st == "paused" ? NodeState::Paused
                               : NodeState::Created;
    out.push_back(h);
  }
  return out;
}

std::string EngineClient::inspect_raw(const NodeHandle &handle) {
  return http_get(versioned("/containers/" + handle.container_id + "/json"));
}

int EngineClient::inspect_pid(const NodeHandle &handle) {
  json j = json::parse(inspect_raw(handle));
  return j["State"].value("Pid", 0);
}

}  // namespace vemul
