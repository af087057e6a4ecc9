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

#include "vemul/sim/engine.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>

#include <httplib.h>
#include <json.hpp>

#include "vemul/sim/world.hpp"
#include "vemul/util.hpp"

namespace vemul::sim {

using nlohmann::json;

namespace {

void fail(httplib::Response &res, const ApiError &e) {
  json j;
  j["message"] = e.message;
  res.status = e.status;
  res.set_content(j.dump(), "application/json");
}

void ok_json(httplib::Response &res, const json &j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

json parse_body(const httplib::Request &req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception &) {
    throw ApiError{400, "invalid json body"};
  }
}

std::string frame_header(int stream, size_t len) {
  std::string h(8, '\0');
  h[0] = static_cast<char>(stream);
  h[4] = static_cast<char>((len >> 24) & 0xff);
  h[5] = static_cast<char>((len >> 16) & 0xff);
  h[6] = static_cast<char>((len >> 8) & 0xff);
  h[7] = static_cast<char>(len & 0xff);
  return h;
}

// Wraps a handler body so ApiError maps onto an HTTP error payload.
template <typename F>
auto guard(F f) {
  return [f](const httplib::Request &req, httplib::Response &res) {
    try {
      f(req, res);
    } catch (const ApiError &e) {
      fail(res, e);
    } catch (const std::exception &e) {
      fail(res, ApiError{500, std::string("internal: ") + e.what()});
    }
  };
}

constexpr const char *kV = R"((?:/v[0-9.]+)?)";

}  // namespace

struct SimEngine::Impl {
  httplib::Server svr;
};

SimEngine::SimEngine(std::string socket_path, uint64_t seed)
    : socket_path_(std::move(socket_path)),
      world_(std::make_unique<World>(seed)),
      impl_(std::make_unique<Impl>()) {
  auto &svr = impl_->svr;
  World &w = *world_;

  svr.new_task_queue = [] { return new httplib::ThreadPool(64); };
  svr.set_keep_alive_max_count(100000);
  svr.set_read_timeout(600, 0);
  svr.set_write_timeout(600, 0);
  svr.set_payload_max_length(32 * 1024 * 1024);

  auto re = [](const std::string &tail) { return std::string(kV) + tail; };

  svr.Get(re("/_ping"), guard([](const httplib::Request &, httplib::Response &res) {
            res.set_content("OK", "text/plain");
          }));

  svr.Get(re("/version"), guard([&w](const httplib::Request &, httplib::Response &res) {
            json j;
            j["Version"] = "25.0-sim";
            j["ApiVersion"] = "1.43";
            j["MinAPIVersion"] = "1.24";
            j["Os"] = "linux";
            j["Arch"] = "sim";
            j["Platform"] = {{"Name", "vemul-simengine"}};
            j["Seed"] = w.seed();
            ok_json(res, j);
          }));

  // -- container lifecycle --------------------------------------------------

  svr.Post(re("/containers/create"),
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             std::string name = req.get_param_value("name");
             json body = parse_body(req);
             if (name.empty() && body.contains("Name")) name = body["Name"].get<std::string>();
             if (name.empty()) throw ApiError{400, "container name required"};
             std::string image = body.value("Image", "");
             std::vector<std::string> cmd, env;
             if (body.contains("Cmd"))
               for (const auto &c : body["Cmd"]) cmd.push_back(c.get<std::string>());
             if (body.contains("Env"))
               for (const auto &e : body["Env"]) env.push_back(e.get<std::string>());
             std::map<std::string, std::string> labels;
             if (body.contains("Labels"))
               for (auto it = body["Labels"].begin(); it != body["Labels"].end(); ++it)
                 labels[it.key()] = it.value().get<std::string>();
             int64_t nano = 0, mem = 0;
             if (body.contains("HostConfig")) {
               nano = body["HostConfig"].value("NanoCpus", int64_t(0));
               mem = body["HostConfig"].value("Memory", int64_t(0));
             }
             std::string id = w.create_container(name, image, cmd, env, labels, nano, mem);
             ok_json(res, json{{"Id", id}, {"Warnings", json::array()}}, 201);
           }));

  svr.Post(re("/containers/([^/]+)/start"),
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             w.start_container(req.matches[1]);
             res.status = 204;
           }));

  svr.Post(re("/containers/([^/]+)/stop"),
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             w.stop_container(req.matches[1]);
             res.status = 204;
           }));

  svr.Post(re("/containers/([^/]+)/pause"),
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             w.pause_container(req.matches[1]);
             res.status = 204;
           }));

  svr.Post(re("/containers/([^/]+)/unpause"),
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             w.unpause_container(req.matches[1]);
             res.status = 204;
           }));

  svr.Delete(re("/containers/([^/]+)"),
             guard([&w](const httplib::Request &req, httplib::Response &res) {
               std::string force = req.get_param_value("force");
               w.remove_container(req.matches[1], force == "1" || force == "true");
               res.status = 204;
             }));

  svr.Get(re("/containers/json"),
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            bool all = req.get_param_value("all") == "1" || req.get_param_value("all") == "true";
            res.set_content(w.list_containers(all, req.get_param_value("filters")),
                            "application/json");
          }));

  svr.Get(re("/containers/([^/]+)/json"),
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            res.set_content(w.inspect_container(req.matches[1]), "application/json");
          }));

  svr.Get(re("/containers/([^/]+)/stats"),
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            res.set_content(w.stats_container(req.matches[1]), "application/json");
          }));

  // -- exec -----------------------------------------------------------------

  svr.Post(re("/containers/([^/]+)/exec"),
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             json body = parse_body(req);
             std::vector<std::string> cmd;
             if (body.contains("Cmd"))
               for (const auto &c : body["Cmd"]) cmd.push_back(c.get<std::string>());
             std::string id = w.create_exec(req.matches[1], cmd);
             ok_json(res, json{{"Id", id}}, 201);
           }));

  svr.Post(re("/exec/([0-9a-f]+)/start"),
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             auto session = w.start_exec(req.matches[1]);
             res.set_chunked_content_provider(
                 "application/vnd.docker.raw-stream",
                 [session](size_t, httplib::DataSink &sink) {
                   std::pair<int, std::string> f;
                   if (!session->next_frame(f)) {
                     sink.done();
                     return true;
                   }
                   std::string hdr = frame_header(f.first, f.second.size());
                   if (!sink.write(hdr.data(), hdr.size()) ||
                       !sink.write(f.second.data(), f.second.size())) {
                     session->cancel = true;
                     return false;
                   }
                   return true;
                 });
           }));

  svr.Get(re("/exec/([0-9a-f]+)/json"),
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            res.set_content(w.inspect_exec(req.matches[1]), "application/json");
          }));

  // -- network plumbing seam ------------------------------------------------

  svr.Post("/vemul-sim/net/veth", guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_create_veth(b.at("ns_a"), b.at("name_a"), b.at("ns_b"), b.at("name_b"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/net/bridge",
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_create_bridge(b.at("ns"), b.at("name"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/net/enslave",
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_enslave(b.at("ns"), b.at("ifname"), b.at("master"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/net/addr", guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_add_addr(b.at("ns"), b.at("ifname"), b.at("cidr"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/net/state",
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_set_state(b.at("ns"), b.at("ifname"), b.at("up").get<bool>());
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/net/mac", guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_set_mac(b.at("ns"), b.at("ifname"), b.at("mac"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/net/rename",
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_rename(b.at("ns"), b.at("old"), b.at("new"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/net/tunnel",
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_create_tunnel(b.at("ns"), b.at("name"), b.at("kind"),
                                 b.at("key").get<uint32_t>(), b.at("local"), b.at("remote"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/net/del", guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.net_delete(b.at("ns"), b.at("ifname"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Get("/vemul-sim/net/ifaces",
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            json j = w.net_list(req.get_param_value("ns"));
            ok_json(res, j);
          }));

  svr.Get("/vemul-sim/net/resolve-ns",
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            ok_json(res, json{{"ns", w.resolve_ns(req.get_param_value("container"))}});
          }));

  // -- switch management seam ----------------------------------------------

  svr.Post("/vemul-sim/ovs/bridge",
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.ovs_create_bridge(b.at("container"), b.at("name"), b.value("fail_mode", "secure"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/ovs/port", guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.ovs_add_port(b.at("container"), b.at("bridge"), b.at("ifname"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Post("/vemul-sim/ovs/controller",
           guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             w.ovs_set_controller(b.at("container"), b.at("bridge"), b.at("target"));
             ok_json(res, json{{"ok", true}});
           }));

  svr.Get("/vemul-sim/ovs/connected",
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            bool c = w.ovs_connected(req.get_param_value("container"),
                                     req.get_param_value("bridge"));
            ok_json(res, json{{"connected", c}});
          }));

  svr.Get("/vemul-sim/ovs/exists",
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            bool e = w.ovs_bridge_exists(req.get_param_value("container"),
                                         req.get_param_value("bridge"));
            ok_json(res, json{{"exists", e}});
          }));

  svr.Get("/vemul-sim/probe/tcp",
          guard([&w](const httplib::Request &req, httplib::Response &res) {
            auto port = util::parse_int(req.get_param_value("port"));
            bool open = port && w.probe_tcp(req.get_param_value("ip"), static_cast<int>(*port));
            ok_json(res, json{{"open", open}});
          }));

  // -- fault injection and debug -------------------------------------------

  svr.Post("/vemul-sim/fault", guard([&w](const httplib::Request &req, httplib::Response &res) {
             json b = parse_body(req);
             std::string op = b.value("op", "");
             if (op == "fail-after")
               w.set_fault(b.at("what"), b.at("count").get<int>());
             else if (op == "reject-limits")
               w.set_reject_limits(b.at("value").get<bool>());
             else if (op == "reset")
               w.set_fault("reset", 0);
             else
               throw ApiError{400, "unknown fault op: " + op};
             ok_json(res, json{{"ok", true}});
           }));

  svr.Get("/vemul-sim/state", guard([&w](const httplib::Request &, httplib::Response &res) {
            res.set_content(w.debug_state(), "application/json");
          }));
}

SimEngine::~SimEngine() { stop(); }

bool SimEngine::start() {
  ::unlink(socket_path_.c_str());
  impl_->svr.set_address_family(AF_UNIX);
  server_thread_ = std::thread([this] { impl_->svr.listen(socket_path_, 80); });
  for (int i = 0; i < 500; ++i) {
    if (impl_->svr.is_running()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return false;
}

void SimEngine::stop() {
  if (impl_ && impl_->svr.is_running()) impl_->svr.stop();
  if (server_thread_.joinable()) server_thread_.join();
  ::unlink(socket_path_.c_str());
}

bool SimEngine::serve_blocking() {
  ::unlink(socket_path_.c_str());
  impl_->svr.set_address_family(AF_UNIX);
  std::fprintf(stderr, "simengine listening on %s (seed %llu)\n", socket_path_.c_str(),
               static_cast<unsigned long long>(world_->seed()));
  return impl_->svr.listen(socket_path_, 80);
}

}  // namespace vemul::sim
