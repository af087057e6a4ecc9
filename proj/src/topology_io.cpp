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

#include "vemul/topology_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

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

NodeSpec parse_node(const json &jn, size_t index) {
  std::string where = "nodes[" + std::to_string(index) + "]";
  if (!jn.is_object()) schema_err(where, "must be an object");
  reject_unknown(jn, {"name", "kind", "image", "ip", "mask", "role", "cpu_quota", "memory_bytes"},
                 where);
  NodeSpec n;
  n.name = want_string(jn, "name", where);
  where += " ('" + n.name + "')";
  auto kind = node_kind_from(want_string(jn, "kind", where));
  if (!kind) schema_err(where, "bad 'kind'");
  n.kind = *kind;
  if (jn.contains("image")) {
    if (!jn["image"].is_string()) schema_err(where, "'image' must be a string");
    n.image = jn["image"].get<std::string>();
  }
  if (jn.contains("role")) {
    auto role = host_role_from(want_string(jn, "role", where));
    if (!role) schema_err(where, "bad 'role'");
    n.role = *role;
  }
  if (jn.contains("ip") != jn.contains("mask"))
    schema_err(where, "'ip' and 'mask' must appear together");
  if (jn.contains("ip")) {
    IpConfig ip;
    ip.address = want_string(jn, "ip", where);
    if (jn["mask"].is_number_integer())
      ip.prefix_len = jn["mask"].get<int>();
    else if (jn["mask"].is_string()) {
      auto v = util::parse_int(jn["mask"].get<std::string>());
      if (!v) schema_err(where, "bad 'mask'");
      ip.prefix_len = static_cast<int>(*v);
    } else
      schema_err(where, "'mask' must be an integer or numeric string");
    n.ip_config = ip;
  }
  if (jn.contains("cpu_quota") || jn.contains("memory_bytes")) {
    ResourceLimits lim;
    if (jn.contains("cpu_quota")) {
      if (!jn["cpu_quota"].is_number()) schema_err(where, "'cpu_quota' must be a number");
      lim.cpu_quota = jn["cpu_quota"].get<double>();
    }
    if (jn.contains("memory_bytes")) {
      if (!jn["memory_bytes"].is_number_unsigned() && !jn["memory_bytes"].is_number_integer())
        schema_err(where, "'memory_bytes' must be an integer");
      auto v = jn["memory_bytes"].get<int64_t>();
      if (v < 0) schema_err(where, "'memory_bytes' must be >= 0");
      lim.memory_bytes = static_cast<uint64_t>(v);
    }
    n.limits = lim;
  }
  return n;
}

LinkSpec parse_link(const json &jl, size_t index) {
  std::string where = "links[" + std::to_string(index) + "]";
  if (!jl.is_object()) schema_err(where, "must be an object");
  reject_unknown(jl, {"name", "a", "b", "model", "class", "members", "tunnel_key"}, where);
  LinkSpec l;
  l.name = want_string(jl, "name", where);
  where += " ('" + l.name + "')";
  if (jl.contains("model")) {
    auto m = link_model_from(want_string(jl, "model", where));
    if (!m) schema_err(where, "bad 'model'");
    l.model = *m;
  }
  if (jl.contains("class")) {
    auto c = link_class_from(want_string(jl, "class", where));
    if (!c) schema_err(where, "bad 'class'");
    l.topology_class = *c;
  }
  if (l.topology_class == LinkClass::PointToPoint) {
    l.endpoint_a = want_string(jl, "a", where);
    l.endpoint_b = want_string(jl, "b", where);
    if (jl.contains("members")) schema_err(where, "'members' is bus-only");
  } else {
    if (!jl.contains("members") || !jl["members"].is_array())
      schema_err(where, "bus link needs a 'members' array");
    for (const auto &m : jl["members"]) {
      if (!m.is_string()) schema_err(where, "'members' entries must be strings");
      l.members.push_back(m.get<std::string>());
    }
  }
  if (jl.contains("tunnel_key")) {
    if (!jl["tunnel_key"].is_number_integer()) schema_err(where, "'tunnel_key' must be an integer");
    auto v = jl["tunnel_key"].get<int64_t>();
    if (v < 0) schema_err(where, "'tunnel_key' must be >= 0");
    l.tunnel_key = static_cast<uint32_t>(v);
  }
  return l;
}

}  // namespace

Topology topology_from_json_text(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception &e) {
    throw Error(Errc::schema_violation, std::string("topology: ") + e.what());
  }
  if (!doc.is_object()) schema_err("topology", "document must be an object");
  reject_unknown(doc, {"nodes", "links"}, "topology");
  Topology t;
  if (doc.contains("nodes")) {
    if (!doc["nodes"].is_array()) schema_err("topology", "'nodes' must be an array");
    size_t i = 0;
    for (const auto &jn : doc["nodes"]) t.add_node(parse_node(jn, i++));
  }
  if (doc.contains("links")) {
    if (!doc["links"].is_array()) schema_err("topology", "'links' must be an array");
    size_t i = 0;
    for (const auto &jl : doc["links"]) t.add_link(parse_link(jl, i++));
  }
  t.set_runnable(true);
  return t;
}

Topology load_topology_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return topology_from_json_text(ss.str());
  } catch (const Error &e) {
    if (e.code() == Errc::schema_violation)
      throw Error(Errc::schema_violation, path + ": " + e.what());
    throw;
  }
}

std::string topology_to_json_text(const Topology &t) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto &n : t.nodes()) {
    json jn;
    jn["name"] = n.name;
    jn["kind"] = to_string(n.kind);
    if (!n.image.empty()) jn["image"] = n.image;
    if (n.role != HostRole::None) jn["role"] = to_string(n.role);
    if (n.ip_config) {
      jn["ip"] = n.ip_config->address;
      jn["mask"] = n.ip_config->prefix_len;
    }
    if (n.limits) {
      if (n.limits->cpu_quota) jn["cpu_quota"] = *n.limits->cpu_quota;
      if (n.limits->memory_bytes) jn["memory_bytes"] = *n.limits->memory_bytes;
    }
    doc["nodes"].push_back(jn);
  }
  doc["links"] = json::array();
  for (const auto &l : t.links()) {
    json jl;
    jl["name"] = l.name;
    if (l.topology_class == LinkClass::PointToPoint) {
      jl["a"] = l.endpoint_a;
      jl["b"] = l.endpoint_b;
    } else {
      jl["class"] = to_string(l.topology_class);
      jl["members"] = l.members;
    }
    if (l.model != LinkModel::Veth) jl["model"] = to_string(l.model);
    if (l.tunnel_key) jl["tunnel_key"] = *l.tunnel_key;
    doc["links"].push_back(jl);
  }
  return doc.dump(2) + "\n";
}

void save_topology_file(const Topology &t, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot write '" + path + "'");
  out << topology_to_json_text(t);
}

}  // namespace vemul
