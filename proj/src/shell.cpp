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

#include "vemul/shell.hpp"

#include <istream>
#include <ostream>

#include "vemul/util.hpp"

namespace vemul {

namespace {

void indent_block(std::ostream &out, const std::string &text) {
  for (const auto &line : util::split(text, '\n')) {
    if (line.empty()) continue;
    out << "  " << line << "\n";
  }
}

std::map<std::string, std::string> kv_args(const std::vector<std::string> &toks,
                                           size_t from) {
  std::map<std::string, std::string> kv;
  for (size_t i = from; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(Errc::invalid_spec, "expected key=value, got '" + toks[i] + "'");
    kv[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
  }
  return kv;
}

NodeSpec parse_node_spec(const std::string &name,
                         const std::map<std::string, std::string> &kv) {
  NodeSpec spec;
  spec.name = name;
  for (const auto &[k, v] : kv) {
    if (k == "kind") {
      auto kind = node_kind_from(v);
      if (!kind) throw Error(Errc::invalid_spec, "kind '" + v + "'");
      spec.kind = *kind;
    } else if (k == "image") {
      spec.image = v;
    } else if (k == "role") {
      auto role = host_role_from(v);
      if (!role) throw Error(Errc::invalid_spec, "role '" + v + "'");
      spec.role = *role;
    } else if (k == "ip") {
      auto cidr = util::parse_cidr(v);
      if (!cidr) throw Error(Errc::invalid_spec, "ip '" + v + "' (want a.b.c.d/len)");
      spec.ip_config = IpConfig{util::ipv4_to_string(cidr->first), cidr->second};
    } else if (k == "cpu") {
      auto q = util::parse_double(v);
      if (!q) throw Error(Errc::invalid_spec, "cpu '" + v + "'");
      if (!spec.limits) spec.limits = ResourceLimits{};
      spec.limits->cpu_quota = *q;
    } else if (k == "memory") {
      auto m = util::parse_int(v);
      if (!m) throw Error(Errc::invalid_spec, "memory '" + v + "'");
      if (!spec.limits) spec.limits = ResourceLimits{};
      spec.limits->memory_bytes = static_cast<uint64_t>(*m);
    } else {
      throw Error(Errc::invalid_spec, "unknown node option '" + k + "'");
    }
  }
  return spec;
}

LinkSpec parse_link_spec(const std::string &name, const std::string &a,
                         const std::string &b,
                         const std::map<std::string, std::string> &kv) {
  LinkSpec spec;
  spec.name = name;
  spec.endpoint_a = a;
  spec.endpoint_b = b;
  for (const auto &[k, v] : kv) {
    if (k == "model") {
      auto m = link_model_from(v);
      if (!m) throw Error(Errc::invalid_spec, "model '" + v + "'");
      spec.model = *m;
    } else if (k == "key") {
      auto key = util::parse_int(v);
      if (!key || *key < 0) throw Error(Errc::invalid_spec, "key '" + v + "'");
      spec.tunnel_key = static_cast<uint32_t>(*key);
    } else {
      throw Error(Errc::invalid_spec, "unknown link option '" + k + "'");
    }
  }
  return spec;
}

void cmd_list(Emulation &emu, const std::vector<std::string> &toks, std::ostream &out) {
  std::string what = toks.size() > 1 ? toks[1] : "nodes";
  if (what == "nodes") {
    const auto &nodes = emu.topology().nodes();
    out << "ok " << nodes.size() << " nodes\n";
    for (const auto &n : nodes) {
      out << "  " << n.name << " " << to_string(n.kind);
      auto it = emu.handles().find(n.name);
      if (it != emu.handles().end()) {
        out << " " << to_string(it->second.state);
        if (!it->second.mgmt_ip.empty()) out << " mgmt=" << it->second.mgmt_ip;
      }
      if (n.ip_config)
        out << " ip=" << n.ip_config->address << "/" << n.ip_config->prefix_len;
      out << "\n";
    }
  } else if (what == "links") {
    out << "ok " << emu.links().size() << " links\n";
    for (const auto &[name, lh] : emu.links()) {
      out << "  " << name << " " << lh.model << " " << to_string(lh.state);
      if (lh.bindings.size() == 2)
        out << " " << lh.bindings[0].node_name << ":" << lh.bindings[0].ifname << "<->"
            << lh.bindings[1].node_name << ":" << lh.bindings[1].ifname;
      out << "\n";
    }
    out << "  " << emu.bus().link_name << " bus " << to_string(emu.bus().state) << " "
        << emu.bus().bindings.size() << " members\n";
  } else {
    throw Error(Errc::invalid_spec, "list what? (nodes|links)");
  }
}

void cmd_exec(Emulation &emu, const std::string &node,
              const std::vector<std::string> &argv, std::ostream &out,
              const ShellOptions &opts) {
  try {
    ExecResult r = emu.engine().exec_in_node(emu.handle(node), argv, opts.exec_timeout_ms);
    out << "ok exit " << r.exit_code << "\n";
    indent_block(out, r.out);
    indent_block(out, r.err);
  } catch (ExecTimeout &t) {
    out << "err " << t.what() << "\n";
    indent_block(out, t.partial.out);
    indent_block(out, t.partial.err);
  }
}

// Returns false when the loop should stop.
bool dispatch(Emulation &emu, const std::string &line, std::ostream &out,
              const ShellOptions &opts, std::string &attached) {
  auto toks = util::tokenize(line);
  if (toks.empty()) return true;
  const std::string &verb = toks[0];

  if (verb == "quit" || verb == "exit") {
    out << "ok bye\n";
    return false;
  }
  if (verb == "help") {
    out << "ok verbs\n";
    out << "  create node <name> [kind=|image=|ip=|role=|cpu=|memory=]\n";
    out << "  create link <name> <a> <b> [model=veth|gre-tunnel|vxlan-tunnel] [key=N]\n";
    out << "  list [nodes|links]\n";
    out << "  update link <name> state=up|down | update node <name> addr=<cidr> [dev=<if>]\n";
    out << "  delete node <name> | delete link <name>\n";
    out << "  exec <node> <command...>\n";
    out << "  attach <node>   (then 'exit' to detach)\n";
    out << "  link-up <link> | link-down <link> | pause <node> | resume <node>\n";
    out << "  quit\n";
    return true;
  }
  if (verb == "list") {
    cmd_list(emu, toks, out);
    return true;
  }
  if (verb == "create") {
    if (toks.size() >= 3 && toks[1] == "node") {
      NodeSpec spec = parse_node_spec(toks[2], kv_args(toks, 3));
      NodeHandle h = emu.add_node_live(spec);
      out << "ok node " << h.node_name << " mgmt=" << h.mgmt_ip << "\n";
      return true;
    }
    if (toks.size() >= 5 && toks[1] == "link") {
      LinkSpec spec = parse_link_spec(toks[2], toks[3], toks[4], kv_args(toks, 5));
      LinkHandle h = emu.add_link_live(spec);
      out << "ok link " << h.link_name << "\n";
      for (const auto &b : h.bindings)
        out << "  " << b.node_name << ":" << b.ifname << " " << b.mac << "\n";
      return true;
    }
    throw Error(Errc::invalid_spec,
                "usage: create node <name> [opts] | create link <name> <a> <b> [opts]");
  }
  if (verb == "update") {
    if (toks.size() >= 3 && toks[1] == "link") {
      auto kv = kv_args(toks, 3);
      auto st = kv.find("state");
      if (st == kv.end() || (st->second != "up" && st->second != "down"))
        throw Error(Errc::invalid_spec, "update link needs state=up|down");
      emu.set_link_state(toks[2], st->second == "up");
      out << "ok link " << toks[2] << " " << st->second << "\n";
      return true;
    }
    if (toks.size() >= 3 && toks[1] == "node") {
      auto kv = kv_args(toks, 3);
      auto addr = kv.find("addr");
      if (addr == kv.end())
        throw Error(Errc::invalid_spec, "update node needs addr=<cidr>");
      std::string dev = kv.count("dev") ? kv.at("dev") : "data0";
      if (!util::parse_cidr(addr->second))
        throw Error(Errc::invalid_spec, "addr '" + addr->second + "'");
      emu.handle(toks[2]);
      emu.fabric().assign_addr(toks[2], dev, addr->second);
      out << "ok node " << toks[2] << " " << dev << " " << addr->second << "\n";
      return true;
    }
    throw Error(Errc::invalid_spec, "usage: update link <name> state=up|down");
  }
  if (verb == "delete") {
    if (toks.size() == 3 && toks[1] == "node") {
      emu.remove_node_live(toks[2]);
      out << "ok deleted node " << toks[2] << "\n";
      return true;
    }
    if (toks.size() == 3 && toks[1] == "link") {
      emu.remove_link_live(toks[2]);
      out << "ok deleted link " << toks[2] << "\n";
      return true;
    }
    throw Error(Errc::invalid_spec, "usage: delete node <name> | delete link <name>");
  }
  if (verb == "exec") {
    if (toks.size() < 3) throw Error(Errc::invalid_spec, "usage: exec <node> <command...>");
    cmd_exec(emu, toks[1], {toks.begin() + 2, toks.end()}, out, opts);
    return true;
  }
  if (verb == "attach") {
    if (toks.size() != 2) throw Error(Errc::invalid_spec, "usage: attach <node>");
    NodeHandle &h = emu.handle(toks[1]);
    if (h.state != NodeState::Running) throw Error(Errc::node_not_running, toks[1]);
    attached = toks[1];
    out << "ok attached to " << attached << ", 'exit' detaches\n";
    return true;
  }
  if (verb == "link-up" || verb == "link-down") {
    if (toks.size() != 2) throw Error(Errc::invalid_spec, "usage: " + verb + " <link>");
    emu.set_link_state(toks[1], verb == "link-up");
    out << "ok link " << toks[1] << (verb == "link-up" ? " up" : " down") << "\n";
    return true;
  }
  if (verb == "pause") {
    if (toks.size() != 2) throw Error(Errc::invalid_spec, "usage: pause <node>");
    emu.engine().pause_node(emu.handle(toks[1]));
    out << "ok paused " << toks[1] << "\n";
    return true;
  }
  if (verb == "resume") {
    if (toks.size() != 2) throw Error(Errc::invalid_spec, "usage: resume <node>");
    emu.engine().resume_node(emu.handle(toks[1]));
    out << "ok resumed " << toks[1] << "\n";
    return true;
  }
  throw Error(Errc::invalid_spec, "unknown verb '" + verb + "' (try help)");
}

}  // namespace

int repl(Emulation &emu, std::istream &in, std::ostream &out, const ShellOptions &opts) {
  std::string line;
  std::string attached;
  while (true) {
    if (opts.prompt) {
      out << (attached.empty() ? "vemul> " : attached + "> ");
      out.flush();
    }
    if (!std::getline(in, line)) return 0;
    std::string trimmed = util::trim(line);
    if (trimmed.empty()) continue;

    if (!attached.empty()) {
      if (trimmed == "exit" || trimmed == "detach") {
        out << "ok detached from " << attached << "\n";
        attached.clear();
        continue;
      }
      try {
        cmd_exec(emu, attached, {"sh", "-c", trimmed}, out, opts);
      } catch (const std::exception &e) {
        out << "err " << e.what() << "\n";
      }
      continue;
    }

    try {
      if (!dispatch(emu, trimmed, out, opts, attached)) return 0;
    } catch (const Error &e) {
      out << "err " << e.what() << "\n";
    } catch (const std::exception &e) {
      out << "err internal: " << e.what() << "\n";
    }
  }
}

}  // namespace vemul
