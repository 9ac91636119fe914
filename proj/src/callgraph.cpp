#include "trilang/callgraph.hpp"

#include "json.hpp"

#include <deque>

namespace trilang {

using json = nlohmann::json;

namespace {

void add_isolated(const PolyglotProgram &p, CallGraph &g) {
  for (const auto &fi : p.functions())
    g.nodes.insert(fi.node);
}

} // namespace

CallGraph build_cha(const PolyglotProgram &p, bool include_unreachable) {
  CallGraph g;
  g.universe = function_universe(p);
  std::vector<bool> seen(p.functions().size(), false);
  std::deque<FnId> work{p.entry_fn()};
  seen[static_cast<std::size_t>(p.entry_fn())] = true;
  auto edge = [&](FnId caller, SiteId site, FnId callee, Mechanism m) {
    g.edges.insert({p.function(caller).node, p.site_table().name(site), p.function(callee).node, m});
    if (!seen[static_cast<std::size_t>(callee)]) {
      seen[static_cast<std::size_t>(callee)] = true;
      work.push_back(callee);
    }
  };
  while (!work.empty()) {
    FnId f = work.front();
    work.pop_front();
    const FunctionInfo &fi = p.function(f);
    g.nodes.insert(fi.node);
    for (SiteId s : fi.sites) {
      const SiteInfo &si = p.site(s);
      if (si.instr) {
        if (std::holds_alternative<assembly::Call>(si.instr->instr) && si.callee >= 0)
          edge(f, s, si.callee, Mechanism::asm_direct);
        continue;
      }
      if (const auto *m = std::get_if<host::MethodCall>(&si.stmt->node)) {
        bool bridge = fi.is_bridge_param(m->receiver);
        for (const auto &t : p.types()) {
          if (bridge && !t.bridge_capable)
            continue;
          if (auto callee = p.resolve_method(t.container, *t.decl, m->method))
            edge(f, s, *callee, bridge ? Mechanism::bridge_callback : Mechanism::virtual_call);
        }
      } else if (std::holds_alternative<host::Eval>(si.stmt->node) && si.callee >= 0) {
        edge(f, s, si.callee, Mechanism::eval);
      } else if (std::holds_alternative<host::AsmCall>(si.stmt->node) && si.callee >= 0) {
        edge(f, s, si.callee, Mechanism::asmcall);
      }
    }
  }
  if (include_unreachable)
    add_isolated(p, g);
  return g;
}

std::pair<CallGraph, AnalysisResult> build_onthefly(const PolyglotProgram &p,
                                                    const EngineOptions &options,
                                                    bool include_unreachable) {
  AnalysisResult r = mutual_fixpoint(p, options);
  CallGraph g = resolved_graph(p, r);
  if (include_unreachable)
    add_isolated(p, g);
  return {std::move(g), std::move(r)};
}

CallGraph graph_from_trace(const PolyglotProgram &p, const DynamicTrace &trace) {
  CallGraph g;
  g.universe = function_universe(p);
  auto node = [&](const std::string &name) {
    auto dot = name.find('.');
    auto f = dot == std::string::npos ? std::nullopt
                                      : p.find_function(name.substr(0, dot), name.substr(dot + 1));
    if (!f)
      throw Error("trace names unknown function " + name);
    return p.function(*f).node;
  };
  g.nodes.insert(p.function(p.entry_fn()).node);
  for (const auto &e : trace.call_edges) {
    CallEdge ce{node(e.caller), e.site, node(e.callee), e.mechanism};
    g.nodes.insert(ce.caller);
    g.nodes.insert(ce.callee);
    g.edges.insert(std::move(ce));
  }
  return g;
}

std::size_t GraphDiff::count_only_a() const {
  std::size_t n = 0;
  for (const auto &[_, s] : only_a)
    n += s.size();
  return n;
}

std::size_t GraphDiff::count_only_b() const {
  std::size_t n = 0;
  for (const auto &[_, s] : only_b)
    n += s.size();
  return n;
}

GraphDiff diff_graphs(const CallGraph &a, const CallGraph &b) {
  if (a.universe != b.universe)
    throw Error("call graphs are over different node universes");
  GraphDiff d;
  for (const auto &e : a.edges)
    (b.edges.count(e) ? d.both : d.only_a)[e.mechanism].insert(e);
  for (const auto &e : b.edges)
    if (!a.edges.count(e))
      d.only_b[e.mechanism].insert(e);
  return d;
}

namespace {

std::string quote(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    out += c;
  }
  return out + "\"";
}

json edge_json(const CallEdge &e) {
  return {{"caller", e.caller.str()},
          {"site", e.site},
          {"callee", e.callee.str()},
          {"mechanism", std::string(to_string(e.mechanism))}};
}

json edge_groups(const std::map<Mechanism, std::set<CallEdge>> &groups) {
  json out = json::object();
  for (const auto &[m, edges] : groups) {
    json a = json::array();
    for (const auto &e : edges)
      a.push_back(edge_json(e));
    out[std::string(to_string(m))] = a;
  }
  return out;
}

} // namespace

std::string graph_dot(const CallGraph &g) {
  std::string out = "digraph callgraph {\n";
  for (const auto &n : g.nodes)
    out += "  " + quote(n.str()) + " [label=" +
           quote(std::string(to_string(n.provenance)) + "/" + n.str()) + "];\n";
  for (const auto &e : g.edges)
    out += "  " + quote(e.caller.str()) + " -> " + quote(e.callee.str()) + " [label=" +
           quote(std::string(to_string(e.mechanism))) + ", site=" + quote(e.site) + "];\n";
  out += "}\n";
  return out;
}

std::string graph_json(const CallGraph &g) {
  json j;
  j["nodes"] = json::array();
  for (const auto &n : g.nodes)
    j["nodes"].push_back({{"id", n.str()}, {"provenance", std::string(to_string(n.provenance))}});
  j["edges"] = json::array();
  for (const auto &e : g.edges)
    j["edges"].push_back(edge_json(e));
  return j.dump(2) + "\n";
}

std::string diff_json(const GraphDiff &d) {
  json j;
  j["only_a"] = edge_groups(d.only_a);
  j["only_b"] = edge_groups(d.only_b);
  j["both"] = edge_groups(d.both);
  return j.dump(2) + "\n";
}

} // namespace trilang
