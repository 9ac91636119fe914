#include "trilang/harness.hpp"

#include "json.hpp"

#include <atomic>
#include <deque>
#include <thread>

namespace trilang {

using json = nlohmann::json;

bool sources_roundtrip(const PolyglotProgram &program) {
  for (const auto &u : program.host_units()) {
    auto a = host::parse_host(host::render_host(u));
    if (!a)
      return false;
    auto b = host::parse_host(host::render_host(*a));
    if (!b || !(*a == *b) || !(*a == u))
      return false;
  }
  for (const auto &m : program.asms()) {
    auto a = assembly::parse_asm(assembly::render_asm(m));
    if (!a)
      return false;
    auto b = assembly::parse_asm(assembly::render_asm(*a));
    if (!b || !(*a == *b) || !(*a == m))
      return false;
  }
  return true;
}

namespace {

std::string describe(const CallEdge &e) {
  return e.caller.str() + " -[" + e.site + ", " + std::string(to_string(e.mechanism)) + "]-> " +
         e.callee.str();
}

} // namespace

SeedReport check_seed(const GenConfig &config, const SuiteOptions &options) {
  SeedReport rep;
  rep.seed = config.seed;
  PolyglotProgram program = generate(config);
  RunResult run_result = run(program);
  rep.outcome = run_result.outcome;
  rep.fault = run_result.fault;
  rep.roundtrip_ok = sources_roundtrip(program);
  try {
    auto [otf, result] = build_onthefly(program, options.engine);
    CallGraph cha = build_cha(program);
    CallGraph dyn = graph_from_trace(program, run_result.trace);
    auto flows = query_taint_flows(program, result);
    rep.iterations = result.iterations;
    rep.monotonicity_violations = result.monotonicity_violations;
    rep.dynamic_edges = dyn.edges.size();
    rep.static_edges = otf.edges.size();
    rep.cha_edges = cha.edges.size();
    rep.dynamic_flows = run_result.trace.taint_flows.size();
    rep.static_flows = flows.size();
    for (const auto &e : dyn.edges)
      if (!otf.edges.count(e))
        rep.violations.push_back("missing edge " + describe(e));
    for (const auto &f : run_result.trace.taint_flows)
      if (!flows.count({f.source, f.sink}))
        rep.violations.push_back("missing flow " + f.source + " -> " + f.sink);
    for (const auto &e : otf.edges)
      if (!cha.edges.count(e))
        rep.otf_subset_of_cha = false;
    for (const auto &e : cha.edges)
      if (!otf.edges.count(e))
        ++rep.cha_only;
  } catch (const Error &e) {
    rep.violations.push_back(std::string("analysis failed: ") + e.what());
  }
  if (!rep.violations.empty() && options.counterexample_dir)
    write_program(program, *options.counterexample_dir / ("seed-" + std::to_string(config.seed)));
  return rep;
}

std::size_t SuiteReport::violations() const {
  std::size_t n = 0;
  for (const auto &s : seeds)
    n += s.violations.size();
  return n;
}

std::size_t SuiteReport::incomplete_runs() const {
  std::size_t n = 0;
  for (const auto &s : seeds)
    n += s.outcome != Outcome::completed;
  return n;
}

SuiteReport soundness_suite(std::uint64_t first, std::uint64_t last, const GenConfig &config,
                            const SuiteOptions &options) {
  SuiteReport rep;
  if (last < first)
    return rep;
  std::size_t count = static_cast<std::size_t>(last - first + 1);
  rep.seeds.resize(count);
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      GenConfig c = config;
      c.seed = first + i;
      rep.seeds[i] = check_seed(c, options);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();
  return rep;
}

std::string suite_json(const SuiteReport &r) {
  json j;
  std::size_t gap = 0, static_edges = 0, dynamic_edges = 0, cha_edges = 0;
  int max_iter = 0;
  bool subset = true, roundtrip = true;
  int monotone = 0;
  json failures = json::array();
  for (const auto &s : r.seeds) {
    gap += s.cha_only > 0;
    static_edges += s.static_edges;
    dynamic_edges += s.dynamic_edges;
    cha_edges += s.cha_edges;
    max_iter = std::max(max_iter, s.iterations);
    subset = subset && s.otf_subset_of_cha;
    roundtrip = roundtrip && s.roundtrip_ok;
    monotone += s.monotonicity_violations;
    if (!s.violations.empty() || s.outcome != Outcome::completed) {
      json f{{"seed", s.seed}, {"outcome", std::string(to_string(s.outcome))}, {"violations", s.violations}};
      if (!s.fault.empty())
        f["fault"] = s.fault;
      failures.push_back(f);
    }
  }
  j["seeds"] = r.seeds.size();
  j["violations"] = r.violations();
  j["incomplete_runs"] = r.incomplete_runs();
  j["onthefly_subset_of_cha"] = subset;
  j["programs_with_cha_gap"] = gap;
  j["edges"] = {{"dynamic", dynamic_edges}, {"onthefly", static_edges}, {"cha", cha_edges}};
  j["max_iterations"] = max_iter;
  j["monotonicity_violations"] = monotone;
  j["roundtrip_ok"] = roundtrip;
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

// --- precision --------------------------------------------------------------

std::size_t PrecisionReport::total_spurious() const {
  std::size_t n = 0;
  for (const auto &[_, c] : by_mechanism)
    n += c.spurious;
  return n;
}

std::map<NodeId, int> hop_depths(const PolyglotProgram &program, const CallGraph &g) {
  std::map<NodeId, std::vector<const CallEdge *>> out_edges;
  for (const auto &e : g.edges)
    out_edges[e.caller].push_back(&e);
  std::map<NodeId, int> dist;
  const NodeId &entry = program.function(program.entry_fn()).node;
  std::deque<NodeId> work{entry};
  dist[entry] = 0;
  while (!work.empty()) {
    NodeId n = work.front();
    work.pop_front();
    int d = dist[n];
    for (const CallEdge *e : out_edges[n]) {
      int w = is_boundary(e->mechanism) ? 1 : 0;
      auto it = dist.find(e->callee);
      if (it == dist.end() || d + w < it->second) {
        dist[e->callee] = d + w;
        if (w == 0)
          work.push_front(e->callee);
        else
          work.push_back(e->callee);
      }
    }
  }
  return dist;
}

namespace {

std::string bucket(int depth) { return depth >= 3 ? "3+" : std::to_string(depth); }

} // namespace

PrecisionReport measure_precision(const PolyglotProgram &program, const CallGraph &static_graph,
                                  const FlowSet &static_flows,
                                  const std::vector<DynamicTrace> &traces) {
  PrecisionReport r;
  std::set<CallEdge> dynamic;
  FlowSet dyn_flows;
  for (const auto &t : traces) {
    CallGraph g = graph_from_trace(program, t);
    dynamic.insert(g.edges.begin(), g.edges.end());
    for (const auto &f : t.taint_flows)
      dyn_flows.insert({f.source, f.sink});
  }
  auto depth = hop_depths(program, static_graph);
  for (const auto &b : {"0", "1", "2", "3+"})
    r.spurious_by_depth[b];
  for (const auto &e : static_graph.edges) {
    auto &c = r.by_mechanism[e.mechanism];
    ++c.static_edges;
    if (!dynamic.count(e)) {
      ++c.spurious;
      auto it = depth.find(e.caller);
      ++r.spurious_by_depth[bucket(it == depth.end() ? 0 : it->second)][e.mechanism];
    }
  }
  for (const auto &e : dynamic) {
    ++r.by_mechanism[e.mechanism].dynamic_edges;
    if (!static_graph.edges.count(e))
      r.unsound.push_back("edge " + describe(e));
  }
  r.static_flows = static_flows.size();
  r.dynamic_flows = dyn_flows.size();
  for (const auto &f : static_flows)
    r.spurious_flows += !dyn_flows.count(f);
  for (const auto &f : dyn_flows)
    if (!static_flows.count(f))
      r.unsound.push_back("flow " + f.first + " -> " + f.second);
  return r;
}

std::pair<CallGraph, FlowSet> static_from_json(const PolyglotProgram &program,
                                               std::string_view text) {
  CallGraph g;
  FlowSet flows;
  g.universe = function_universe(program);
  auto node = [&](const std::string &name) {
    auto dot = name.find('.');
    auto f = dot == std::string::npos ? std::nullopt
                                      : program.find_function(name.substr(0, dot), name.substr(dot + 1));
    if (!f)
      throw Error("static result names unknown function " + name);
    return program.function(*f).node;
  };
  try {
    json j = json::parse(text);
    const json &graph = j.contains("call_graph") ? j.at("call_graph") : j;
    for (const auto &n : graph.at("nodes"))
      g.nodes.insert(node(n.is_string() ? n.get<std::string>() : n.at("id").get<std::string>()));
    for (const auto &e : graph.at("edges")) {
      auto m = mechanism_from_string(e.at("mechanism").get<std::string>());
      if (!m)
        throw Error("unknown mechanism in static result");
      g.edges.insert({node(e.at("caller").get<std::string>()), e.at("site").get<std::string>(),
                      node(e.at("callee").get<std::string>()), *m});
    }
    if (j.contains("taint_flows"))
      for (const auto &f : j.at("taint_flows"))
        flows.insert({f.at("source").get<std::string>(), f.at("sink").get<std::string>()});
  } catch (const json::exception &e) {
    throw Error(std::string("malformed static result: ") + e.what());
  }
  return {std::move(g), std::move(flows)};
}

std::string precision_json(const PrecisionReport &r) {
  json j;
  json mech = json::object();
  for (const auto &[m, c] : r.by_mechanism)
    mech[std::string(to_string(m))] = {
        {"static", c.static_edges}, {"dynamic", c.dynamic_edges}, {"spurious", c.spurious}};
  j["edges_by_mechanism"] = mech;
  json depth = json::object();
  for (const auto &[b, per] : r.spurious_by_depth) {
    json d = json::object();
    std::size_t total = 0;
    for (const auto &[m, n] : per) {
      d[std::string(to_string(m))] = n;
      total += n;
    }
    depth[b] = {{"total", total}, {"by_mechanism", d}};
  }
  j["spurious_by_hop_depth"] = depth;
  j["spurious_edges"] = r.total_spurious();
  j["taint"] = {{"static", r.static_flows}, {"dynamic", r.dynamic_flows}, {"spurious", r.spurious_flows}};
  j["sound"] = r.unsound.empty();
  j["unsound"] = r.unsound;
  return j.dump(2) + "\n";
}

} // namespace trilang
