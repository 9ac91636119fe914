// Acceptance checks: one PASS/FAIL line per criterion.
//   trilang_acceptance <path to trilang executable>

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace trilang;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string &detail) {
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << "\n";
  failures += !ok;
}

// Number of eval sites in `g`'s nodes whose edge count is not exactly one.
int eval_site_errors(const PolyglotProgram &p, const CallGraph &g) {
  std::map<std::string, int> edges;
  for (const auto &e : g.edges)
    if (e.mechanism == Mechanism::eval)
      ++edges[e.site];
  int bad = 0;
  for (const auto &fi : p.functions()) {
    if (!fi.host || !g.nodes.count(fi.node))
      continue;
    for (SiteId s : fi.sites)
      if (std::holds_alternative<host::Eval>(p.site(s).stmt->node))
        bad += edges[p.site(s).id] != 1;
  }
  return bad;
}

bool fixture_roundtrip() {
  for (const auto &dir : fs::directory_iterator(TRILANG_FIXTURES)) {
    auto p = link(load_manifest(dir.path() / "manifest.json"));
    if (!p || !sources_roundtrip(*p))
      return false;
  }
  return true;
}

std::string slurp(const fs::path &p) { return fs::exists(p) ? read_file(p) : std::string{}; }

bool sh(const std::string &cmd) { return std::system(cmd.c_str()) == 0; }

} // namespace

int main(int argc, char **argv) {
  if (argc != 2) {
    std::cerr << "usage: trilang_acceptance <trilang executable>\n";
    return 2;
  }
  const std::string exe = argv[1];
  const GenConfig defaults;

  // 1, 2, 6, 8 share the 500-program suite
  auto t0 = std::chrono::steady_clock::now();
  SuiteReport suite = soundness_suite(0, 499, defaults);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ostringstream d;
    d << suite.seeds.size() << " programs, " << suite.violations() << " violations, "
      << suite.incomplete_runs() << " incomplete runs, " << secs << " s";
    report(1, suite.seeds.size() == 500 && suite.violations() == 0 && secs < 300, d.str());
  }

  {
    std::size_t not_subset = 0, gap_programs = 0;
    for (const auto &s : suite.seeds) {
      not_subset += !s.otf_subset_of_cha;
      gap_programs += s.cha_only > 0;
    }
    auto chagap = testing::load_fixture("chagap");
    auto d = diff_graphs(build_cha(chagap), build_onthefly(chagap).first);
    std::ostringstream o;
    o << "on-the-fly not within CHA in " << not_subset << " programs; CHA gap in " << gap_programs
      << "/500; fixture CHA\\on-the-fly = " << d.count_only_a();
    report(2, not_subset == 0 && d.count_only_a() >= 1, o.str());
  }

  {
    auto p = testing::load_fixture("bridge");
    auto g = build_onthefly(p).first;
    auto dyn = graph_from_trace(p, run(p).trace);
    std::set<std::string> callees, expected;
    for (const auto &e : g.edges)
      if (e.mechanism == Mechanism::bridge_callback)
        callees.insert(e.callee.str());
    // the allocation type is B; its methods are the only legal targets
    const auto &b = *p.entry().find_type("B");
    for (const auto &m : b.methods)
      expected.insert("entry." + m.function);
    std::set<std::string> dyn_callees;
    for (const auto &e : dyn.edges)
      if (e.mechanism == Mechanism::bridge_callback)
        dyn_callees.insert(e.callee.str());
    report(3, callees == expected && callees == dyn_callees && g.edges == dyn.edges,
           "bridge callbacks -> " + std::to_string(callees.size()) + " methods of entry.B, " +
               (g.edges == dyn.edges ? "equal to" : "different from") + " the interpreter");
  }

  {
    int bad = 0, programs = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      GenConfig c = defaults;
      c.seed = seed;
      auto p = generate(c);
      bad += eval_site_errors(p, build_cha(p)) + eval_site_errors(p, build_onthefly(p).first);
      ++programs;
    }
    for (const char *name : {"basic", "bridge", "chagap", "taint3"}) {
      auto p = testing::load_fixture(name);
      bad += eval_site_errors(p, build_cha(p)) + eval_site_errors(p, build_onthefly(p).first);
      ++programs;
    }
    report(4, bad == 0,
           std::to_string(bad) + " eval sites without exactly one edge over " +
               std::to_string(programs) + " programs (CHA and on-the-fly)");
  }

  {
    auto p = testing::load_fixture("taint3");
    auto flows = query_taint_flows(p, mutual_fixpoint(p));
    std::set<std::pair<std::string, std::string>> dyn;
    for (const auto &f : run(p).trace.taint_flows)
      dyn.insert({f.source, f.sink});
    report(5, flows == dyn && flows.size() == 1,
           "static " + std::to_string(flows.size()) + " flow(s), dynamic " +
               std::to_string(dyn.size()));
  }

  {
    int max_iter = 0, monotone = 0;
    for (const auto &s : suite.seeds) {
      max_iter = std::max(max_iter, s.iterations);
      monotone += s.monotonicity_violations;
    }
    bool analysed = true;
    for (const auto &s : suite.seeds)
      for (const auto &v : s.violations)
        analysed = analysed && v.rfind("analysis failed", 0) != 0;
    auto flat = mutual_fixpoint(testing::load_fixture("chagap"));
    std::ostringstream o;
    o << "max " << max_iter << " rounds (cap " << default_iteration_cap() << "), " << monotone
      << " monotonicity violations, boundary-free program " << flat.iterations << " round(s)";
    report(6, analysed && max_iter < default_iteration_cap() && monotone == 0 &&
                  flat.iterations == 1,
           o.str());
  }

  {
    int equal = 0;
    double ratio = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      GenConfig c = defaults;
      c.seed = seed;
      auto p = generate(c);
      auto base = mutual_fixpoint(p);
      auto e = gen_edit(c, p);
      auto q = apply_edit(p, e);
      if (!q)
        continue;
      auto rep = reanalyze(*q, base, e.target);
      equal += analysis_json(*q, rep.result, false) ==
               analysis_json(*q, mutual_fixpoint(*q), false);
      ratio += double(rep.resummarized.size()) / double(q->functions().size());
    }
    std::ostringstream o;
    o << equal << "/100 equal to from-scratch; mean resummarized ratio " << ratio / 100;
    report(7, equal == 100, o.str());
  }

  {
    std::size_t ok = 0;
    for (const auto &s : suite.seeds)
      ok += s.roundtrip_ok;
    bool fixtures = fixture_roundtrip();
    report(8, ok == 500 && fixtures,
           std::to_string(ok) + "/500 generated programs, fixtures " + (fixtures ? "ok" : "failed"));
  }

  {
    fs::path work = fs::temp_directory_path() / "trilang-acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    std::string q = "\"" + exe + "\"";
    std::string taint = testing::fixture("taint3");
    bool ran = sh(q + " analyze " + taint + " --out " + (work / "a1.json").string()) &&
               sh(q + " analyze " + taint + " --out " + (work / "a2.json").string()) &&
               sh(q + " gen --seed 7 --with-edit --out " + (work / "g1").string()) &&
               sh(q + " gen --seed 7 --with-edit --out " + (work / "g2").string()) &&
               sh(q + " analyze " + (work / "g1" / "manifest.json").string() + " --out " +
                  (work / "b1.json").string()) &&
               sh(q + " analyze " + (work / "g2" / "manifest.json").string() + " --out " +
                  (work / "b2.json").string());
    bool same = ran && !slurp(work / "a1.json").empty() &&
                slurp(work / "a1.json") == slurp(work / "a2.json") &&
                slurp(work / "b1.json") == slurp(work / "b2.json");
    for (const auto &f : fs::directory_iterator(work / "g1"))
      same = same && slurp(f.path()) == slurp(work / "g2" / f.path().filename());
    report(9, same, ran ? "analyze and gen outputs compared byte for byte" : "trilang failed to run");
  }

  return failures == 0 ? 0 : 1;
}
