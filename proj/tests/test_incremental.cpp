#include "doctest.h"
#include "support.hpp"

using namespace trilang;

namespace {

Edit must_parse(const std::string &text, const PolyglotProgram &p) {
  auto e = parse_edit(text, p);
  REQUIRE(e);
  return *e;
}

std::string scratch(const PolyglotProgram &p) { return analysis_json(p, mutual_fixpoint(p), false); }

} // namespace

TEST_CASE("edit file format") {
  auto p = testing::load_fixture("taint3");
  auto e = must_parse("file: cmod.asm\nfunction: id\n---\nz <- const 0\nret z\n", p);
  CHECK(e.target.str() == "cmod.id");
  CHECK(std::holds_alternative<std::vector<assembly::LabeledInstr>>(e.body));
  auto again = must_parse(render_edit(p, e), p);
  CHECK(again.target == e.target);
  CHECK(again.body == e.body);

  CHECK_FALSE(parse_edit("file: cmod.asm\nfunction: nope\n---\nret z\n", p));
  CHECK_FALSE(parse_edit("function: id\n---\n", p));
  CHECK_FALSE(parse_edit("file: mid.poly\nfunction: relay\n---\nreturn\n", p));
}

TEST_CASE("dropping the asm transfer removes the flow") {
  auto p = testing::load_fixture("taint3");
  auto base = mutual_fixpoint(p);
  auto e = must_parse("file: cmod.asm\nfunction: id\n---\nz <- const 0\nret z\n", p);
  auto q = apply_edit(p, e);
  REQUIRE(q);
  auto rep = reanalyze(*q, base, e.target);
  CHECK(rep.resummarized.count(e.target) == 1);
  CHECK(query_taint_flows(*q, rep.result).empty());
  CHECK(analysis_json(*q, rep.result, false) == scratch(*q));
  CHECK(run(*q).trace.taint_flows.empty());
}

TEST_CASE("unreachable edit touches only itself") {
  auto p = testing::load_fixture("bridge");
  auto base = mutual_fixpoint(p);
  auto e = must_parse("file: entry.poly\nfunction: C_get\n---\nk = 3;\nreturn k;\n", p);
  auto q = apply_edit(p, e);
  REQUIRE(q);
  auto rep = reanalyze(*q, base, e.target);
  CHECK(rep.resummarized == std::set<NodeId>{e.target});
  CHECK(analysis_json(*q, rep.result, false) == scratch(*q));
}

TEST_CASE("retyping the bridge allocation moves the callbacks") {
  auto p = testing::load_fixture("bridge");
  auto base = mutual_fixpoint(p);
  // C has no `me`: that callback would fault at run time, so call get only
  auto mid = must_parse("file: mid.poly\nfunction: start\n---\nx = i.get();\nreturn x;\n", p);
  auto q1 = apply_edit(p, mid);
  REQUIRE(q1);
  auto base1 = reanalyze(*q1, base, mid.target).result;
  auto e = must_parse("file: entry.poly\nfunction: main\n---\nbridge i = new C();\n"
                      "eval(mid.start, [i]);\nreturn i;\n", *q1);
  auto q2 = apply_edit(*q1, e);
  REQUIRE(q2);
  auto rep = reanalyze(*q2, base1, e.target);
  CHECK(analysis_json(*q2, rep.result, false) == scratch(*q2));
  auto g = resolved_graph(*q2, rep.result);
  std::set<std::string> callees;
  for (const auto &edge : g.edges)
    if (edge.mechanism == Mechanism::bridge_callback)
      callees.insert(edge.callee.str());
  CHECK(callees == std::set<std::string>{"entry.C_get"});
  CHECK(g.edges == graph_from_trace(*q2, run(*q2).trace).edges);
}

TEST_CASE("dependency graph") {
  auto p = testing::load_fixture("taint3");
  auto r = mutual_fixpoint(p);
  auto deps = build_dependency_graph(p, r);
  auto node = [&](const char *c, const char *f) { return p.function(*p.find_function(c, f)).node; };
  // relay reads cmod.id's return; main reads the field relay stores
  CHECK(deps.has_edge(node("mid", "relay"), node("cmod", "id")));
  CHECK(deps.has_edge(node("entry", "main"), node("mid", "relay")));
  CHECK(deps.has_edge(node("cmod", "id"), node("mid", "relay"))); // argument globals

  // every call edge is matched by a dependency of the callee on its caller
  for (const auto &e : resolved_graph(p, r).edges)
    CHECK(deps.has_edge(e.callee, e.caller));

  auto affected = affected_functions(p, r, *p.find_function("cmod", "id"));
  CHECK(affected.count(*p.find_function("entry", "main")) == 1);
}

TEST_CASE("isolated function has no dependencies") {
  auto p = testing::must_link("unit entry;\nfunc lonely(a) {\n  return a;\n}\n"
                              "func main() {\n  x = 1;\n  return x;\n}\n");
  auto r = mutual_fixpoint(p);
  auto deps = build_dependency_graph(p, r);
  NodeId lonely{Provenance::entry, "entry", "lonely"};
  CHECK(deps.edges.count(lonely) == 0);
  for (const auto &[consumer, producers] : deps.edges)
    CHECK(producers.count(lonely) == 0);
  CHECK(affected_functions(p, r, *p.find_function("entry", "lonely")) ==
        std::set<FnId>{*p.find_function("entry", "lonely")});
}

TEST_CASE("generated edits match from-scratch analysis") {
  int full = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    GenConfig c;
    c.seed = seed;
    auto p = generate(c);
    auto base = mutual_fixpoint(p);
    auto e = gen_edit(c, p);
    auto q = apply_edit(p, e);
    REQUIRE(q);
    auto rep = reanalyze(*q, base, e.target);
    CHECK(analysis_json(*q, rep.result, false) == scratch(*q));
    CHECK(rep.resummarized.count(e.target) == 1);
    full += rep.resummarized.size() == p.functions().size();
  }
  CHECK(full < 40); // the dependency graph prunes something
}
