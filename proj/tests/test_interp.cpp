#include "doctest.h"
#include "support.hpp"

using namespace trilang;

namespace {

const char *kId = "module cm {\n  export proc id {\n    l <- load arg0\n    ret l\n  }\n}\n";

RunResult run_main(const std::string &body, std::uint64_t limit = kDefaultStepLimit) {
  auto p = testing::must_link("unit entry;\ntype B { fields: v; methods: }\nfunc main() {\n" +
                                  body + "}\n",
                              {}, {kId});
  return run(p, limit);
}

} // namespace

TEST_CASE("taint through an asm identity") {
  // source, asmcall (load, ret), sink, return: six steps
  auto r = run_main("  x = source();\n  y = asmcall(cm.id, x);\n  sink(y);\n  return y;\n");
  CHECK(r.outcome == Outcome::completed);
  CHECK(r.trace.steps == 6);
  REQUIRE(r.trace.taint_flows.size() == 1);
  CHECK(*r.trace.taint_flows.begin() == TaintFlow{"entry:main:0", "entry:main:2"});
  REQUIRE(r.trace.call_edges.size() == 1);
  CHECK(*r.trace.call_edges.begin() ==
        TraceEdge{"entry.main", "entry:main:1", "cm.id", Mechanism::asmcall});
}

TEST_CASE("untainted sink records nothing") {
  auto r = run_main("  x = 5;\n  sink(x);\n  return x;\n");
  CHECK(r.outcome == Outcome::completed);
  CHECK(r.trace.steps == 3);
  CHECK(r.trace.taint_flows.empty());
}

TEST_CASE("loop step accounting") {
  // condition false on entry: assign, one check, return
  auto r = run_main("  x = 1;\n  while (x != x) {\n    x = x + x;\n  }\n  return x;\n");
  CHECK(r.outcome == Outcome::completed);
  CHECK(r.trace.steps == 3);

  // 2 assigns + 4 checks + 3 bodies + return
  auto s = run_main("  c = 0;\n  k = 1;\n  while (c < 3) {\n    c = c + k;\n  }\n  return c;\n");
  CHECK(s.trace.steps == 10);
}

TEST_CASE("step limit") {
  auto r = run_main("  x = 1;\n  while (x == x) {\n    x = x + x;\n  }\n  return x;\n", 50);
  CHECK(r.outcome == Outcome::step_limit_exceeded);
  CHECK(r.trace.steps == 50);
}

TEST_CASE("runtime faults") {
  auto r = run_main("  o = new B();\n  z = o + o;\n  return z;\n");
  CHECK(r.outcome == Outcome::runtime_fault);
  CHECK_FALSE(r.fault.empty());

  auto missing = run_main("  o = new B();\n  z = o.nope;\n  return z;\n"); // B has no such field
  CHECK(missing.outcome == Outcome::runtime_fault);
}

TEST_CASE("fixture traces") {
  auto basic = run(testing::load_fixture("basic"));
  CHECK(basic.outcome == Outcome::completed);
  CHECK(basic.trace.steps == 15);
  std::set<Mechanism> kinds;
  for (const auto &e : basic.trace.call_edges)
    kinds.insert(e.mechanism);
  CHECK(kinds == std::set<Mechanism>{Mechanism::eval, Mechanism::asmcall,
                                     Mechanism::bridge_callback});

  auto taint = run(testing::load_fixture("taint3"));
  CHECK(taint.trace.steps == 13);
  CHECK(taint.trace.taint_flows == std::set<TaintFlow>{{"entry:main:1", "entry:main:5"}});
}

TEST_CASE("trace json roundtrip") {
  auto r = run(testing::load_fixture("basic"));
  auto back = trace_from_json(trace_json(r));
  CHECK(back.outcome == r.outcome);
  CHECK(back.trace.steps == r.trace.steps);
  CHECK(back.trace.call_edges == r.trace.call_edges);
  CHECK(back.trace.taint_flows == r.trace.taint_flows);
  CHECK(trace_json(back) == trace_json(r));
  CHECK_THROWS_AS(trace_from_json("{"), Error);
}

TEST_CASE("runs are deterministic") {
  auto p = testing::load_fixture("bridge");
  CHECK(trace_json(run(p)) == trace_json(run(p)));
}
