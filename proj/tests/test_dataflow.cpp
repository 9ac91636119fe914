#include "doctest.h"
#include "support.hpp"

#include <cstdlib>

using namespace trilang;

namespace {

FnId fn(const PolyglotProgram &p, const char *c, const char *f) {
  auto id = p.find_function(c, f);
  REQUIRE(id);
  return *id;
}

bool has_transfer(const FunctionSummary &s, const char *from, const char *to) {
  return s.taint_transfer.count({from, to}) > 0;
}

const char *kMinimalEntry = R"(unit entry;
type B { fields: ; methods: get = B_get }
func B_get(self) {
  k = 1;
  return k;
}
func main() {
  bridge i = new B();
  eval(mid.start, [i]);
  return i;
}
)";
const char *kMinimalMid = "unit mid;\nfunc start() bridge [i] {\n  x = i.get();\n  return x;\n}\n";

} // namespace

TEST_CASE("identity summary") {
  auto p = testing::must_link("unit entry;\nfunc id(a) {\n  return a;\n}\n"
                              "func main() {\n  x = 1;\n  return x;\n}\n");
  auto s = summarize_function(p, fn(p, "entry", "id"), {});
  CHECK(s.pts_effects == std::set<PtsEffect>{{AccessPath{"return", {}, false}, AccessPath{"p0", {}, false}}});
  CHECK(has_transfer(s, "p0", "return"));
  CHECK(s.obligations.empty());
  CHECK_FALSE(s.reached);
}

TEST_CASE("access paths are depth bounded") {
  auto p = testing::must_link("unit entry;\nfunc deep(a) {\n  b = a.x;\n  c = b.y;\n  d = c.z;\n"
                              "  return d;\n}\nfunc main() {\n  x = 1;\n  return x;\n}\n");
  auto s = summarize_function(p, fn(p, "entry", "deep"), {});
  REQUIRE(s.pts_effects.size() == 1);
  const auto &src = s.pts_effects.begin()->source;
  CHECK(src.root == "p0");
  CHECK(src.fields.size() == kPathDepth);
  CHECK(src.widened);
}

TEST_CASE("asm taint transfer") {
  const char *entry = "unit entry;\nfunc main() {\n  x = 1;\n  return x;\n}\n";
  auto p = testing::must_link(entry, {},
                              {"module m {\n  export proc id {\n    l <- load arg0\n    ret l\n  }\n"
                               "  export proc zero {\n    l <- load arg0\n    z <- const 0\n    ret z\n  }\n"
                               "  export proc sum {\n    a <- load arg0\n    b <- load arg1\n"
                               "    c <- add a b\n    ret c\n  }\n}\n"});
  CHECK(has_transfer(summarize_function(p, fn(p, "m", "id"), {}), "arg0", "ret0"));
  CHECK(summarize_function(p, fn(p, "m", "zero"), {}).taint_transfer.empty());
  auto sum = summarize_function(p, fn(p, "m", "sum"), {});
  CHECK(has_transfer(sum, "arg0", "ret0"));
  CHECK(has_transfer(sum, "arg1", "ret0"));
}

TEST_CASE("guest obligations") {
  auto p = testing::load_fixture("basic");
  auto s = summarize_function(p, fn(p, "mid", "start"), {});
  REQUIRE(s.obligations.size() == 1);
  CHECK(s.obligations[0].kind == Mechanism::bridge_callback);
  CHECK(s.obligations[0].target == "get");
  CHECK(s.obligations[0].receiver == "i");
  CHECK(s.obligations[0].site == "mid:start:0");

  auto m = summarize_function(p, p.entry_fn(), {});
  std::set<Mechanism> kinds;
  for (const auto &o : m.obligations)
    kinds.insert(o.kind);
  CHECK(kinds == std::set<Mechanism>{Mechanism::eval, Mechanism::asmcall});
}

TEST_CASE("minimal bridge program converges within three rounds") {
  auto p = testing::must_link(kMinimalEntry, {kMinimalMid});
  auto r = mutual_fixpoint(p);
  CHECK(r.iterations <= 3);
  CHECK(r.monotonicity_violations == 0);
  auto g = resolved_graph(p, r);
  auto dyn = graph_from_trace(p, run(p).trace);
  CHECK(g.edges == dyn.edges);
  CHECK(g.edges.size() == 2);
  auto pts = query_points_to(p, r, "mid.start", "i");
  REQUIRE(pts.size() == 1);
  CHECK(pts.begin()->type == "entry.B");
  CHECK(pts.begin()->bridge);
}

TEST_CASE("boundary-free program takes one round") {
  auto p = testing::must_link(R"(unit entry;
type T { fields: f; methods: get = T_get }
func T_get(self) {
  r = self.f;
  return r;
}
func main() {
  o = new T();
  q = new T();
  o.f = q;
  x = o.get();
  return x;
}
)");
  auto r = mutual_fixpoint(p);
  CHECK(r.iterations == 1);
  auto pts = query_points_to(p, r, "entry.main", "x");
  REQUIRE(pts.size() == 1);
  CHECK(pts.begin()->site == "entry:main:1");
  CHECK(query_points_to(p, r, "entry.T_get", "self").size() == 1);
}

TEST_CASE("points-to queries") {
  auto p = testing::load_fixture("bridge");
  auto r = mutual_fixpoint(p);
  auto y = query_points_to(p, r, "mid.start", "y");
  CHECK(y == std::set<AbstractObject>{{"entry:main:0", "entry.B", true}});
  CHECK(query_points_to(p, r, "mid.start", "x").empty()); // ints only
  CHECK_THROWS_AS(query_points_to(p, r, "mid.nope", "x"), Error);
  CHECK_THROWS_AS(query_points_to(p, r, "mid.start", "nope"), Error);
  CHECK_THROWS_AS(query_points_to(p, r, "nodot", "x"), Error);
}

TEST_CASE("three-hop taint") {
  auto p = testing::load_fixture("taint3");
  auto r = mutual_fixpoint(p);
  auto flows = query_taint_flows(p, r);
  CHECK(flows == std::set<std::pair<std::string, std::string>>{{"entry:main:1", "entry:main:5"}});
  CHECK(has_transfer(r.summaries[static_cast<std::size_t>(fn(p, "cmod", "id"))], "arg0", "ret0"));
}

TEST_CASE("flow-insensitive taint keeps overwritten values") {
  // x is overwritten by a constant before the sink: no flow at run time, but
  // the analysis does not order statements and reports it.
  auto p = testing::must_link("unit entry;\nfunc main() {\n  x = source();\n  x = 0;\n"
                              "  sink(x);\n  return x;\n}\n");
  CHECK(run(p).trace.taint_flows.empty());
  auto flows = query_taint_flows(p, mutual_fixpoint(p));
  CHECK(flows.count({"entry:main:0", "entry:main:2"}) == 1);
}

TEST_CASE("iteration cap") {
  auto p = testing::load_fixture("taint3");
  EngineOptions o;
  o.iteration_cap = 1;
  CHECK_THROWS_AS(mutual_fixpoint(p, o), Error);

  ::setenv("TRILANG_ITER_CAP", "7", 1);
  CHECK(default_iteration_cap() == 7);
  ::unsetenv("TRILANG_ITER_CAP");
  CHECK(default_iteration_cap() == 10000);
}

TEST_CASE("fixtures converge monotonically") {
  for (const char *name : {"basic", "bridge", "chagap", "taint3"}) {
    auto p = testing::load_fixture(name);
    auto r = mutual_fixpoint(p);
    CHECK(r.monotonicity_violations == 0);
    // one more round from the converged state changes nothing
    auto again = resume_fixpoint(p, r, {});
    CHECK(again.iterations == 0);
    CHECK(analysis_json(p, again, false) == analysis_json(p, r, false));
  }
}

TEST_CASE("analysis json is stable") {
  auto p = testing::load_fixture("basic");
  CHECK(analysis_json(p, mutual_fixpoint(p)) == analysis_json(p, mutual_fixpoint(p)));
}
