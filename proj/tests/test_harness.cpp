#include "doctest.h"
#include "support.hpp"

#include "json.hpp"

using namespace trilang;

TEST_CASE("generation is deterministic per seed") {
  GenConfig c;
  c.seed = 17;
  auto a = render_sources(generate(c));
  auto b = render_sources(generate(c));
  CHECK(a == b);
  c.seed = 18;
  CHECK(render_sources(generate(c)) != a);
}

TEST_CASE("generated programs are well formed") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    GenConfig c;
    c.seed = seed;
    auto p = generate(c);
    CHECK(sources_roundtrip(p));
    CHECK(p.middles().size() == 2);
    CHECK(p.asms().size() == 2);
    auto r = run(p);
    CHECK(r.outcome == Outcome::completed);
  }
}

TEST_CASE("written programs link back to the same sources") {
  GenConfig c;
  c.seed = 5;
  auto p = generate(c);
  auto dir = std::filesystem::temp_directory_path() / "trilang-gen-5";
  std::filesystem::remove_all(dir);
  write_program(p, dir);
  auto q = link(load_manifest(dir / "manifest.json"));
  REQUIRE(q);
  CHECK(render_sources(*q) == render_sources(p));
}

TEST_CASE("config validation") {
  GenConfig c;
  CHECK_NOTHROW(validate(c));
  c.types = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.p_eval = 1.5;
  CHECK_THROWS_AS(validate(c), Error);
  CHECK_THROWS_AS(config_from_json(R"({"typez": 2})"), Error);
  CHECK_THROWS_AS(config_from_json("{"), Error);
  auto parsed = config_from_json(R"({"types": 4, "p_bridge": 0.25})");
  CHECK(parsed.types == 4);
  CHECK(parsed.p_bridge == 0.25);
  CHECK(parsed.stmts == GenConfig{}.stmts);
  CHECK(config_from_json(config_json(parsed)).types == 4);
}

TEST_CASE("zero boundary densities") {
  GenConfig c;
  c.p_eval = c.p_asmcall = c.p_bridge = 0;
  auto rep = soundness_suite(0, 29, c);
  CHECK(rep.violations() == 0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    c.seed = seed;
    auto p = generate(c);
    for (const auto &e : build_cha(p).edges)
      CHECK_FALSE(is_boundary(e.mechanism));
  }
}

TEST_CASE("suite catches a broken analysis") {
  SuiteOptions o;
  o.engine.disable_bridge_edges = true;
  auto rep = soundness_suite(0, 19, {}, o);
  CHECK(rep.violations() >= 1);
  auto j = nlohmann::json::parse(suite_json(rep));
  CHECK(j.at("violations").get<std::size_t>() == rep.violations());
  CHECK_FALSE(j.at("failures").empty());
}

TEST_CASE("suite is deterministic across thread counts") {
  SuiteOptions one, many;
  one.threads = 1;
  many.threads = 4;
  CHECK(suite_json(soundness_suite(0, 15, {}, one)) == suite_json(soundness_suite(0, 15, {}, many)));
}

TEST_CASE("hop depths count boundary crossings") {
  auto p = testing::load_fixture("basic");
  auto d = hop_depths(p, build_onthefly(p).first);
  auto at = [&](const char *c, const char *f) { return d.at(p.function(*p.find_function(c, f)).node); };
  CHECK(at("entry", "main") == 0);
  CHECK(at("mid", "start") == 1);
  CHECK(at("entry", "B_get") == 2);
  CHECK(at("cmod", "compute") == 1);
}

TEST_CASE("precision on the CHA gap fixture") {
  auto p = testing::load_fixture("chagap");
  auto r = measure_precision(p, build_cha(p), {}, {run(p).trace});
  CHECK(r.unsound.empty());
  CHECK(r.total_spurious() == 1);
  CHECK(r.by_mechanism.at(Mechanism::virtual_call).spurious == 1);
  CHECK(r.spurious_by_depth.at("0").at(Mechanism::virtual_call) == 1);

  auto exact = measure_precision(p, build_onthefly(p).first, {}, {run(p).trace});
  CHECK(exact.total_spurious() == 0);
}

TEST_CASE("precision on the taint fixture") {
  auto p = testing::load_fixture("taint3");
  auto run_result = run(p);
  auto [graph, flows] = static_from_json(p, analysis_json(p, mutual_fixpoint(p)));
  auto trace = trace_from_json(trace_json(run_result)).trace;
  auto r = measure_precision(p, graph, flows, {trace});
  CHECK(r.static_flows == 1);
  CHECK(r.dynamic_flows == 1);
  CHECK(r.spurious_flows == 0);
  CHECK(r.unsound.empty());

  // an empty static claim is flagged, but the report is still produced
  CallGraph empty;
  empty.universe = function_universe(p);
  auto bad = measure_precision(p, empty, {}, {trace});
  CHECK(bad.unsound.size() == 3); // two edges, one flow
  CHECK(nlohmann::json::parse(precision_json(bad)).at("sound") == false);

  CHECK_THROWS_AS(static_from_json(p, R"({"nodes":["x.y"],"edges":[]})"), Error);
}
