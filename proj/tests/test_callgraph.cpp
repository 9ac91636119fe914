#include "doctest.h"
#include "support.hpp"

#include "json.hpp"

using namespace trilang;

namespace {

std::size_t count(const CallGraph &g, Mechanism m) {
  std::size_t n = 0;
  for (const auto &e : g.edges)
    n += e.mechanism == m;
  return n;
}

} // namespace

TEST_CASE("class hierarchy over-approximates virtual dispatch") {
  auto p = testing::load_fixture("chagap");
  auto cha = build_cha(p);
  auto [otf, r] = build_onthefly(p);
  CHECK(cha.edges.size() == 2);
  CHECK(otf.edges.size() == 1);
  CHECK(otf.edges.begin()->callee.str() == "entry.B_get");
  for (const auto &e : otf.edges)
    CHECK(cha.edges.count(e) == 1);

  auto d = diff_graphs(cha, otf);
  CHECK(d.count_only_a() == 1);
  CHECK(d.count_only_b() == 0);
  REQUIRE(d.only_a.count(Mechanism::virtual_call));
  CHECK(d.only_a.at(Mechanism::virtual_call).begin()->callee.str() == "entry.A_get");
}

TEST_CASE("bridge callbacks resolve to the allocated type") {
  auto p = testing::load_fixture("bridge");
  auto cha = build_cha(p);
  auto otf = build_onthefly(p).first;
  auto dyn = graph_from_trace(p, run(p).trace);
  // C is bridge-capable through the unreachable `other`, so CHA also offers C_get
  CHECK(count(cha, Mechanism::bridge_callback) == 3);
  CHECK(count(otf, Mechanism::bridge_callback) == 2);
  CHECK(otf.edges == dyn.edges);
  for (const auto &e : otf.edges)
    if (e.mechanism == Mechanism::bridge_callback)
      CHECK(e.callee.function.rfind("B_", 0) == 0);
}

TEST_CASE("each eval site yields one edge") {
  auto p = testing::load_fixture("basic");
  for (const CallGraph &g : {build_cha(p), build_onthefly(p).first}) {
    std::map<std::string, int> per_site;
    for (const auto &e : g.edges)
      if (e.mechanism == Mechanism::eval)
        ++per_site[e.site];
    CHECK(per_site == std::map<std::string, int>{{"entry:main:1", 1}});
  }
}

TEST_CASE("reachability and unreachable nodes") {
  auto p = testing::load_fixture("bridge");
  auto g = build_onthefly(p).first;
  CHECK(g.nodes.size() == 4);
  CHECK_FALSE(g.nodes.count({Provenance::entry, "entry", "other"}));
  auto all = build_onthefly(p, {}, true).first;
  CHECK(all.nodes == all.universe);
  CHECK(all.edges == g.edges);
  CHECK(build_cha(p, true).nodes == function_universe(p));
}

TEST_CASE("diff rejects graphs of different programs") {
  auto a = build_cha(testing::load_fixture("chagap"));
  auto b = build_cha(testing::load_fixture("bridge"));
  CHECK_THROWS_AS(diff_graphs(a, b), Error);
}

TEST_CASE("dot and json export") {
  auto p = testing::load_fixture("basic");
  auto g = build_onthefly(p).first;
  std::string dot = graph_dot(g);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(dot.find("\"mid.start\" -> \"entry.B_get\" [label=\"bridge-callback\", site=\"mid:start:0\"]") !=
        std::string::npos);
  CHECK(dot.find("label=\"bottom/cmod.compute\"") != std::string::npos);

  auto j = nlohmann::json::parse(graph_json(g));
  CHECK(j.at("nodes").size() == g.nodes.size());
  CHECK(j.at("edges").size() == 3);
  CHECK(graph_json(g) == graph_json(build_onthefly(p).first));

  auto d = nlohmann::json::parse(diff_json(diff_graphs(build_cha(p), g)));
  CHECK(d.is_object());
}
