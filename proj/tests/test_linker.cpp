#include "doctest.h"
#include "support.hpp"

using namespace trilang;

namespace {

const char *kMid = "unit mid;\nfunc start() bridge [i] {\n  x = i.get();\n  return x;\n}\n";
const char *kAsm = "module cm {\n  export proc id {\n    l <- load arg0\n    ret l\n  }\n"
                   "  proc hidden {\n    z <- const 0\n    ret z\n  }\n}\n";

std::string entry_with(const std::string &body) {
  return "unit entry;\ntype B { fields: v; methods: get = B_get }\n"
         "func B_get(self) {\n  r = self.v;\n  return r;\n}\n"
         "func main() {\n" + body + "}\n";
}

Diagnostics diags_of(const std::string &body) {
  return testing::link_text(entry_with(body), {kMid}, {kAsm}).diags;
}

} // namespace

TEST_CASE("well-formed program links") {
  auto p = testing::link_text(
      entry_with("  bridge i = new B();\n  eval(mid.start, [i]);\n  x = 1;\n"
                 "  y = asmcall(cm.id, x);\n  return y;\n"),
      {kMid}, {kAsm});
  REQUIRE(p);
  CHECK(p->entry_function() == "main");
  CHECK(p->middles().size() == 1);
  CHECK(p->asms().size() == 1);
  CHECK(p->functions().size() == 5);
  CHECK(p->function(p->entry_fn()).node.str() == "entry.main");
}

TEST_CASE("boundary diagnostics") {
  CHECK(testing::mentions(diags_of("  eval(mid.nope, []);\n  x = 1;\n  return x;\n"),
                          "unresolved guest function mid.nope"));
  CHECK(testing::mentions(diags_of("  eval(entry.B_get, []);\n  x = 1;\n  return x;\n"),
                          "must be a middle unit"));
  CHECK(testing::mentions(diags_of("  bridge j = new B();\n  eval(mid.start, [j]);\n  return j;\n"),
                          "bridge variable i required by mid.start"));
  CHECK(testing::mentions(diags_of("  x = 1;\n  y = asmcall(cm.nope, x);\n  return y;\n"),
                          "unresolved asm target cm.nope"));
  CHECK(testing::mentions(diags_of("  y = asmcall(cm.hidden);\n  return y;\n"),
                          "target not exported: cm.hidden"));
  CHECK(testing::mentions(diags_of("  y = asmcall(cm.id);\n  return y;\n"), "arity mismatch"));
  CHECK(testing::mentions(diags_of("  o = new B();\n  y = asmcall(cm.id, o);\n  return y;\n"),
                          "object argument o"));

  auto no_main = testing::link_text("unit entry;\nfunc start() {\n  x = 1;\n  return x;\n}\n");
  CHECK(testing::mentions(no_main.diags, "entry function main not found"));
}

TEST_CASE("binding lookup") {
  auto p = testing::load_fixture("basic");
  auto e = lookup_binding(p, "entry:main:1");
  REQUIRE(std::holds_alternative<EvalBinding>(e));
  CHECK(std::get<EvalBinding>(e) == EvalBinding{"mid", "start", {"i"}});
  auto a = lookup_binding(p, "entry:main:3");
  REQUIRE(std::holds_alternative<AsmBinding>(a));
  CHECK(std::get<AsmBinding>(a) == AsmBinding{"cmod", "compute", 1});
  CHECK_THROWS_AS(lookup_binding(p, "entry:main:2"), Error); // x = 3
  CHECK_THROWS_AS(lookup_binding(p, "entry:main:99"), Error);
  CHECK_THROWS_AS(lookup_binding(p, "garbage"), Error);
}

TEST_CASE("program index") {
  auto p = testing::load_fixture("basic");
  auto start = p.find_function("mid", "start");
  REQUIRE(start);
  CHECK(p.function(*start).node.provenance == Provenance::middle);
  CHECK(p.function(*start).is_bridge_param("i"));
  auto compute = p.find_function("cmod", "compute");
  REQUIRE(compute);
  CHECK(p.function(*compute).node.provenance == Provenance::bottom);
  CHECK_FALSE(p.find_function("cmod", "absent"));

  const auto &main = p.function(p.entry_fn());
  REQUIRE(main.sites.size() == 6);
  for (std::size_t i = 0; i < main.sites.size(); ++i)
    CHECK(p.site(main.sites[i]).id == "entry:main:" + std::to_string(i));

  auto bm = p.bindings().bridge_methods.find({"entry.B", "get"});
  REQUIRE(bm != p.bindings().bridge_methods.end());
  CHECK(bm->second.str() == "entry.B_get");
  REQUIRE(p.object_sites().size() == 1);
  CHECK(p.site(p.object_sites()[0]).bridge_alloc);
}

TEST_CASE("relinking keeps site ids of unchanged statements") {
  auto p = testing::load_fixture("basic");
  auto before = *p.find_site("cmod:compute:4");
  auto start = *p.find_function("mid", "start");
  auto body = host::parse_host_block("y = 1;\nx = i.get();\nreturn x;\n");
  REQUIRE(body);
  auto q = relink_with_body(p, start, *body);
  REQUIRE(q);
  CHECK(*q->find_site("cmod:compute:4") == before);
  CHECK(q->find_site("mid:start:2"));

  auto wrong = relink_with_body(p, start, std::vector<assembly::LabeledInstr>{});
  CHECK(testing::mentions(wrong.diags, "must be host code"));
}

TEST_CASE("manifest errors") {
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), Error);
  auto dir = std::filesystem::temp_directory_path() / "trilang-bad-manifest";
  std::filesystem::create_directories(dir);
  write_file(dir / "manifest.json", "{\"entry\": 3");
  CHECK_THROWS_AS(load_manifest(dir / "manifest.json"), Error);
  write_file(dir / "manifest.json", R"({"entry":"missing.poly","middle":[],"asm":[],"entry_function":"main"})");
  auto missing = link(load_manifest(dir / "manifest.json"));
  CHECK_FALSE(missing);
  CHECK(testing::mentions(missing.diags, "cannot open"));
}
