#include "doctest.h"
#include "support.hpp"

#include <filesystem>

using namespace trilang;

TEST_CASE("host block parses to the expected tree") {
  auto b = host::parse_host_block("x = 1;\nreturn x;\n");
  REQUIRE(b);
  CHECK(host::to_sexpr(*b) == "Seq(ConstAssign(x,1), Return(x))");

  auto c = host::parse_host_block(
      "if (x < 3) { y = x + x; } else { y = 0; }\nwhile (y != 0) { y = y - x; }\n");
  REQUIRE(c);
  CHECK(host::to_sexpr(*c) ==
        "Seq(If(x < 3,BinOp(y,add,x,x),ConstAssign(y,0)), While(y != 0,BinOp(y,sub,y,x)))");

  CHECK(host::to_sexpr({}) == "Skip");
}

TEST_CASE("boundary statements parse") {
  auto b = host::parse_host_block(
      "bridge i = new B();\neval(mid.start, [i]);\ny = asmcall(cmod.compute, x, z);\n"
      "s = source();\nsink(s);\nv = o.get(a);\no.f = v;\nw = o.f;\n");
  REQUIRE(b);
  CHECK(host::to_sexpr(*b) ==
        "Seq(BridgeAlloc(i,B), Seq(Eval(mid,start,[i]), Seq(AsmCall(y,cmod,compute,[x,z]), "
        "Seq(SourceAssign(s), Seq(SinkCall(s), Seq(MethodCall(v,o,get,[a]), "
        "Seq(FieldStore(o,f,v), FieldLoad(w,o,f))))))))");
}

TEST_CASE("malformed host input reports a position") {
  auto u = host::parse_host("unit u;\n\nfunc f() {\n  x = ;\n}\n");
  CHECK_FALSE(u);
  REQUIRE_FALSE(u.diags.empty());
  CHECK(u.diags.front().loc.line == 4);
  CHECK(u.diags.front().loc.column > 0);

  CHECK_FALSE(host::parse_host("unit u;\nfunc f() { return x }\n"));
  CHECK_FALSE(host::parse_host("func f() { }\n")); // no unit header
}

TEST_CASE("host checker") {
  auto check = [](const char *text) {
    auto u = host::parse_host(text);
    REQUIRE(u.value);
    return host::check_host(*u);
  };
  CHECK(testing::mentions(check("unit u;\nfunc f() { return x; }\n"), "undeclared variable x"));
  CHECK(testing::mentions(check("unit u;\nfunc f() { o = new Nope(); return o; }\n"),
                          "unknown type Nope"));
  CHECK(testing::mentions(check("unit u;\nfunc f() bridge [b] { b = 1; return b; }\n"),
                          "cannot assign to bridge variable b"));
  CHECK(testing::mentions(check("unit u;\nfunc f(a, a) { return a; }\n"), "duplicate parameter"));
  CHECK(check("unit u;\ntype T { fields: v; methods: }\nfunc f(a) { o = new T(); o.v = a; "
              "w = o.v; return w; }\n")
            .empty());
}

TEST_CASE("asm module parses and derives locals") {
  auto m = assembly::parse_asm(R"(module cm {
  global g
  export proc p {
    a <- load arg1
    b <- const 4
  top:
    compare a b
    branchcond done
    a <- add a b
    br top
  done:
    store g a
    ret a
  }
})");
  REQUIRE(m);
  const auto *p = m->find_procedure("p");
  REQUIRE(p != nullptr);
  CHECK(p->exported);
  CHECK(p->locals == std::vector<std::string>{"a", "b"});
  CHECK(p->body.size() == 8);
  CHECK(p->label_index("done") == std::optional<std::size_t>(6));
  CHECK(assembly::max_arg_used(*p) == 1);
  CHECK(m->is_global("g"));
  CHECK(m->is_global("arg7"));
  CHECK(m->is_global("ret0"));
  CHECK_FALSE(m->is_global("a"));
  CHECK(assembly::arg_index("arg12") == 12);
  CHECK_FALSE(assembly::arg_index("argx"));
  CHECK(assembly::split_target("mod.proc") == std::pair<std::string, std::string>{"mod", "proc"});
  CHECK(assembly::split_target("proc") == std::pair<std::string, std::string>{"", "proc"});
}

TEST_CASE("asm checker") {
  auto check = [](const char *text) {
    auto m = assembly::parse_asm(text);
    REQUIRE(m.value);
    return assembly::check_asm(*m);
  };
  CHECK(testing::mentions(check("module m {\n proc p {\n  ret x\n }\n}\n"), "undeclared local x"));
  CHECK(testing::mentions(check("module m {\n proc p {\n  br nowhere\n }\n}\n"),
                          "unresolved label nowhere"));
  CHECK(testing::mentions(check("module m {\n proc p {\n l:\n  br l\n l:\n  br l\n }\n}\n"),
                          "duplicate label l"));
  CHECK(testing::mentions(check("module m {\n global g\n proc p {\n  ret g\n }\n}\n"),
                          "global g used as a register operand"));
  CHECK(testing::mentions(check("module m {\n proc p {\n  call q\n  ret ret0\n }\n}\n"),
                          "unknown procedure q"));
}

TEST_CASE("malformed asm input reports a position") {
  auto m = assembly::parse_asm("module m {\n  proc p {\n    x <- frob y\n  }\n}\n");
  CHECK_FALSE(m);
  REQUIRE_FALSE(m.diags.empty());
  CHECK(m.diags.front().loc.line == 3);
}

TEST_CASE("fixture sources roundtrip") {
  namespace fs = std::filesystem;
  int files = 0;
  for (const auto &dir : fs::directory_iterator(TRILANG_FIXTURES))
    for (const auto &f : fs::directory_iterator(dir.path())) {
      std::string text = read_file(f.path());
      if (f.path().extension() == ".poly") {
        auto a = host::parse_host(text);
        REQUIRE(a);
        auto b = host::parse_host(host::render_host(*a));
        REQUIRE(b);
        CHECK(*a == *b);
        CHECK(host::render_host(*a) == host::render_host(*b));
        ++files;
      } else if (f.path().extension() == ".asm") {
        auto a = assembly::parse_asm(text);
        REQUIRE(a);
        auto b = assembly::parse_asm(assembly::render_asm(*a));
        REQUIRE(b);
        CHECK(*a == *b);
        ++files;
      }
    }
  CHECK(files >= 10);
}
