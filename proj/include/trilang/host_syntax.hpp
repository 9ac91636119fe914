#pragma once

// Abstract syntax for the host/middle language: units of types and
// functions whose statements include the two boundary constructs
// `eval(unit.fn, [bridges])` and `v = asmcall(mod.proc, args)`.

#include "trilang/diagnostics.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace trilang::host {

enum class BinOpKind { add, sub, mul };
enum class Relation { eq, ne, lt };

struct Stmt;
using Block = std::vector<Stmt>;

struct Cond {
  std::string lhs;
  Relation relation = Relation::eq;
  std::variant<std::string, std::int64_t> rhs;
  friend bool operator==(const Cond &, const Cond &) = default;
};

struct Alloc {
  std::string var, type;
  friend bool operator==(const Alloc &, const Alloc &) = default;
};
struct BridgeAlloc {
  std::string bridge, type;
  friend bool operator==(const BridgeAlloc &, const BridgeAlloc &) = default;
};
struct Return {
  std::string var;
  friend bool operator==(const Return &, const Return &) = default;
};
struct MethodCall {
  std::string result, receiver, method;
  std::vector<std::string> args;
  friend bool operator==(const MethodCall &, const MethodCall &) = default;
};
struct FieldLoad {
  std::string result, object, field;
  friend bool operator==(const FieldLoad &, const FieldLoad &) = default;
};
struct FieldStore {
  std::string object, field, value;
  friend bool operator==(const FieldStore &, const FieldStore &) = default;
};
struct If {
  Cond cond;
  Block then_body;
  bool has_else = false;
  Block else_body;
  friend bool operator==(const If &, const If &);
};
struct While {
  Cond cond;
  Block body;
  friend bool operator==(const While &, const While &);
};
struct BinOp {
  std::string result;
  BinOpKind op = BinOpKind::add;
  std::string lhs, rhs;
  friend bool operator==(const BinOp &, const BinOp &) = default;
};
struct ConstAssign {
  std::string var;
  std::int64_t value = 0;
  friend bool operator==(const ConstAssign &, const ConstAssign &) = default;
};
struct Eval {
  std::string unit, function;
  std::vector<std::string> exposed;
  friend bool operator==(const Eval &, const Eval &) = default;
};
struct AsmCall {
  std::string result, module, procedure;
  std::vector<std::string> args;
  friend bool operator==(const AsmCall &, const AsmCall &) = default;
};
struct SourceAssign {
  std::string var;
  friend bool operator==(const SourceAssign &, const SourceAssign &) = default;
};
struct SinkCall {
  std::string var;
  friend bool operator==(const SinkCall &, const SinkCall &) = default;
};

using StmtNode =
    std::variant<Alloc, BridgeAlloc, Return, MethodCall, FieldLoad, FieldStore,
                 If, While, BinOp, ConstAssign, Eval, AsmCall, SourceAssign,
                 SinkCall>;

struct Stmt {
  StmtNode node;
  SourceLoc loc; // not part of structural equality

  friend bool operator==(const Stmt &a, const Stmt &b) {
    return a.node == b.node;
  }
};

struct MethodEntry {
  std::string method, function;
  friend bool operator==(const MethodEntry &, const MethodEntry &) = default;
};

struct TypeDecl {
  std::string name;
  std::vector<std::string> fields;
  std::vector<MethodEntry> methods;
  SourceLoc loc;

  const std::string *method_target(std::string_view method) const;
  bool has_field(std::string_view field) const;

  friend bool operator==(const TypeDecl &a, const TypeDecl &b) {
    return a.name == b.name && a.fields == b.fields && a.methods == b.methods;
  }
};

struct FunctionDecl {
  std::string name;
  std::vector<std::string> params;
  /// Bridge names this function expects an `eval` site to expose.
  std::vector<std::string> bridge_params;
  Block body;
  SourceLoc loc;

  friend bool operator==(const FunctionDecl &a, const FunctionDecl &b) {
    return a.name == b.name && a.params == b.params &&
           a.bridge_params == b.bridge_params && a.body == b.body;
  }
};

struct HostUnit {
  std::string name;
  std::vector<TypeDecl> types;
  std::vector<FunctionDecl> functions;

  const TypeDecl *find_type(std::string_view n) const;
  const FunctionDecl *find_function(std::string_view n) const;
  FunctionDecl *find_function(std::string_view n);

  friend bool operator==(const HostUnit &, const HostUnit &) = default;
};

Parsed<HostUnit> parse_host(std::string_view text);

/// Parses a bare statement list (the inside of a function body).
Parsed<Block> parse_host_block(std::string_view text);

std::string render_host(const HostUnit &unit);
std::string render_block(const Block &block, int indent);

Diagnostics check_host(const HostUnit &unit);

/// Right-nested Seq(...) form of a statement list, used in tests and
/// debugging output. An empty block prints as `Skip`.
std::string to_sexpr(const Block &block);

/// Visits every statement of a block in pre-order. The visit index is the
/// statement's stable index within its function (site numbering).
template <typename F> void for_each_stmt(const Block &block, F &&f);

std::string_view binop_symbol(BinOpKind op);
std::string_view relation_symbol(Relation r);

namespace detail {
template <typename F> void walk(const Block &block, int &index, F &f) {
  for (const Stmt &s : block) {
    f(s, index++);
    if (const auto *i = std::get_if<If>(&s.node)) {
      walk(i->then_body, index, f);
      walk(i->else_body, index, f);
    } else if (const auto *w = std::get_if<While>(&s.node)) {
      walk(w->body, index, f);
    }
  }
}
} // namespace detail

template <typename F> void for_each_stmt(const Block &block, F &&f) {
  int index = 0;
  detail::walk(block, index, f);
}

} // namespace trilang::host
