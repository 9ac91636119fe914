#include "trilang/host_syntax.hpp"

#include "lexer.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace trilang::host {

using ::trilang::detail::SyntaxAbort;
using ::trilang::detail::TokenCursor;
using ::trilang::detail::TokKind;

bool operator==(const If &a, const If &b) {
  return a.cond == b.cond && a.then_body == b.then_body &&
         a.has_else == b.has_else && a.else_body == b.else_body;
}

bool operator==(const While &a, const While &b) {
  return a.cond == b.cond && a.body == b.body;
}

const std::string *TypeDecl::method_target(std::string_view method) const {
  for (const auto &m : methods)
    if (m.method == method)
      return &m.function;
  return nullptr;
}

bool TypeDecl::has_field(std::string_view field) const {
  return std::find(fields.begin(), fields.end(), field) != fields.end();
}

const TypeDecl *HostUnit::find_type(std::string_view n) const {
  for (const auto &t : types)
    if (t.name == n)
      return &t;
  return nullptr;
}

const FunctionDecl *HostUnit::find_function(std::string_view n) const {
  for (const auto &f : functions)
    if (f.name == n)
      return &f;
  return nullptr;
}

FunctionDecl *HostUnit::find_function(std::string_view n) {
  for (auto &f : functions)
    if (f.name == n)
      return &f;
  return nullptr;
}

std::string_view binop_symbol(BinOpKind op) {
  switch (op) {
  case BinOpKind::add:
    return "+";
  case BinOpKind::sub:
    return "-";
  case BinOpKind::mul:
    return "*";
  }
  return "?";
}

std::string_view relation_symbol(Relation r) {
  switch (r) {
  case Relation::eq:
    return "==";
  case Relation::ne:
    return "!=";
  case Relation::lt:
    return "<";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

constexpr std::string_view kReserved[] = {
    "unit", "type",  "func", "bridge", "new",     "return", "if",
    "else", "while", "eval", "asmcall", "source", "sink"};

class HostParser {
public:
  HostParser(std::string_view text, Diagnostics &diags)
      : cur_(::trilang::detail::tokenize(text, diags), diags) {
    cur_.reserved.assign(std::begin(kReserved), std::end(kReserved));
  }

  HostUnit unit() {
    HostUnit u;
    cur_.expect_word("unit");
    u.name = cur_.expect_ident("unit name");
    cur_.expect_punct(";");
    while (!cur_.at_end()) {
      if (cur_.is_word("type"))
        u.types.push_back(type_decl());
      else if (cur_.is_word("func"))
        u.functions.push_back(function());
      else
        cur_.fail("expected 'type' or 'func' but found " +
                  ::trilang::detail::describe(cur_.peek()));
    }
    return u;
  }

  Block bare_block() {
    Block b;
    while (!cur_.at_end())
      b.push_back(stmt());
    return b;
  }

private:
  TypeDecl type_decl() {
    TypeDecl t;
    t.loc = cur_.peek().loc;
    cur_.expect_word("type");
    t.name = cur_.expect_ident("type name");
    cur_.expect_punct("{");
    cur_.expect_word("fields");
    cur_.expect_punct(":");
    if (!cur_.is_punct(";")) {
      do
        t.fields.push_back(cur_.expect_ident("field name"));
      while (cur_.accept_punct(","));
    }
    cur_.expect_punct(";");
    cur_.expect_word("methods");
    cur_.expect_punct(":");
    if (!cur_.is_punct("}") && !cur_.is_punct(";")) {
      do {
        MethodEntry m;
        m.method = cur_.expect_ident("method name");
        cur_.expect_punct("=");
        m.function = cur_.expect_ident("function name");
        t.methods.push_back(std::move(m));
      } while (cur_.accept_punct(","));
    }
    cur_.accept_punct(";");
    cur_.expect_punct("}");
    return t;
  }

  FunctionDecl function() {
    FunctionDecl f;
    f.loc = cur_.peek().loc;
    cur_.expect_word("func");
    f.name = cur_.expect_ident("function name");
    cur_.expect_punct("(");
    if (!cur_.is_punct(")")) {
      do
        f.params.push_back(cur_.expect_ident("parameter name"));
      while (cur_.accept_punct(","));
    }
    cur_.expect_punct(")");
    if (cur_.accept_word("bridge"))
      f.bridge_params = name_list();
    f.body = block();
    return f;
  }

  std::vector<std::string> name_list() {
    std::vector<std::string> names;
    cur_.expect_punct("[");
    if (!cur_.is_punct("]")) {
      do
        names.push_back(cur_.expect_ident("bridge variable"));
      while (cur_.accept_punct(","));
    }
    cur_.expect_punct("]");
    return names;
  }

  Block block() {
    Block b;
    cur_.expect_punct("{");
    while (!cur_.is_punct("}")) {
      if (cur_.at_end())
        cur_.fail("unterminated block");
      b.push_back(stmt());
    }
    cur_.expect_punct("}");
    return b;
  }

  Cond cond() {
    Cond c;
    c.lhs = cur_.expect_ident("variable");
    if (cur_.accept_punct("=="))
      c.relation = Relation::eq;
    else if (cur_.accept_punct("!="))
      c.relation = Relation::ne;
    else if (cur_.accept_punct("<"))
      c.relation = Relation::lt;
    else
      cur_.fail("expected comparison operator but found " +
                ::trilang::detail::describe(cur_.peek()));
    if (cur_.peek().kind == TokKind::integer || cur_.is_punct("-"))
      c.rhs = cur_.expect_int();
    else
      c.rhs = cur_.expect_ident("variable");
    return c;
  }

  std::pair<std::string, std::string> qualified() {
    std::string a = cur_.expect_ident("unit or module name");
    cur_.expect_punct(".");
    std::string b = cur_.expect_ident("function name");
    return {a, b};
  }

  Stmt stmt() {
    Stmt s;
    s.loc = cur_.peek().loc;
    if (cur_.accept_word("bridge")) {
      BridgeAlloc b;
      b.bridge = cur_.expect_ident("bridge variable");
      cur_.expect_punct("=");
      cur_.expect_word("new");
      b.type = cur_.expect_ident("type name");
      cur_.expect_punct("(");
      cur_.expect_punct(")");
      cur_.expect_punct(";");
      s.node = std::move(b);
    } else if (cur_.accept_word("return")) {
      s.node = Return{cur_.expect_ident("variable")};
      cur_.expect_punct(";");
    } else if (cur_.accept_word("if")) {
      If i;
      cur_.expect_punct("(");
      i.cond = cond();
      cur_.expect_punct(")");
      i.then_body = block();
      if (cur_.accept_word("else")) {
        i.has_else = true;
        i.else_body = block();
      }
      s.node = std::move(i);
    } else if (cur_.accept_word("while")) {
      While w;
      cur_.expect_punct("(");
      w.cond = cond();
      cur_.expect_punct(")");
      w.body = block();
      s.node = std::move(w);
    } else if (cur_.accept_word("eval")) {
      Eval e;
      cur_.expect_punct("(");
      std::tie(e.unit, e.function) = qualified();
      cur_.expect_punct(",");
      e.exposed = name_list();
      cur_.expect_punct(")");
      cur_.expect_punct(";");
      s.node = std::move(e);
    } else if (cur_.accept_word("sink")) {
      cur_.expect_punct("(");
      s.node = SinkCall{cur_.expect_ident("variable")};
      cur_.expect_punct(")");
      cur_.expect_punct(";");
    } else if (cur_.peek().kind == TokKind::ident && cur_.is_punct(".", 1)) {
      FieldStore fs;
      fs.object = cur_.expect_ident("variable");
      cur_.expect_punct(".");
      fs.field = cur_.expect_ident("field name");
      cur_.expect_punct("=");
      fs.value = cur_.expect_ident("variable");
      cur_.expect_punct(";");
      s.node = std::move(fs);
    } else {
      std::string target = cur_.expect_ident("statement");
      cur_.expect_punct("=");
      s.node = assignment(std::move(target));
      cur_.expect_punct(";");
    }
    return s;
  }

  StmtNode assignment(std::string target) {
    if (cur_.accept_word("new")) {
      Alloc a{std::move(target), cur_.expect_ident("type name")};
      cur_.expect_punct("(");
      cur_.expect_punct(")");
      return a;
    }
    if (cur_.accept_word("source")) {
      cur_.expect_punct("(");
      cur_.expect_punct(")");
      return SourceAssign{std::move(target)};
    }
    if (cur_.accept_word("asmcall")) {
      AsmCall a;
      a.result = std::move(target);
      cur_.expect_punct("(");
      std::tie(a.module, a.procedure) = qualified();
      while (cur_.accept_punct(","))
        a.args.push_back(cur_.expect_ident("argument"));
      cur_.expect_punct(")");
      return a;
    }
    if (cur_.peek().kind == TokKind::integer || cur_.is_punct("-"))
      return ConstAssign{std::move(target), cur_.expect_int()};
    std::string lhs = cur_.expect_ident("variable");
    if (cur_.accept_punct(".")) {
      std::string member = cur_.expect_ident("field or method name");
      if (cur_.accept_punct("(")) {
        MethodCall m{std::move(target), std::move(lhs), std::move(member), {}};
        if (!cur_.is_punct(")")) {
          do
            m.args.push_back(cur_.expect_ident("argument"));
          while (cur_.accept_punct(","));
        }
        cur_.expect_punct(")");
        return m;
      }
      return FieldLoad{std::move(target), std::move(lhs), std::move(member)};
    }
    BinOp b;
    b.result = std::move(target);
    b.lhs = std::move(lhs);
    if (cur_.accept_punct("+"))
      b.op = BinOpKind::add;
    else if (cur_.accept_punct("-"))
      b.op = BinOpKind::sub;
    else if (cur_.accept_punct("*"))
      b.op = BinOpKind::mul;
    else
      cur_.fail("expected operator but found " + ::trilang::detail::describe(cur_.peek()));
    b.rhs = cur_.expect_ident("variable");
    return b;
  }

  TokenCursor cur_;
};

} // namespace

Parsed<HostUnit> parse_host(std::string_view text) {
  Parsed<HostUnit> out;
  try {
    HostParser p(text, out.diags);
    HostUnit u = p.unit();
    if (out.diags.empty())
      out.value = std::move(u);
  } catch (const SyntaxAbort &) {
  }
  return out;
}

Parsed<Block> parse_host_block(std::string_view text) {
  Parsed<Block> out;
  try {
    HostParser p(text, out.diags);
    Block b = p.bare_block();
    if (out.diags.empty())
      out.value = std::move(b);
  } catch (const SyntaxAbort &) {
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string join(const std::vector<std::string> &xs, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i)
      out += sep;
    out += xs[i];
  }
  return out;
}

std::string render_cond(const Cond &c) {
  std::string out = c.lhs + " " + std::string(relation_symbol(c.relation)) + " ";
  if (const auto *v = std::get_if<std::string>(&c.rhs))
    out += *v;
  else
    out += std::to_string(std::get<std::int64_t>(c.rhs));
  return out;
}

void render_stmts(std::ostringstream &os, const Block &b, int indent);

struct StmtRenderer {
  std::ostringstream &os;
  std::string pad;
  int indent;

  void operator()(const Alloc &s) { os << pad << s.var << " = new " << s.type << "();\n"; }
  void operator()(const BridgeAlloc &s) {
    os << pad << "bridge " << s.bridge << " = new " << s.type << "();\n";
  }
  void operator()(const Return &s) { os << pad << "return " << s.var << ";\n"; }
  void operator()(const MethodCall &s) {
    os << pad << s.result << " = " << s.receiver << "." << s.method << "("
       << join(s.args, ", ") << ");\n";
  }
  void operator()(const FieldLoad &s) {
    os << pad << s.result << " = " << s.object << "." << s.field << ";\n";
  }
  void operator()(const FieldStore &s) {
    os << pad << s.object << "." << s.field << " = " << s.value << ";\n";
  }
  void operator()(const If &s) {
    os << pad << "if (" << render_cond(s.cond) << ") {\n";
    render_stmts(os, s.then_body, indent + 1);
    os << pad << "}";
    if (s.has_else) {
      os << " else {\n";
      render_stmts(os, s.else_body, indent + 1);
      os << pad << "}";
    }
    os << "\n";
  }
  void operator()(const While &s) {
    os << pad << "while (" << render_cond(s.cond) << ") {\n";
    render_stmts(os, s.body, indent + 1);
    os << pad << "}\n";
  }
  void operator()(const BinOp &s) {
    os << pad << s.result << " = " << s.lhs << " " << binop_symbol(s.op) << " "
       << s.rhs << ";\n";
  }
  void operator()(const ConstAssign &s) {
    os << pad << s.var << " = " << s.value << ";\n";
  }
  void operator()(const Eval &s) {
    os << pad << "eval(" << s.unit << "." << s.function << ", ["
       << join(s.exposed, ", ") << "]);\n";
  }
  void operator()(const AsmCall &s) {
    os << pad << s.result << " = asmcall(" << s.module << "." << s.procedure;
    for (const auto &a : s.args)
      os << ", " << a;
    os << ");\n";
  }
  void operator()(const SourceAssign &s) { os << pad << s.var << " = source();\n"; }
  void operator()(const SinkCall &s) { os << pad << "sink(" << s.var << ");\n"; }
};

void render_stmts(std::ostringstream &os, const Block &b, int indent) {
  StmtRenderer r{os, std::string(static_cast<std::size_t>(indent) * 2, ' '), indent};
  for (const Stmt &s : b)
    std::visit(r, s.node);
}

} // namespace

std::string render_block(const Block &block, int indent) {
  std::ostringstream os;
  render_stmts(os, block, indent);
  return os.str();
}

std::string render_host(const HostUnit &unit) {
  std::ostringstream os;
  os << "unit " << unit.name << ";\n";
  for (const TypeDecl &t : unit.types) {
    os << "\ntype " << t.name << " { fields: " << join(t.fields, ", ")
       << "; methods: ";
    for (std::size_t i = 0; i < t.methods.size(); ++i) {
      if (i)
        os << ", ";
      os << t.methods[i].method << " = " << t.methods[i].function;
    }
    os << (t.methods.empty() ? "}\n" : " }\n");
  }
  for (const FunctionDecl &f : unit.functions) {
    os << "\nfunc " << f.name << "(" << join(f.params, ", ") << ")";
    if (!f.bridge_params.empty())
      os << " bridge [" << join(f.bridge_params, ", ") << "]";
    os << " {\n";
    render_stmts(os, f.body, 1);
    os << "}\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// S-expression view

namespace {

std::string list(const std::vector<std::string> &xs) {
  return "[" + join(xs, ",") + "]";
}

std::string op_name(BinOpKind op) {
  switch (op) {
  case BinOpKind::add:
    return "add";
  case BinOpKind::sub:
    return "sub";
  case BinOpKind::mul:
    return "mul";
  }
  return "?";
}

std::string stmt_sexpr(const Stmt &s) {
  struct V {
    std::string operator()(const Alloc &x) { return "Alloc(" + x.var + "," + x.type + ")"; }
    std::string operator()(const BridgeAlloc &x) {
      return "BridgeAlloc(" + x.bridge + "," + x.type + ")";
    }
    std::string operator()(const Return &x) { return "Return(" + x.var + ")"; }
    std::string operator()(const MethodCall &x) {
      return "MethodCall(" + x.result + "," + x.receiver + "," + x.method + "," +
             list(x.args) + ")";
    }
    std::string operator()(const FieldLoad &x) {
      return "FieldLoad(" + x.result + "," + x.object + "," + x.field + ")";
    }
    std::string operator()(const FieldStore &x) {
      return "FieldStore(" + x.object + "," + x.field + "," + x.value + ")";
    }
    std::string operator()(const If &x) {
      std::string out = "If(" + render_cond(x.cond) + "," + to_sexpr(x.then_body);
      if (x.has_else)
        out += "," + to_sexpr(x.else_body);
      return out + ")";
    }
    std::string operator()(const While &x) {
      return "While(" + render_cond(x.cond) + "," + to_sexpr(x.body) + ")";
    }
    std::string operator()(const BinOp &x) {
      return "BinOp(" + x.result + "," + op_name(x.op) + "," + x.lhs + "," + x.rhs + ")";
    }
    std::string operator()(const ConstAssign &x) {
      return "ConstAssign(" + x.var + "," + std::to_string(x.value) + ")";
    }
    std::string operator()(const Eval &x) {
      return "Eval(" + x.unit + "," + x.function + "," + list(x.exposed) + ")";
    }
    std::string operator()(const AsmCall &x) {
      return "AsmCall(" + x.result + "," + x.module + "," + x.procedure + "," +
             list(x.args) + ")";
    }
    std::string operator()(const SourceAssign &x) { return "SourceAssign(" + x.var + ")"; }
    std::string operator()(const SinkCall &x) { return "SinkCall(" + x.var + ")"; }
  };
  return std::visit(V{}, s.node);
}

} // namespace

std::string to_sexpr(const Block &block) {
  if (block.empty())
    return "Skip";
  std::string out = stmt_sexpr(block.back());
  for (std::size_t i = block.size() - 1; i-- > 0;)
    out = "Seq(" + stmt_sexpr(block[i]) + ", " + out + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Well-formedness

namespace {

class FunctionChecker {
public:
  FunctionChecker(const HostUnit &unit, const FunctionDecl &fn, Diagnostics &out)
      : unit_(unit), fn_(fn), out_(out) {}

  void run() {
    std::set<std::string> seen;
    for (const auto &p : fn_.params)
      if (!seen.insert(p).second)
        report(fn_.loc, "duplicate parameter " + p + " in function " + fn_.name);
    for (const auto &p : fn_.bridge_params)
      if (!seen.insert(p).second)
        report(fn_.loc, "duplicate parameter " + p + " in function " + fn_.name);

    bridge_names_.insert(fn_.bridge_params.begin(), fn_.bridge_params.end());
    for_each_stmt(fn_.body, [&](const Stmt &s, int) {
      if (const auto *b = std::get_if<BridgeAlloc>(&s.node))
        bridge_names_.insert(b->bridge);
    });

    std::set<std::string> defined(fn_.params.begin(), fn_.params.end());
    defined.insert(fn_.bridge_params.begin(), fn_.bridge_params.end());
    block(fn_.body, defined);
  }

private:
  void report(SourceLoc loc, std::string msg) {
    out_.push_back({loc, std::move(msg), {}});
  }

  void read(const Stmt &s, const std::string &v, const std::set<std::string> &defined) {
    if (defined.count(v))
      return;
    if (bridge_names_.count(v))
      report(s.loc, "undeclared bridge variable " + v);
    else
      report(s.loc, "undeclared variable " + v);
  }

  void write(const Stmt &s, const std::string &v, std::set<std::string> &defined) {
    if (bridge_names_.count(v))
      report(s.loc, "cannot assign to bridge variable " + v);
    defined.insert(v);
  }

  void check_type(const Stmt &s, const std::string &t) {
    if (!unit_.find_type(t))
      report(s.loc, "unknown type " + t);
  }

  void cond(const Stmt &s, const Cond &c, const std::set<std::string> &defined) {
    read(s, c.lhs, defined);
    if (const auto *v = std::get_if<std::string>(&c.rhs))
      read(s, *v, defined);
  }

  void block(const Block &b, std::set<std::string> &defined) {
    for (const Stmt &s : b)
      stmt(s, defined);
  }

  void stmt(const Stmt &s, std::set<std::string> &defined) {
    std::visit(
        [&](const auto &x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Alloc>) {
            check_type(s, x.type);
            write(s, x.var, defined);
          } else if constexpr (std::is_same_v<T, BridgeAlloc>) {
            check_type(s, x.type);
            if (std::find(fn_.params.begin(), fn_.params.end(), x.bridge) !=
                fn_.params.end())
              report(s.loc, "bridge variable " + x.bridge + " shadows a parameter");
            defined.insert(x.bridge);
          } else if constexpr (std::is_same_v<T, Return>) {
            read(s, x.var, defined);
          } else if constexpr (std::is_same_v<T, MethodCall>) {
            read(s, x.receiver, defined);
            for (const auto &a : x.args)
              read(s, a, defined);
            write(s, x.result, defined);
          } else if constexpr (std::is_same_v<T, FieldLoad>) {
            read(s, x.object, defined);
            write(s, x.result, defined);
          } else if constexpr (std::is_same_v<T, FieldStore>) {
            read(s, x.object, defined);
            read(s, x.value, defined);
          } else if constexpr (std::is_same_v<T, If>) {
            cond(s, x.cond, defined);
            std::set<std::string> then_defs = defined;
            block(x.then_body, then_defs);
            if (x.has_else) {
              std::set<std::string> else_defs = defined;
              block(x.else_body, else_defs);
              for (const auto &v : then_defs)
                if (else_defs.count(v))
                  defined.insert(v);
            }
          } else if constexpr (std::is_same_v<T, While>) {
            cond(s, x.cond, defined);
            std::set<std::string> body_defs = defined;
            block(x.body, body_defs);
          } else if constexpr (std::is_same_v<T, BinOp>) {
            read(s, x.lhs, defined);
            read(s, x.rhs, defined);
            write(s, x.result, defined);
          } else if constexpr (std::is_same_v<T, ConstAssign>) {
            write(s, x.var, defined);
          } else if constexpr (std::is_same_v<T, Eval>) {
            for (const auto &name : x.exposed) {
              if (!bridge_names_.count(name) || !defined.count(name))
                report(s.loc, "undeclared bridge variable " + name);
            }
          } else if constexpr (std::is_same_v<T, AsmCall>) {
            for (const auto &a : x.args)
              read(s, a, defined);
            write(s, x.result, defined);
          } else if constexpr (std::is_same_v<T, SourceAssign>) {
            write(s, x.var, defined);
          } else if constexpr (std::is_same_v<T, SinkCall>) {
            read(s, x.var, defined);
          }
        },
        s.node);
  }

  const HostUnit &unit_;
  const FunctionDecl &fn_;
  Diagnostics &out_;
  std::set<std::string> bridge_names_;
};

} // namespace

Diagnostics check_host(const HostUnit &unit) {
  Diagnostics out;
  std::set<std::string> type_names, fn_names;
  for (const TypeDecl &t : unit.types) {
    if (!type_names.insert(t.name).second)
      out.push_back({t.loc, "duplicate type " + t.name, {}});
    std::set<std::string> fields, methods;
    for (const auto &f : t.fields)
      if (!fields.insert(f).second)
        out.push_back({t.loc, "duplicate field " + f + " in type " + t.name, {}});
    for (const auto &m : t.methods) {
      if (!methods.insert(m.method).second)
        out.push_back({t.loc, "duplicate method " + m.method + " in type " + t.name, {}});
      const FunctionDecl *target = unit.find_function(m.function);
      if (!target)
        out.push_back({t.loc,
                       "method " + m.method + " of type " + t.name +
                           " targets missing function " + m.function,
                       {}});
      else if (target->params.empty())
        out.push_back({t.loc,
                       "method target " + m.function +
                           " must take a receiver parameter",
                       {}});
    }
  }
  for (const FunctionDecl &f : unit.functions) {
    if (!fn_names.insert(f.name).second)
      out.push_back({f.loc, "duplicate function " + f.name, {}});
    FunctionChecker(unit, f, out).run();
  }
  return out;
}

} // namespace trilang::host
