#include "trilang/asm_syntax.hpp"

#include "lexer.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace trilang::assembly {

using ::trilang::detail::SyntaxAbort;
using ::trilang::detail::TokenCursor;
using ::trilang::detail::TokKind;

std::optional<int> arg_index(std::string_view name) {
  if (name.size() < 4 || name.substr(0, 3) != "arg")
    return std::nullopt;
  auto digits = name.substr(3);
  if (digits.size() > 1 && digits[0] == '0')
    return std::nullopt;
  int v = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc{} || p != digits.data() + digits.size())
    return std::nullopt;
  return v;
}

bool is_implicit_global(std::string_view name) {
  return name == "ret0" || arg_index(name).has_value();
}

std::pair<std::string, std::string> split_target(std::string_view target) {
  auto dot = target.find('.');
  if (dot == std::string_view::npos)
    return {"", std::string(target)};
  return {std::string(target.substr(0, dot)), std::string(target.substr(dot + 1))};
}

std::optional<std::size_t> Procedure::label_index(std::string_view label) const {
  for (std::size_t i = 0; i < body.size(); ++i)
    if (body[i].label && *body[i].label == label)
      return i;
  return std::nullopt;
}

const Procedure *AsmModule::find_procedure(std::string_view n) const {
  for (const auto &p : procedures)
    if (p.name == n)
      return &p;
  return nullptr;
}

Procedure *AsmModule::find_procedure(std::string_view n) {
  for (auto &p : procedures)
    if (p.name == n)
      return &p;
  return nullptr;
}

bool AsmModule::is_global(std::string_view n) const {
  return is_implicit_global(n) ||
         std::find(globals.begin(), globals.end(), n) != globals.end();
}

std::string_view op_mnemonic(OpKind op) {
  switch (op) {
  case OpKind::add:
    return "add";
  case OpKind::sub:
    return "sub";
  case OpKind::mul:
    return "mul";
  }
  return "?";
}

namespace {

void visit_writes(const Instr &i, auto &&f) {
  if (const auto *x = std::get_if<Load>(&i))
    f(x->dst);
  else if (const auto *x = std::get_if<Store>(&i))
    f(x->dst);
  else if (const auto *x = std::get_if<Op>(&i))
    f(x->dst);
  else if (const auto *x = std::get_if<Const>(&i))
    f(x->dst);
}

} // namespace

void derive_locals(const AsmModule &module, Procedure &proc) {
  std::set<std::string> locals;
  for (const auto &li : proc.body)
    visit_writes(li.instr, [&](const std::string &n) {
      if (!module.is_global(n))
        locals.insert(n);
    });
  proc.locals.assign(locals.begin(), locals.end());
}

int max_arg_used(const Procedure &proc) {
  int best = -1;
  for (const auto &li : proc.body)
    if (const auto *l = std::get_if<Load>(&li.instr))
      if (auto k = arg_index(l->src))
        best = std::max(best, *k);
  return best;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

constexpr std::string_view kReserved[] = {
    "module", "global", "export",     "proc", "load", "store", "call", "ret",
    "br",     "compare", "branchcond", "add",  "sub",  "mul",   "const"};

class AsmParser {
public:
  AsmParser(std::string_view text, Diagnostics &diags)
      : cur_(::trilang::detail::tokenize(text, diags), diags) {
    cur_.reserved.assign(std::begin(kReserved), std::end(kReserved));
  }

  AsmModule module() {
    AsmModule m;
    cur_.expect_word("module");
    m.name = cur_.expect_ident("module name");
    cur_.expect_punct("{");
    while (!cur_.is_punct("}")) {
      if (cur_.accept_word("global")) {
        do
          m.globals.push_back(cur_.expect_ident("global name"));
        while (cur_.accept_punct(","));
        cur_.accept_punct(";");
      } else if (cur_.is_word("export") || cur_.is_word("proc")) {
        m.procedures.push_back(procedure());
      } else {
        cur_.fail("expected 'global', 'export' or 'proc' but found " +
                  ::trilang::detail::describe(cur_.peek()));
      }
    }
    cur_.expect_punct("}");
    if (!cur_.at_end())
      cur_.fail("unexpected " + ::trilang::detail::describe(cur_.peek()) + " after module");
    for (auto &p : m.procedures)
      derive_locals(m, p);
    return m;
  }

  std::vector<LabeledInstr> bare_body() {
    std::vector<LabeledInstr> out;
    while (!cur_.at_end())
      out.push_back(instr());
    return out;
  }

private:
  Procedure procedure() {
    Procedure p;
    p.loc = cur_.peek().loc;
    p.exported = cur_.accept_word("export");
    cur_.expect_word("proc");
    p.name = cur_.expect_ident("procedure name");
    cur_.expect_punct("{");
    while (!cur_.is_punct("}")) {
      if (cur_.at_end())
        cur_.fail("unterminated procedure body");
      p.body.push_back(instr());
    }
    cur_.expect_punct("}");
    return p;
  }

  LabeledInstr instr() {
    LabeledInstr li;
    li.loc = cur_.peek().loc;
    if (cur_.peek().kind == TokKind::ident && cur_.is_punct(":", 1)) {
      li.label = cur_.expect_ident("label");
      cur_.expect_punct(":");
    }
    const ::trilang::detail::Token &t = cur_.peek();
    if (t.kind != TokKind::ident)
      cur_.fail("expected instruction but found " + ::trilang::detail::describe(t));
    if (cur_.is_punct("<-", 1)) {
      std::string dst = cur_.expect_ident("destination");
      cur_.expect_punct("<-");
      const ::trilang::detail::Token &m = cur_.peek();
      if (cur_.accept_word("load")) {
        li.instr = Load{dst, cur_.expect_ident("operand")};
      } else if (cur_.accept_word("const")) {
        li.instr = Const{dst, cur_.expect_int()};
      } else if (cur_.is_word("add") || cur_.is_word("sub") || cur_.is_word("mul")) {
        Op op;
        op.dst = dst;
        std::string mn = cur_.next().text;
        op.op = mn == "add" ? OpKind::add : mn == "sub" ? OpKind::sub : OpKind::mul;
        op.lhs = cur_.expect_ident("operand");
        op.rhs = cur_.expect_ident("operand");
        li.instr = std::move(op);
      } else if (m.kind == TokKind::ident) {
        cur_.fail("unknown mnemonic '" + m.text + "'");
      } else {
        cur_.fail("expected mnemonic but found " + ::trilang::detail::describe(m));
      }
      return li;
    }
    std::string mn = t.text;
    if (cur_.accept_word("store")) {
      Store s;
      s.dst = cur_.expect_ident("operand");
      s.src = cur_.expect_ident("operand");
      li.instr = std::move(s);
    } else if (cur_.accept_word("call")) {
      std::string target = cur_.expect_ident("procedure name");
      if (cur_.accept_punct("."))
        target += "." + cur_.expect_ident("procedure name");
      li.instr = Call{std::move(target)};
    } else if (cur_.accept_word("ret")) {
      li.instr = Ret{cur_.expect_ident("operand")};
    } else if (cur_.accept_word("br")) {
      li.instr = Br{cur_.expect_ident("label")};
    } else if (cur_.accept_word("compare")) {
      Compare c;
      c.lhs = cur_.expect_ident("operand");
      c.rhs = cur_.expect_ident("operand");
      li.instr = std::move(c);
    } else if (cur_.accept_word("branchcond")) {
      li.instr = BranchCond{cur_.expect_ident("label")};
    } else {
      cur_.fail("unknown mnemonic '" + mn + "'");
    }
    return li;
  }

  TokenCursor cur_;
};

} // namespace

Parsed<AsmModule> parse_asm(std::string_view text) {
  Parsed<AsmModule> out;
  try {
    AsmParser p(text, out.diags);
    AsmModule m = p.module();
    if (out.diags.empty())
      out.value = std::move(m);
  } catch (const SyntaxAbort &) {
  }
  return out;
}

Parsed<std::vector<LabeledInstr>> parse_asm_body(std::string_view text) {
  Parsed<std::vector<LabeledInstr>> out;
  try {
    AsmParser p(text, out.diags);
    auto body = p.bare_body();
    if (out.diags.empty())
      out.value = std::move(body);
  } catch (const SyntaxAbort &) {
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string render_instr(const Instr &i) {
  struct V {
    std::string operator()(const Load &x) { return x.dst + " <- load " + x.src; }
    std::string operator()(const Store &x) { return "store " + x.dst + " " + x.src; }
    std::string operator()(const Call &x) { return "call " + x.target; }
    std::string operator()(const Ret &x) { return "ret " + x.src; }
    std::string operator()(const Br &x) { return "br " + x.label; }
    std::string operator()(const Compare &x) { return "compare " + x.lhs + " " + x.rhs; }
    std::string operator()(const BranchCond &x) { return "branchcond " + x.label; }
    std::string operator()(const Op &x) {
      return x.dst + " <- " + std::string(op_mnemonic(x.op)) + " " + x.lhs + " " + x.rhs;
    }
    std::string operator()(const Const &x) {
      return x.dst + " <- const " + std::to_string(x.value);
    }
  };
  return std::visit(V{}, i);
}

} // namespace

std::string render_instrs(const std::vector<LabeledInstr> &body, int indent) {
  std::ostringstream os;
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  std::string label_pad(static_cast<std::size_t>(std::max(0, indent - 1)) * 2, ' ');
  for (const auto &li : body) {
    if (li.label)
      os << label_pad << *li.label << ":\n";
    os << pad << render_instr(li.instr) << "\n";
  }
  return os.str();
}

std::string render_asm(const AsmModule &module) {
  std::ostringstream os;
  std::string globals;
  for (std::size_t i = 0; i < module.globals.size(); ++i)
    globals += (i ? ", " : "") + module.globals[i];
  if (module.procedures.empty()) {
    os << "module " << module.name << " { ";
    if (!module.globals.empty())
      os << "global " << globals << " ";
    os << "}\n";
    return os.str();
  }
  os << "module " << module.name << " {\n";
  if (!module.globals.empty())
    os << "  global " << globals << "\n";
  for (const auto &p : module.procedures) {
    os << "  " << (p.exported ? "export " : "") << "proc " << p.name << " {\n";
    os << render_instrs(p.body, 2);
    os << "  }\n";
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Well-formedness

Diagnostics check_asm(const AsmModule &module, std::span<const AsmModule> peers) {
  Diagnostics out;
  auto report = [&](SourceLoc loc, std::string msg) {
    out.push_back({loc, std::move(msg), {}});
  };
  std::set<std::string> globals, procs;
  for (const auto &g : module.globals)
    if (!globals.insert(g).second)
      report({}, "duplicate global " + g);
  for (const auto &p : module.procedures)
    if (!procs.insert(p.name).second)
      report(p.loc, "duplicate procedure " + p.name);

  for (const auto &p : module.procedures) {
    std::set<std::string> labels;
    for (const auto &li : p.body)
      if (li.label && !labels.insert(*li.label).second)
        report(li.loc, "duplicate label " + *li.label);

    Procedure derived = p;
    derive_locals(module, derived);
    std::set<std::string> locals(derived.locals.begin(), derived.locals.end());

    for (const auto &li : p.body) {
      auto local_read = [&](const std::string &n) {
        if (module.is_global(n))
          report(li.loc, "global " + n + " used as a register operand; load it first");
        else if (!locals.count(n))
          report(li.loc, "undeclared local " + n);
      };
      auto local_write = [&](const std::string &n) {
        if (module.is_global(n))
          report(li.loc, "global " + n + " used as a register destination");
      };
      auto label = [&](const std::string &l) {
        if (!labels.count(l))
          report(li.loc, "unresolved label " + l);
      };
      std::visit(
          [&](const auto &x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Load>) {
              local_write(x.dst);
              if (!module.is_global(x.src) && !locals.count(x.src))
                report(li.loc, "undeclared local " + x.src);
            } else if constexpr (std::is_same_v<T, Store>) {
              local_read(x.src);
            } else if constexpr (std::is_same_v<T, Call>) {
              auto [mod, proc] = split_target(x.target);
              if (mod.empty() || mod == module.name) {
                if (!module.find_procedure(proc))
                  report(li.loc, "unknown procedure " + x.target);
              } else {
                for (const auto &peer : peers) {
                  if (peer.name != mod)
                    continue;
                  const Procedure *q = peer.find_procedure(proc);
                  if (!q)
                    report(li.loc, "unknown procedure " + x.target);
                  else if (!q->exported)
                    report(li.loc, "call to non-exported procedure " + x.target);
                }
              }
            } else if constexpr (std::is_same_v<T, Ret>) {
              local_read(x.src);
            } else if constexpr (std::is_same_v<T, Br>) {
              label(x.label);
            } else if constexpr (std::is_same_v<T, Compare>) {
              local_read(x.lhs);
              local_read(x.rhs);
            } else if constexpr (std::is_same_v<T, BranchCond>) {
              label(x.label);
            } else if constexpr (std::is_same_v<T, Op>) {
              local_write(x.dst);
              local_read(x.lhs);
              local_read(x.rhs);
            } else if constexpr (std::is_same_v<T, Const>) {
              local_write(x.dst);
            }
          },
          li.instr);
    }
  }
  return out;
}

} // namespace trilang::assembly
