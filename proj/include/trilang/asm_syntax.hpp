#pragma once

// Abstract assembly: modules of globals and procedures whose bodies are
// labelled instruction lists. Procedures have no parameter lists; data moves
// through the implicit module globals arg0..argN and ret0.

#include "trilang/diagnostics.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace trilang::assembly {

enum class OpKind { add, sub, mul };

struct Load {
  std::string dst, src;
  friend bool operator==(const Load &, const Load &) = default;
};
struct Store {
  std::string dst, src;
  friend bool operator==(const Store &, const Store &) = default;
};
struct Call {
  std::string target; // `proc` or `module.proc`
  friend bool operator==(const Call &, const Call &) = default;
};
struct Ret {
  std::string src;
  friend bool operator==(const Ret &, const Ret &) = default;
};
struct Br {
  std::string label;
  friend bool operator==(const Br &, const Br &) = default;
};
struct Compare {
  std::string lhs, rhs;
  friend bool operator==(const Compare &, const Compare &) = default;
};
struct BranchCond {
  std::string label;
  friend bool operator==(const BranchCond &, const BranchCond &) = default;
};
struct Op {
  std::string dst;
  OpKind op = OpKind::add;
  std::string lhs, rhs;
  friend bool operator==(const Op &, const Op &) = default;
};
struct Const {
  std::string dst;
  std::int64_t value = 0;
  friend bool operator==(const Const &, const Const &) = default;
};

using Instr =
    std::variant<Load, Store, Call, Ret, Br, Compare, BranchCond, Op, Const>;

struct LabeledInstr {
  std::optional<std::string> label;
  Instr instr;
  SourceLoc loc;

  friend bool operator==(const LabeledInstr &a, const LabeledInstr &b) {
    return a.label == b.label && a.instr == b.instr;
  }
};

struct Procedure {
  std::string name;
  bool exported = false;
  /// Derived from the body: every non-global name that is written.
  std::vector<std::string> locals;
  std::vector<LabeledInstr> body;
  SourceLoc loc;

  std::optional<std::size_t> label_index(std::string_view label) const;

  friend bool operator==(const Procedure &a, const Procedure &b) {
    return a.name == b.name && a.exported == b.exported &&
           a.locals == b.locals && a.body == b.body;
  }
};

struct AsmModule {
  std::string name;
  std::vector<std::string> globals;
  std::vector<Procedure> procedures;

  const Procedure *find_procedure(std::string_view n) const;
  Procedure *find_procedure(std::string_view n);
  /// Declared globals plus the implicit `argN` and `ret0`.
  bool is_global(std::string_view n) const;

  friend bool operator==(const AsmModule &, const AsmModule &) = default;
};

/// True for the implicit calling-convention globals `arg<digits>`.
std::optional<int> arg_index(std::string_view name);
bool is_implicit_global(std::string_view name);

/// Splits `mod.proc`; an unqualified name yields an empty module.
std::pair<std::string, std::string> split_target(std::string_view target);

Parsed<AsmModule> parse_asm(std::string_view text);

/// Parses a bare instruction list (the inside of a procedure body).
Parsed<std::vector<LabeledInstr>> parse_asm_body(std::string_view text);

std::string render_asm(const AsmModule &module);
std::string render_instrs(const std::vector<LabeledInstr> &body, int indent);

/// `peers` are the other modules of the program; qualified call targets are
/// only validated when the referenced module is among them.
Diagnostics check_asm(const AsmModule &module,
                      std::span<const AsmModule> peers = {});

/// Recomputes Procedure::locals from the body.
void derive_locals(const AsmModule &module, Procedure &proc);

/// Highest `argN` index read anywhere in the procedure, or -1.
int max_arg_used(const Procedure &proc);

std::string_view op_mnemonic(OpKind op);

} // namespace trilang::assembly
