#pragma once

// Summary-based points-to and taint analysis. Flow-insensitive,
// context-insensitive, field-sensitive, one abstract object per allocation
// site. Each container (unit or asm module) is a language component; the
// engine runs rounds in which every component with stale inputs is solved,
// in container order, to a local fixed point against the facts produced so
// far. A round in which nothing is re-summarized ends the run; `iterations`
// counts the rounds that did work.

#include "trilang/graph.hpp"
#include "trilang/linker.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace trilang {

// --- symbolic summaries ------------------------------------------------------

/// Roots: `p<k>` parameter, `bridge:<name>`, `alloc:<site>`, `call:<site>`
/// (result of a call), `source:<site>`, or an asm global name.
struct AccessPath {
  std::string root;
  std::vector<std::string> fields;
  bool widened = false; // fields beyond the depth bound were dropped

  std::string str() const;
  friend auto operator<=>(const AccessPath &, const AccessPath &) = default;
};

constexpr std::size_t kPathDepth = 2;

struct PtsEffect {
  AccessPath target; // `return` or a field path
  AccessPath source;
  friend auto operator<=>(const PtsEffect &, const PtsEffect &) = default;
};

struct TaintTransfer {
  std::string from, to;
  friend auto operator<=>(const TaintTransfer &, const TaintTransfer &) = default;
};

/// A call whose effect depends on another function's summary. Boundary
/// obligations (eval, asmcall, bridge-callback) are the currency exchanged
/// between components.
struct Obligation {
  std::string site;
  Mechanism kind = Mechanism::virtual_call;
  std::string target; // `unit.fn` / `mod.proc`, or the method name
  std::string receiver;
  std::vector<std::pair<std::string, std::set<AccessPath>>> bindings;
};

// --- engine facts -----------------------------------------------------------

enum class KeyKind : std::uint8_t { reach, param, ret, exposure, field, global };

/// reach(fn): caller sites of fn (-1 marks the program entry).
/// param(fn, k), ret(fn), exposure(eval site, name), field(object, name),
/// global(container, name).
struct FactKey {
  KeyKind kind;
  int a = 0;
  int b = 0;
  std::string name;
  friend auto operator<=>(const FactKey &, const FactKey &) = default;
};

struct Facts {
  std::set<int> objs;  // allocation sites (caller sites for reach keys)
  std::set<int> taint; // source sites
  bool empty() const { return objs.empty() && taint.empty(); }
  bool join(const Facts &o);
  bool includes(const Facts &o) const;
  friend bool operator==(const Facts &, const Facts &) = default;
};

using FactMap = std::map<FactKey, Facts>;

struct RawEdge {
  FnId caller;
  SiteId site;
  FnId callee;
  Mechanism mechanism;
  friend auto operator<=>(const RawEdge &, const RawEdge &) = default;
};

struct FunctionSummary {
  // Body-only part.
  std::set<PtsEffect> pts_effects;
  std::set<TaintTransfer> taint_transfer;
  std::vector<Obligation> obligations;
  // Instantiated under the facts the function last saw.
  bool reached = false;
  std::map<std::string, Facts> vars;
  std::set<RawEdge> edges;
  std::set<std::pair<SiteId, SiteId>> flows;
};

/// Engine bookkeeping for one function: the facts it contributed and the
/// facts it consumed (with the values seen).
struct FunctionState {
  FactMap out;
  FactMap reads;
};

struct EngineOptions {
  int iteration_cap = 0; // 0: default_iteration_cap()
  bool check_monotone = true;
  /// Test-only mutation: drop every bridge-callback resolution.
  bool disable_bridge_edges = false;
};

/// 10000, or TRILANG_ITER_CAP when set.
int default_iteration_cap();

struct AnalysisResult {
  std::vector<FunctionSummary> summaries; // indexed by FnId
  std::vector<FunctionState> states;
  FactMap facts;
  int iterations = 0;
  int monotonicity_violations = 0;
  std::set<FnId> summarized; // functions summarized during the run
};

FunctionSummary summarize_function(const PolyglotProgram &program, FnId fn,
                                   const FactMap &external,
                                   const EngineOptions &options = {});

/// Throws trilang::Error when the iteration cap is exceeded.
AnalysisResult mutual_fixpoint(const PolyglotProgram &program,
                               const EngineOptions &options = {});

/// Continues from `seed` with the functions in `dirty` reset and queued.
/// Functions outside `dirty` keep their contributions.
AnalysisResult resume_fixpoint(const PolyglotProgram &program, AnalysisResult seed,
                               const std::set<FnId> &dirty,
                               const EngineOptions &options = {});

struct AbstractObject {
  std::string site;
  std::string type; // `unit.Type`
  bool bridge = false;
  friend auto operator<=>(const AbstractObject &, const AbstractObject &) = default;
};

AbstractObject abstract_object(const PolyglotProgram &program, SiteId site);

/// Throws trilang::Error for an unknown function or a variable that does
/// not occur in it.
std::set<AbstractObject> query_points_to(const PolyglotProgram &program,
                                         const AnalysisResult &result,
                                         std::string_view function,
                                         std::string_view variable);

/// (source site, sink site) pairs.
std::set<std::pair<std::string, std::string>>
query_taint_flows(const PolyglotProgram &program, const AnalysisResult &result);

/// The resolved call graph: reached functions and their edges.
CallGraph resolved_graph(const PolyglotProgram &program, const AnalysisResult &result);

/// Stable JSON (sorted by names, not internal ids).
std::string analysis_json(const PolyglotProgram &program, const AnalysisResult &result,
                          bool include_iterations = true);

} // namespace trilang
