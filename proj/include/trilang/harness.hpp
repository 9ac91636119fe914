#pragma once

// Seeded program generator plus the soundness and precision measurements
// run over generated corpora.

#include "trilang/callgraph.hpp"
#include "trilang/incremental.hpp"
#include "trilang/interp.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trilang {

struct GenConfig {
  std::uint64_t seed = 0;
  int types = 3;              // per host unit
  int functions_per_unit = 3; // non-method functions per unit, procedures per module
  int middle_units = 2;
  int asm_modules = 2;
  int stmts = 8; // statement budget per function body
  double p_eval = 0.35;
  double p_asmcall = 0.3;
  double p_bridge = 0.5;
  int max_loop_trips = 3;
};

/// Throws trilang::Error for non-positive counts or probabilities outside [0,1].
void validate(const GenConfig &c);
GenConfig config_from_json(std::string_view text, GenConfig base = {});
std::string config_json(const GenConfig &c);

/// Deterministic per config; the result links with no diagnostics.
PolyglotProgram generate(const GenConfig &config);

/// Replacement body for a CHA-reachable function chosen uniformly; passes
/// the checker. Deterministic per (config, program).
Edit gen_edit(const GenConfig &config, const PolyglotProgram &program);

/// Writes rendered sources plus `manifest.json` into `dir`.
void write_program(const PolyglotProgram &program, const std::filesystem::path &dir);

// --- soundness -------------------------------------------------------------

struct SeedReport {
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::completed;
  std::string fault;
  std::vector<std::string> violations; // dynamic facts missing statically
  std::size_t dynamic_edges = 0, static_edges = 0, cha_edges = 0;
  std::size_t dynamic_flows = 0, static_flows = 0;
  bool otf_subset_of_cha = true;
  std::size_t cha_only = 0; // |CHA \ on-the-fly|
  int iterations = 0;
  int monotonicity_violations = 0;
  bool roundtrip_ok = true;
};

struct SuiteReport {
  std::vector<SeedReport> seeds;
  std::size_t violations() const;
  std::size_t incomplete_runs() const;
};

struct SuiteOptions {
  EngineOptions engine;
  unsigned threads = 0; // 0: hardware concurrency
  std::optional<std::filesystem::path> counterexample_dir;
};

SeedReport check_seed(const GenConfig &config, const SuiteOptions &options = {});
SuiteReport soundness_suite(std::uint64_t first, std::uint64_t last, const GenConfig &config,
                            const SuiteOptions &options = {});
std::string suite_json(const SuiteReport &r);

/// parse(render(parse(text))) == parse(text) for every source of the program.
bool sources_roundtrip(const PolyglotProgram &program);

// --- precision -------------------------------------------------------------

struct PrecisionReport {
  struct Counts {
    std::size_t static_edges = 0, dynamic_edges = 0, spurious = 0;
  };
  std::map<Mechanism, Counts> by_mechanism;
  /// hop-depth bucket ("0", "1", "2", "3+") -> mechanism -> spurious edges
  std::map<std::string, std::map<Mechanism, std::size_t>> spurious_by_depth;
  std::size_t static_flows = 0, dynamic_flows = 0, spurious_flows = 0;
  std::vector<std::string> unsound; // dynamic facts absent from the static input
  std::size_t total_spurious() const;
};

using FlowSet = std::set<std::pair<std::string, std::string>>;

PrecisionReport measure_precision(const PolyglotProgram &program, const CallGraph &static_graph,
                                  const FlowSet &static_flows,
                                  const std::vector<DynamicTrace> &traces);

/// Minimal number of boundary edges on a path from the entry to each node.
std::map<NodeId, int> hop_depths(const PolyglotProgram &program, const CallGraph &g);

/// Reads the call graph and flows from analysis JSON (or a bare call-graph
/// JSON, which has no flows).
std::pair<CallGraph, FlowSet> static_from_json(const PolyglotProgram &program,
                                               std::string_view text);

std::string precision_json(const PrecisionReport &r);

} // namespace trilang
