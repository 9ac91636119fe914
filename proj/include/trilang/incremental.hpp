#pragma once

// Re-analysis after a whole-body edit. Functions whose consumed facts may
// depend on the edited function (transitively) are reset; everything else
// keeps its contributions and the engine resumes from there.

#include "trilang/dataflow.hpp"

#include <map>
#include <set>

namespace trilang {

struct Edit {
  NodeId target;
  ReplacementBody body;
};

/// Edit file:
///
///     file: mid.poly
///     function: start
///     ---
///     <replacement body>
///
/// The file names the unit or module (its stem); the body is a statement or
/// instruction list.
Parsed<Edit> parse_edit(std::string_view text, const PolyglotProgram &program);
std::string render_edit(const PolyglotProgram &program, const Edit &edit);

/// Relinks with the edit applied; diagnostics when the body fails the checker.
Parsed<PolyglotProgram> apply_edit(const PolyglotProgram &program, const Edit &edit);

/// consumer -> producers: g depends on f when g read a fact f contributed.
struct DependencyGraph {
  std::map<NodeId, std::set<NodeId>> edges;
  bool has_edge(const NodeId &consumer, const NodeId &producer) const;
  std::size_t edge_count() const;
};

DependencyGraph build_dependency_graph(const PolyglotProgram &program,
                                       const AnalysisResult &result);

/// Functions whose summaries may change when `target` changes: `target`
/// plus everything that transitively consumes its facts.
std::set<FnId> affected_functions(const PolyglotProgram &program, const AnalysisResult &result,
                                  FnId target);

struct IncrementalReport {
  std::set<NodeId> resummarized;
  int rounds = 0;
  AnalysisResult result;
};

/// `edited` is the relinked program; `previous` the converged result for the
/// program before the edit.
IncrementalReport reanalyze(const PolyglotProgram &edited, const AnalysisResult &previous,
                            const NodeId &target, const EngineOptions &options = {});

} // namespace trilang
