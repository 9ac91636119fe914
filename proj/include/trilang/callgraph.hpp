#pragma once

// Cross-language call graphs. CHA resolves method calls from declared method
// tables alone; the on-the-fly mode takes its edges from the dataflow fixed
// point. Both add nodes reachability-first from the entry function.

#include "trilang/dataflow.hpp"
#include "trilang/graph.hpp"
#include "trilang/interp.hpp"

#include <map>
#include <utility>

namespace trilang {

CallGraph build_cha(const PolyglotProgram &program, bool include_unreachable = false);

std::pair<CallGraph, AnalysisResult> build_onthefly(const PolyglotProgram &program,
                                                    const EngineOptions &options = {},
                                                    bool include_unreachable = false);

/// Promotes the edges of an interpreter trace to a graph over the program.
CallGraph graph_from_trace(const PolyglotProgram &program, const DynamicTrace &trace);

struct GraphDiff {
  std::map<Mechanism, std::set<CallEdge>> only_a, only_b, both;
  std::size_t count_only_a() const;
  std::size_t count_only_b() const;
};

/// Throws trilang::Error when the node universes differ.
GraphDiff diff_graphs(const CallGraph &a, const CallGraph &b);

std::string graph_dot(const CallGraph &g);
std::string graph_json(const CallGraph &g);
std::string diff_json(const GraphDiff &d);

} // namespace trilang
