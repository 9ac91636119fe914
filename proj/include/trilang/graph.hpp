#pragma once

// Call-graph value types shared by the static builders, the dataflow
// engine and the interpreter trace conversion.

#include "trilang/linker.hpp"

#include <set>
#include <string>

namespace trilang {

struct CallEdge {
  NodeId caller;
  std::string site;
  NodeId callee;
  Mechanism mechanism = Mechanism::virtual_call;
  friend auto operator<=>(const CallEdge &, const CallEdge &) = default;
};

struct CallGraph {
  std::set<NodeId> nodes;
  std::set<CallEdge> edges;
  /// Every function of the program the graph was built for; graphs over
  /// different universes cannot be compared.
  std::set<NodeId> universe;
};

std::set<NodeId> function_universe(const PolyglotProgram &program);

} // namespace trilang
