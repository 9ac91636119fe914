#pragma once

// Deterministic small-step interpreter for linked programs. Every run
// records a DynamicTrace, the ground truth the static analyses are checked
// against.

#include "trilang/linker.hpp"

#include <cstdint>
#include <set>
#include <string>

namespace trilang {

struct TraceEdge {
  std::string caller; // `container.function`
  std::string site;
  std::string callee;
  Mechanism mechanism = Mechanism::virtual_call;
  friend auto operator<=>(const TraceEdge &, const TraceEdge &) = default;
};

struct TaintFlow {
  std::string source; // site id of the source() statement
  std::string sink;   // site id of the sink(...) statement
  friend auto operator<=>(const TaintFlow &, const TaintFlow &) = default;
};

struct DynamicTrace {
  std::set<TraceEdge> call_edges;
  std::set<TaintFlow> taint_flows;
  std::uint64_t steps = 0;
};

enum class Outcome { completed, step_limit_exceeded, runtime_fault };
std::string_view to_string(Outcome o);

struct RunResult {
  Outcome outcome = Outcome::completed;
  std::string fault; // description when outcome == runtime_fault
  DynamicTrace trace;
};

constexpr std::uint64_t kDefaultStepLimit = 1'000'000;

RunResult run(const PolyglotProgram &program, std::uint64_t step_limit = kDefaultStepLimit);

std::string trace_json(const RunResult &r);
/// Parses the output of trace_json; throws trilang::Error on malformed input.
RunResult trace_from_json(std::string_view text);

} // namespace trilang
