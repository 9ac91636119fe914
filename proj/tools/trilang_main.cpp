// trilang: batch driver for the toolkit.
//
// Exit status: 0 success, 1 diagnostics / violations / unreadable inputs,
// 2 usage errors.

#include "trilang/harness.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <iostream>
#include <optional>

using namespace trilang;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0, kFail = 1, kUsage = 2;

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::optional<std::string> &out, const std::string &text) {
  if (out)
    write_file(*out, text);
  else
    std::cout << text;
}

/// Links the manifest, printing diagnostics; nullopt on failure.
std::optional<PolyglotProgram> load(const std::string &manifest) {
  auto p = link(load_manifest(manifest));
  for (const auto &d : p.diags)
    std::cerr << d.str() << "\n";
  if (!p.ok())
    return std::nullopt;
  return std::move(*p.value);
}

GenConfig load_config(const std::optional<std::string> &path) {
  if (!path)
    return {};
  return config_from_json(read_file(*path));
}

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string &s) {
  auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      auto v = std::stoull(s);
      return {v, v};
    }
    std::size_t used = 0;
    auto a = std::stoull(s.substr(0, dots), &used);
    if (used != dots)
      throw Usage("bad seed range " + s);
    std::string rest = s.substr(dots + 2);
    auto b = std::stoull(rest, &used);
    if (used != rest.size() || b < a)
      throw Usage("bad seed range " + s);
    return {a, b};
  } catch (const std::logic_error &) {
    throw Usage("bad seed range " + s + " (expected A..B)");
  }
}

json without_iterations(const std::string &text) {
  json j = json::parse(text);
  j.erase("iterations");
  return j;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"trilang: polyglot call-graph, points-to and taint analysis"};
  app.require_subcommand(1);

  std::string manifest;
  std::optional<std::string> out, trace_out, config_path, baseline, edit_path, static_path,
      trace_path, counterexamples;
  std::uint64_t steps = kDefaultStepLimit;
  std::string mode = "pts", format = "json", seeds;
  bool include_unreachable = false, with_edit = false;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  auto *check = app.add_subcommand("check", "parse, check and link a program");
  check->add_option("manifest", manifest)->required();

  auto *run_cmd = app.add_subcommand("run", "interpret a program and record its trace");
  run_cmd->add_option("manifest", manifest)->required();
  run_cmd->add_option("--steps", steps, "step limit")->check(CLI::PositiveNumber);
  run_cmd->add_option("--trace", trace_out, "write the trace JSON here");

  auto *cg = app.add_subcommand("callgraph", "build a call graph");
  cg->add_option("manifest", manifest)->required();
  cg->add_option("--mode", mode)->check(CLI::IsMember({"cha", "pts"}));
  cg->add_option("--format", format)->check(CLI::IsMember({"dot", "json"}));
  cg->add_flag("--include-unreachable", include_unreachable);
  cg->add_option("--out", out);

  auto *analyze = app.add_subcommand("analyze", "run the points-to/taint fixed point");
  analyze->add_option("manifest", manifest)->required();
  analyze->add_option("--out", out);

  auto *incr = app.add_subcommand("incr", "re-analyze after a function-body edit");
  incr->add_option("manifest", manifest)->required();
  incr->add_option("--baseline", baseline)->required();
  incr->add_option("--edit", edit_path)->required();
  incr->add_option("--out", out);

  auto *gen = app.add_subcommand("gen", "generate a random program");
  gen->add_option("--seed", seed)->required();
  gen->add_option("--config", config_path);
  gen->add_option("--out", out)->required();
  gen->add_flag("--with-edit", with_edit, "also write edit.txt for the program");

  auto *suite = app.add_subcommand("suite", "soundness suite over generated programs");
  suite->add_option("--seeds", seeds, "A..B")->required();
  suite->add_option("--config", config_path);
  suite->add_option("--threads", threads);
  suite->add_option("--counterexamples", counterexamples, "directory for failing programs");
  suite->add_option("--out", out, "write the suite report JSON here");

  auto *precision = app.add_subcommand("precision", "precision report against traces");
  precision->add_option("manifest", manifest)->required();
  precision->add_option("--static", static_path)->required();
  precision->add_option("--trace", trace_path)->required();
  precision->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*check) {
      return load(manifest) ? kOk : kFail;
    }

    if (*run_cmd) {
      auto p = load(manifest);
      if (!p)
        return kFail;
      RunResult r = run(*p, steps);
      std::cout << to_string(r.outcome) << ": " << r.trace.steps << " steps, "
                << r.trace.call_edges.size() << " call edges, " << r.trace.taint_flows.size()
                << " taint flows\n";
      if (r.outcome == Outcome::runtime_fault)
        std::cerr << "fault: " << r.fault << "\n";
      if (trace_out)
        write_file(*trace_out, trace_json(r));
      return r.outcome == Outcome::runtime_fault ? kFail : kOk;
    }

    if (*cg) {
      auto p = load(manifest);
      if (!p)
        return kFail;
      CallGraph g = mode == "cha" ? build_cha(*p, include_unreachable)
                                  : build_onthefly(*p, {}, include_unreachable).first;
      emit(out, format == "dot" ? graph_dot(g) : graph_json(g));
      return kOk;
    }

    if (*analyze) {
      auto p = load(manifest);
      if (!p)
        return kFail;
      emit(out, analysis_json(*p, mutual_fixpoint(*p)));
      return kOk;
    }

    if (*incr) {
      auto p = load(manifest);
      if (!p)
        return kFail;
      AnalysisResult base = mutual_fixpoint(*p);
      json given;
      try {
        given = without_iterations(read_file(*baseline));
      } catch (const json::exception &e) {
        std::cerr << *baseline << ": malformed baseline: " << e.what() << "\n";
        return kFail;
      }
      if (given != without_iterations(analysis_json(*p, base))) {
        std::cerr << *baseline << ": baseline does not match an analysis of " << manifest
                  << "; re-run `trilang analyze`\n";
        return kFail;
      }
      auto edit = parse_edit(read_file(*edit_path), *p);
      for (auto d : edit.diags) {
        d.file = *edit_path;
        std::cerr << d.str() << "\n";
      }
      if (!edit)
        return kFail;
      auto edited = apply_edit(*p, *edit);
      for (const auto &d : edited.diags)
        std::cerr << d.str() << "\n";
      if (!edited)
        return kFail;
      IncrementalReport rep = reanalyze(*edited, base, edit->target);
      json j;
      j["edited"] = edit->target.str();
      j["rounds"] = rep.rounds;
      j["functions"] = edited->functions().size();
      json names = json::array();
      for (const auto &n : rep.resummarized)
        names.push_back(n.str());
      j["resummarized"] = names;
      j["result"] = json::parse(analysis_json(*edited, rep.result));
      emit(out, j.dump(2) + "\n");
      return kOk;
    }

    if (*gen) {
      GenConfig c = load_config(config_path);
      c.seed = seed;
      PolyglotProgram p = generate(c);
      write_program(p, *out);
      if (with_edit)
        write_file(std::filesystem::path(*out) / "edit.txt", render_edit(p, gen_edit(c, p)));
      return kOk;
    }

    if (*suite) {
      auto [a, b] = parse_range(seeds);
      GenConfig c = load_config(config_path);
      SuiteOptions opts;
      opts.threads = threads;
      if (counterexamples)
        opts.counterexample_dir = *counterexamples;
      auto t0 = std::chrono::steady_clock::now();
      SuiteReport r = soundness_suite(a, b, c, opts);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (out)
        write_file(*out, suite_json(r));
      for (const auto &s : r.seeds)
        for (const auto &v : s.violations)
          std::cout << "seed " << s.seed << ": " << v << "\n";
      std::cout << r.seeds.size() << " seeds, " << r.violations() << " violations, "
                << r.incomplete_runs() << " incomplete runs\n";
      std::cerr << "suite wall time " << secs << " s\n";
      return r.violations() == 0 ? kOk : kFail;
    }

    if (*precision) {
      auto p = load(manifest);
      if (!p)
        return kFail;
      auto [graph, flows] = static_from_json(*p, read_file(*static_path));
      RunResult tr = trace_from_json(read_file(*trace_path));
      PrecisionReport r = measure_precision(*p, graph, flows, {tr.trace});
      emit(out, precision_json(r));
      for (const auto &u : r.unsound)
        std::cerr << "unsound: " << u << "\n";
      return r.unsound.empty() ? kOk : kFail;
    }
  } catch (const Usage &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
