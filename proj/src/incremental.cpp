#include "trilang/incremental.hpp"

#include <deque>
#include <filesystem>

namespace trilang {

Parsed<Edit> parse_edit(std::string_view text, const PolyglotProgram &program) {
  Parsed<Edit> out;
  auto fail = [&](std::string msg) {
    out.diags.push_back({{}, std::move(msg), "edit"});
    return out;
  };
  std::string file, function;
  std::size_t pos = 0;
  int line = 0;
  bool separator = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view l = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line;
    if (l == "---") {
      separator = true;
      break;
    }
    auto colon = l.find(':');
    if (colon == std::string_view::npos) {
      if (l.find_first_not_of(" \t\r") == std::string_view::npos)
        continue;
      return fail("line " + std::to_string(line) + ": expected `key: value`");
    }
    std::string key(l.substr(0, colon));
    std::string_view v = l.substr(colon + 1);
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t'))
      v.remove_prefix(1);
    while (!v.empty() && (v.back() == ' ' || v.back() == '\r'))
      v.remove_suffix(1);
    if (key == "file")
      file = v;
    else if (key == "function")
      function = v;
    else
      return fail("unknown edit header `" + key +
                  "`; only function bodies can be replaced, other changes need a full analyze");
  }
  if (!separator)
    return fail("missing `---` line before the replacement body");
  if (file.empty() || function.empty())
    return fail("edit needs both `file:` and `function:`");
  std::string container = std::filesystem::path(file).stem().string();
  auto fn = program.find_function(container, function);
  if (!fn)
    return fail("unknown function " + container + "." + function);
  const FunctionInfo &fi = program.function(*fn);
  std::string_view body = text.substr(pos);
  Edit e{fi.node, {}};
  auto shifted = [&](const Diagnostic &d) { // report lines of the edit file
    Diagnostic c{d.loc, d.message, "edit"};
    if (c.loc.line > 0)
      c.loc.line += line;
    return c;
  };
  if (fi.host) {
    auto parsed = host::parse_host_block(body);
    for (auto &d : parsed.diags)
      out.diags.push_back(shifted(d));
    if (!parsed.value)
      return out;
    e.body = std::move(*parsed.value);
  } else {
    auto parsed = assembly::parse_asm_body(body);
    for (auto &d : parsed.diags)
      out.diags.push_back(shifted(d));
    if (!parsed.value)
      return out;
    e.body = std::move(*parsed.value);
  }
  if (out.diags.empty())
    out.value = std::move(e);
  return out;
}

std::string render_edit(const PolyglotProgram &program, const Edit &edit) {
  auto fn = program.find_function(edit.target);
  if (!fn)
    throw Error("unknown function " + edit.target.str());
  const FunctionInfo &fi = program.function(*fn);
  std::string out = "file: " + fi.node.container + (fi.host ? ".poly" : ".asm") + "\n";
  out += "function: " + fi.node.function + "\n---\n";
  if (const auto *b = std::get_if<host::Block>(&edit.body))
    out += host::render_block(*b, 0);
  else
    out += assembly::render_instrs(std::get<std::vector<assembly::LabeledInstr>>(edit.body), 0);
  return out;
}

Parsed<PolyglotProgram> apply_edit(const PolyglotProgram &program, const Edit &edit) {
  auto fn = program.find_function(edit.target);
  if (!fn) {
    Parsed<PolyglotProgram> out;
    out.diags.push_back({{}, "unknown function " + edit.target.str(), "edit"});
    return out;
  }
  return relink_with_body(program, *fn, edit.body);
}

bool DependencyGraph::has_edge(const NodeId &consumer, const NodeId &producer) const {
  auto it = edges.find(consumer);
  return it != edges.end() && it->second.count(producer);
}

std::size_t DependencyGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto &[_, s] : edges)
    n += s.size();
  return n;
}

namespace {

/// producers[g] = functions whose contributions g consumed.
std::vector<std::set<FnId>> producers(const AnalysisResult &r) {
  std::map<FactKey, std::vector<FnId>> by_key;
  for (std::size_t f = 0; f < r.states.size(); ++f)
    for (const auto &[k, v] : r.states[f].out)
      if (!v.empty())
        by_key[k].push_back(static_cast<FnId>(f));
  std::vector<std::set<FnId>> out(r.states.size());
  for (std::size_t g = 0; g < r.states.size(); ++g)
    for (const auto &[k, _] : r.states[g].reads)
      if (auto it = by_key.find(k); it != by_key.end())
        out[g].insert(it->second.begin(), it->second.end());
  return out;
}

} // namespace

DependencyGraph build_dependency_graph(const PolyglotProgram &program,
                                       const AnalysisResult &result) {
  DependencyGraph g;
  auto prod = producers(result);
  for (std::size_t c = 0; c < prod.size(); ++c)
    for (FnId p : prod[c])
      g.edges[program.function(static_cast<FnId>(c)).node].insert(program.function(p).node);
  return g;
}

std::set<FnId> affected_functions(const PolyglotProgram &, const AnalysisResult &result,
                                  FnId target) {
  auto prod = producers(result);
  std::vector<std::vector<FnId>> consumers(prod.size());
  for (std::size_t c = 0; c < prod.size(); ++c)
    for (FnId p : prod[c])
      consumers[static_cast<std::size_t>(p)].push_back(static_cast<FnId>(c));
  std::set<FnId> out{target};
  std::deque<FnId> work{target};
  while (!work.empty()) {
    FnId f = work.front();
    work.pop_front();
    if (static_cast<std::size_t>(f) >= consumers.size())
      continue;
    for (FnId c : consumers[static_cast<std::size_t>(f)])
      if (out.insert(c).second)
        work.push_back(c);
  }
  return out;
}

IncrementalReport reanalyze(const PolyglotProgram &edited, const AnalysisResult &previous,
                            const NodeId &target, const EngineOptions &options) {
  auto fn = edited.find_function(target);
  if (!fn)
    throw Error("unknown function " + target.str());
  if (previous.states.size() != edited.functions().size())
    throw Error("previous result does not match the edited program's functions");
  std::set<FnId> dirty = affected_functions(edited, previous, *fn);
  IncrementalReport rep;
  rep.result = resume_fixpoint(edited, previous, dirty, options);
  rep.rounds = rep.result.iterations;
  for (FnId f : rep.result.summarized)
    rep.resummarized.insert(edited.function(f).node);
  return rep;
}

} // namespace trilang
