#include "trilang/dataflow.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>

namespace trilang {

using json = nlohmann::json;

std::set<NodeId> function_universe(const PolyglotProgram &program) {
  std::set<NodeId> out;
  for (const auto &fi : program.functions())
    out.insert(fi.node);
  return out;
}

std::string AccessPath::str() const {
  std::string s = root;
  for (const auto &f : fields)
    s += "." + f;
  if (widened)
    s += ".*";
  return s;
}

bool Facts::join(const Facts &o) {
  std::size_t before = objs.size() + taint.size();
  objs.insert(o.objs.begin(), o.objs.end());
  taint.insert(o.taint.begin(), o.taint.end());
  return objs.size() + taint.size() != before;
}

bool Facts::includes(const Facts &o) const {
  return std::includes(objs.begin(), objs.end(), o.objs.begin(), o.objs.end()) &&
         std::includes(taint.begin(), taint.end(), o.taint.begin(), o.taint.end());
}

int default_iteration_cap() {
  if (const char *env = std::getenv("TRILANG_ITER_CAP")) {
    char *end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<int>(std::min<long>(v, 1'000'000'000));
  }
  return 10000;
}

namespace {

const Facts kNoFacts{};

const Facts &lookup(const FactMap &m, const FactKey &k) {
  auto it = m.find(k);
  return it == m.end() ? kNoFacts : it->second;
}

FactKey reach_key(FnId f) { return {KeyKind::reach, f, 0, {}}; }
FactKey param_key(FnId f, int k) { return {KeyKind::param, f, k, {}}; }
FactKey ret_key(FnId f) { return {KeyKind::ret, f, 0, {}}; }
FactKey exposure_key(SiteId s, const std::string &n) { return {KeyKind::exposure, s, 0, n}; }
FactKey field_key(int obj, const std::string &g) { return {KeyKind::field, obj, 0, g}; }
FactKey global_key(int c, const std::string &g) { return {KeyKind::global, c, 0, g}; }

// --- symbolic part ----------------------------------------------------------

AccessPath root_path(std::string r) { return AccessPath{std::move(r), {}, false}; }

AccessPath extend(const AccessPath &p, const std::string &field) {
  AccessPath q = p;
  if (q.widened)
    return q;
  if (q.fields.size() >= kPathDepth)
    q.widened = true;
  else
    q.fields.push_back(field);
  return q;
}

struct SymVal {
  std::set<AccessPath> pts, taint;
};

bool add_all(std::set<AccessPath> &dst, const std::set<AccessPath> &src) {
  std::size_t n = dst.size();
  dst.insert(src.begin(), src.end());
  return dst.size() != n;
}

bool carries_taint(const AccessPath &p) { return p.root.rfind("alloc:", 0) != 0; }

void symbolic_host(const PolyglotProgram &p, const FunctionInfo &fi, FunctionSummary &sum) {
  const host::FunctionDecl &fn = *fi.host;
  const SiteTable &table = p.site_table();
  std::map<std::string, SymVal> vars;
  for (std::size_t k = 0; k < fn.params.size(); ++k) {
    auto r = root_path("p" + std::to_string(k));
    vars[fn.params[k]] = {{r}, {r}};
  }
  for (const auto &b : fn.bridge_params) {
    auto r = root_path("bridge:" + b);
    vars[b] = {{r}, {r}};
  }
  auto transfer = [&](const std::set<AccessPath> &from, const std::string &to) {
    for (const auto &f : from)
      if (carries_taint(f))
        sum.taint_transfer.insert({f.str(), to});
  };

  bool changed = true;
  while (changed) {
    changed = false;
    host::for_each_stmt(fn.body, [&](const host::Stmt &s, int idx) {
      const std::string &site = table.name(fi.sites[static_cast<std::size_t>(idx)]);
      std::visit(
          [&](const auto &x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, host::Alloc>) {
              changed |= vars[x.var].pts.insert(root_path("alloc:" + site)).second;
            } else if constexpr (std::is_same_v<T, host::BridgeAlloc>) {
              changed |= vars[x.bridge].pts.insert(root_path("alloc:" + site)).second;
            } else if constexpr (std::is_same_v<T, host::Return>) {
              for (const auto &src : vars[x.var].pts)
                sum.pts_effects.insert({root_path("return"), src});
              transfer(vars[x.var].taint, "return");
            } else if constexpr (std::is_same_v<T, host::MethodCall> ||
                                 std::is_same_v<T, host::AsmCall>) {
              auto r = root_path("call:" + site);
              SymVal &v = vars[x.result];
              if constexpr (std::is_same_v<T, host::MethodCall>)
                changed |= v.pts.insert(r).second;
              changed |= v.taint.insert(r).second;
            } else if constexpr (std::is_same_v<T, host::FieldLoad>) {
              std::set<AccessPath> loaded;
              for (const auto &base : vars[x.object].pts)
                loaded.insert(extend(base, x.field));
              SymVal &v = vars[x.result];
              changed |= add_all(v.pts, loaded);
              changed |= add_all(v.taint, loaded);
            } else if constexpr (std::is_same_v<T, host::FieldStore>) {
              for (const auto &base : vars[x.object].pts) {
                AccessPath target = extend(base, x.field);
                for (const auto &src : vars[x.value].pts)
                  sum.pts_effects.insert({target, src});
                transfer(vars[x.value].taint, target.str());
              }
            } else if constexpr (std::is_same_v<T, host::BinOp>) {
              std::set<AccessPath> t = vars[x.lhs].taint;
              t.insert(vars[x.rhs].taint.begin(), vars[x.rhs].taint.end());
              changed |= add_all(vars[x.result].taint, t);
            } else if constexpr (std::is_same_v<T, host::SourceAssign>) {
              changed |= vars[x.var].taint.insert(root_path("source:" + site)).second;
            } else if constexpr (std::is_same_v<T, host::SinkCall>) {
              transfer(vars[x.var].taint, "sink:" + site);
            }
          },
          s.node);
    });
  }

  auto both = [&](const std::string &v) {
    std::set<AccessPath> out = vars[v].pts;
    out.insert(vars[v].taint.begin(), vars[v].taint.end());
    return out;
  };
  host::for_each_stmt(fn.body, [&](const host::Stmt &s, int idx) {
    const std::string &site = table.name(fi.sites[static_cast<std::size_t>(idx)]);
    if (const auto *m = std::get_if<host::MethodCall>(&s.node)) {
      Obligation o{site,
                   fi.is_bridge_param(m->receiver) ? Mechanism::bridge_callback
                                                   : Mechanism::virtual_call,
                   m->method, m->receiver, {}};
      o.bindings.emplace_back("p0", both(m->receiver));
      for (std::size_t k = 0; k < m->args.size(); ++k)
        o.bindings.emplace_back("p" + std::to_string(k + 1), both(m->args[k]));
      sum.obligations.push_back(std::move(o));
    } else if (const auto *e = std::get_if<host::Eval>(&s.node)) {
      Obligation o{site, Mechanism::eval, e->unit + "." + e->function, {}, {}};
      for (const auto &n : e->exposed)
        o.bindings.emplace_back(n, both(n));
      sum.obligations.push_back(std::move(o));
    } else if (const auto *a = std::get_if<host::AsmCall>(&s.node)) {
      Obligation o{site, Mechanism::asmcall, a->module + "." + a->procedure, {}, {}};
      for (std::size_t k = 0; k < a->args.size(); ++k)
        o.bindings.emplace_back("arg" + std::to_string(k), vars[a->args[k]].taint);
      sum.obligations.push_back(std::move(o));
    }
  });
}

void symbolic_asm(const PolyglotProgram &p, const FunctionInfo &fi, FunctionSummary &sum) {
  const assembly::AsmModule &mod = *p.container(fi.container).module;
  const auto &body = fi.proc->body;
  const SiteTable &table = p.site_table();
  std::map<std::string, std::set<AccessPath>> locals;
  auto value = [&](const std::string &n) -> std::set<AccessPath> {
    if (mod.is_global(n))
      return {root_path(n)};
    return locals[n];
  };
  auto transfer = [&](const std::set<AccessPath> &from, const std::string &to) {
    for (const auto &f : from)
      sum.taint_transfer.insert({f.str(), to});
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const std::string &site = table.name(fi.sites[i]);
      const auto &instr = body[i].instr;
      if (const auto *x = std::get_if<assembly::Load>(&instr)) {
        changed |= add_all(locals[x->dst], value(x->src));
      } else if (const auto *x = std::get_if<assembly::Store>(&instr)) {
        if (mod.is_global(x->dst))
          transfer(value(x->src), x->dst);
        else
          changed |= add_all(locals[x->dst], value(x->src));
      } else if (const auto *x = std::get_if<assembly::Ret>(&instr)) {
        transfer(value(x->src), "ret0");
      } else if (const auto *x = std::get_if<assembly::Op>(&instr)) {
        auto v = value(x->lhs);
        auto r = value(x->rhs);
        v.insert(r.begin(), r.end());
        changed |= add_all(locals[x->dst], v);
      } else if (const auto *x = std::get_if<assembly::Call>(&instr)) {
        transfer({root_path("call:" + site)}, "ret0");
        (void)x;
      }
    }
  }
  for (std::size_t i = 0; i < body.size(); ++i)
    if (const auto *x = std::get_if<assembly::Call>(&body[i].instr)) {
      auto [m, proc] = assembly::split_target(x->target);
      if (m.empty())
        m = mod.name;
      sum.obligations.push_back({table.name(fi.sites[i]), Mechanism::asm_direct,
                                 m + "." + proc, {}, {}});
    }
}

// --- instantiated part --------------------------------------------------------

class LocalSolve {
public:
  LocalSolve(const PolyglotProgram &p, FnId fn, const FactMap &view, const EngineOptions &opt)
      : p_(p), fn_(fn), fi_(p.function(fn)), view_(view), opt_(opt) {}

  void run(FunctionSummary &sum, FunctionState &st) {
    touched_.insert(reach_key(fn_)); // being reached is itself a consumed fact
    do {
      changed_ = false;
      if (fi_.host)
        host_pass(sum);
      else
        asm_pass(sum);
    } while (changed_);
    st.out = std::move(out_);
    st.reads.clear();
    for (const auto &k : touched_) {
      Facts f = lookup(view_, k);
      f.join(lookup(st.out, k));
      st.reads[k] = std::move(f);
    }
    sum.vars = std::move(vars_);
  }

private:
  Facts get(const FactKey &k) {
    touched_.insert(k);
    Facts f = lookup(view_, k);
    f.join(lookup(out_, k));
    return f;
  }
  void put(const FactKey &k, const Facts &f) {
    if (f.empty())
      return;
    changed_ |= out_[k].join(f);
  }
  void assign(const std::string &v, const Facts &f) { changed_ |= vars_[v].join(f); }
  Facts &var(const std::string &v) { return vars_[v]; }

  void edge(FunctionSummary &sum, SiteId site, FnId callee, Mechanism m) {
    sum.edges.insert({fn_, site, callee, m});
    Facts r;
    r.objs.insert(site);
    put(reach_key(callee), r);
  }

  void host_pass(FunctionSummary &sum) {
    const host::FunctionDecl &fn = *fi_.host;
    for (std::size_t k = 0; k < fn.params.size(); ++k)
      assign(fn.params[k], get(param_key(fn_, static_cast<int>(k))));
    if (!fn.bridge_params.empty()) {
      Facts callers = get(reach_key(fn_));
      for (int s : callers.objs) {
        if (s < 0 || !p_.site(s).stmt || p_.site(s).callee != fn_ ||
            !std::holds_alternative<host::Eval>(p_.site(s).stmt->node))
          continue;
        for (const auto &b : fn.bridge_params)
          assign(b, get(exposure_key(s, b)));
      }
    }
    host::for_each_stmt(fn.body, [&](const host::Stmt &s, int idx) {
      SiteId site = fi_.sites[static_cast<std::size_t>(idx)];
      std::visit([&](const auto &x) { stmt(sum, site, x); }, s.node);
    });
  }

  void stmt(FunctionSummary &, SiteId site, const host::Alloc &x) {
    Facts f;
    f.objs.insert(site);
    assign(x.var, f);
  }
  void stmt(FunctionSummary &, SiteId site, const host::BridgeAlloc &x) {
    Facts f;
    f.objs.insert(site);
    assign(x.bridge, f);
  }
  void stmt(FunctionSummary &, SiteId, const host::Return &x) {
    put(ret_key(fn_), var(x.var));
  }
  void stmt(FunctionSummary &sum, SiteId site, const host::MethodCall &x) {
    bool bridge = fi_.is_bridge_param(x.receiver);
    if (bridge && opt_.disable_bridge_edges)
      return;
    Mechanism m = bridge ? Mechanism::bridge_callback : Mechanism::virtual_call;
    const Facts recv = var(x.receiver);
    std::vector<Facts> args;
    for (const auto &a : x.args)
      args.push_back(var(a));
    for (int o : recv.objs) {
      const SiteInfo &os = p_.site(o);
      if (!os.type)
        continue;
      auto callee = p_.resolve_method(os.type_container, *os.type, x.method);
      if (!callee)
        continue;
      edge(sum, site, *callee, m);
      std::size_t arity = p_.function(*callee).host->params.size();
      Facts self;
      self.objs.insert(o);
      if (arity > 0)
        put(param_key(*callee, 0), self);
      for (std::size_t k = 0; k < args.size() && k + 1 < arity; ++k)
        put(param_key(*callee, static_cast<int>(k + 1)), args[k]);
      assign(x.result, get(ret_key(*callee)));
    }
  }
  void stmt(FunctionSummary &, SiteId, const host::FieldLoad &x) {
    const Facts base = var(x.object);
    for (int o : base.objs) {
      const SiteInfo &os = p_.site(o);
      if (os.type && os.type->has_field(x.field))
        assign(x.result, get(field_key(o, x.field)));
    }
  }
  void stmt(FunctionSummary &, SiteId, const host::FieldStore &x) {
    const Facts base = var(x.object);
    const Facts val = var(x.value);
    for (int o : base.objs) {
      const SiteInfo &os = p_.site(o);
      if (os.type && os.type->has_field(x.field))
        put(field_key(o, x.field), val);
    }
  }
  void stmt(FunctionSummary &sum, SiteId site, const host::If &x) {
    (void)sum, (void)site, (void)x; // nested statements are visited separately
  }
  void stmt(FunctionSummary &, SiteId, const host::While &) {}
  void stmt(FunctionSummary &, SiteId, const host::BinOp &x) {
    Facts f;
    f.taint = var(x.lhs).taint;
    const auto &r = var(x.rhs).taint;
    f.taint.insert(r.begin(), r.end());
    assign(x.result, f);
  }
  void stmt(FunctionSummary &, SiteId, const host::ConstAssign &x) { var(x.var); }
  void stmt(FunctionSummary &sum, SiteId site, const host::Eval &x) {
    FnId callee = p_.site(site).callee;
    if (callee < 0)
      return;
    edge(sum, site, callee, Mechanism::eval);
    for (const auto &n : x.exposed)
      put(exposure_key(site, n), var(n));
  }
  void stmt(FunctionSummary &sum, SiteId site, const host::AsmCall &x) {
    FnId callee = p_.site(site).callee;
    if (callee < 0)
      return;
    edge(sum, site, callee, Mechanism::asmcall);
    int mod = p_.function(callee).container;
    for (std::size_t k = 0; k < x.args.size(); ++k) {
      Facts f;
      f.taint = var(x.args[k]).taint;
      put(global_key(mod, "arg" + std::to_string(k)), f);
    }
    Facts r;
    r.taint = get(ret_key(callee)).taint;
    assign(x.result, r);
  }
  void stmt(FunctionSummary &, SiteId site, const host::SourceAssign &x) {
    Facts f;
    f.taint.insert(site);
    assign(x.var, f);
  }
  void stmt(FunctionSummary &sum, SiteId site, const host::SinkCall &x) {
    for (int t : var(x.var).taint)
      sum.flows.insert({t, site});
  }

  void asm_pass(FunctionSummary &sum) {
    const assembly::AsmModule &mod = *p_.container(fi_.container).module;
    int c = fi_.container;
    auto value = [&](const std::string &n) -> Facts {
      if (mod.is_global(n))
        return get(global_key(c, n));
      return var(n);
    };
    const auto &body = fi_.proc->body;
    for (std::size_t i = 0; i < body.size(); ++i) {
      SiteId site = fi_.sites[i];
      const auto &instr = body[i].instr;
      if (const auto *x = std::get_if<assembly::Load>(&instr)) {
        assign(x->dst, value(x->src));
      } else if (const auto *x = std::get_if<assembly::Store>(&instr)) {
        Facts v = value(x->src);
        if (mod.is_global(x->dst))
          put(global_key(c, x->dst), v);
        else
          assign(x->dst, v);
      } else if (std::holds_alternative<assembly::Call>(instr)) {
        FnId callee = p_.site(site).callee;
        if (callee < 0)
          continue;
        edge(sum, site, callee, Mechanism::asm_direct);
        put(global_key(c, "ret0"), get(ret_key(callee)));
      } else if (const auto *x = std::get_if<assembly::Ret>(&instr)) {
        Facts v = value(x->src);
        put(ret_key(fn_), v);
        put(global_key(c, "ret0"), v);
      } else if (const auto *x = std::get_if<assembly::Op>(&instr)) {
        Facts v = value(x->lhs);
        v.join(value(x->rhs));
        assign(x->dst, v);
      } else if (const auto *x = std::get_if<assembly::Const>(&instr)) {
        var(x->dst);
      }
    }
  }

  const PolyglotProgram &p_;
  FnId fn_;
  const FunctionInfo &fi_;
  const FactMap &view_;
  const EngineOptions &opt_;
  FactMap out_;
  std::set<FactKey> touched_;
  std::map<std::string, Facts> vars_;
  bool changed_ = false;
};

/// Summarizes `fn` against `view`; unreached functions get a standalone
/// summary and contribute nothing.
void summarize_into(const PolyglotProgram &p, FnId fn, const FactMap &view,
                    const EngineOptions &opt, FunctionSummary &sum, FunctionState &st) {
  sum = FunctionSummary{};
  const FunctionInfo &fi = p.function(fn);
  if (fi.host)
    symbolic_host(p, fi, sum);
  else
    symbolic_asm(p, fi, sum);

  const Facts &callers = lookup(view, reach_key(fn));
  sum.reached = !callers.empty();
  if (sum.reached) {
    LocalSolve(p, fn, view, opt).run(sum, st);
    return;
  }
  FactMap none;
  FunctionState scratch;
  LocalSolve(p, fn, none, opt).run(sum, scratch);
  sum.edges.clear();
  sum.flows.clear();
  st.out.clear();
  st.reads.clear();
  st.reads[reach_key(fn)] = {};
}

FactMap merge_all(const PolyglotProgram &p, const std::vector<FunctionState> &states) {
  FactMap s;
  s[reach_key(p.entry_fn())].objs.insert(-1);
  for (const auto &st : states)
    for (const auto &[k, f] : st.out)
      s[k].join(f);
  return s;
}

bool stale(const FunctionState &st, const FactMap &facts) {
  for (const auto &[k, seen] : st.reads)
    if (!(lookup(facts, k) == seen))
      return true;
  return false;
}

} // namespace

FunctionSummary summarize_function(const PolyglotProgram &program, FnId fn,
                                   const FactMap &external, const EngineOptions &options) {
  FunctionSummary sum;
  FunctionState st;
  summarize_into(program, fn, external, options, sum, st);
  return sum;
}

AnalysisResult resume_fixpoint(const PolyglotProgram &p, AnalysisResult r,
                               const std::set<FnId> &dirty_in,
                               const EngineOptions &options) {
  const int cap = options.iteration_cap > 0 ? options.iteration_cap : default_iteration_cap();
  const std::size_t n = p.functions().size();
  r.summaries.resize(n);
  r.states.resize(n);
  r.iterations = 0;
  r.monotonicity_violations = 0;
  r.summarized.clear();
  for (FnId f : dirty_in)
    r.states[static_cast<std::size_t>(f)] = {};

  FactMap facts = merge_all(p, r.states);
  std::set<FnId> dirty = dirty_in;
  for (std::size_t f = 0; f < n; ++f)
    if (stale(r.states[f], facts))
      dirty.insert(static_cast<FnId>(f));
  std::set<FnId> reset = dirty_in; // contributions may legitimately shrink once
  while (!dirty.empty()) {
    if (++r.iterations > cap)
      throw Error("analysis did not converge within " + std::to_string(cap) + " rounds");
    // Components run in a fixed order and each sees what earlier components
    // produced this round.
    for (std::size_t c = 0; c < p.containers().size(); ++c) {
      FactMap view = merge_all(p, r.states);
      std::set<FnId> queue;
      for (FnId g : p.container(static_cast<int>(c)).functions)
        if (dirty.count(g) || stale(r.states[static_cast<std::size_t>(g)], view))
          queue.insert(g);
      while (!queue.empty()) {
        FnId f = *queue.begin();
        queue.erase(queue.begin());
        auto &st = r.states[static_cast<std::size_t>(f)];
        FactMap old_out = std::move(st.out);
        summarize_into(p, f, view, options, r.summaries[static_cast<std::size_t>(f)], st);
        r.summarized.insert(f);
        if (options.check_monotone && !reset.count(f))
          for (const auto &[k, v] : old_out)
            if (!lookup(st.out, k).includes(v))
              ++r.monotonicity_violations;
        reset.erase(f);
        for (const auto &[k, v] : st.out)
          view[k].join(v);
        for (FnId g : p.container(static_cast<int>(c)).functions)
          if (stale(r.states[static_cast<std::size_t>(g)], view))
            queue.insert(g);
      }
    }
    FactMap next = merge_all(p, r.states);
    if (options.check_monotone)
      for (const auto &[k, v] : facts)
        if (!lookup(next, k).includes(v))
          ++r.monotonicity_violations;
    facts = std::move(next);
    dirty.clear();
    for (std::size_t f = 0; f < n; ++f)
      if (stale(r.states[f], facts))
        dirty.insert(static_cast<FnId>(f));
  }
  r.facts = std::move(facts);
  return r;
}

AnalysisResult mutual_fixpoint(const PolyglotProgram &p, const EngineOptions &options) {
  std::set<FnId> all;
  for (std::size_t f = 0; f < p.functions().size(); ++f)
    all.insert(static_cast<FnId>(f));
  return resume_fixpoint(p, AnalysisResult{}, all, options);
}

// --- queries and output -------------------------------------------------------

AbstractObject abstract_object(const PolyglotProgram &p, SiteId s) {
  const SiteInfo &si = p.site(s);
  AbstractObject o;
  o.site = p.site_table().name(s);
  if (si.type)
    o.type = p.container(si.type_container).name + "." + si.type->name;
  o.bridge = si.bridge_alloc;
  return o;
}

std::set<AbstractObject> query_points_to(const PolyglotProgram &p, const AnalysisResult &r,
                                         std::string_view function,
                                         std::string_view variable) {
  auto dot = function.find('.');
  std::optional<FnId> fn;
  if (dot != std::string_view::npos)
    fn = p.find_function(function.substr(0, dot), function.substr(dot + 1));
  if (!fn || static_cast<std::size_t>(*fn) >= r.summaries.size())
    throw Error("unknown function " + std::string(function));
  const auto &vars = r.summaries[static_cast<std::size_t>(*fn)].vars;
  auto it = vars.find(std::string(variable));
  if (it == vars.end())
    throw Error("variable " + std::string(variable) + " does not occur in " +
                std::string(function));
  std::set<AbstractObject> out;
  for (int o : it->second.objs)
    out.insert(abstract_object(p, o));
  return out;
}

std::set<std::pair<std::string, std::string>> query_taint_flows(const PolyglotProgram &p,
                                                                const AnalysisResult &r) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto &s : r.summaries)
    if (s.reached)
      for (const auto &[src, sink] : s.flows)
        out.insert({p.site_table().name(src), p.site_table().name(sink)});
  return out;
}

CallGraph resolved_graph(const PolyglotProgram &p, const AnalysisResult &r) {
  CallGraph g;
  g.universe = function_universe(p);
  for (std::size_t f = 0; f < r.summaries.size(); ++f) {
    const auto &s = r.summaries[f];
    if (!s.reached)
      continue;
    g.nodes.insert(p.function(static_cast<FnId>(f)).node);
    for (const auto &e : s.edges)
      g.edges.insert({p.function(e.caller).node, p.site_table().name(e.site),
                      p.function(e.callee).node, e.mechanism});
  }
  return g;
}

namespace {

json names(const PolyglotProgram &p, const std::set<int> &sites) {
  std::set<std::string> out;
  for (int s : sites)
    out.insert(p.site_table().name(s));
  return out;
}

json edge_json(const CallEdge &e) {
  return {{"caller", e.caller.str()},
          {"site", e.site},
          {"callee", e.callee.str()},
          {"mechanism", std::string(to_string(e.mechanism))}};
}

} // namespace

std::string analysis_json(const PolyglotProgram &p, const AnalysisResult &r,
                          bool include_iterations) {
  json j;
  CallGraph g = resolved_graph(p, r);

  // Resolved targets per site, for the obligation records.
  std::map<std::string, std::set<std::string>> resolved;
  for (const auto &e : g.edges)
    resolved[e.site].insert(e.callee.str());

  std::map<std::string, json> summaries;
  std::map<std::string, json> pts;
  for (std::size_t f = 0; f < r.summaries.size(); ++f) {
    const auto &fi = p.function(static_cast<FnId>(f));
    const auto &s = r.summaries[f];
    json js;
    js["function"] = fi.node.str();
    js["provenance"] = std::string(to_string(fi.node.provenance));
    js["reached"] = s.reached;
    js["pts_effects"] = json::array();
    for (const auto &e : s.pts_effects)
      js["pts_effects"].push_back({{"target", e.target.str()}, {"source", e.source.str()}});
    js["taint_transfer"] = json::array();
    for (const auto &t : s.taint_transfer)
      js["taint_transfer"].push_back({{"from", t.from}, {"to", t.to}});
    std::map<std::string, json> obligations;
    for (const auto &o : s.obligations) {
      json jo{{"site", o.site},
              {"kind", std::string(to_string(o.kind))},
              {"target", o.target}};
      if (!o.receiver.empty())
        jo["receiver"] = o.receiver;
      json b = json::array();
      for (const auto &[name, paths] : o.bindings) {
        json ps = json::array();
        for (const auto &path : paths)
          ps.push_back(path.str());
        b.push_back({{"name", name}, {"values", ps}});
      }
      jo["bindings"] = b;
      jo["resolved"] = s.reached && resolved.count(o.site) ? json(resolved[o.site])
                                                          : json::array();
      obligations[o.site] = jo;
    }
    js["obligations"] = json::array();
    for (auto &[_, jo] : obligations)
      js["obligations"].push_back(jo);
    summaries[fi.node.str()] = js;

    if (s.reached && fi.host)
      for (const auto &[v, facts] : s.vars)
        pts[fi.node.str() + "\x1f" + v] = {
            {"function", fi.node.str()}, {"variable", v}, {"objects", names(p, facts.objs)}};
  }

  std::map<std::string, json> objects;
  for (SiteId o : p.object_sites()) {
    auto ao = abstract_object(p, o);
    objects[ao.site] = {{"site", ao.site}, {"type", ao.type}, {"bridge", ao.bridge}};
  }
  std::map<std::pair<std::string, std::string>, json> fields;
  for (const auto &[k, f] : r.facts)
    if (k.kind == KeyKind::field && !f.objs.empty()) {
      std::string obj = p.site_table().name(k.a);
      fields[{obj, k.name}] = {
          {"object", obj}, {"field", k.name}, {"objects", names(p, f.objs)}};
    }

  auto values = [](auto &m) {
    json a = json::array();
    for (auto &[_, v] : m)
      a.push_back(v);
    return a;
  };
  j["objects"] = values(objects);
  j["summaries"] = values(summaries);
  j["points_to"] = values(pts);
  j["field_points_to"] = values(fields);
  j["taint_flows"] = json::array();
  for (const auto &[src, sink] : query_taint_flows(p, r))
    j["taint_flows"].push_back({{"source", src}, {"sink", sink}});
  json nodes = json::array();
  for (const auto &n : g.nodes)
    nodes.push_back(n.str());
  json edges = json::array();
  for (const auto &e : g.edges)
    edges.push_back(edge_json(e));
  j["call_graph"] = {{"nodes", nodes}, {"edges", edges}};
  if (include_iterations)
    j["iterations"] = r.iterations;
  return j.dump(2) + "\n";
}

} // namespace trilang
