// Random well-formed program generator.
//
// Programs are built so that run() always completes: every variable has a
// static kind (int or an object of a known type), method calls only target
// types lower than the calling method's own type, evals only go deeper down
// the middle-unit chain, and loops are counter-bounded. Guest functions
// record which methods they need on each bridge parameter; the eval caller
// allocates a bridge type that declares all of them.

#include "trilang/harness.hpp"

#include "json.hpp"

#include <algorithm>
#include <random>

namespace trilang {

using json = nlohmann::json;

void validate(const GenConfig &c) {
  auto positive = [](int v, const char *name) {
    if (v <= 0)
      throw Error(std::string("config: ") + name + " must be positive");
  };
  positive(c.types, "types");
  positive(c.functions_per_unit, "functions_per_unit");
  positive(c.middle_units, "middle_units");
  positive(c.asm_modules, "asm_modules");
  positive(c.stmts, "stmts");
  positive(c.max_loop_trips, "max_loop_trips");
  for (auto [p, name] : {std::pair{c.p_eval, "p_eval"}, std::pair{c.p_asmcall, "p_asmcall"},
                         std::pair{c.p_bridge, "p_bridge"}})
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(std::string("config: ") + name + " must be in [0, 1]");
}

GenConfig config_from_json(std::string_view text, GenConfig c) {
  try {
    json j = json::parse(text);
    if (!j.is_object())
      throw Error("config must be a JSON object");
    for (auto &[k, v] : j.items()) {
      if (k == "seed")
        c.seed = v.get<std::uint64_t>();
      else if (k == "types")
        c.types = v.get<int>();
      else if (k == "functions_per_unit")
        c.functions_per_unit = v.get<int>();
      else if (k == "middle_units")
        c.middle_units = v.get<int>();
      else if (k == "asm_modules")
        c.asm_modules = v.get<int>();
      else if (k == "stmts")
        c.stmts = v.get<int>();
      else if (k == "p_eval")
        c.p_eval = v.get<double>();
      else if (k == "p_asmcall")
        c.p_asmcall = v.get<double>();
      else if (k == "p_bridge")
        c.p_bridge = v.get<double>();
      else if (k == "max_loop_trips")
        c.max_loop_trips = v.get<int>();
      else
        throw Error("config: unknown key " + k);
    }
  } catch (const json::exception &e) {
    throw Error(std::string("malformed config: ") + e.what());
  }
  validate(c);
  return c;
}

std::string config_json(const GenConfig &c) {
  json j{{"seed", c.seed},
         {"types", c.types},
         {"functions_per_unit", c.functions_per_unit},
         {"middle_units", c.middle_units},
         {"asm_modules", c.asm_modules},
         {"stmts", c.stmts},
         {"p_eval", c.p_eval},
         {"p_asmcall", c.p_asmcall},
         {"p_bridge", c.p_bridge},
         {"max_loop_trips", c.max_loop_trips}};
  return j.dump(2) + "\n";
}

namespace {

// Modulo reduction keeps streams identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  int below(int n) { return n <= 0 ? 0 : static_cast<int>(g_() % static_cast<std::uint64_t>(n)); }
  int range(int lo, int hi) { return lo + below(hi - lo + 1); }
  bool chance(double p) { return static_cast<double>(g_() >> 11) * 0x1.0p-53 < p; }
  template <typename T> const T &pick(const std::vector<T> &v) {
    return v[static_cast<std::size_t>(below(static_cast<int>(v.size())))];
  }

private:
  std::mt19937_64 g_;
};

struct MethodSig {
  const char *name;
  int arity;
};
constexpr MethodSig kPool[] = {{"get", 0}, {"put", 1}, {"mix", 2}, {"step", 1}};
constexpr const char *kInner = "inner"; // returns the `r` field

int pool_arity(const std::string &m) {
  for (const auto &s : kPool)
    if (m == s.name)
      return s.arity;
  return 0;
}

constexpr int kInt = -1;
constexpr int kBridgeParam = -2;

struct TypePlan {
  std::string name;
  bool has_ref = false; // field `r` holds an object of the previous type
  std::set<std::string> methods;
};

struct FnPlan {
  std::string name;
  std::vector<std::string> bridges;
  std::map<std::string, std::set<std::string>> needs; // bridge -> methods
  host::Block body;
};

struct UnitPlan {
  std::string name;
  int level = -1; // -1 entry, k for mid<k>
  std::vector<TypePlan> types;
  std::vector<FnPlan> fns;
};

struct ProcPlan {
  std::string name;
  bool exported = false;
  int arity = 0;
};

struct ModPlan {
  std::string name;
  std::vector<ProcPlan> procs;
};

struct Plan {
  std::vector<UnitPlan> units; // [0] entry
  std::vector<ModPlan> mods;
};

host::Stmt mk(host::StmtNode n) { return host::Stmt{std::move(n), {}}; }

struct Var {
  std::string name;
  int type; // kInt, kBridgeParam, or a type index in the unit
};

class BodyGen {
public:
  BodyGen(Rng &rng, const GenConfig &cfg, Plan &plan, int unit, int self_type, FnPlan *fn)
      : rng_(rng), cfg_(cfg), plan_(plan), unit_(unit), self_type_(self_type), fn_(fn) {}

  host::Block generate(std::vector<Var> env, bool must_eval) {
    host::Block out;
    int budget = cfg_.stmts;
    while (budget > 0)
      budget -= stmt(out, env, 0);
    if (must_eval && !did_eval_)
      eval(out, env, true);
    // Return an int (methods) or any value (other functions).
    std::vector<Var> candidates;
    for (const auto &v : env)
      if (v.type == kInt || (self_type_ < 0 && v.type >= 0))
        candidates.push_back(v);
    if (candidates.empty()) {
      std::string z = fresh("z");
      out.push_back(mk(host::ConstAssign{z, 0}));
      candidates.push_back({z, kInt});
    }
    out.push_back(mk(host::Return{rng_.pick(candidates).name}));
    return out;
  }

private:
  UnitPlan &unit() { return plan_.units[static_cast<std::size_t>(unit_)]; }
  std::string fresh(const char *prefix) { return prefix + std::to_string(counter_++); }

  std::vector<Var> of_kind(const std::vector<Var> &env, bool ints) {
    std::vector<Var> out;
    for (const auto &v : env)
      if ((v.type == kInt) == ints)
        out.push_back(v);
    return out;
  }

  /// An int variable, creating a constant when none exists.
  std::string int_var(host::Block &out, std::vector<Var> &env) {
    auto ints = of_kind(env, true);
    if (!ints.empty())
      return rng_.pick(ints).name;
    std::string v = fresh("v");
    out.push_back(mk(host::ConstAssign{v, rng_.range(-3, 9)}));
    env.push_back({v, kInt});
    return v;
  }

  int alloc_limit() const {
    return self_type_ >= 0 ? self_type_ : static_cast<int>(plan_.units[static_cast<std::size_t>(unit_)].types.size());
  }

  /// `v = new T();` plus initialization of the ref-field chain.
  void alloc(host::Block &out, const std::string &v, int t, bool bridge) {
    if (bridge)
      out.push_back(mk(host::BridgeAlloc{v, unit().types[static_cast<std::size_t>(t)].name}));
    else
      out.push_back(mk(host::Alloc{v, unit().types[static_cast<std::size_t>(t)].name}));
    std::string holder = v;
    while (unit().types[static_cast<std::size_t>(t)].has_ref) {
      --t;
      std::string inner = fresh("o");
      out.push_back(mk(host::Alloc{inner, unit().types[static_cast<std::size_t>(t)].name}));
      out.push_back(mk(host::FieldStore{holder, "r", inner}));
      holder = inner;
    }
  }

  std::vector<std::pair<int, int>> asm_targets() {
    std::vector<std::pair<int, int>> out;
    for (std::size_t m = 0; m < plan_.mods.size(); ++m)
      for (std::size_t p = 0; p < plan_.mods[m].procs.size(); ++p)
        if (plan_.mods[m].procs[p].exported)
          out.emplace_back(static_cast<int>(m), static_cast<int>(p));
    return out;
  }

  std::vector<std::pair<int, int>> eval_targets() {
    std::vector<std::pair<int, int>> out;
    int level = unit().level;
    for (std::size_t u = 1; u < plan_.units.size(); ++u)
      if (plan_.units[u].level > level)
        for (std::size_t f = 0; f < plan_.units[u].fns.size(); ++f)
          out.emplace_back(static_cast<int>(u), static_cast<int>(f));
    return out;
  }

  void eval(host::Block &out, std::vector<Var> &env, bool forced) {
    auto targets = eval_targets();
    if (targets.empty())
      return;
    (void)forced;
    auto [u, f] = rng_.pick(targets);
    const FnPlan &target = plan_.units[static_cast<std::size_t>(u)].fns[static_cast<std::size_t>(f)];
    for (const auto &b : target.bridges) {
      auto it = std::find_if(env.begin(), env.end(), [&](const Var &v) { return v.name == b; });
      int t;
      if (it == env.end()) {
        t = rng_.below(static_cast<int>(unit().types.size()));
        alloc(out, b, t, true);
        env.push_back({b, t});
        if (rng_.chance(0.6))
          out.push_back(mk(host::FieldStore{b, rng_.chance(0.5) ? "v0" : "v1", int_var(out, env)}));
      } else {
        t = it->type;
      }
      if (auto n = target.needs.find(b); n != target.needs.end())
        unit().types[static_cast<std::size_t>(t)].methods.insert(n->second.begin(), n->second.end());
    }
    out.push_back(mk(host::Eval{plan_.units[static_cast<std::size_t>(u)].name, target.name, target.bridges}));
    did_eval_ = true;
  }

  void asmcall(host::Block &out, std::vector<Var> &env) {
    auto targets = asm_targets();
    if (targets.empty())
      return;
    auto [m, p] = rng_.pick(targets);
    const ProcPlan &proc = plan_.mods[static_cast<std::size_t>(m)].procs[static_cast<std::size_t>(p)];
    std::vector<std::string> args;
    for (int k = 0; k < proc.arity; ++k)
      args.push_back(int_var(out, env));
    std::string r = fresh("v");
    out.push_back(mk(host::AsmCall{r, plan_.mods[static_cast<std::size_t>(m)].name, proc.name, args}));
    env.push_back({r, kInt});
  }

  /// Emits one statement (possibly compound); returns the budget used.
  int stmt(host::Block &out, std::vector<Var> &env, int depth) {
    bool top = depth == 0;
    if (top && self_type_ < 0 && rng_.chance(cfg_.p_eval) && !eval_targets().empty()) {
      eval(out, env, false);
      return 1;
    }
    if (rng_.chance(cfg_.p_asmcall) && !asm_targets().empty()) {
      asmcall(out, env);
      return 1;
    }
    std::vector<Var> bridges;
    for (const auto &v : env)
      if (v.type == kBridgeParam)
        bridges.push_back(v);
    if (!bridges.empty() && rng_.chance(cfg_.p_bridge)) {
      const Var &b = rng_.pick(bridges);
      const MethodSig &sig = kPool[rng_.below(4)];
      std::vector<std::string> args;
      for (int k = 0; k < sig.arity; ++k)
        args.push_back(int_var(out, env));
      std::string r = fresh("v");
      out.push_back(mk(host::MethodCall{r, b.name, sig.name, args}));
      fn_->needs[b.name].insert(sig.name);
      env.push_back({r, kInt});
      return 1;
    }

    auto objs = of_kind(env, false);
    // Receivers for ordinary calls: typed objects other than `self`.
    std::vector<Var> receivers;
    for (const auto &o : objs)
      if (o.type >= 0 && o.name != "self" && !unit().types[static_cast<std::size_t>(o.type)].methods.empty())
        receivers.push_back(o);
    std::vector<Var> refs;
    for (const auto &o : objs)
      if (o.type >= 0 && unit().types[static_cast<std::size_t>(o.type)].has_ref)
        refs.push_back(o);

    enum Kind { k_const, k_source, k_binop, k_alloc, k_store, k_load, k_ref, k_call, k_sink, k_if, k_while };
    std::vector<std::pair<Kind, int>> menu{{k_const, 2}, {k_source, 1}, {k_binop, 2}};
    if (alloc_limit() > 0)
      menu.push_back({k_alloc, 2});
    if (!objs.empty())
      menu.insert(menu.end(), {{k_store, 2}, {k_load, 2}});
    if (!refs.empty())
      menu.push_back({k_ref, 1});
    if (!receivers.empty())
      menu.push_back({k_call, 3});
    if (!of_kind(env, true).empty())
      menu.push_back({k_sink, 1});
    if (top)
      menu.insert(menu.end(), {{k_if, 1}, {k_while, 1}});
    int total = 0;
    for (auto &[_, w] : menu)
      total += w;
    int roll = rng_.below(total);
    Kind kind = menu.back().first;
    for (auto &[k, w] : menu) {
      if (roll < w) {
        kind = k;
        break;
      }
      roll -= w;
    }

    switch (kind) {
    case k_const: {
      auto ints = of_kind(env, true);
      if (!ints.empty() && rng_.chance(0.3)) {
        out.push_back(mk(host::ConstAssign{rng_.pick(ints).name, rng_.range(-3, 9)}));
      } else {
        std::string v = fresh("v");
        out.push_back(mk(host::ConstAssign{v, rng_.range(-3, 9)}));
        env.push_back({v, kInt});
      }
      return 1;
    }
    case k_source: {
      std::string v = fresh("s");
      out.push_back(mk(host::SourceAssign{v}));
      env.push_back({v, kInt});
      return 1;
    }
    case k_binop: {
      std::string a = int_var(out, env), b = int_var(out, env);
      std::string r = fresh("v");
      auto op = static_cast<host::BinOpKind>(rng_.below(3));
      out.push_back(mk(host::BinOp{r, op, a, b}));
      env.push_back({r, kInt});
      return 1;
    }
    case k_alloc: {
      std::string v = fresh("o");
      int t = rng_.below(alloc_limit());
      alloc(out, v, t, false);
      env.push_back({v, t});
      return 1;
    }
    case k_store: {
      const Var &o = rng_.pick(objs);
      std::string val = int_var(out, env);
      out.push_back(mk(host::FieldStore{o.name, rng_.chance(0.5) ? "v0" : "v1", val}));
      return 1;
    }
    case k_load: {
      const Var &o = rng_.pick(objs);
      std::string r = fresh("v");
      out.push_back(mk(host::FieldLoad{r, o.name, rng_.chance(0.5) ? "v0" : "v1"}));
      env.push_back({r, kInt});
      return 1;
    }
    case k_ref: {
      Var o = rng_.pick(refs);
      std::string r = fresh("o");
      out.push_back(mk(host::FieldLoad{r, o.name, "r"}));
      env.push_back({r, o.type - 1});
      return 1;
    }
    case k_call: {
      Var o = rng_.pick(receivers);
      const auto &ms = unit().types[static_cast<std::size_t>(o.type)].methods;
      std::vector<std::string> names(ms.begin(), ms.end());
      std::string m = rng_.pick(names);
      std::vector<std::string> args;
      for (int k = 0; k < pool_arity(m); ++k)
        args.push_back(int_var(out, env));
      bool inner = m == kInner;
      std::string r = fresh(inner ? "o" : "v");
      out.push_back(mk(host::MethodCall{r, o.name, m, args}));
      env.push_back({r, inner ? o.type - 1 : kInt});
      return 1;
    }
    case k_sink: {
      out.push_back(mk(host::SinkCall{rng_.pick(of_kind(env, true)).name}));
      return 1;
    }
    case k_if: {
      std::string x = int_var(out, env);
      host::If s;
      s.cond = {x, static_cast<host::Relation>(rng_.below(3)), std::int64_t{rng_.range(0, 4)}};
      int used = 1;
      std::vector<Var> inner = env;
      int n = rng_.range(1, 3);
      for (int i = 0; i < n; ++i)
        used += stmt(s.then_body, inner, depth + 1);
      if (rng_.chance(0.5)) {
        s.has_else = true;
        inner = env;
        for (int i = 0; i < n; ++i)
          used += stmt(s.else_body, inner, depth + 1);
      }
      out.push_back(mk(std::move(s)));
      return used;
    }
    case k_while: {
      std::string c = fresh("c"), one = fresh("k");
      out.push_back(mk(host::ConstAssign{c, 0}));
      out.push_back(mk(host::ConstAssign{one, 1}));
      host::While w;
      w.cond = {c, host::Relation::lt, std::int64_t{rng_.range(1, cfg_.max_loop_trips)}};
      std::vector<Var> inner = env;
      int used = 1;
      int n = rng_.range(1, 3);
      for (int i = 0; i < n; ++i)
        used += stmt(w.body, inner, depth + 1);
      w.body.push_back(mk(host::BinOp{c, host::BinOpKind::add, c, one}));
      out.push_back(mk(std::move(w)));
      return used;
    }
    }
    return 1;
  }

  Rng &rng_;
  const GenConfig &cfg_;
  Plan &plan_;
  int unit_;
  int self_type_;
  FnPlan *fn_;
  int counter_ = 0;
  bool did_eval_ = false;
};

std::vector<assembly::LabeledInstr> gen_proc(Rng &rng, const GenConfig &cfg, const Plan &plan,
                                             int m, int p) {
  using namespace assembly;
  std::vector<LabeledInstr> body;
  auto emit = [&](Instr i, std::optional<std::string> label = std::nullopt) {
    body.push_back({std::move(label), std::move(i), {}});
  };
  const ProcPlan &self = plan.mods[static_cast<std::size_t>(m)].procs[static_cast<std::size_t>(p)];
  std::vector<std::string> locals;
  int counter = 0;
  auto fresh = [&] { return "l" + std::to_string(counter++); };
  for (int a = 0; a < self.arity; ++a) {
    std::string l = fresh();
    emit(Load{l, "arg" + std::to_string(a)});
    locals.push_back(l);
  }
  if (locals.empty()) {
    std::string l = fresh();
    emit(Const{l, rng.range(0, 9)});
    locals.push_back(l);
  }
  std::vector<std::string> callees; // lower procedures, own module or exported elsewhere
  for (int q = 0; q < p; ++q)
    callees.push_back(plan.mods[static_cast<std::size_t>(m)].procs[static_cast<std::size_t>(q)].name);
  for (int mm = 0; mm < m; ++mm)
    for (const auto &q : plan.mods[static_cast<std::size_t>(mm)].procs)
      if (q.exported)
        callees.push_back(plan.mods[static_cast<std::size_t>(mm)].name + "." + q.name);

  bool looped = false;
  int budget = cfg.stmts;
  while (budget-- > 0) {
    int roll = rng.below(10);
    if (roll < 2) {
      std::string l = fresh();
      emit(Const{l, rng.range(-3, 9)});
      locals.push_back(l);
    } else if (roll < 5) {
      std::string l = fresh();
      emit(Op{l, static_cast<OpKind>(rng.below(3)), rng.pick(locals), rng.pick(locals)});
      locals.push_back(l);
    } else if (roll < 6) {
      emit(Store{rng.chance(0.5) ? "g0" : "g1", rng.pick(locals)});
    } else if (roll < 7) {
      std::string l = fresh();
      emit(Load{l, rng.chance(0.5) ? "g0" : "g1"});
      locals.push_back(l);
    } else if (roll < 9 && !callees.empty()) {
      std::string target = rng.pick(callees);
      if (target.find('.') == std::string::npos) {
        const auto &procs = plan.mods[static_cast<std::size_t>(m)].procs;
        auto it = std::find_if(procs.begin(), procs.end(), [&](auto &q) { return q.name == target; });
        for (int a = 0; a < it->arity; ++a)
          emit(Store{"arg" + std::to_string(a), rng.pick(locals)});
      }
      emit(Call{target});
      std::string l = fresh();
      emit(Load{l, "ret0"});
      locals.push_back(l);
    } else if (!looped) {
      looped = true;
      std::string c = fresh(), one = fresh(), n = fresh();
      std::string head = "loop" + std::to_string(p), done = "done" + std::to_string(p);
      emit(Const{c, 0});
      emit(Const{one, 1});
      emit(Const{n, rng.range(1, cfg.max_loop_trips)});
      emit(Compare{c, n}, head);
      emit(BranchCond{done});
      std::string acc = fresh();
      emit(Op{acc, static_cast<OpKind>(rng.below(3)), rng.pick(locals), rng.pick(locals)});
      if (rng.chance(0.5))
        emit(Store{rng.chance(0.5) ? "g0" : "g1", acc});
      emit(Op{c, OpKind::add, c, one});
      emit(Br{head});
      // The label lands on whatever comes next (at worst the final ret).
      locals.push_back(acc);
      std::string l = fresh();
      emit(Op{l, OpKind::add, acc, c}, done);
      locals.push_back(l);
    }
  }
  emit(Ret{rng.pick(locals)});
  return body;
}

Plan make_plan(Rng &rng, const GenConfig &cfg) {
  Plan plan;
  for (int u = 0; u <= cfg.middle_units; ++u) {
    UnitPlan unit;
    unit.name = u == 0 ? "entry" : "mid" + std::to_string(u - 1);
    unit.level = u - 1;
    for (int t = 0; t < cfg.types; ++t) {
      TypePlan tp;
      tp.name = "T" + std::to_string(t);
      tp.has_ref = t > 0 && rng.chance(0.5);
      for (const auto &s : kPool)
        if (rng.chance(0.5))
          tp.methods.insert(s.name);
      if (tp.methods.empty())
        tp.methods.insert(kPool[rng.below(4)].name);
      if (tp.has_ref)
        tp.methods.insert(kInner);
      unit.types.push_back(std::move(tp));
    }
    for (int f = 0; f < cfg.functions_per_unit; ++f) {
      FnPlan fn;
      fn.name = u == 0 ? (f == 0 ? "main" : "aux" + std::to_string(f)) : "f" + std::to_string(f);
      if (u > 0 && rng.chance(cfg.p_bridge)) {
        int n = rng.chance(0.25) ? 2 : 1;
        for (int b = 0; b < n; ++b)
          fn.bridges.push_back("b" + std::to_string(u - 1) + "_" + std::to_string(b));
      }
      unit.fns.push_back(std::move(fn));
    }
    plan.units.push_back(std::move(unit));
  }
  for (int m = 0; m < cfg.asm_modules; ++m) {
    ModPlan mod;
    mod.name = "cmod" + std::to_string(m);
    for (int p = 0; p < cfg.functions_per_unit; ++p)
      mod.procs.push_back({"p" + std::to_string(p),
                           p == cfg.functions_per_unit - 1 || rng.chance(0.7), rng.range(0, 2)});
    plan.mods.push_back(std::move(mod));
  }
  return plan;
}

struct Sources {
  host::HostUnit entry;
  std::vector<host::HostUnit> middles;
  std::vector<assembly::AsmModule> asms;
};

Sources build(const GenConfig &cfg, std::uint64_t seed) {
  Rng rng(seed);
  Plan plan = make_plan(rng, cfg);
  Sources src;

  for (std::size_t m = 0; m < plan.mods.size(); ++m) {
    assembly::AsmModule mod;
    mod.name = plan.mods[m].name;
    mod.globals = {"g0", "g1"};
    for (std::size_t p = 0; p < plan.mods[m].procs.size(); ++p) {
      assembly::Procedure proc;
      proc.name = plan.mods[m].procs[p].name;
      proc.exported = plan.mods[m].procs[p].exported;
      proc.body = gen_proc(rng, cfg, plan, static_cast<int>(m), static_cast<int>(p));
      assembly::derive_locals(mod, proc);
      mod.procedures.push_back(std::move(proc));
    }
    src.asms.push_back(std::move(mod));
  }

  // Deepest middle units first so eval callers know their targets' needs.
  for (int u = static_cast<int>(plan.units.size()) - 1; u >= 0; --u) {
    auto &unit = plan.units[static_cast<std::size_t>(u)];
    for (std::size_t f = 0; f < unit.fns.size(); ++f) {
      FnPlan &fn = unit.fns[f];
      std::vector<Var> env;
      for (const auto &b : fn.bridges)
        env.push_back({b, kBridgeParam});
      BodyGen gen(rng, cfg, plan, u, -1, &fn);
      bool must_eval = u == 0 && f == 0 && cfg.p_eval > 0;
      fn.body = gen.generate(std::move(env), must_eval);
    }
  }

  for (std::size_t u = 0; u < plan.units.size(); ++u) {
    auto &unit = plan.units[u];
    host::HostUnit hu;
    hu.name = unit.name;
    std::vector<host::FunctionDecl> methods;
    for (std::size_t t = 0; t < unit.types.size(); ++t) {
      const TypePlan &tp = unit.types[t];
      host::TypeDecl td;
      td.name = tp.name;
      td.fields = {"v0", "v1"};
      if (tp.has_ref)
        td.fields.push_back("r");
      for (const auto &m : tp.methods) {
        std::string fname = tp.name + "_" + m;
        td.methods.push_back({m, fname});
        host::FunctionDecl fd;
        fd.name = fname;
        fd.params = {"self"};
        if (m == kInner) {
          fd.body.push_back(mk(host::FieldLoad{"x", "self", "r"}));
          fd.body.push_back(mk(host::Return{"x"}));
        } else {
          std::vector<Var> env{{"self", static_cast<int>(t)}};
          for (int a = 0; a < pool_arity(m); ++a) {
            fd.params.push_back("a" + std::to_string(a));
            env.push_back({"a" + std::to_string(a), kInt});
          }
          BodyGen gen(rng, cfg, plan, static_cast<int>(u), static_cast<int>(t), nullptr);
          fd.body = gen.generate(std::move(env), false);
        }
        methods.push_back(std::move(fd));
      }
      hu.types.push_back(std::move(td));
    }
    for (auto &fn : unit.fns) {
      host::FunctionDecl fd;
      fd.name = fn.name;
      fd.bridge_params = fn.bridges;
      fd.body = std::move(fn.body);
      hu.functions.push_back(std::move(fd));
    }
    for (auto &m : methods)
      hu.functions.push_back(std::move(m));
    if (u == 0)
      src.entry = std::move(hu);
    else
      src.middles.push_back(std::move(hu));
  }
  return src;
}

/// Rendered, re-parsed and linked; nullopt when anything reports a diagnostic.
std::optional<PolyglotProgram> materialize(const Sources &src) {
  auto entry = host::parse_host(host::render_host(src.entry));
  if (!entry)
    return std::nullopt;
  std::vector<host::HostUnit> middles;
  for (const auto &m : src.middles) {
    auto u = host::parse_host(host::render_host(m));
    if (!u)
      return std::nullopt;
    middles.push_back(std::move(*u.value));
  }
  std::vector<assembly::AsmModule> asms;
  for (const auto &a : src.asms) {
    auto m = assembly::parse_asm(assembly::render_asm(a));
    if (!m)
      return std::nullopt;
    asms.push_back(std::move(*m.value));
  }
  auto linked = link_units(std::move(*entry.value), std::move(middles), std::move(asms), "main");
  if (!linked.ok())
    return std::nullopt;
  return std::move(*linked.value);
}

PolyglotProgram fallback_program() {
  const char *entry = R"(unit entry;
type T0 { fields: v0, v1; methods: get = T0_get }
func main() {
  bridge b0_0 = new T0();
  eval(mid0.f0, [b0_0]);
  s = source();
  r = asmcall(cmod0.p0, s);
  sink(r);
  return r;
}
func T0_get(self) {
  x = self.v0;
  return x;
}
)";
  const char *mid = R"(unit mid0;
func f0() bridge [b0_0] {
  x = b0_0.get();
  return x;
}
)";
  const char *mod = "module cmod0 { export proc p0 { l <- load arg0\n ret l } }";
  auto linked = link_units(*host::parse_host(entry).value, {*host::parse_host(mid).value},
                           {*assembly::parse_asm(mod).value}, "main");
  return std::move(*linked.value);
}

} // namespace

PolyglotProgram generate(const GenConfig &config) {
  validate(config);
  constexpr int kRetries = 8;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    std::uint64_t seed = config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt);
    if (auto p = materialize(build(config, seed)))
      return std::move(*p);
  }
  return fallback_program();
}

void write_program(const PolyglotProgram &program, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  for (const auto &[name, text] : render_sources(program))
    write_file(dir / name, text);
  write_file(dir / "manifest.json", manifest_json(manifest_for(program)));
}

// --- edits --------------------------------------------------------------------

namespace {

std::optional<ReplacementBody> mutate_host(Rng &rng, const PolyglotProgram &p, const FunctionInfo &fi) {
  host::Block body = fi.host->body;
  if (body.empty())
    return std::nullopt;
  std::size_t n = body.size();
  std::size_t last = std::holds_alternative<host::Return>(body.back().node) ? n - 1 : n;
  switch (rng.below(5)) {
  case 0: // drop a statement
  case 1: {
    if (last == 0)
      return std::nullopt;
    body.erase(body.begin() + rng.below(static_cast<int>(last)));
    break;
  }
  case 2: { // duplicate a statement in place
    std::size_t i = static_cast<std::size_t>(rng.below(static_cast<int>(n)));
    host::Stmt copy = body[i];
    body.insert(body.begin() + static_cast<std::ptrdiff_t>(i), copy);
    break;
  }
  case 3: { // retarget an allocation
    const auto &types = p.container(fi.container).unit->types;
    std::vector<std::string *> allocs;
    for (auto &s : body) {
      if (auto *a = std::get_if<host::Alloc>(&s.node))
        allocs.push_back(&a->type);
      else if (auto *b = std::get_if<host::BridgeAlloc>(&s.node))
        allocs.push_back(&b->type);
    }
    if (allocs.empty() || types.size() < 2)
      return std::nullopt;
    *allocs[static_cast<std::size_t>(rng.below(static_cast<int>(allocs.size())))] =
        types[static_cast<std::size_t>(rng.below(static_cast<int>(types.size())))].name;
    break;
  }
  default: { // taint whatever reaches a sink
    std::vector<std::size_t> sinks;
    for (std::size_t i = 0; i < n; ++i)
      if (std::holds_alternative<host::SinkCall>(body[i].node))
        sinks.push_back(i);
    if (sinks.empty())
      return std::nullopt;
    std::size_t i = sinks[static_cast<std::size_t>(rng.below(static_cast<int>(sinks.size())))];
    std::string v = std::get<host::SinkCall>(body[i].node).var;
    body.insert(body.begin() + static_cast<std::ptrdiff_t>(i), host::Stmt{host::SourceAssign{v}, {}});
  }
  }
  return body;
}

std::optional<ReplacementBody> mutate_asm(Rng &rng, const FunctionInfo &fi) {
  auto body = fi.proc->body;
  if (body.empty())
    return std::nullopt;
  std::size_t i = static_cast<std::size_t>(rng.below(static_cast<int>(body.size())));
  switch (rng.below(3)) {
  case 0: { // cut an argument: `l <- load argK` becomes a constant
    std::vector<std::size_t> loads;
    for (std::size_t k = 0; k < body.size(); ++k)
      if (const auto *l = std::get_if<assembly::Load>(&body[k].instr); l && assembly::arg_index(l->src))
        loads.push_back(k);
    if (loads.empty())
      return std::nullopt;
    auto &li = body[loads[static_cast<std::size_t>(rng.below(static_cast<int>(loads.size())))]];
    li.instr = assembly::Const{std::get<assembly::Load>(li.instr).dst, 0};
    break;
  }
  case 1:
    if (body[i].label || std::holds_alternative<assembly::Ret>(body[i].instr))
      return std::nullopt;
    body.erase(body.begin() + static_cast<std::ptrdiff_t>(i));
    break;
  default: {
    if (body[i].label)
      return std::nullopt;
    auto copy = body[i];
    body.insert(body.begin() + static_cast<std::ptrdiff_t>(i), copy);
  }
  }
  return body;
}

} // namespace

Edit gen_edit(const GenConfig &config, const PolyglotProgram &program) {
  Rng rng(config.seed ^ 0x5bd1e995a1b2c3d4ULL);
  CallGraph cha = build_cha(program);
  std::vector<NodeId> candidates(cha.nodes.begin(), cha.nodes.end());
  const NodeId target = rng.pick(candidates);
  const FunctionInfo &fi = program.function(*program.find_function(target));
  for (int attempt = 0; attempt < 64; ++attempt) {
    auto body = fi.host ? mutate_host(rng, program, fi) : mutate_asm(rng, fi);
    if (!body)
      continue;
    Edit e{target, std::move(*body)};
    if (apply_edit(program, e).ok())
      return e;
  }
  if (fi.host)
    return {target, fi.host->body};
  return {target, fi.proc->body};
}

} // namespace trilang
