#include "trilang/interp.hpp"

#include "json.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace trilang {

using json = nlohmann::json;

std::string_view to_string(Outcome o) {
  switch (o) {
  case Outcome::completed:
    return "completed";
  case Outcome::step_limit_exceeded:
    return "step-limit-exceeded";
  case Outcome::runtime_fault:
    return "runtime-fault";
  }
  return "?";
}

namespace {

using Labels = std::vector<SiteId>; // sorted, unique source sites

Labels join(const Labels &a, const Labels &b) {
  Labels out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

struct Value {
  enum class Kind { integer, object } kind = Kind::integer;
  std::int64_t num = 0;
  Labels taint;
  int object = -1;

  static Value integer(std::int64_t v, Labels t = {}) {
    Value out;
    out.num = v;
    out.taint = std::move(t);
    return out;
  }
  static Value ref(int o) {
    Value out;
    out.kind = Kind::object;
    out.object = o;
    return out;
  }
  bool is_object() const { return kind == Kind::object; }
};

struct Object {
  SiteId site;
  int container;
  const host::TypeDecl *type;
  std::map<std::string, Value> fields;
};

struct Fault {
  std::string what;
};
struct StepLimit {};

constexpr int kMaxDepth = 256;

std::int64_t wrap(host::BinOpKind op, std::int64_t a, std::int64_t b) {
  auto ua = static_cast<std::uint64_t>(a), ub = static_cast<std::uint64_t>(b);
  switch (op) {
  case host::BinOpKind::add:
    return static_cast<std::int64_t>(ua + ub);
  case host::BinOpKind::sub:
    return static_cast<std::int64_t>(ua - ub);
  case host::BinOpKind::mul:
    return static_cast<std::int64_t>(ua * ub);
  }
  return 0;
}

class Machine {
public:
  Machine(const PolyglotProgram &p, std::uint64_t limit, DynamicTrace &trace)
      : p_(p), limit_(limit), trace_(trace), globals_(p.containers().size()) {
    for (const auto &fi : p.functions())
      if (fi.host)
        for (SiteId s : fi.sites)
          site_of_[p.site(s).stmt] = s;
  }

  void run_entry() { call_host(p_.entry_fn(), {}, {}); }

private:
  struct Frame {
    FnId fn;
    std::map<std::string, Value> vars;
    std::map<std::string, Value> exposed;
    bool returned = false;
    Value ret;
  };

  void tick() {
    if (trace_.steps >= limit_)
      throw StepLimit{};
    ++trace_.steps;
  }

  void record(FnId caller, SiteId site, FnId callee, Mechanism m) {
    trace_.call_edges.insert({p_.function(caller).node.str(), p_.site_table().name(site),
                              p_.function(callee).node.str(), m});
  }

  struct DepthGuard {
    int &d;
    explicit DepthGuard(int &depth) : d(depth) {
      if (++d > kMaxDepth)
        throw Fault{"call depth limit exceeded"};
    }
    ~DepthGuard() { --d; }
  };

  Value call_host(FnId fn, std::vector<Value> args, std::map<std::string, Value> exposed) {
    DepthGuard guard(depth_);
    const FunctionInfo &fi = p_.function(fn);
    Frame f;
    f.fn = fn;
    f.exposed = std::move(exposed);
    for (std::size_t i = 0; i < fi.host->params.size(); ++i)
      f.vars[fi.host->params[i]] = std::move(args[i]);
    exec_block(f, fi.host->body);
    return f.returned ? f.ret : Value::integer(0);
  }

  Value read(const Frame &f, const std::string &name) {
    if (auto it = f.vars.find(name); it != f.vars.end())
      return it->second;
    if (p_.function(f.fn).is_bridge_param(name)) {
      if (auto it = f.exposed.find(name); it != f.exposed.end())
        return it->second;
      throw Fault{"read of unexposed bridge name " + name};
    }
    throw Fault{"read of unassigned variable " + name};
  }

  Object &deref(const Value &v, const char *what) {
    if (!v.is_object())
      throw Fault{std::string(what) + " on a non-object value"};
    return heap_[static_cast<std::size_t>(v.object)];
  }

  bool eval_cond(const Frame &f, const host::Cond &c) {
    Value l = read(f, c.lhs);
    Value r = std::holds_alternative<std::string>(c.rhs)
                  ? read(f, std::get<std::string>(c.rhs))
                  : Value::integer(std::get<std::int64_t>(c.rhs));
    bool eq;
    if (l.is_object() != r.is_object())
      eq = false;
    else if (l.is_object())
      eq = l.object == r.object;
    else
      eq = l.num == r.num;
    switch (c.relation) {
    case host::Relation::eq:
      return eq;
    case host::Relation::ne:
      return !eq;
    case host::Relation::lt:
      if (l.is_object() || r.is_object())
        throw Fault{"ordering comparison on an object"};
      return l.num < r.num;
    }
    return false;
  }

  void exec_block(Frame &f, const host::Block &b) {
    for (const host::Stmt &s : b) {
      exec(f, s);
      if (f.returned)
        return;
    }
  }

  int allocate(SiteId site) {
    const SiteInfo &si = p_.site(site);
    Object o{site, si.type_container, si.type, {}};
    for (const auto &field : si.type->fields)
      o.fields[field] = Value::integer(0);
    heap_.push_back(std::move(o));
    return static_cast<int>(heap_.size() - 1);
  }

  void exec(Frame &f, const host::Stmt &s) {
    tick();
    SiteId site = site_of_.at(&s);
    std::visit(
        [&](const auto &x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, host::Alloc>) {
            f.vars[x.var] = Value::ref(allocate(site));
          } else if constexpr (std::is_same_v<T, host::BridgeAlloc>) {
            f.vars[x.bridge] = Value::ref(allocate(site));
          } else if constexpr (std::is_same_v<T, host::Return>) {
            f.ret = read(f, x.var);
            f.returned = true;
          } else if constexpr (std::is_same_v<T, host::MethodCall>) {
            Value recv = read(f, x.receiver);
            Object &o = deref(recv, "method call");
            auto callee = p_.resolve_method(o.container, *o.type, x.method);
            if (!callee)
              throw Fault{"method " + x.method + " missing on type " + o.type->name};
            std::vector<Value> args{recv};
            for (const auto &a : x.args)
              args.push_back(read(f, a));
            if (args.size() != p_.function(*callee).host->params.size())
              throw Fault{"arity mismatch calling " + p_.function(*callee).node.str()};
            Mechanism m = p_.function(f.fn).is_bridge_param(x.receiver)
                              ? Mechanism::bridge_callback
                              : Mechanism::virtual_call;
            record(f.fn, site, *callee, m);
            f.vars[x.result] = call_host(*callee, std::move(args), {});
          } else if constexpr (std::is_same_v<T, host::FieldLoad>) {
            Object &o = deref(read(f, x.object), "field load");
            auto it = o.fields.find(x.field);
            if (it == o.fields.end())
              throw Fault{"field " + x.field + " missing on type " + o.type->name};
            f.vars[x.result] = it->second;
          } else if constexpr (std::is_same_v<T, host::FieldStore>) {
            Value v = read(f, x.value);
            Object &o = deref(read(f, x.object), "field store");
            auto it = o.fields.find(x.field);
            if (it == o.fields.end())
              throw Fault{"field " + x.field + " missing on type " + o.type->name};
            it->second = std::move(v);
          } else if constexpr (std::is_same_v<T, host::If>) {
            if (eval_cond(f, x.cond))
              exec_block(f, x.then_body);
            else
              exec_block(f, x.else_body);
          } else if constexpr (std::is_same_v<T, host::While>) {
            while (eval_cond(f, x.cond)) {
              exec_block(f, x.body);
              if (f.returned)
                return;
              tick();
            }
          } else if constexpr (std::is_same_v<T, host::BinOp>) {
            Value a = read(f, x.lhs), b = read(f, x.rhs);
            if (a.is_object() || b.is_object())
              throw Fault{"arithmetic on an object"};
            f.vars[x.result] = Value::integer(wrap(x.op, a.num, b.num), join(a.taint, b.taint));
          } else if constexpr (std::is_same_v<T, host::ConstAssign>) {
            f.vars[x.var] = Value::integer(x.value);
          } else if constexpr (std::is_same_v<T, host::Eval>) {
            std::map<std::string, Value> exposed;
            for (const auto &name : x.exposed)
              exposed[name] = read(f, name);
            FnId callee = p_.site(site).callee;
            record(f.fn, site, callee, Mechanism::eval);
            call_host(callee, {}, std::move(exposed));
          } else if constexpr (std::is_same_v<T, host::AsmCall>) {
            FnId callee = p_.site(site).callee;
            auto &globals = globals_[static_cast<std::size_t>(p_.function(callee).container)];
            std::vector<Value> args;
            for (const auto &a : x.args) {
              Value v = read(f, a);
              if (v.is_object())
                throw Fault{"object passed to asmcall " + x.module + "." + x.procedure};
              args.push_back(std::move(v));
            }
            for (std::size_t k = 0; k < args.size(); ++k)
              globals["arg" + std::to_string(k)] = std::move(args[k]);
            record(f.fn, site, callee, Mechanism::asmcall);
            f.vars[x.result] = call_asm(callee);
          } else if constexpr (std::is_same_v<T, host::SourceAssign>) {
            f.vars[x.var] = Value::integer(7, {site});
          } else if constexpr (std::is_same_v<T, host::SinkCall>) {
            Value v = read(f, x.var);
            if (!v.is_object())
              for (SiteId src : v.taint)
                trace_.taint_flows.insert(
                    {p_.site_table().name(src), p_.site_table().name(site)});
          }
        },
        s.node);
  }

  Value call_asm(FnId fn) {
    DepthGuard guard(depth_);
    const FunctionInfo &fi = p_.function(fn);
    const assembly::AsmModule &mod = *p_.container(fi.container).module;
    auto &globals = globals_[static_cast<std::size_t>(fi.container)];
    const auto &body = fi.proc->body;
    std::map<std::string, Value> locals;
    bool flag = false;
    auto get = [&](const std::string &n) -> Value {
      auto &store = mod.is_global(n) ? globals : locals;
      auto it = store.find(n);
      return it == store.end() ? Value::integer(0) : it->second;
    };
    auto jump = [&](const std::string &label) {
      return static_cast<std::size_t>(*fi.proc->label_index(label));
    };
    std::size_t pc = 0;
    while (pc < body.size()) {
      tick();
      SiteId site = fi.sites[pc];
      const assembly::Instr &instr = body[pc].instr;
      ++pc;
      if (const auto *x = std::get_if<assembly::Load>(&instr)) {
        locals[x->dst] = get(x->src);
      } else if (const auto *x = std::get_if<assembly::Store>(&instr)) {
        Value v = get(x->src);
        (mod.is_global(x->dst) ? globals : locals)[x->dst] = std::move(v);
      } else if (std::holds_alternative<assembly::Call>(instr)) {
        FnId callee = p_.site(site).callee;
        record(fn, site, callee, Mechanism::asm_direct);
        Value v = call_asm(callee);
        globals["ret0"] = std::move(v);
      } else if (const auto *x = std::get_if<assembly::Ret>(&instr)) {
        Value v = get(x->src);
        globals["ret0"] = v;
        return v;
      } else if (const auto *x = std::get_if<assembly::Br>(&instr)) {
        pc = jump(x->label);
      } else if (const auto *x = std::get_if<assembly::Compare>(&instr)) {
        flag = get(x->lhs).num == get(x->rhs).num;
      } else if (const auto *x = std::get_if<assembly::BranchCond>(&instr)) {
        if (flag)
          pc = jump(x->label);
      } else if (const auto *x = std::get_if<assembly::Op>(&instr)) {
        Value a = get(x->lhs), b = get(x->rhs);
        host::BinOpKind k = x->op == assembly::OpKind::add   ? host::BinOpKind::add
                            : x->op == assembly::OpKind::sub ? host::BinOpKind::sub
                                                             : host::BinOpKind::mul;
        locals[x->dst] = Value::integer(wrap(k, a.num, b.num), join(a.taint, b.taint));
      } else if (const auto *x = std::get_if<assembly::Const>(&instr)) {
        locals[x->dst] = Value::integer(x->value);
      }
    }
    Value zero = Value::integer(0);
    globals["ret0"] = zero;
    return zero;
  }

  const PolyglotProgram &p_;
  std::uint64_t limit_;
  DynamicTrace &trace_;
  std::vector<Object> heap_;
  std::vector<std::map<std::string, Value>> globals_; // per container
  std::unordered_map<const host::Stmt *, SiteId> site_of_;
  int depth_ = 0;
};

} // namespace

RunResult run(const PolyglotProgram &program, std::uint64_t step_limit) {
  RunResult r;
  Machine m(program, step_limit, r.trace);
  try {
    m.run_entry();
  } catch (const StepLimit &) {
    r.outcome = Outcome::step_limit_exceeded;
  } catch (const Fault &f) {
    r.outcome = Outcome::runtime_fault;
    r.fault = f.what;
  }
  return r;
}

std::string trace_json(const RunResult &r) {
  json j;
  j["outcome"] = std::string(to_string(r.outcome));
  if (r.outcome == Outcome::runtime_fault)
    j["fault"] = r.fault;
  j["steps"] = r.trace.steps;
  j["call_edges"] = json::array();
  for (const auto &e : r.trace.call_edges)
    j["call_edges"].push_back({{"caller", e.caller},
                               {"site", e.site},
                               {"callee", e.callee},
                               {"mechanism", std::string(to_string(e.mechanism))}});
  j["taint_flows"] = json::array();
  for (const auto &f : r.trace.taint_flows)
    j["taint_flows"].push_back({{"source", f.source}, {"sink", f.sink}});
  return j.dump(2) + "\n";
}

RunResult trace_from_json(std::string_view text) {
  RunResult r;
  try {
    json j = json::parse(text);
    std::string outcome = j.at("outcome").get<std::string>();
    if (outcome == "completed")
      r.outcome = Outcome::completed;
    else if (outcome == "step-limit-exceeded")
      r.outcome = Outcome::step_limit_exceeded;
    else if (outcome == "runtime-fault")
      r.outcome = Outcome::runtime_fault;
    else
      throw Error("unknown outcome " + outcome);
    r.fault = j.value("fault", "");
    r.trace.steps = j.at("steps").get<std::uint64_t>();
    for (const auto &e : j.at("call_edges")) {
      auto m = mechanism_from_string(e.at("mechanism").get<std::string>());
      if (!m)
        throw Error("unknown mechanism in trace");
      r.trace.call_edges.insert({e.at("caller").get<std::string>(), e.at("site").get<std::string>(),
                                 e.at("callee").get<std::string>(), *m});
    }
    for (const auto &f : j.at("taint_flows"))
      r.trace.taint_flows.insert({f.at("source").get<std::string>(), f.at("sink").get<std::string>()});
  } catch (const json::exception &e) {
    throw Error(std::string("malformed trace: ") + e.what());
  }
  return r;
}

} // namespace trilang
