#include "trilang/linker.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace trilang {

using json = nlohmann::json;

std::string_view to_string(Provenance p) {
  switch (p) {
  case Provenance::entry:
    return "entry";
  case Provenance::middle:
    return "middle";
  case Provenance::bottom:
    return "bottom";
  }
  return "?";
}

std::string_view to_string(Mechanism m) {
  switch (m) {
  case Mechanism::virtual_call:
    return "virtual";
  case Mechanism::eval:
    return "eval";
  case Mechanism::bridge_callback:
    return "bridge-callback";
  case Mechanism::asmcall:
    return "asmcall";
  case Mechanism::asm_direct:
    return "asm-direct";
  }
  return "?";
}

std::optional<Mechanism> mechanism_from_string(std::string_view s) {
  for (auto m : {Mechanism::virtual_call, Mechanism::eval, Mechanism::bridge_callback,
                 Mechanism::asmcall, Mechanism::asm_direct})
    if (to_string(m) == s)
      return m;
  return std::nullopt;
}

bool is_boundary(Mechanism m) {
  return m == Mechanism::eval || m == Mechanism::bridge_callback ||
         m == Mechanism::asmcall;
}

bool FunctionInfo::is_bridge_param(std::string_view name) const {
  return host && std::find(host->bridge_params.begin(), host->bridge_params.end(),
                           name) != host->bridge_params.end();
}

SiteId SiteTable::intern(const std::string &id) {
  auto [it, inserted] = ids_.try_emplace(id, static_cast<SiteId>(names_.size()));
  if (inserted)
    names_.push_back(id);
  return it->second;
}

std::optional<SiteId> SiteTable::find(std::string_view id) const {
  auto it = ids_.find(std::string(id));
  if (it == ids_.end())
    return std::nullopt;
  return it->second;
}

std::optional<FnId> PolyglotProgram::find_function(std::string_view container,
                                                   std::string_view function) const {
  auto c = find_container(container);
  if (!c)
    return std::nullopt;
  for (FnId f : containers_[static_cast<std::size_t>(*c)].functions)
    if (functions_[static_cast<std::size_t>(f)].node.function == function)
      return f;
  return std::nullopt;
}

std::optional<int> PolyglotProgram::find_container(std::string_view name) const {
  for (std::size_t i = 0; i < containers_.size(); ++i)
    if (containers_[i].name == name)
      return static_cast<int>(i);
  return std::nullopt;
}

std::optional<FnId> PolyglotProgram::resolve_method(int container,
                                                    const host::TypeDecl &type,
                                                    std::string_view method) const {
  const std::string *target = type.method_target(method);
  if (!target)
    return std::nullopt;
  return find_function(containers_[static_cast<std::size_t>(container)].name, *target);
}

// ---------------------------------------------------------------------------

void PolyglotProgram::build_index(const SiteTable *seed) {
  if (seed)
    table_ = *seed;
  auto add_site = [&](SiteInfo info) {
    SiteId id = table_.intern(info.id);
    if (sites_.size() < table_.size())
      sites_.resize(table_.size());
    sites_[static_cast<std::size_t>(id)] = std::move(info);
    return id;
  };

  for (std::size_t u = 0; u < units_.size(); ++u) {
    const host::HostUnit &unit = units_[u];
    ContainerInfo c;
    c.name = unit.name;
    c.provenance = u == 0 ? Provenance::entry : Provenance::middle;
    c.unit = &unit;
    int cidx = static_cast<int>(containers_.size());
    for (const auto &fn : unit.functions) {
      FunctionInfo fi;
      fi.node = {c.provenance, unit.name, fn.name};
      fi.container = cidx;
      fi.host = &fn;
      std::set<std::string> bridges(fn.bridge_params.begin(), fn.bridge_params.end());
      FnId id = static_cast<FnId>(functions_.size());
      host::for_each_stmt(fn.body, [&](const host::Stmt &s, int index) {
        SiteInfo si;
        si.id = unit.name + ":" + fn.name + ":" + std::to_string(index);
        si.function = id;
        si.index = index;
        si.stmt = &s;
        if (const auto *b = std::get_if<host::BridgeAlloc>(&s.node)) {
          bridges.insert(b->bridge);
          si.type = unit.find_type(b->type);
          si.type_container = cidx;
          si.bridge_alloc = true;
        } else if (const auto *a = std::get_if<host::Alloc>(&s.node)) {
          si.type = unit.find_type(a->type);
          si.type_container = cidx;
        }
        fi.sites.push_back(add_site(std::move(si)));
      });
      fi.bridge_names.assign(bridges.begin(), bridges.end());
      c.functions.push_back(id);
      functions_.push_back(std::move(fi));
    }
    containers_.push_back(std::move(c));
  }
  for (const auto &mod : asms_) {
    ContainerInfo c;
    c.name = mod.name;
    c.provenance = Provenance::bottom;
    c.module = &mod;
    int cidx = static_cast<int>(containers_.size());
    for (const auto &proc : mod.procedures) {
      FunctionInfo fi;
      fi.node = {Provenance::bottom, mod.name, proc.name};
      fi.container = cidx;
      fi.proc = &proc;
      FnId id = static_cast<FnId>(functions_.size());
      for (std::size_t i = 0; i < proc.body.size(); ++i) {
        SiteInfo si;
        si.id = mod.name + ":" + proc.name + ":" + std::to_string(i);
        si.function = id;
        si.index = static_cast<int>(i);
        si.instr = &proc.body[i];
        fi.sites.push_back(add_site(std::move(si)));
      }
      c.functions.push_back(id);
      functions_.push_back(std::move(fi));
    }
    containers_.push_back(std::move(c));
  }
  sites_.resize(table_.size());

  for (std::size_t c = 0; c < containers_.size(); ++c)
    if (containers_[c].unit)
      for (const auto &t : containers_[c].unit->types)
        types_.push_back({static_cast<int>(c), &t, false});

  // Static callees and bridge capability.
  for (auto &fi : functions_) {
    for (SiteId s : fi.sites) {
      SiteInfo &si = sites_[static_cast<std::size_t>(s)];
      if (si.stmt) {
        if (const auto *e = std::get_if<host::Eval>(&si.stmt->node))
          si.callee = find_function(e->unit, e->function).value_or(-1);
        else if (const auto *a = std::get_if<host::AsmCall>(&si.stmt->node))
          si.callee = find_function(a->module, a->procedure).value_or(-1);
        if (si.type)
          object_sites_.push_back(s);
        if (si.bridge_alloc && si.type)
          for (auto &t : types_)
            if (t.decl == si.type)
              t.bridge_capable = true;
      } else if (si.instr) {
        if (const auto *call = std::get_if<assembly::Call>(&si.instr->instr)) {
          auto [mod, proc] = assembly::split_target(call->target);
          if (mod.empty())
            mod = containers_[static_cast<std::size_t>(fi.container)].name;
          si.callee = find_function(mod, proc).value_or(-1);
        }
      }
    }
  }
  std::sort(object_sites_.begin(), object_sites_.end(), [&](SiteId a, SiteId b) {
    return table_.name(a) < table_.name(b);
  });
  entry_fn_ = find_function(units_.front().name, entry_function_).value_or(-1);
}

// ---------------------------------------------------------------------------

namespace {

void tag(Diagnostics &ds, const std::string &file) {
  for (auto &d : ds)
    if (d.file.empty())
      d.file = file;
}

bool assigned_by_new(const host::FunctionDecl &fn, const std::string &var) {
  bool found = false;
  host::for_each_stmt(fn.body, [&](const host::Stmt &s, int) {
    if (const auto *a = std::get_if<host::Alloc>(&s.node))
      if (a->var == var)
        found = true;
  });
  return found;
}

} // namespace

Parsed<PolyglotProgram> link_units(host::HostUnit entry,
                                   std::vector<host::HostUnit> middles,
                                   std::vector<assembly::AsmModule> asms,
                                   std::string entry_function, const SiteTable *seed) {
  Parsed<PolyglotProgram> out;
  Diagnostics &diags = out.diags;

  {
    Diagnostics d = host::check_host(entry);
    tag(d, entry.name + ".poly");
    diags.insert(diags.end(), d.begin(), d.end());
  }
  for (const auto &m : middles) {
    Diagnostics d = host::check_host(m);
    tag(d, m.name + ".poly");
    diags.insert(diags.end(), d.begin(), d.end());
  }
  for (const auto &a : asms) {
    Diagnostics d = assembly::check_asm(a, asms);
    tag(d, a.name + ".asm");
    diags.insert(diags.end(), d.begin(), d.end());
  }

  std::set<std::string> names;
  auto claim = [&](const std::string &n, const std::string &file) {
    if (!names.insert(n).second)
      diags.push_back({{}, "duplicate unit or module name " + n, file});
  };
  claim(entry.name, entry.name + ".poly");
  for (const auto &m : middles)
    claim(m.name, m.name + ".poly");
  for (const auto &a : asms)
    claim(a.name, a.name + ".asm");

  const host::FunctionDecl *main_fn = entry.find_function(entry_function);
  if (!main_fn)
    diags.push_back({{}, "entry function " + entry_function + " not found in unit " + entry.name,
                     entry.name + ".poly"});
  else if (!main_fn->params.empty() || !main_fn->bridge_params.empty())
    diags.push_back({main_fn->loc, "entry function " + entry_function + " must take no parameters",
                     entry.name + ".poly"});

  auto find_middle = [&](const std::string &n) -> const host::HostUnit * {
    for (const auto &m : middles)
      if (m.name == n)
        return &m;
    return nullptr;
  };
  auto find_asm = [&](const std::string &n) -> const assembly::AsmModule * {
    for (const auto &a : asms)
      if (a.name == n)
        return &a;
    return nullptr;
  };

  std::vector<const host::HostUnit *> all_units{&entry};
  for (const auto &m : middles)
    all_units.push_back(&m);

  BindingTable bindings;
  for (std::size_t u = 0; u < all_units.size(); ++u) {
    const host::HostUnit &unit = *all_units[u];
    std::string file = unit.name + ".poly";
    for (const auto &fn : unit.functions) {
      host::for_each_stmt(fn.body, [&](const host::Stmt &s, int index) {
        std::string site = unit.name + ":" + fn.name + ":" + std::to_string(index);
        auto report = [&](std::string msg) { diags.push_back({s.loc, std::move(msg), file}); };
        if (const auto *e = std::get_if<host::Eval>(&s.node)) {
          std::string qual = e->unit + "." + e->function;
          const host::HostUnit *guest = find_middle(e->unit);
          const host::FunctionDecl *target = guest ? guest->find_function(e->function) : nullptr;
          if (e->unit == entry.name)
            report("eval target " + qual + " must be a middle unit");
          else if (u != 0 && e->unit == unit.name)
            report("eval target " + qual + " must be a different middle unit");
          else if (!target)
            report("unresolved guest function " + qual);
          else {
            if (!target->params.empty())
              report("eval target " + qual + " must take no parameters");
            for (const auto &b : target->bridge_params)
              if (std::find(e->exposed.begin(), e->exposed.end(), b) == e->exposed.end())
                report("bridge variable " + b + " required by " + qual +
                       " is not exposed at this eval site");
            bindings.eval_sites[site] = {e->unit, e->function, e->exposed};
          }
        } else if (const auto *a = std::get_if<host::AsmCall>(&s.node)) {
          std::string qual = a->module + "." + a->procedure;
          const assembly::AsmModule *mod = find_asm(a->module);
          const assembly::Procedure *proc = mod ? mod->find_procedure(a->procedure) : nullptr;
          if (!proc) {
            report("unresolved asm target " + qual);
            return;
          }
          if (!proc->exported)
            report("target not exported: " + qual);
          int needed = assembly::max_arg_used(*proc) + 1;
          if (static_cast<int>(a->args.size()) < needed)
            report("arity mismatch: " + qual + " reads arg" + std::to_string(needed - 1) +
                   " but only " + std::to_string(a->args.size()) + " arguments are passed");
          for (const auto &arg : a->args) {
            bool bridge = std::find(fn.bridge_params.begin(), fn.bridge_params.end(), arg) !=
                          fn.bridge_params.end();
            host::for_each_stmt(fn.body, [&](const host::Stmt &t, int) {
              if (const auto *b = std::get_if<host::BridgeAlloc>(&t.node))
                if (b->bridge == arg)
                  bridge = true;
            });
            if (bridge || assigned_by_new(fn, arg))
              report("object argument " + arg + " at asmcall site " + qual);
          }
          bindings.asm_sites[site] = {a->module, a->procedure,
                                      static_cast<int>(a->args.size())};
        }
      });
    }
  }
  for (const auto &mod : asms) {
    for (const auto &proc : mod.procedures)
      for (const auto &li : proc.body)
        if (const auto *c = std::get_if<assembly::Call>(&li.instr)) {
          auto [m, p] = assembly::split_target(c->target);
          if (!m.empty() && m != mod.name && !find_asm(m))
            diags.push_back({li.loc, "unresolved asm module " + m, mod.name + ".asm"});
        }
  }

  // Bridge method table: every method of every bridge-allocated type.
  for (const auto *unit : all_units) {
    for (const auto &fn : unit->functions)
      host::for_each_stmt(fn.body, [&](const host::Stmt &s, int) {
        const auto *b = std::get_if<host::BridgeAlloc>(&s.node);
        if (!b)
          return;
        const host::TypeDecl *t = unit->find_type(b->type);
        if (!t)
          return;
        Provenance prov = unit == all_units.front() ? Provenance::entry : Provenance::middle;
        for (const auto &m : t->methods)
          bindings.bridge_methods[{unit->name + "." + t->name, m.method}] =
              NodeId{prov, unit->name, m.function};
      });
  }

  if (!diags.empty())
    return out;

  PolyglotProgram p;
  p.units_.push_back(std::move(entry));
  for (auto &m : middles)
    p.units_.push_back(std::move(m));
  p.asms_ = std::move(asms);
  p.entry_function_ = std::move(entry_function);
  p.bindings_ = std::move(bindings);
  p.build_index(seed);
  out.value = std::move(p);
  return out;
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path &p, std::string_view contents) {
  if (p.has_parent_path())
    std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw Error("cannot write " + p.string());
  out << contents;
}

Manifest load_manifest(const std::filesystem::path &path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error &e) {
    throw Error("malformed manifest " + path.string() + ": " + e.what());
  }
  Manifest m;
  m.base = path.parent_path();
  try {
    m.entry = j.at("entry").get<std::string>();
    m.middle = j.value("middle", std::vector<std::string>{});
    m.asm_files = j.value("asm", std::vector<std::string>{});
    m.entry_function = j.at("entry_function").get<std::string>();
  } catch (const json::exception &e) {
    throw Error("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

std::string manifest_json(const Manifest &m) {
  json j;
  j["entry"] = m.entry;
  j["middle"] = m.middle;
  j["asm"] = m.asm_files;
  j["entry_function"] = m.entry_function;
  return j.dump(2) + "\n";
}

Parsed<PolyglotProgram> link(const Manifest &manifest) {
  Parsed<PolyglotProgram> out;
  auto load_host = [&](const std::string &rel) -> std::optional<host::HostUnit> {
    std::filesystem::path p = manifest.base / rel;
    std::string text;
    try {
      text = read_file(p);
    } catch (const Error &e) {
      out.diags.push_back({{}, e.what(), rel});
      return std::nullopt;
    }
    auto parsed = host::parse_host(text);
    tag(parsed.diags, rel);
    out.diags.insert(out.diags.end(), parsed.diags.begin(), parsed.diags.end());
    if (!parsed.value)
      return std::nullopt;
    if (parsed->name != p.stem().string()) {
      out.diags.push_back({{}, "unit name " + parsed->name + " does not match file stem " +
                                   p.stem().string(), rel});
      return std::nullopt;
    }
    return std::move(*parsed.value);
  };
  auto load_asm = [&](const std::string &rel) -> std::optional<assembly::AsmModule> {
    std::filesystem::path p = manifest.base / rel;
    std::string text;
    try {
      text = read_file(p);
    } catch (const Error &e) {
      out.diags.push_back({{}, e.what(), rel});
      return std::nullopt;
    }
    auto parsed = assembly::parse_asm(text);
    tag(parsed.diags, rel);
    out.diags.insert(out.diags.end(), parsed.diags.begin(), parsed.diags.end());
    if (!parsed.value)
      return std::nullopt;
    if (parsed->name != p.stem().string()) {
      out.diags.push_back({{}, "module name " + parsed->name + " does not match file stem " +
                                   p.stem().string(), rel});
      return std::nullopt;
    }
    return std::move(*parsed.value);
  };

  auto entry = load_host(manifest.entry);
  std::vector<host::HostUnit> middles;
  for (const auto &m : manifest.middle)
    if (auto u = load_host(m))
      middles.push_back(std::move(*u));
  std::vector<assembly::AsmModule> asms;
  for (const auto &a : manifest.asm_files)
    if (auto m = load_asm(a))
      asms.push_back(std::move(*m));
  if (!out.diags.empty() || !entry)
    return out;
  return link_units(std::move(*entry), std::move(middles), std::move(asms),
                    manifest.entry_function);
}

Parsed<PolyglotProgram> relink_with_body(const PolyglotProgram &program, FnId target,
                                         ReplacementBody body) {
  const FunctionInfo &fi = program.function(target);
  host::HostUnit entry = program.entry();
  std::vector<host::HostUnit> middles(program.middles().begin(), program.middles().end());
  std::vector<assembly::AsmModule> asms(program.asms().begin(), program.asms().end());
  Parsed<PolyglotProgram> out;
  if (fi.host) {
    auto *block = std::get_if<host::Block>(&body);
    if (!block) {
      out.diags.push_back({{}, "replacement for " + fi.node.str() + " must be host code", {}});
      return out;
    }
    host::HostUnit &unit = fi.node.provenance == Provenance::entry
                               ? entry
                               : *std::find_if(middles.begin(), middles.end(), [&](auto &u) {
                                   return u.name == fi.node.container;
                                 });
    unit.find_function(fi.node.function)->body = std::move(*block);
  } else {
    auto *instrs = std::get_if<std::vector<assembly::LabeledInstr>>(&body);
    if (!instrs) {
      out.diags.push_back({{}, "replacement for " + fi.node.str() + " must be assembly", {}});
      return out;
    }
    auto &mod = *std::find_if(asms.begin(), asms.end(),
                              [&](auto &m) { return m.name == fi.node.container; });
    assembly::Procedure *proc = mod.find_procedure(fi.node.function);
    proc->body = std::move(*instrs);
    assembly::derive_locals(mod, *proc);
  }
  return link_units(std::move(entry), std::move(middles), std::move(asms),
                    program.entry_function(), &program.site_table());
}

BindingRecord lookup_binding(const PolyglotProgram &program, std::string_view site) {
  const auto &b = program.bindings();
  if (auto it = b.eval_sites.find(std::string(site)); it != b.eval_sites.end())
    return it->second;
  if (auto it = b.asm_sites.find(std::string(site)); it != b.asm_sites.end())
    return it->second;
  throw Error("unknown boundary site " + std::string(site));
}

std::map<std::string, std::string> render_sources(const PolyglotProgram &program) {
  std::map<std::string, std::string> out;
  for (const auto &u : program.host_units())
    out[u.name + ".poly"] = host::render_host(u);
  for (const auto &m : program.asms())
    out[m.name + ".asm"] = assembly::render_asm(m);
  return out;
}

Manifest manifest_for(const PolyglotProgram &program) {
  Manifest m;
  m.entry = program.entry().name + ".poly";
  for (const auto &u : program.middles())
    m.middle.push_back(u.name + ".poly");
  for (const auto &a : program.asms())
    m.asm_files.push_back(a.name + ".asm");
  m.entry_function = program.entry_function();
  return m;
}

} // namespace trilang
