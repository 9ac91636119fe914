#pragma once

// A linked three-language program: one entry unit, any number of middle
// units and assembly modules, plus the binding table resolving every
// boundary site. The program also carries a flat index of functions and
// statement sites shared by the interpreter and the analyses.

#include "trilang/asm_syntax.hpp"
#include "trilang/diagnostics.hpp"
#include "trilang/host_syntax.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace trilang {

enum class Provenance { entry, middle, bottom };

std::string_view to_string(Provenance p);

/// Call mechanisms. `virtual_call` covers every host method dispatch that is
/// not a bridge callback (the host language has no direct calls).
enum class Mechanism { virtual_call, eval, bridge_callback, asmcall, asm_direct };

std::string_view to_string(Mechanism m);
std::optional<Mechanism> mechanism_from_string(std::string_view s);
/// eval, bridge-callback and asmcall cross a language boundary.
bool is_boundary(Mechanism m);

struct NodeId {
  Provenance provenance = Provenance::entry;
  std::string container;
  std::string function;

  /// `container.function`
  std::string str() const { return container + "." + function; }
  friend auto operator<=>(const NodeId &, const NodeId &) = default;
};

using FnId = int;
using SiteId = int;

struct FunctionInfo {
  NodeId node;
  int container = 0;
  const host::FunctionDecl *host = nullptr;
  const assembly::Procedure *proc = nullptr;
  /// Site ids of the function's statements/instructions in pre-order.
  std::vector<SiteId> sites;
  /// Bridge parameters plus locally bridge-allocated names (host only).
  std::vector<std::string> bridge_names;

  bool is_host() const { return host != nullptr; }
  bool is_bridge_param(std::string_view name) const;
};

struct ContainerInfo {
  std::string name;
  Provenance provenance = Provenance::entry;
  const host::HostUnit *unit = nullptr;
  const assembly::AsmModule *module = nullptr;
  std::vector<FnId> functions;
};

struct SiteInfo {
  std::string id; // `container:function:index`
  FnId function = -1;  // -1 for ids carried over from an earlier program
  int index = 0;
  const host::Stmt *stmt = nullptr;
  const assembly::LabeledInstr *instr = nullptr;
  /// Statically bound callee for eval, asmcall and asm call sites.
  FnId callee = -1;
  /// Object sites: the allocated type, resolved to its declaring unit.
  int type_container = -1;
  const host::TypeDecl *type = nullptr;
  bool bridge_alloc = false;
};

/// Site-id interning. Edited programs are linked against the table of their
/// predecessor so unchanged statements keep their ids.
class SiteTable {
public:
  SiteId intern(const std::string &id);
  std::optional<SiteId> find(std::string_view id) const;
  const std::string &name(SiteId s) const { return names_[static_cast<std::size_t>(s)]; }
  std::size_t size() const { return names_.size(); }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, SiteId> ids_;
};

struct EvalBinding {
  std::string unit, function;
  std::vector<std::string> exposed;
  friend bool operator==(const EvalBinding &, const EvalBinding &) = default;
};

struct AsmBinding {
  std::string module, procedure;
  int arity = 0;
  friend bool operator==(const AsmBinding &, const AsmBinding &) = default;
};

using BindingRecord = std::variant<EvalBinding, AsmBinding>;

struct BindingTable {
  std::map<std::string, EvalBinding> eval_sites;
  std::map<std::string, AsmBinding> asm_sites;
  /// (`unit.Type`, method) -> host function, for every bridge-allocated type.
  std::map<std::pair<std::string, std::string>, NodeId> bridge_methods;
};

struct Manifest {
  std::filesystem::path base; // directory the file paths are relative to
  std::string entry;
  std::vector<std::string> middle;
  std::vector<std::string> asm_files;
  std::string entry_function;
};

/// Reads a manifest JSON file; throws trilang::Error when it is malformed.
Manifest load_manifest(const std::filesystem::path &path);
std::string manifest_json(const Manifest &m);

class PolyglotProgram {
public:
  PolyglotProgram(const PolyglotProgram &) = delete;
  PolyglotProgram &operator=(const PolyglotProgram &) = delete;
  PolyglotProgram(PolyglotProgram &&) = default;
  PolyglotProgram &operator=(PolyglotProgram &&) = default;

  const host::HostUnit &entry() const { return units_.front(); }
  std::span<const host::HostUnit> middles() const {
    return std::span<const host::HostUnit>(units_).subspan(1);
  }
  std::span<const host::HostUnit> host_units() const { return units_; }
  std::span<const assembly::AsmModule> asms() const { return asms_; }
  const std::string &entry_function() const { return entry_function_; }
  FnId entry_fn() const { return entry_fn_; }
  const BindingTable &bindings() const { return bindings_; }

  std::span<const FunctionInfo> functions() const { return functions_; }
  const FunctionInfo &function(FnId f) const { return functions_[static_cast<std::size_t>(f)]; }
  std::span<const ContainerInfo> containers() const { return containers_; }
  const ContainerInfo &container(int c) const { return containers_[static_cast<std::size_t>(c)]; }
  const SiteInfo &site(SiteId s) const { return sites_[static_cast<std::size_t>(s)]; }
  const SiteTable &site_table() const { return table_; }
  std::optional<SiteId> find_site(std::string_view id) const { return table_.find(id); }

  std::optional<FnId> find_function(std::string_view container,
                                    std::string_view function) const;
  std::optional<FnId> find_function(const NodeId &n) const {
    return find_function(n.container, n.function);
  }
  std::optional<int> find_container(std::string_view name) const;

  /// Dispatch of `method` on an object of `type` declared in `container`.
  std::optional<FnId> resolve_method(int container, const host::TypeDecl &type,
                                     std::string_view method) const;

  /// Every type in the program, with its declaring container.
  struct TypeRef {
    int container;
    const host::TypeDecl *decl;
    bool bridge_capable;
  };
  std::span<const TypeRef> types() const { return types_; }

  /// Object sites (Alloc and BridgeAlloc) in site-id order.
  std::span<const SiteId> object_sites() const { return object_sites_; }

  friend Parsed<PolyglotProgram>
  link_units(host::HostUnit entry, std::vector<host::HostUnit> middles,
             std::vector<assembly::AsmModule> asms, std::string entry_function,
             const SiteTable *seed);

private:
  PolyglotProgram() = default;
  void build_index(const SiteTable *seed);

  std::vector<host::HostUnit> units_; // [0] is the entry unit
  std::vector<assembly::AsmModule> asms_;
  std::string entry_function_;
  FnId entry_fn_ = -1;
  BindingTable bindings_;

  std::vector<FunctionInfo> functions_;
  std::vector<ContainerInfo> containers_;
  std::vector<SiteInfo> sites_;
  SiteTable table_;
  std::vector<TypeRef> types_;
  std::vector<SiteId> object_sites_;
};

/// Checks every unit and module, resolves all boundary sites, and builds the
/// program index. `seed` keeps site ids stable across an edit.
Parsed<PolyglotProgram> link_units(host::HostUnit entry,
                                   std::vector<host::HostUnit> middles,
                                   std::vector<assembly::AsmModule> asms,
                                   std::string entry_function,
                                   const SiteTable *seed = nullptr);

/// Loads, parses, checks and links the files named by a manifest.
Parsed<PolyglotProgram> link(const Manifest &manifest);

/// Re-links the program with one function body replaced.
using ReplacementBody = std::variant<host::Block, std::vector<assembly::LabeledInstr>>;
Parsed<PolyglotProgram> relink_with_body(const PolyglotProgram &program, FnId target,
                                         ReplacementBody body);

/// Throws trilang::Error for an unknown or non-boundary site.
BindingRecord lookup_binding(const PolyglotProgram &program, std::string_view site);

/// Rendered sources keyed by file name (`<unit>.poly`, `<module>.asm`).
std::map<std::string, std::string> render_sources(const PolyglotProgram &program);
Manifest manifest_for(const PolyglotProgram &program);

std::string read_file(const std::filesystem::path &p);
void write_file(const std::filesystem::path &p, std::string_view contents);

} // namespace trilang
