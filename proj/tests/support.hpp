#pragma once

#include "trilang/harness.hpp"

#include <string>
#include <vector>

#ifndef TRILANG_FIXTURES
#error "TRILANG_FIXTURES must name the fixture directory"
#endif

namespace testing {

inline std::string fixture(const std::string &name) {
  return std::string(TRILANG_FIXTURES) + "/" + name + "/manifest.json";
}

inline trilang::PolyglotProgram load_fixture(const std::string &name) {
  auto p = trilang::link(trilang::load_manifest(fixture(name)));
  if (!p)
    throw trilang::Error("fixture " + name + " failed to link");
  return std::move(*p.value);
}

// Links in-memory sources; parse failures come back as diagnostics.
inline trilang::Parsed<trilang::PolyglotProgram>
link_text(const std::string &entry, const std::vector<std::string> &mids = {},
          const std::vector<std::string> &asms = {}) {
  trilang::Parsed<trilang::PolyglotProgram> out;
  auto e = trilang::host::parse_host(entry);
  out.diags = e.diags;
  std::vector<trilang::host::HostUnit> ms;
  std::vector<trilang::assembly::AsmModule> as;
  for (const auto &m : mids) {
    auto u = trilang::host::parse_host(m);
    out.diags.insert(out.diags.end(), u.diags.begin(), u.diags.end());
    if (u.value)
      ms.push_back(std::move(*u.value));
  }
  for (const auto &a : asms) {
    auto u = trilang::assembly::parse_asm(a);
    out.diags.insert(out.diags.end(), u.diags.begin(), u.diags.end());
    if (u.value)
      as.push_back(std::move(*u.value));
  }
  if (!out.diags.empty() || !e.value)
    return out;
  return trilang::link_units(std::move(*e.value), std::move(ms), std::move(as), "main");
}

inline trilang::PolyglotProgram must_link(const std::string &entry,
                                          const std::vector<std::string> &mids = {},
                                          const std::vector<std::string> &asms = {}) {
  auto p = link_text(entry, mids, asms);
  if (!p) {
    std::string msg = "link failed:";
    for (const auto &d : p.diags)
      msg += " " + d.str();
    throw trilang::Error(msg);
  }
  return std::move(*p.value);
}

inline bool mentions(const trilang::Diagnostics &ds, const std::string &needle) {
  for (const auto &d : ds)
    if (d.message.find(needle) != std::string::npos)
      return true;
  return false;
}

} // namespace testing
