#pragma once

#include <optional>
#include <stdexcept>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace trilang {

struct SourceLoc {
  int line = 0;
  int column = 0;
  friend bool operator==(const SourceLoc &, const SourceLoc &) = default;
};

struct Diagnostic {
  SourceLoc loc;
  std::string message;
  std::string file; // empty when the diagnostic is not tied to a file

  std::string str() const;
};

using Diagnostics = std::vector<Diagnostic>;

std::ostream &operator<<(std::ostream &os, const Diagnostic &d);

/// Either a value or the diagnostics that prevented producing it.
template <typename T> struct Parsed {
  std::optional<T> value;
  Diagnostics diags;

  bool ok() const { return value.has_value() && diags.empty(); }
  explicit operator bool() const { return ok(); }
  T &operator*() { return *value; }
  const T &operator*() const { return *value; }
  T *operator->() { return &*value; }
  const T *operator->() const { return &*value; }
};

/// Thrown by lookups and loaders for conditions that are caller errors
/// rather than diagnostics about user programs.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace trilang
