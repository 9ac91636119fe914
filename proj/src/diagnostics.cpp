#include "trilang/diagnostics.hpp"

namespace trilang {

std::string Diagnostic::str() const {
  std::string out;
  if (!file.empty())
    out += file + ":";
  if (loc.line > 0)
    out += std::to_string(loc.line) + ":" + std::to_string(loc.column) + ":";
  if (!out.empty())
    out += " ";
  return out + message;
}

std::ostream &operator<<(std::ostream &os, const Diagnostic &d) { return os << d.str(); }

} // namespace trilang
