#pragma once

#include "trilang/diagnostics.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trilang::detail {

enum class TokKind { ident, integer, punct, end };

struct Token {
  TokKind kind = TokKind::end;
  std::string text;
  std::uint64_t magnitude = 0; // for integers
  SourceLoc loc;
};

/// Tokenizes both surface languages. `#` starts a comment running to the
/// end of the line. Lexical errors are appended to `diags`.
std::vector<Token> tokenize(std::string_view text, Diagnostics &diags);

/// Recursive-descent helper shared by the two parsers.
class TokenCursor {
public:
  TokenCursor(std::vector<Token> toks, Diagnostics &diags)
      : toks_(std::move(toks)), diags_(diags) {}

  const Token &peek(std::size_t ahead = 0) const;
  const Token &next();
  bool at_end() const { return peek().kind == TokKind::end; }
  bool is_punct(std::string_view p, std::size_t ahead = 0) const;
  bool is_word(std::string_view w, std::size_t ahead = 0) const;
  bool accept_punct(std::string_view p);
  bool accept_word(std::string_view w);

  /// Each expect_* records a diagnostic and throws SyntaxAbort on mismatch.
  void expect_punct(std::string_view p);
  void expect_word(std::string_view w);
  std::string expect_ident(std::string_view what);
  std::int64_t expect_int();

  [[noreturn]] void fail(const std::string &message);
  [[noreturn]] void fail_at(const Token &t, const std::string &message);

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Diagnostics &diags_;

public:
  /// Words that may not be used as identifiers in the current language.
  std::vector<std::string_view> reserved;
};

struct SyntaxAbort {};

std::string describe(const Token &t);

} // namespace trilang::detail
