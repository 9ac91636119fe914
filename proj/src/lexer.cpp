#include "lexer.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace trilang::detail {

namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

} // namespace

std::vector<Token> tokenize(std::string_view text, Diagnostics &diags) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n')
        advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.loc = {line, col};
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j]))
        ++j;
      t.kind = TokKind::ident;
      t.text = std::string(text.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      std::uint64_t v = 0;
      bool overflow = false;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
        auto d = static_cast<std::uint64_t>(text[j] - '0');
        if (v > (std::numeric_limits<std::uint64_t>::max() - d) / 10)
          overflow = true;
        v = v * 10 + d;
        ++j;
      }
      if (j < text.size() && ident_start(text[j])) {
        diags.push_back({t.loc, "malformed number", {}});
      }
      if (overflow)
        diags.push_back({t.loc, "integer literal out of range", {}});
      t.kind = TokKind::integer;
      t.text = std::string(text.substr(i, j - i));
      t.magnitude = v;
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    static constexpr std::string_view two[] = {"<-", "==", "!="};
    bool matched = false;
    for (auto p : two) {
      if (text.substr(i, 2) == p) {
        t.kind = TokKind::punct;
        t.text = std::string(p);
        advance(2);
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (matched)
      continue;
    static constexpr std::string_view one = "<=;{}(),.[]:+-*";
    if (one.find(c) != std::string_view::npos) {
      t.kind = TokKind::punct;
      t.text = std::string(1, c);
      advance(1);
      out.push_back(std::move(t));
      continue;
    }
    diags.push_back({t.loc, std::string("unexpected character '") + c + "'", {}});
    advance(1);
  }
  Token end;
  end.kind = TokKind::end;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

std::string describe(const Token &t) {
  switch (t.kind) {
  case TokKind::end:
    return "end of input";
  case TokKind::integer:
    return "integer '" + t.text + "'";
  case TokKind::ident:
    return "'" + t.text + "'";
  case TokKind::punct:
    return "'" + t.text + "'";
  }
  return "?";
}

const Token &TokenCursor::peek(std::size_t ahead) const {
  std::size_t k = std::min(pos_ + ahead, toks_.size() - 1);
  return toks_[k];
}

const Token &TokenCursor::next() {
  const Token &t = toks_[pos_];
  if (pos_ + 1 < toks_.size())
    ++pos_;
  return t;
}

bool TokenCursor::is_punct(std::string_view p, std::size_t ahead) const {
  const Token &t = peek(ahead);
  return t.kind == TokKind::punct && t.text == p;
}

bool TokenCursor::is_word(std::string_view w, std::size_t ahead) const {
  const Token &t = peek(ahead);
  return t.kind == TokKind::ident && t.text == w;
}

bool TokenCursor::accept_punct(std::string_view p) {
  if (!is_punct(p))
    return false;
  next();
  return true;
}

bool TokenCursor::accept_word(std::string_view w) {
  if (!is_word(w))
    return false;
  next();
  return true;
}

void TokenCursor::expect_punct(std::string_view p) {
  if (!accept_punct(p))
    fail("expected '" + std::string(p) + "' but found " + describe(peek()));
}

void TokenCursor::expect_word(std::string_view w) {
  if (!accept_word(w))
    fail("expected '" + std::string(w) + "' but found " + describe(peek()));
}

std::string TokenCursor::expect_ident(std::string_view what) {
  const Token &t = peek();
  if (t.kind != TokKind::ident)
    fail("expected " + std::string(what) + " but found " + describe(t));
  if (std::find(reserved.begin(), reserved.end(), t.text) != reserved.end())
    fail("reserved word '" + t.text + "' cannot be used as " +
         std::string(what));
  return next().text;
}

std::int64_t TokenCursor::expect_int() {
  bool negative = accept_punct("-");
  const Token &t = peek();
  if (t.kind != TokKind::integer)
    fail("expected integer but found " + describe(t));
  std::uint64_t mag = next().magnitude;
  constexpr std::uint64_t limit =
      static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  if (negative) {
    if (mag > limit + 1)
      fail("integer literal out of range");
    return static_cast<std::int64_t>(0 - mag);
  }
  if (mag > limit)
    fail("integer literal out of range");
  return static_cast<std::int64_t>(mag);
}

void TokenCursor::fail(const std::string &message) { fail_at(peek(), message); }

void TokenCursor::fail_at(const Token &t, const std::string &message) {
  diags_.push_back({t.loc, message, {}});
  throw SyntaxAbort{};
}

} // namespace trilang::detail
