#pragma once

// Shared tokenizer for the assembly and ConSpec front ends.

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "irmpcc/error.hpp"

namespace irm::detail {

enum class TokKind { Ident, Int, String, Punct, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

struct LexOptions {
  char line_comment = ';';        ///< 0 disables single-char comments
  bool slash_comments = false;    ///< `//` comments
  bool negative_literals = true;  ///< fold `-5` into one Int token
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || c == '.' ||
         c == '#' || c == '@';
}

inline std::vector<Token> tokenize(std::string_view src, const LexOptions& opt) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  static constexpr std::string_view kTwoChar[] = {"->", "==", "!=", "<=", ">=", "&&", "||", ":="};
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if ((opt.line_comment && c == opt.line_comment) ||
        (opt.slash_comments && c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    std::size_t start = i;
    if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i])) advance(1);
      t.kind = TokKind::Ident;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (opt.negative_literals && c == '-' && i + 1 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      advance(1);
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
      t.kind = TokKind::Int;
    } else if (c == '"') {
      advance(1);
      while (i < src.size() && src[i] != '"') {
        if (src[i] == '\\') advance(1);
        if (src[i] == '\n') throw ParseError("unterminated string", t.line, t.column);
        advance(1);
      }
      if (i >= src.size()) throw ParseError("unterminated string", t.line, t.column);
      advance(1);
      t.kind = TokKind::String;
    } else {
      t.kind = TokKind::Punct;
      std::size_t n = 1;
      for (auto two : kTwoChar)
        if (src.substr(i, 2) == two) n = 2;
      advance(n);
    }
    t.text = std::string(src.substr(start, i - start));
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

/// Cursor over a token vector with the usual expect/accept helpers.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == TokKind::End; }
  bool is(std::string_view text) const {
    return peek().kind != TokKind::String && peek().text == text;
  }
  bool accept(std::string_view text) {
    if (!is(text)) return false;
    next();
    return true;
  }
  const Token& expect(std::string_view text) {
    if (!is(text)) error("expected '" + std::string(text) + "'");
    return next();
  }
  const Token& expect(TokKind kind, std::string_view what) {
    if (peek().kind != kind) error("expected " + std::string(what));
    return next();
  }
  [[noreturn]] void error(const std::string& msg) const {
    const auto& t = peek();
    throw ParseError(msg + (t.kind == TokKind::End ? " but found end of input"
                                                  : " but found '" + t.text + "'"),
                     t.line, t.column);
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace irm::detail
