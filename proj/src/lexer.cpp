#include "somd/lexer.hpp"

#include <array>
#include <cctype>
#include <cstdlib>

#include "somd/diagnostics.hpp"

namespace somd {

namespace {

constexpr std::array kKeywords = {
    "int",   "long",   "double", "boolean", "void",   "if",   "else",
    "for",   "while",  "return", "new",     "true",   "false", "sync",
    "shared", "dist",  "reduce", "final",
};

// Longest first so that maximal munch works with a linear scan.
constexpr std::array kPuncts = {
    ">>>=", "<<=", ">>=", ">>>", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=",   "-=",  "*=",  "/=",  "%=", "&=", "|=", "^=", "<<", ">>", "+",  "-",
    "*",    "/",   "%",   "<",   ">",  "=",  "!",  "~",  "&",  "|",  "^",  "?",
    ":",    "(",   ")",   "[",   "]",  "{",  "}",  ",",  ";",  ".",
};

bool is_keyword(std::string_view s) {
  for (auto k : kKeywords)
    if (s == k) return true;
  return false;
}

[[noreturn]] void fail(SourceLoc loc, const std::string& msg) {
  throw CompileError({Diagnostic{DiagCode::SyntaxError, Severity::Error, loc, msg}});
}

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;

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

  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      SourceLoc start{line, col};
      advance(2);
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) advance(1);
      if (i + 1 >= src.size()) fail(start, "unterminated block comment");
      advance(2);
      continue;
    }

    Token t;
    t.loc = {line, col};

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      t.text = std::string(src.substr(i, j - i));
      t.kind = is_keyword(t.text) ? Tok::Keyword : Tok::Ident;
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      bool is_double = false;
      if (c == '0' && j + 1 < src.size() && (src[j + 1] == 'x' || src[j + 1] == 'X')) {
        j += 2;
        while (j < src.size() && std::isxdigit(static_cast<unsigned char>(src[j]))) ++j;
        std::string digits(src.substr(i + 2, j - i - 2));
        if (digits.empty()) fail(t.loc, "malformed hexadecimal literal");
        t.ival = static_cast<std::int64_t>(std::strtoull(digits.c_str(), nullptr, 16));
      } else {
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        if (j < src.size() && src[j] == '.') {
          is_double = true;
          ++j;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
        if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
          if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
            is_double = true;
            j = k;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
          }
        }
        std::string lit(src.substr(i, j - i));
        if (is_double)
          t.dval = std::strtod(lit.c_str(), nullptr);
        else
          t.ival = static_cast<std::int64_t>(std::strtoull(lit.c_str(), nullptr, 10));
      }
      t.text = std::string(src.substr(i, j - i));
      t.kind = is_double ? Tok::DoubleLit : Tok::IntLit;
      if (j < src.size() && (src[j] == 'L' || src[j] == 'l') && !is_double) {
        t.kind = Tok::LongLit;
        ++j;
      } else if (j < src.size() && (src[j] == 'd' || src[j] == 'D' || src[j] == 'f' || src[j] == 'F')) {
        if (!is_double) t.dval = static_cast<double>(t.ival);
        t.kind = Tok::DoubleLit;
        ++j;
      }
      if (t.kind == Tok::IntLit && t.ival > 0xFFFFFFFFLL)
        fail(t.loc, "integer literal out of range: " + t.text);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }

    bool matched = false;
    for (auto p : kPuncts) {
      std::string_view ps(p);
      if (src.substr(i, ps.size()) == ps) {
        t.kind = Tok::Punct;
        t.text = std::string(ps);
        advance(ps.size());
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (!matched) fail(t.loc, std::string("unexpected character '") + c + "'");
  }

  Token end;
  end.kind = Tok::End;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

}  // namespace somd
