#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "somd/ast.hpp"

namespace somd {

enum class Tok : std::uint8_t {
  End,
  Ident,
  IntLit,
  LongLit,
  DoubleLit,
  Keyword,
  Punct,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t ival = 0;
  double dval = 0.0;
  SourceLoc loc;

  bool is(Tok k, std::string_view t) const { return kind == k && text == t; }
  bool punct(std::string_view t) const { return is(Tok::Punct, t); }
  bool keyword(std::string_view t) const { return is(Tok::Keyword, t); }
};

/// Splits SOMD-mini source into tokens. Throws CompileError on malformed input.
std::vector<Token> tokenize(std::string_view source);

}  // namespace somd
