#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "patchguard/grammar.hpp"

namespace patchguard::java {

enum class TokenType { kIdentifier, kKeyword, kNumber, kString, kChar, kTextBlock, kOperator, kEnd };

struct Token {
  TokenType type = TokenType::kEnd;
  std::string_view text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Comments and whitespace are dropped. Throws SyntaxError on unterminated
// literals or comments and on stray characters.
std::vector<Token> tokenize(std::string_view source);

class Adapter final : public GrammarAdapter {
 public:
  ConcreteTree parse(std::string_view source_text) const override;
};

}  // namespace patchguard::java
