#include <array>
#include <cctype>

#include "patchguard/error.hpp"
#include "patchguard/java.hpp"

namespace patchguard::java {
namespace {

constexpr std::array<std::string_view, 53> kKeywords = {
    "abstract", "assert",     "boolean",  "break",      "byte",      "case",      "catch",
    "char",     "class",      "const",    "continue",   "default",   "do",        "double",
    "else",     "enum",       "extends",  "final",      "finally",   "float",     "for",
    "goto",     "if",         "implements", "import",   "instanceof", "int",      "interface",
    "long",     "native",     "new",      "package",    "private",   "protected", "public",
    "return",   "short",      "static",   "strictfp",   "super",     "switch",    "synchronized",
    "this",     "throw",      "throws",   "transient",  "try",       "void",      "volatile",
    "while",    "true",       "false",    "null"};

// Longest first so that greedy matching picks ">>>=" before ">>".
constexpr std::array<std::string_view, 50> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",   ">=",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "<<", ">>", "(",
    ")",    "{",   "}",   "[",   "]",   ";",  ",",  ".",  "@",  "=",  ">",  "<",  "!",
    "~",    "?",   ":",   "+",   "-",   "*",  "/",  "%",  "&",  "|",  "^"};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool is_ident_part(unsigned char c) { return is_ident_start(c) || std::isdigit(c); }

bool is_keyword(std::string_view word) {
  for (auto kw : kKeywords) {
    if (kw == word) return true;
  }
  return false;
}

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto at = [&](std::size_t k) -> unsigned char { return k < n ? static_cast<unsigned char>(src[k]) : 0; };

  while (i < n) {
    unsigned char c = at(i);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '/' && at(i + 1) == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && at(i + 1) == '*') {
      std::size_t close = src.find("*/", i + 2);
      if (close == std::string_view::npos) throw SyntaxError("unterminated comment", i);
      i = close + 2;
      continue;
    }
    std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_ident_part(at(i))) ++i;
      auto word = src.substr(start, i - start);
      out.push_back({is_keyword(word) ? TokenType::kKeyword : TokenType::kIdentifier, word, start, i});
      continue;
    }
    if (std::isdigit(c) || (c == '.' && std::isdigit(at(i + 1)))) {
      if (c == '0' && (at(i + 1) == 'x' || at(i + 1) == 'X' || at(i + 1) == 'b' || at(i + 1) == 'B')) {
        i += 2;
        while (i < n && (std::isxdigit(at(i)) || at(i) == '_' || at(i) == '.' ||
                         ((at(i) == 'p' || at(i) == 'P')) ||
                         ((at(i) == '+' || at(i) == '-') && (at(i - 1) == 'p' || at(i - 1) == 'P')))) {
          ++i;
        }
      } else {
        while (i < n) {
          unsigned char d = at(i);
          if (std::isdigit(d) || d == '_' || d == '.') {
            ++i;
          } else if ((d == 'e' || d == 'E')) {
            ++i;
            if (at(i) == '+' || at(i) == '-') ++i;
          } else {
            break;
          }
        }
      }
      while (i < n && std::isalpha(at(i))) ++i;  // L, f, d suffixes
      out.push_back({TokenType::kNumber, src.substr(start, i - start), start, i});
      continue;
    }
    if (c == '"') {
      if (at(i + 1) == '"' && at(i + 2) == '"') {
        std::size_t close = src.find("\"\"\"", i + 3);
        if (close == std::string_view::npos) throw SyntaxError("unterminated text block", start);
        i = close + 3;
        out.push_back({TokenType::kTextBlock, src.substr(start, i - start), start, i});
        continue;
      }
      ++i;
      while (i < n && src[i] != '"') {
        if (src[i] == '\\') ++i;
        if (i < n && src[i] == '\n') throw SyntaxError("unterminated string literal", start);
        ++i;
      }
      if (i >= n) throw SyntaxError("unterminated string literal", start);
      ++i;
      out.push_back({TokenType::kString, src.substr(start, i - start), start, i});
      continue;
    }
    if (c == '\'') {
      ++i;
      while (i < n && src[i] != '\'') {
        if (src[i] == '\\') ++i;
        if (i < n && src[i] == '\n') throw SyntaxError("unterminated character literal", start);
        ++i;
      }
      if (i >= n) throw SyntaxError("unterminated character literal", start);
      ++i;
      out.push_back({TokenType::kChar, src.substr(start, i - start), start, i});
      continue;
    }
    bool matched = false;
    for (auto op : kOperators) {
      if (src.substr(i, op.size()) == op) {
        out.push_back({TokenType::kOperator, src.substr(i, op.size()), i, i + op.size()});
        i += op.size();
        matched = true;
        break;
      }
    }
    if (!matched) throw SyntaxError(std::string("unexpected character '") + static_cast<char>(c) + "'", i);
  }
  out.push_back({TokenType::kEnd, {}, n, n});
  return out;
}

}  // namespace patchguard::java
