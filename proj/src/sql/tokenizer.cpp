#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>

#include "autodb/error.hpp"
#include "autodb/sql/token.hpp"

namespace autodb::sql {

namespace {

constexpr std::array<std::string_view, 24> kKeywords = {
    "and",   "as",    "check", "checkpoint", "create", "delete",  "from",   "index",
    "insert", "int",  "into",  "key",        "not",    "null",    "on",     "primary",
    "select", "set",  "shutdown", "str",     "table",  "update",  "values", "where",
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

[[noreturn]] void fail(ErrorCode code, std::size_t pos, const std::string& what) {
  throw DbError(code, what + " at offset " + std::to_string(pos));
}

}  // namespace

std::string_view to_string(TokenKind kind) noexcept {
  switch (kind) {
    case TokenKind::kKeyword: return "keyword";
    case TokenKind::kIdentifier: return "identifier";
    case TokenKind::kInteger: return "integer";
    case TokenKind::kString: return "string";
    case TokenKind::kSymbol: return "symbol";
  }
  return "?";
}

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;

    if (ident_start(c)) {
      while (i < text.size() && ident_char(text[i])) ++i;
      std::string word(text.substr(start, i - start));
      std::string lower = word;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      if (is_keyword(lower)) {
        out.push_back({TokenKind::kKeyword, std::move(lower), start});
      } else {
        out.push_back({TokenKind::kIdentifier, std::move(word), start});
      }
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      if (i < text.size() && ident_start(text[i])) {
        fail(ErrorCode::kIllegalCharacter, i, "illegal character '" + std::string(1, text[i]) + "'");
      }
      std::string_view digits = text.substr(start, i - start);
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc() || p != digits.data() + digits.size()) {
        fail(ErrorCode::kIntegerOutOfRange, start, "integer " + std::string(digits) + " out of range");
      }
      out.push_back({TokenKind::kInteger, std::string(digits), start});
      continue;
    }

    if (c == '\'') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < text.size()) {
        if (text[i] == '\'') {
          if (i + 1 < text.size() && text[i + 1] == '\'') {
            value += '\'';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value += text[i++];
      }
      if (!closed) fail(ErrorCode::kUnterminatedString, start, "unterminated string literal");
      out.push_back({TokenKind::kString, std::move(value), start});
      continue;
    }

    auto two = text.substr(i, 2);
    if (two == "<=" || two == ">=" || two == "!=" || two == "<>") {
      out.push_back({TokenKind::kSymbol, two == "<>" ? "!=" : std::string(two), start});
      i += 2;
      continue;
    }
    switch (c) {
      case ',': case '(': case ')': case '*': case ';':
      case '=': case '<': case '>': case '+': case '-':
        out.push_back({TokenKind::kSymbol, std::string(1, c), start});
        ++i;
        continue;
      default:
        fail(ErrorCode::kIllegalCharacter, start, "illegal character '" + std::string(1, c) + "'");
    }
  }
  return out;
}

}  // namespace autodb::sql
