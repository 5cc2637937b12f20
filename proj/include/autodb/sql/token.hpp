#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace autodb::sql {

enum class TokenKind { kKeyword, kIdentifier, kInteger, kString, kSymbol };

struct Token {
  TokenKind kind;
  // Keywords are lowercased; identifiers keep their case; string literals
  // hold the unquoted, unescaped text. `<>` is normalized to `!=`.
  std::string text;
  std::size_t position;  // byte offset in the statement text

  bool operator==(const Token&) const = default;
};

std::string_view to_string(TokenKind kind) noexcept;

bool is_keyword(std::string_view lowercase_word);

/// Splits SQL text into tokens. Throws DbError with kUnterminatedString,
/// kIllegalCharacter or kIntegerOutOfRange; the message carries the offset.
std::vector<Token> tokenize(std::string_view text);

}  // namespace autodb::sql
