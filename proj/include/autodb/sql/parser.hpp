#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autodb/error.hpp"
#include "autodb/sql/ast.hpp"
#include "autodb/sql/token.hpp"

namespace autodb::sql {

class SyntaxError : public DbError {
 public:
  SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& message)
      : DbError(ErrorCode::kSyntax, message), position_(position), expected_(std::move(expected)) {}

  // Index of the offending token; equals the token count at end of input.
  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

// Frame-stack bookkeeping observed during a SELECT parse.
struct ParseTrace {
  std::size_t frame_pushes = 0;
  std::size_t frame_pops = 0;
  std::size_t final_depth = 0;
  std::size_t steps = 0;
};

struct ParseOptions {
  std::optional<std::size_t> step_limit;
  ParseTrace* trace = nullptr;
};

/// Parses one statement. Dispatches on the leading keyword to the automaton
/// for that statement family. Throws SyntaxError, or DbError(kNesting) when a
/// subquery is left open.
Statement parse(std::span<const Token> tokens, const ParseOptions& options = {});

/// tokenize + parse.
Statement parse(std::string_view text, const ParseOptions& options = {});

}  // namespace autodb::sql
