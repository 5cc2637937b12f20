#pragma once

// Stock machines built on the automaton framework: a pushdown recognizer for
// balanced parentheses and a tiny while-loop interpreter whose loop guards
// are before_shift handlers.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "autodb/automaton.hpp"

namespace autodb::machines {

using WordMachine = automaton::Automaton<std::string>;

// Store key of the parenthesis stack.
inline constexpr std::string_view kParenStack = "stack";

/// Accepts exactly the balanced strings over "(" and ")". Returns true from
/// the terminal action.
WordMachine balanced_parentheses_machine(std::size_t step_limit = automaton::kDefaultStepLimit);

/// Either a variable name or an integer constant.
using Operand = std::variant<std::string, std::int64_t>;

/// `lhs < rhs`, evaluated against the current store on every loop test.
struct Condition {
  Operand lhs;
  Operand rhs;

  bool holds(const automaton::ContextStore& store) const;
};

/// `target = source + increment`
struct Increment {
  std::string target;
  std::string source;
  std::int64_t amount = 0;
};

// Store keys used by the while interpreter.
inline constexpr std::string_view kControlStack = "control";
inline constexpr std::string_view kCondition = "condition";
inline constexpr std::string_view kBody = "body";
inline constexpr std::string_view kIterations = "iterations";

/// Interprets `while ( a < b ) { v = v + k }` where a and b are variables or
/// integers. Variables live in the store as std::int64_t under their own
/// name and must be put there by the caller. The terminal action returns the
/// assigned variable's final value. An always-true condition never halts and
/// ends in StepLimitExceeded.
WordMachine while_interpreter_machine(std::size_t step_limit = automaton::kDefaultStepLimit);

/// Splits on ASCII whitespace.
std::vector<std::string> split_words(std::string_view text);

}  // namespace autodb::machines
