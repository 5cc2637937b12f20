#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace autodb {

// A cell value. Columns are either 64-bit signed integers or fixed-width
// strings; there is no NULL.
using Value = std::variant<std::int64_t, std::string>;

enum class ColumnType { kInt, kStr };

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };

std::string_view to_string(ColumnType type) noexcept;
std::string_view to_string(CompareOp op) noexcept;

inline ColumnType type_of(const Value& v) noexcept {
  return std::holds_alternative<std::int64_t>(v) ? ColumnType::kInt : ColumnType::kStr;
}

// Throws DbError(kTypeMismatch) when the operands hold different types.
bool compare(const Value& lhs, CompareOp op, const Value& rhs);

// Integers in decimal, strings verbatim.
std::string to_display(const Value& v);

// SQL literal syntax: 42, -7, 'O''Neil'.
std::string to_sql_literal(const Value& v);

}  // namespace autodb
