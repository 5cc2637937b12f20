#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "autodb/error.hpp"
#include "autodb/value.hpp"

namespace autodb::engine {

struct ViewColumn {
  std::string name;
  ColumnType type = ColumnType::kInt;

  bool operator==(const ViewColumn&) const = default;
};

// Materialized query result. Also what a FROM-clause subquery becomes.
struct View {
  std::vector<ViewColumn> columns;
  std::vector<std::vector<Value>> rows;

  bool operator==(const View&) const = default;
};

struct RowCount {
  std::uint64_t count = 0;

  bool operator==(const RowCount&) const = default;
};

struct EngineError {
  ErrorCode code = ErrorCode::kInternal;
  std::string message;

  bool operator==(const EngineError&) const = default;
};

using ExecResult = std::variant<View, RowCount, EngineError>;

inline bool is_error(const ExecResult& r) { return std::holds_alternative<EngineError>(r); }

}  // namespace autodb::engine
