#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "autodb/value.hpp"

namespace autodb::sql {

struct ColumnDef {
  std::string name;
  ColumnType type = ColumnType::kInt;
  int width = 0;  // declared STR width; INT columns carry the fixed integer width once in a schema
  bool not_null = false;
  bool primary_key = false;

  bool operator==(const ColumnDef&) const = default;
};

struct CheckDef {
  std::string column;
  CompareOp op = CompareOp::kEq;
  Value literal;

  bool operator==(const CheckDef&) const = default;
};

struct Comparison {
  std::string column;
  CompareOp op = CompareOp::kEq;
  Value literal;

  bool operator==(const Comparison&) const = default;
};

// AND-only conjunction.
struct Predicate {
  std::vector<Comparison> conjuncts;

  bool operator==(const Predicate&) const = default;
};

struct ColumnPlusLiteral {
  std::string column;
  char sign = '+';
  std::int64_t amount = 0;

  bool operator==(const ColumnPlusLiteral&) const = default;
};

using Expr = std::variant<Value, ColumnPlusLiteral>;

struct Select;

struct TableRef {
  std::string name;

  bool operator==(const TableRef&) const = default;
};

struct Subquery {
  std::shared_ptr<const Select> select;
  std::string alias;

  bool operator==(const Subquery& other) const;
};

using SelectSource = std::variant<TableRef, Subquery>;

struct Select {
  // Empty means `*`.
  std::vector<std::string> projection;
  SelectSource source;
  std::optional<Predicate> where;

  bool operator==(const Select&) const = default;
};

inline bool Subquery::operator==(const Subquery& other) const {
  if (alias != other.alias) return false;
  if (!select || !other.select) return select == other.select;
  return *select == *other.select;
}

struct CreateTable {
  std::string name;
  std::vector<ColumnDef> columns;
  std::vector<CheckDef> checks;

  bool operator==(const CreateTable&) const = default;
};

struct CreateIndex {
  std::string table;
  std::string column;

  bool operator==(const CreateIndex&) const = default;
};

struct Insert {
  std::string table;
  std::vector<Value> values;

  bool operator==(const Insert&) const = default;
};

struct Assignment {
  std::string column;
  Expr value;

  bool operator==(const Assignment&) const = default;
};

struct Update {
  std::string table;
  std::vector<Assignment> assignments;
  std::optional<Predicate> where;

  bool operator==(const Update&) const = default;
};

struct Delete {
  std::string table;
  std::optional<Predicate> where;

  bool operator==(const Delete&) const = default;
};

// Admin statements.
struct Checkpoint {
  bool operator==(const Checkpoint&) const = default;
};
struct Shutdown {
  bool operator==(const Shutdown&) const = default;
};

using Statement =
    std::variant<CreateTable, CreateIndex, Insert, Select, Update, Delete, Checkpoint, Shutdown>;

inline bool is_mutation(const Statement& s) {
  return std::holds_alternative<CreateTable>(s) || std::holds_alternative<CreateIndex>(s) ||
         std::holds_alternative<Insert>(s) || std::holds_alternative<Update>(s) ||
         std::holds_alternative<Delete>(s);
}

// Nesting depth of FROM-clause subqueries (0 for a plain table source).
std::size_t subquery_depth(const Select& select);

// Renders a statement back to SQL text that parses to an equal statement.
std::string to_sql(const Statement& statement);
std::string to_sql(const Select& select);

}  // namespace autodb::sql
