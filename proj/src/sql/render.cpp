#include <type_traits>

#include "autodb/sql/ast.hpp"

namespace autodb::sql {

namespace {

std::string render_where(const std::optional<Predicate>& where) {
  if (!where) return {};
  std::string out = " where ";
  for (std::size_t i = 0; i < where->conjuncts.size(); ++i) {
    const Comparison& c = where->conjuncts[i];
    if (i > 0) out += " and ";
    out += c.column + " " + std::string(to_string(c.op)) + " " + to_sql_literal(c.literal);
  }
  return out;
}

std::string render_column(const ColumnDef& c) {
  std::string out = c.name;
  out += c.type == ColumnType::kInt ? " int" : " str(" + std::to_string(c.width) + ")";
  if (c.not_null) out += " not null";
  if (c.primary_key) out += " primary key";
  return out;
}

}  // namespace

std::size_t subquery_depth(const Select& select) {
  std::size_t depth = 0;
  const Select* s = &select;
  while (const auto* sub = std::get_if<Subquery>(&s->source)) {
    ++depth;
    s = sub->select.get();
  }
  return depth;
}

std::string to_sql(const Select& s) {
  std::string out = "select ";
  if (s.projection.empty()) {
    out += "*";
  } else {
    for (std::size_t i = 0; i < s.projection.size(); ++i) {
      if (i > 0) out += ", ";
      out += s.projection[i];
    }
  }
  out += " from ";
  if (const auto* t = std::get_if<TableRef>(&s.source)) {
    out += t->name;
  } else {
    const auto& sub = std::get<Subquery>(s.source);
    out += "(" + to_sql(*sub.select) + ") as " + sub.alias;
  }
  return out + render_where(s.where);
}

std::string to_sql(const Statement& statement) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Select>) {
          return to_sql(s);
        } else if constexpr (std::is_same_v<T, CreateTable>) {
          std::string out = "create table " + s.name + " (";
          bool first = true;
          for (const auto& c : s.columns) {
            if (!first) out += ", ";
            first = false;
            out += render_column(c);
          }
          for (const auto& c : s.checks) {
            if (!first) out += ", ";
            first = false;
            out += "check (" + c.column + " " + std::string(to_string(c.op)) + " " +
                   to_sql_literal(c.literal) + ")";
          }
          return out + ")";
        } else if constexpr (std::is_same_v<T, CreateIndex>) {
          return "create index on " + s.table + " (" + s.column + ")";
        } else if constexpr (std::is_same_v<T, Insert>) {
          std::string out = "insert into " + s.table + " values (";
          for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (i > 0) out += ", ";
            out += to_sql_literal(s.values[i]);
          }
          return out + ")";
        } else if constexpr (std::is_same_v<T, Update>) {
          std::string out = "update " + s.table + " set ";
          for (std::size_t i = 0; i < s.assignments.size(); ++i) {
            const Assignment& a = s.assignments[i];
            if (i > 0) out += ", ";
            out += a.column + " = ";
            if (const auto* v = std::get_if<Value>(&a.value)) {
              out += to_sql_literal(*v);
            } else {
              const auto& e = std::get<ColumnPlusLiteral>(a.value);
              out += e.column + " " + e.sign + " " + std::to_string(e.amount);
            }
          }
          return out + render_where(s.where);
        } else if constexpr (std::is_same_v<T, Delete>) {
          return "delete from " + s.table + render_where(s.where);
        } else if constexpr (std::is_same_v<T, Checkpoint>) {
          return "checkpoint";
        } else {
          return "shutdown";
        }
      },
      statement);
}

}  // namespace autodb::sql
