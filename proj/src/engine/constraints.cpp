#include "autodb/engine/constraints.hpp"

#include <algorithm>
#include <map>

namespace autodb::engine {

namespace {

std::string join(const std::vector<Violation>& vs) {
  std::string out;
  for (const auto& v : vs) {
    if (!out.empty()) out += "; ";
    out += v.strategy + " on " + v.column + ": " + v.detail;
  }
  return out;
}

}  // namespace

ConstraintError::ConstraintError(std::vector<Violation> violations)
    : DbError(ErrorCode::kConstraint, join(violations)), violations_(std::move(violations)) {}

void NotNullStrategy::check(const storage::TableSchema& schema, const std::vector<ProposedRow>& rows,
                            const ValueLookup&, std::vector<Violation>& out) const {
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      const auto& col = schema.columns[i];
      if (!col.not_null && !col.primary_key) continue;
      const auto* s = std::get_if<std::string>(&row.values[i]);
      if (s != nullptr && s->empty()) out.push_back({"not-null", col.name, "empty value"});
    }
  }
}

void WidthStrategy::check(const storage::TableSchema& schema, const std::vector<ProposedRow>& rows,
                          const ValueLookup&, std::vector<Violation>& out) const {
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      const auto& col = schema.columns[i];
      const auto* s = std::get_if<std::string>(&row.values[i]);
      if (s == nullptr) continue;
      auto len = storage::encoded_length(*s);
      if (len > static_cast<std::size_t>(col.width)) {
        out.push_back({"width", col.name,
                       "value needs " + std::to_string(len) + " bytes, width is " + std::to_string(col.width)});
      }
    }
  }
}

void UniqueStrategy::check(const storage::TableSchema& schema, const std::vector<ProposedRow>& rows,
                           const ValueLookup& lookup, std::vector<Violation>& out) const {
  auto pk = schema.primary_key();
  if (!pk) return;
  const std::string& column = schema.columns[*pk].name;
  std::vector<std::size_t> replaced;
  for (const auto& row : rows) {
    if (row.replaces) replaced.push_back(*row.replaces);
  }
  std::sort(replaced.begin(), replaced.end());

  std::map<Value, int> proposed;
  for (const auto& row : rows) {
    const Value& key = row.values[*pk];
    if (++proposed[key] == 2) {
      out.push_back({"unique", column, "duplicate key " + to_sql_literal(key) + " within the statement"});
    }
  }
  for (const auto& [key, n] : proposed) {
    for (std::size_t r : lookup(*pk, key)) {
      if (!std::binary_search(replaced.begin(), replaced.end(), r)) {
        out.push_back({"unique", column, "key " + to_sql_literal(key) + " already present"});
        break;
      }
    }
  }
}

void CheckStrategy::check(const storage::TableSchema& schema, const std::vector<ProposedRow>& rows,
                          const ValueLookup&, std::vector<Violation>& out) const {
  for (const auto& row : rows) {
    for (const auto& ck : schema.checks) {
      auto idx = schema.column_index(ck.column);
      const Value& v = row.values[*idx];
      if (!compare(v, ck.op, ck.literal)) {
        out.push_back({"check", ck.column,
                       ck.column + " " + std::string(to_string(ck.op)) + " " + to_sql_literal(ck.literal) +
                           " fails for " + to_sql_literal(v)});
      }
    }
  }
}

ConstraintChecker ConstraintChecker::for_schema(const storage::TableSchema& schema) {
  std::vector<std::unique_ptr<ConstraintStrategy>> s;
  s.push_back(std::make_unique<NotNullStrategy>());
  s.push_back(std::make_unique<WidthStrategy>());
  s.push_back(std::make_unique<UniqueStrategy>());
  s.push_back(std::make_unique<CheckStrategy>());
  return ConstraintChecker(schema, std::move(s));
}

std::vector<Violation> ConstraintChecker::evaluate(const std::vector<ProposedRow>& rows,
                                                   const ValueLookup& lookup) const {
  std::vector<Violation> out;
  for (const auto& s : strategies_) s->check(*schema_, rows, lookup, out);
  return out;
}

void ConstraintChecker::enforce(const std::vector<ProposedRow>& rows, const ValueLookup& lookup) const {
  auto v = evaluate(rows, lookup);
  if (!v.empty()) throw ConstraintError(std::move(v));
}

}  // namespace autodb::engine
