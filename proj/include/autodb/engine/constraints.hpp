#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "autodb/error.hpp"
#include "autodb/storage/storage.hpp"

namespace autodb::engine {

struct Violation {
  std::string strategy;  // "not-null", "width", "unique", "check"
  std::string column;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

class ConstraintError : public DbError {
 public:
  explicit ConstraintError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

// A row about to be written. `replaces` is the record it overwrites (UPDATE).
struct ProposedRow {
  std::vector<Value> values;
  std::optional<std::size_t> replaces;
};

// Record numbers of the valid rows whose `column` currently equals `value`.
using ValueLookup = std::function<std::vector<std::size_t>(std::size_t column, const Value& value)>;

class ConstraintStrategy {
 public:
  virtual ~ConstraintStrategy() = default;
  virtual std::string_view name() const = 0;
  // Appends one Violation per failure; never touches table state.
  virtual void check(const storage::TableSchema& schema, const std::vector<ProposedRow>& rows,
                     const ValueLookup& lookup, std::vector<Violation>& out) const = 0;
};

// Empty strings in primary key or NOT NULL columns.
class NotNullStrategy final : public ConstraintStrategy {
 public:
  std::string_view name() const override { return "not-null"; }
  void check(const storage::TableSchema&, const std::vector<ProposedRow>&, const ValueLookup&,
             std::vector<Violation>&) const override;
};

// STR values longer than the declared width once escaped.
class WidthStrategy final : public ConstraintStrategy {
 public:
  std::string_view name() const override { return "width"; }
  void check(const storage::TableSchema&, const std::vector<ProposedRow>&, const ValueLookup&,
             std::vector<Violation>&) const override;
};

// Primary key uniqueness against stored rows, ignoring the images being
// replaced, and among the proposed rows themselves.
class UniqueStrategy final : public ConstraintStrategy {
 public:
  std::string_view name() const override { return "unique"; }
  void check(const storage::TableSchema&, const std::vector<ProposedRow>&, const ValueLookup&,
             std::vector<Violation>&) const override;
};

class CheckStrategy final : public ConstraintStrategy {
 public:
  std::string_view name() const override { return "check"; }
  void check(const storage::TableSchema&, const std::vector<ProposedRow>&, const ValueLookup&,
             std::vector<Violation>&) const override;
};

class ConstraintChecker {
 public:
  /// The standard strategy set for a table.
  static ConstraintChecker for_schema(const storage::TableSchema& schema);

  ConstraintChecker(const storage::TableSchema& schema, std::vector<std::unique_ptr<ConstraintStrategy>> strategies)
      : schema_(&schema), strategies_(std::move(strategies)) {}

  /// Every violation of every strategy over every row; empty means pass.
  std::vector<Violation> evaluate(const std::vector<ProposedRow>& rows, const ValueLookup& lookup) const;
  /// Throws ConstraintError if evaluate() finds anything.
  void enforce(const std::vector<ProposedRow>& rows, const ValueLookup& lookup) const;

 private:
  const storage::TableSchema* schema_;
  std::vector<std::unique_ptr<ConstraintStrategy>> strategies_;
};

}  // namespace autodb::engine
