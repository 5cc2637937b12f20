#include "autodb/engine/database.hpp"

#include <algorithm>
#include <shared_mutex>

#include "autodb/engine/constraints.hpp"
#include "autodb/error.hpp"
#include "autodb/sql/parser.hpp"

namespace fs = std::filesystem;

namespace autodb::engine {

namespace {

struct Resolved {
  std::size_t column;
  CompareOp op;
  Value literal;
};

std::vector<ViewColumn> columns_of(const storage::TableSchema& schema) {
  std::vector<ViewColumn> out;
  for (const auto& c : schema.columns) out.push_back({c.name, c.type});
  return out;
}

std::size_t require_column(const std::vector<ViewColumn>& columns, const std::string& name,
                           std::string_view where) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw DbError(ErrorCode::kUnknownColumn, "no column '" + name + "' in " + std::string(where));
}

std::vector<Resolved> resolve(const std::vector<ViewColumn>& columns, const std::optional<sql::Predicate>& where,
                              std::string_view source) {
  std::vector<Resolved> out;
  if (!where) return out;
  for (const auto& c : where->conjuncts) {
    std::size_t idx = require_column(columns, c.column, source);
    if (type_of(c.literal) != columns[idx].type) {
      throw DbError(ErrorCode::kTypeMismatch, "column '" + c.column + "' is " +
                                                  std::string(to_string(columns[idx].type)) + ", compared with " +
                                                  to_sql_literal(c.literal));
    }
    out.push_back({idx, c.op, c.literal});
  }
  return out;
}

bool matches(const std::vector<Resolved>& conjuncts, const std::vector<Value>& row) {
  return std::all_of(conjuncts.begin(), conjuncts.end(),
                     [&](const Resolved& c) { return compare(row[c.column], c.op, c.literal); });
}

View project(const std::vector<ViewColumn>& columns, std::vector<std::vector<Value>> rows,
             const std::vector<std::string>& projection, std::string_view source) {
  if (projection.empty()) return View{columns, std::move(rows)};
  std::vector<std::size_t> picks;
  View out;
  for (const auto& name : projection) {
    picks.push_back(require_column(columns, name, source));
    out.columns.push_back(columns[picks.back()]);
  }
  out.rows.reserve(rows.size());
  for (auto& row : rows) {
    std::vector<Value> r;
    r.reserve(picks.size());
    for (std::size_t p : picks) r.push_back(row[p]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

void check_types(const storage::TableSchema& schema, const std::vector<Value>& values) {
  if (values.size() != schema.columns.size()) {
    throw DbError(ErrorCode::kArity, "table '" + schema.name + "' has " + std::to_string(schema.columns.size()) +
                                         " columns, got " + std::to_string(values.size()) + " values");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (type_of(values[i]) != schema.columns[i].type) {
      throw DbError(ErrorCode::kTypeMismatch, "column '" + schema.columns[i].name + "' is " +
                                                  std::string(to_string(schema.columns[i].type)) + ", got " +
                                                  to_sql_literal(values[i]));
    }
  }
}

struct AccessPath {
  Plan plan;
  std::optional<Value> eq;
  std::optional<index::BPlusTree::Bound> lo, hi;
};

bool is_range(CompareOp op) {
  return op == CompareOp::kLt || op == CompareOp::kLe || op == CompareOp::kGt || op == CompareOp::kGe;
}

AccessPath choose_path(const storage::TableSchema& schema, const index::IndexManager& indexes,
                       const std::vector<Resolved>& conjuncts, bool force_scan) {
  AccessPath path;
  if (force_scan) return path;
  auto indexed = [&](std::size_t col) {
    return indexes.find(schema.name, schema.columns[col].name) != nullptr;
  };
  for (const auto& c : conjuncts) {
    if (c.op == CompareOp::kEq && indexed(c.column)) {
      path.plan = {PlanKind::kIndexEq, schema.columns[c.column].name};
      path.eq = c.literal;
      return path;
    }
  }
  for (const auto& first : conjuncts) {
    if (!is_range(first.op) || !indexed(first.column)) continue;
    path.plan = {PlanKind::kIndexRange, schema.columns[first.column].name};
    // Tightest bounds from every range conjunct on this column.
    for (const auto& c : conjuncts) {
      if (c.column != first.column || !is_range(c.op)) continue;
      const bool inclusive = c.op == CompareOp::kLe || c.op == CompareOp::kGe;
      auto& bound = (c.op == CompareOp::kGt || c.op == CompareOp::kGe) ? path.lo : path.hi;
      const bool lower = &bound == &path.lo;
      if (!bound || (lower ? bound->key < c.literal : c.literal < bound->key)) {
        bound = index::BPlusTree::Bound{c.literal, inclusive};
      } else if (bound->key == c.literal) {
        bound->inclusive = bound->inclusive && inclusive;
      }
    }
    return path;
  }
  return path;
}

}  // namespace

// ---------------------------------------------------------------------------

Database::Database(std::unique_ptr<storage::TableRegistry> registry, EngineConfig config)
    : config_(std::move(config)),
      registry_(std::move(registry)),
      caches_(config_.cache),
      indexes_(config_.index_order) {}

std::unique_ptr<Database> Database::open(const fs::path& dir, EngineConfig config) {
  auto registry = storage::TableRegistry::open(dir, storage::StorageOptions{config.sync_writes});
  std::unique_ptr<Database> db(new Database(std::move(registry), std::move(config)));
  for (const auto& name : db->registry_->table_names()) {
    storage::Table& table = db->registry_->get(name);
    bool all_from_files = !table.schema().indexed_columns.empty();
    for (const auto& column : table.schema().indexed_columns) {
      if (db->indexes_.open(table, column) != index::LoadSource::kFile) all_from_files = false;
    }
    if (!all_from_files) db->indexes_.invalidate_files(table);
    db->index_files_current_[name] = all_from_files;
  }
  if (!db->config_.log_path.empty()) db->log_ = StatementLog::open(db->config_.log_path, db->config_.sync_writes);
  return db;
}

Database::~Database() {
  try {
    close();
  } catch (...) {
  }
}

ExecResult Database::execute_sql(std::string_view text) {
  try {
    sql::ParseOptions options;
    options.step_limit = config_.step_limit;
    return execute(sql::parse(text, options), text);
  } catch (const DbError& e) {
    return EngineError{e.code(), e.what()};
  }
}

ExecResult Database::execute(const sql::Statement& statement, std::string_view text) {
  if (closed_) return EngineError{ErrorCode::kInternal, "database is closed"};
  try {
    return std::visit(
        [&](const auto& s) -> ExecResult {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, sql::Select>) {
            std::shared_lock reg(registry_->mutex());
            return run_select(s);
          } else if constexpr (std::is_same_v<T, sql::Insert>) {
            std::shared_lock reg(registry_->mutex());
            return RowCount{run_insert(s, text)};
          } else if constexpr (std::is_same_v<T, sql::Update>) {
            std::shared_lock reg(registry_->mutex());
            return RowCount{run_update(s, text)};
          } else if constexpr (std::is_same_v<T, sql::Delete>) {
            std::shared_lock reg(registry_->mutex());
            return RowCount{run_delete(s, text)};
          } else if constexpr (std::is_same_v<T, sql::CreateTable>) {
            run_create_table(s, text);
            return RowCount{0};
          } else if constexpr (std::is_same_v<T, sql::CreateIndex>) {
            run_create_index(s, text);
            return RowCount{0};
          } else if constexpr (std::is_same_v<T, sql::Checkpoint>) {
            checkpoint();
            return RowCount{0};
          } else {
            return RowCount{0};  // SHUTDOWN is acted on by the server
          }
        },
        statement);
  } catch (const DbError& e) {
    return EngineError{e.code(), e.what()};
  } catch (const std::exception& e) {
    return EngineError{ErrorCode::kInternal, e.what()};
  }
}

// ---------------------------------------------------------------------------
// Reads

View Database::run_select(const sql::Select& select) {
  if (const auto* ref = std::get_if<sql::TableRef>(&select.source)) {
    storage::Table& table = registry_->get(ref->name);
    std::shared_lock lock(table.mutex());
    return select_base(table, select);
  }
  const auto& sub = std::get<sql::Subquery>(select.source);
  View inner = run_select(*sub.select);
  auto conjuncts = resolve(inner.columns, select.where, "subquery '" + sub.alias + "'");
  std::vector<std::vector<Value>> rows;
  for (auto& row : inner.rows) {
    if (matches(conjuncts, row)) rows.push_back(std::move(row));
  }
  return project(inner.columns, std::move(rows), select.projection, "subquery '" + sub.alias + "'");
}

View Database::select_base(storage::Table& table, const sql::Select& select) {
  auto found = matching_rows(table, select.where);
  std::vector<std::vector<Value>> rows;
  rows.reserve(found.size());
  for (auto& m : found) rows.push_back(std::move(m.values));
  return project(columns_of(table.schema()), std::move(rows), select.projection, "table '" + table.name() + "'");
}

std::vector<Database::Match> Database::matching_rows(storage::Table& table,
                                                     const std::optional<sql::Predicate>& where) {
  const auto& schema = table.schema();
  auto conjuncts = resolve(columns_of(schema), where, "table '" + table.name() + "'");
  cache::TableCache& cache = caches_.cache_for(table);
  AccessPath path = choose_path(schema, indexes_, conjuncts, force_scan_);

  std::vector<Match> out;
  auto consider = [&](std::size_t r) {
    storage::RecordSlot slot = cache.get_record(r);
    if (slot.valid && matches(conjuncts, slot.values)) out.push_back({r, std::move(slot.values)});
  };

  if (path.plan.kind == PlanKind::kScan) {
    const std::size_t n = table.slot_count();
    for (std::size_t r = 0; r < n; ++r) consider(r);
    return out;
  }
  const index::BPlusTree* tree = indexes_.find(table.name(), path.plan.column);
  std::vector<index::RecordNumber> records;
  if (path.plan.kind == PlanKind::kIndexEq) {
    records = tree->lookup_eq(*path.eq);
  } else if (!(path.lo && path.hi && path.hi->key < path.lo->key)) {
    records = tree->lookup_range(path.lo, path.hi);
  }
  std::sort(records.begin(), records.end());
  for (auto r : records) consider(static_cast<std::size_t>(r));
  return out;
}

Plan Database::plan_for(const sql::Select& select) const {
  const auto* ref = std::get_if<sql::TableRef>(&select.source);
  if (ref == nullptr) return {PlanKind::kView, {}};
  std::shared_lock reg(registry_->mutex());
  storage::Table& table = registry_->get(ref->name);
  std::shared_lock lock(table.mutex());
  auto conjuncts = resolve(columns_of(table.schema()), select.where, "table '" + table.name() + "'");
  return choose_path(table.schema(), indexes_, conjuncts, force_scan_).plan;
}

// ---------------------------------------------------------------------------
// Writes

void Database::before_first_write(storage::Table& table) {
  std::lock_guard lock(files_mutex_);
  auto it = index_files_current_.find(table.name());
  if (it != index_files_current_.end() && it->second) {
    indexes_.invalidate_files(table);
    it->second = false;
  }
}

namespace {

ValueLookup lookup_for(storage::Table& table, cache::TableCache& cache, const index::IndexManager& indexes) {
  return [&table, &cache, &indexes](std::size_t column, const Value& value) {
    std::vector<std::size_t> out;
    if (const auto* tree = indexes.find(table.name(), table.schema().columns[column].name)) {
      for (auto r : tree->lookup_eq(value)) out.push_back(static_cast<std::size_t>(r));
      return out;
    }
    const std::size_t n = table.slot_count();
    for (std::size_t r = 0; r < n; ++r) {
      auto slot = cache.get_record(r);
      if (slot.valid && slot.values[column] == value) out.push_back(r);
    }
    return out;
  };
}

}  // namespace

std::uint64_t Database::run_insert(const sql::Insert& insert, std::string_view text) {
  storage::Table& table = registry_->get(insert.table);
  std::unique_lock lock(table.mutex());
  LogScope scope(log_.get(), text);
  const auto& schema = table.schema();
  check_types(schema, insert.values);
  cache::TableCache& cache = caches_.cache_for(table);
  ConstraintChecker::for_schema(schema).enforce({ProposedRow{insert.values, std::nullopt}},
                                                lookup_for(table, cache, indexes_));

  before_first_write(table);
  std::size_t r = table.append_record(insert.values);
  cache.apply_write(r, storage::RecordSlot{true, insert.values});
  for (const auto& column : schema.indexed_columns) {
    indexes_.find(table.name(), column)->insert(insert.values[*schema.column_index(column)], r);
  }
  scope.commit();
  return 1;
}

std::uint64_t Database::run_update(const sql::Update& update, std::string_view text) {
  storage::Table& table = registry_->get(update.table);
  std::unique_lock lock(table.mutex());
  LogScope scope(log_.get(), text);
  const auto& schema = table.schema();
  const auto columns = columns_of(schema);

  struct Target {
    std::size_t column;
    sql::Expr expr;
    std::size_t source = 0;
  };
  std::vector<Target> targets;
  for (const auto& a : update.assignments) {
    Target t{require_column(columns, a.column, "table '" + table.name() + "'"), a.value};
    if (const auto* v = std::get_if<Value>(&a.value)) {
      if (type_of(*v) != columns[t.column].type) {
        throw DbError(ErrorCode::kTypeMismatch, "column '" + a.column + "' is " +
                                                    std::string(to_string(columns[t.column].type)) + ", got " +
                                                    to_sql_literal(*v));
      }
    } else {
      const auto& e = std::get<sql::ColumnPlusLiteral>(a.value);
      t.source = require_column(columns, e.column, "table '" + table.name() + "'");
      if (columns[t.source].type != ColumnType::kInt || columns[t.column].type != ColumnType::kInt) {
        throw DbError(ErrorCode::kTypeMismatch, "arithmetic on '" + e.column + "' needs INT columns");
      }
    }
    targets.push_back(std::move(t));
  }

  auto found = matching_rows(table, update.where);
  std::vector<ProposedRow> proposed;
  proposed.reserve(found.size());
  for (const auto& m : found) {
    ProposedRow row{m.values, m.record};
    for (const auto& t : targets) {
      if (const auto* v = std::get_if<Value>(&t.expr)) {
        row.values[t.column] = *v;
        continue;
      }
      const auto& e = std::get<sql::ColumnPlusLiteral>(t.expr);
      std::int64_t base = std::get<std::int64_t>(m.values[t.source]);
      std::int64_t result = 0;
      bool overflow = e.sign == '-' ? __builtin_sub_overflow(base, e.amount, &result)
                                    : __builtin_add_overflow(base, e.amount, &result);
      if (overflow) {
        throw DbError(ErrorCode::kIntegerOutOfRange, "arithmetic on '" + e.column + "' overflows");
      }
      row.values[t.column] = result;
    }
    proposed.push_back(std::move(row));
  }
  cache::TableCache& cache = caches_.cache_for(table);
  ConstraintChecker::for_schema(schema).enforce(proposed, lookup_for(table, cache, indexes_));

  if (!proposed.empty()) before_first_write(table);
  for (std::size_t i = 0; i < proposed.size(); ++i) {
    const auto& old_values = found[i].values;
    const auto& new_values = proposed[i].values;
    if (old_values == new_values) continue;
    const std::size_t r = found[i].record;
    table.overwrite_record(r, new_values);
    cache.apply_write(r, storage::RecordSlot{true, new_values});
    for (const auto& column : schema.indexed_columns) {
      const std::size_t c = *schema.column_index(column);
      if (old_values[c] == new_values[c]) continue;
      auto* tree = indexes_.find(table.name(), column);
      tree->remove(old_values[c], r);
      tree->insert(new_values[c], r);
    }
  }
  scope.commit();
  return proposed.size();
}

std::uint64_t Database::run_delete(const sql::Delete& del, std::string_view text) {
  storage::Table& table = registry_->get(del.table);
  std::unique_lock lock(table.mutex());
  LogScope scope(log_.get(), text);
  const auto& schema = table.schema();
  auto found = matching_rows(table, del.where);
  cache::TableCache& cache = caches_.cache_for(table);
  if (!found.empty()) before_first_write(table);
  for (const auto& m : found) {
    table.delete_record(m.record);
    cache.apply_write(m.record, storage::RecordSlot{false, m.values});
    for (const auto& column : schema.indexed_columns) {
      indexes_.find(table.name(), column)->remove(m.values[*schema.column_index(column)], m.record);
    }
  }
  scope.commit();
  return found.size();
}

void Database::run_create_table(const sql::CreateTable& create, std::string_view text) {
  std::unique_lock reg(registry_->mutex());
  LogScope scope(log_.get(), text);
  storage::Table& table = registry_->create_table(storage::schema_from(create));
  for (const auto& column : table.schema().indexed_columns) indexes_.build(table, column);
  {
    std::lock_guard lock(files_mutex_);
    index_files_current_[table.name()] = false;
  }
  scope.commit();
}

void Database::run_create_index(const sql::CreateIndex& create, std::string_view text) {
  std::unique_lock reg(registry_->mutex());
  storage::Table& table = registry_->get(create.table);
  std::unique_lock lock(table.mutex());
  require_column(columns_of(table.schema()), create.column, "table '" + table.name() + "'");
  if (table.schema().is_indexed(create.column)) {
    throw DbError(ErrorCode::kIndexExists, "column '" + create.column + "' of '" + table.name() + "' is already indexed");
  }
  LogScope scope(log_.get(), text);
  before_first_write(table);
  table.add_indexed_column(create.column);
  indexes_.build(table, create.column);
  scope.commit();
}

// ---------------------------------------------------------------------------

void Database::checkpoint() {
  std::shared_lock reg(registry_->mutex());
  for (const auto& name : registry_->table_names()) {
    storage::Table& table = registry_->get(name);
    std::unique_lock lock(table.mutex());
    indexes_.persist_table(table);
    std::lock_guard files(files_mutex_);
    index_files_current_[name] = !table.schema().indexed_columns.empty();
  }
}

void Database::close() {
  std::lock_guard lock(close_mutex_);
  if (closed_) return;
  closed_ = true;
  checkpoint();
  if (log_) log_->close();
}

// ---------------------------------------------------------------------------

std::unique_ptr<Database> replay_log(const fs::path& log_path, const fs::path& dir, EngineConfig config) {
  config.log_path.clear();
  auto statements = committed_statements(read_log(log_path));
  auto db = Database::open(dir, std::move(config));
  for (const auto& text : statements) {
    ExecResult r = db->execute_sql(text);
    if (const auto* e = std::get_if<EngineError>(&r)) {
      throw DbError(ErrorCode::kReplayDivergence, "replayed statement failed: " + text + ": " + e->message);
    }
  }
  return db;
}

View expect_view(const ExecResult& result) {
  if (const auto* e = std::get_if<EngineError>(&result)) throw DbError(e->code, e->message);
  if (const auto* v = std::get_if<View>(&result)) return *v;
  throw DbError(ErrorCode::kInternal, "statement returned a row count, not rows");
}

std::uint64_t expect_count(const ExecResult& result) {
  if (const auto* e = std::get_if<EngineError>(&result)) throw DbError(e->code, e->message);
  if (const auto* c = std::get_if<RowCount>(&result)) return c->count;
  throw DbError(ErrorCode::kInternal, "statement returned rows, not a row count");
}

}  // namespace autodb::engine
