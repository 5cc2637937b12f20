#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "autodb/cache/cache.hpp"
#include "autodb/engine/statement_log.hpp"
#include "autodb/engine/view.hpp"
#include "autodb/index/index_manager.hpp"
#include "autodb/sql/ast.hpp"
#include "autodb/storage/storage.hpp"

namespace autodb::engine {

struct EngineConfig {
  cache::CacheConfig cache;
  std::size_t index_order = index::BPlusTree::kDefaultOrder;
  std::optional<std::size_t> step_limit;  // parser automaton bound
  bool sync_writes = false;
  std::filesystem::path log_path;  // empty: no statement log
};

enum class PlanKind { kScan, kIndexEq, kIndexRange, kView };

struct Plan {
  PlanKind kind = PlanKind::kScan;
  std::string column;  // indexed column used, if any
};

class Database {
 public:
  /// Opens every table under `dir` and loads (or rebuilds) every index.
  static std::unique_ptr<Database> open(const std::filesystem::path& dir, EngineConfig config = {});

  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;
  ~Database();

  /// Parses and executes one statement. Never throws for statement-level
  /// failures; they come back as EngineError.
  ExecResult execute_sql(std::string_view text);
  /// `text` is what the statement log records.
  ExecResult execute(const sql::Statement& statement, std::string_view text);

  /// Which access path a SELECT over a base table would take.
  Plan plan_for(const sql::Select& select) const;
  /// Ignore indexes when reading (tests compare both paths).
  void set_force_scan(bool on) noexcept { force_scan_ = on; }

  /// Writes every index file.
  void checkpoint();
  /// Checkpoints and closes the log. Further statements fail.
  void close();
  bool closed() const noexcept { return closed_; }

  const EngineConfig& config() const noexcept { return config_; }
  storage::TableRegistry& registry() noexcept { return *registry_; }
  cache::CacheManager& caches() noexcept { return caches_; }
  index::IndexManager& indexes() noexcept { return indexes_; }
  const std::filesystem::path& dir() const noexcept { return registry_->base_dir(); }

 private:
  Database(std::unique_ptr<storage::TableRegistry> registry, EngineConfig config);

  View run_select(const sql::Select& select);
  View select_base(storage::Table& table, const sql::Select& select);
  struct Match {
    std::size_t record;
    std::vector<Value> values;
  };
  // Valid rows satisfying `where`, in record order. Caller holds the table lock.
  std::vector<Match> matching_rows(storage::Table& table, const std::optional<sql::Predicate>& where);
  std::uint64_t run_insert(const sql::Insert& insert, std::string_view text);
  std::uint64_t run_update(const sql::Update& update, std::string_view text);
  std::uint64_t run_delete(const sql::Delete& del, std::string_view text);
  void run_create_table(const sql::CreateTable& create, std::string_view text);
  void run_create_index(const sql::CreateIndex& create, std::string_view text);
  void before_first_write(storage::Table& table);

  EngineConfig config_;
  std::unique_ptr<storage::TableRegistry> registry_;
  cache::CacheManager caches_;
  index::IndexManager indexes_;
  std::unique_ptr<StatementLog> log_;
  std::atomic<bool> force_scan_{false};
  std::atomic<bool> closed_{false};
  std::mutex close_mutex_;
  // Tables whose index files match memory; the first write removes them.
  std::mutex files_mutex_;
  std::map<std::string, bool, std::less<>> index_files_current_;
};

/// Re-executes the committed statements of the log at `log_path` against the
/// database at `dir` (normally fresh). Throws kLogCorrupt, or
/// kReplayDivergence naming the first statement that fails.
std::unique_ptr<Database> replay_log(const std::filesystem::path& log_path, const std::filesystem::path& dir,
                                     EngineConfig config = {});

/// Convenience for tests and tools: the View or a thrown DbError.
View expect_view(const ExecResult& result);
std::uint64_t expect_count(const ExecResult& result);

}  // namespace autodb::engine
