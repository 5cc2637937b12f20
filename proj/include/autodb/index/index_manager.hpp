#pragma once

// Index files: `<table>.<column>.idx`, one line per key,
//   key<TAB>recno[,recno...]
// keys ascending, STR keys escaped like the record file.

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autodb/index/bplus_tree.hpp"
#include "autodb/storage/storage.hpp"

namespace autodb::index {

std::string render_index(const BPlusTree& tree);

/// Parses index file text for a column of type `type`. Throws
/// DbError(kCorruptIndexFile) on malformed lines, unsorted keys, record
/// numbers >= slot_count, or a record number listed twice.
BPlusTree parse_index(std::string_view text, ColumnType type, std::size_t slot_count,
                      std::size_t order = BPlusTree::kDefaultOrder);

std::filesystem::path index_path(const std::filesystem::path& dir, std::string_view table,
                                 std::string_view column);

void persist(const BPlusTree& tree, const std::filesystem::path& path);
BPlusTree load(const std::filesystem::path& path, const storage::Table& table, std::string_view column,
               std::size_t order = BPlusTree::kDefaultOrder);

/// Full scan of the valid slots of `table`.
BPlusTree rebuild(const storage::Table& table, std::string_view column,
                  std::size_t order = BPlusTree::kDefaultOrder);

enum class LoadSource { kFile, kRebuilt };

/// Trees for every (table, column) index of one database. Reads of a tree
/// happen under the table's shared lock, mutations under its exclusive lock;
/// the manager's own mutex only guards the map.
class IndexManager {
 public:
  explicit IndexManager(std::size_t order = BPlusTree::kDefaultOrder) : order_(order) {}

  std::size_t order() const noexcept { return order_; }

  /// Loads the index file when it exists and validates; otherwise rebuilds
  /// from the table. A loaded file must also cover exactly the table's
  /// valid slots.
  LoadSource open(const storage::Table& table, const std::string& column);
  void build(const storage::Table& table, const std::string& column);  // always rebuilds

  BPlusTree* find(std::string_view table, std::string_view column);
  const BPlusTree* find(std::string_view table, std::string_view column) const;
  std::vector<std::string> columns_of(std::string_view table) const;

  void persist_table(const storage::Table& table) const;
  void persist_all(const storage::TableRegistry& registry) const;
  /// Removes the table's index files so that a crash before the next persist
  /// forces a rebuild instead of loading a stale mapping.
  void invalidate_files(const storage::Table& table) const;

 private:
  using TreeId = std::pair<std::string, std::string>;

  std::size_t order_;
  mutable std::mutex mutex_;
  std::map<TreeId, std::unique_ptr<BPlusTree>> trees_;
};

/// (key, record list) pairs in key order; the mapping two trees must agree on.
using Mapping = std::vector<std::pair<Key, std::vector<RecordNumber>>>;
inline Mapping mapping_of(const BPlusTree& tree) { return tree.entries(); }

}  // namespace autodb::index
