#pragma once

// Physical layer: one plain-text meta file and one fixed-width record file
// per table.
//
//   <name>.meta   line-oriented schema:
//                   table <name>
//                   column <name> <INT|STR> <width> <notnull:0|1> <pk:0|1>
//                   check <col> <op> <literal>
//                   index <col>
//   <name>.dat    record_width-byte slots: flag('1' valid, '0' deleted),
//                 the fixed-width fields, then LF.
//
// Record r lives at byte offset r * record_width. Callers hold the table's
// lock (shared for reads, exclusive for writes) around every operation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autodb/sql/ast.hpp"
#include "autodb/value.hpp"

namespace autodb::storage {

inline constexpr int kIntWidth = 20;
inline constexpr int kMaxStrWidth = 4096;

struct TableSchema {
  std::string name;
  std::vector<sql::ColumnDef> columns;  // INT columns carry width kIntWidth
  std::vector<sql::CheckDef> checks;
  std::vector<std::string> indexed_columns;

  std::size_t record_width() const;
  std::size_t field_offset(std::size_t column) const;  // from slot start, flag included
  std::optional<std::size_t> column_index(std::string_view column) const;
  std::optional<std::size_t> primary_key() const;
  bool is_indexed(std::string_view column) const;

  bool operator==(const TableSchema&) const = default;
};

/// Builds a schema from a CREATE TABLE statement and validates it.
TableSchema schema_from(const sql::CreateTable& statement);

/// Throws DbError(kInvalidSchema): empty/duplicate names, STR width outside
/// 1..4096, more than one primary key, checks on unknown columns or with a
/// literal of the wrong type.
void validate_schema(const TableSchema& schema);

std::string render_meta(const TableSchema& schema);
TableSchema parse_meta(std::string_view text);  // throws DbError(kCorruptMeta)

struct RecordSlot {
  bool valid = false;
  std::vector<Value> values;

  bool operator==(const RecordSlot&) const = default;
};

/// Width of a string once escaped for the record file.
std::size_t encoded_length(std::string_view s);

/// Throws kArity, kTypeMismatch or kStringTooLong if `values` cannot be
/// stored under `schema`.
void check_row(const TableSchema& schema, const std::vector<Value>& values);

std::string encode_slot(const TableSchema& schema, const RecordSlot& slot);
RecordSlot decode_slot(const TableSchema& schema, std::string_view bytes);  // throws kDecodeError

/// Owns a POSIX file descriptor.
class FileHandle {
 public:
  FileHandle() = default;
  explicit FileHandle(int fd) : fd_(fd) {}
  FileHandle(FileHandle&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  FileHandle& operator=(FileHandle&& other) noexcept;
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
  ~FileHandle();

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

class Table {
 public:
  Table(TableSchema schema, std::filesystem::path dir, bool sync_writes);

  const TableSchema& schema() const noexcept { return schema_; }
  const std::string& name() const noexcept { return schema_.name; }
  std::shared_mutex& mutex() const noexcept { return mutex_; }
  std::size_t slot_count() const noexcept { return slot_count_; }
  std::filesystem::path data_path() const;
  std::filesystem::path meta_path() const;

  /// Slots [page_no * page_size, ...) up to page_size of them; the last page
  /// may be short. Throws kPageOutOfRange when the page starts past the end.
  std::vector<RecordSlot> read_page(std::size_t page_no, std::size_t page_size) const;
  RecordSlot read_record(std::size_t record_number) const;

  std::size_t append_record(const std::vector<Value>& values);
  void overwrite_record(std::size_t record_number, const std::vector<Value>& values);
  void delete_record(std::size_t record_number);

  /// Visits every valid slot in record order.
  void for_each_valid(const std::function<void(std::size_t, const RecordSlot&)>& fn) const;
  std::size_t valid_count() const;

  void add_indexed_column(const std::string& column);  // rewrites the meta file

 private:
  friend class TableRegistry;
  void open_data_file(bool create);
  void write_meta() const;
  void write_slot(std::size_t record_number, std::string_view bytes);
  char read_flag(std::size_t record_number) const;

  TableSchema schema_;
  std::filesystem::path dir_;
  bool sync_writes_;
  std::size_t width_;
  std::size_t slot_count_ = 0;
  FileHandle fd_;
  mutable std::shared_mutex mutex_;
};

struct StorageOptions {
  // fdatasync after every slot write.
  bool sync_writes = false;
};

/// All tables under one data directory. The table map only changes under
/// exclusive hold of mutex().
class TableRegistry {
 public:
  /// Loads every <name>.meta under `base_dir` and checks that each .dat is a
  /// whole number of slots (kCorruptMeta, kSizeMismatch).
  static std::unique_ptr<TableRegistry> open(const std::filesystem::path& base_dir,
                                             StorageOptions options = {});

  Table& create_table(TableSchema schema);  // kTableExists, kInvalidSchema, kIo
  Table* find(std::string_view name) const;
  Table& get(std::string_view name) const;  // kUnknownTable
  std::vector<std::string> table_names() const;

  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  std::shared_mutex& mutex() const noexcept { return mutex_; }

 private:
  TableRegistry(std::filesystem::path base_dir, StorageOptions options)
      : base_dir_(std::move(base_dir)), options_(options) {}

  std::filesystem::path base_dir_;
  StorageOptions options_;
  std::map<std::string, std::unique_ptr<Table>, std::less<>> tables_;
  mutable std::shared_mutex mutex_;
};

/// Writes `contents` to a sibling temp file, then renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace autodb::storage
