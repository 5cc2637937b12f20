#include "autodb/index/index_manager.hpp"

#include <charconv>
#include <system_error>
#include <unordered_set>

#include "autodb/error.hpp"
#include "autodb/escape.hpp"

namespace fs = std::filesystem;

namespace autodb::index {

namespace {

[[noreturn]] void corrupt(std::size_t line, const std::string& what) {
  throw DbError(ErrorCode::kCorruptIndexFile, "index file line " + std::to_string(line) + ": " + what);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

std::string render_index(const BPlusTree& tree) {
  std::string out;
  tree.for_each([&](const Key& key, const std::vector<RecordNumber>& records) {
    if (const auto* i = std::get_if<std::int64_t>(&key)) {
      out += std::to_string(*i);
    } else {
      out += escape_text(std::get<std::string>(key));
    }
    out += '\t';
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (i > 0) out += ',';
      out += std::to_string(records[i]);
    }
    out += '\n';
  });
  return out;
}

BPlusTree parse_index(std::string_view text, ColumnType type, std::size_t slot_count, std::size_t order) {
  BPlusTree tree(order);
  std::unordered_set<RecordNumber> seen;
  std::optional<Key> previous;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) corrupt(line_no, "missing line terminator");
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl + 1);

    auto tab = line.find('\t');
    if (tab == std::string_view::npos) corrupt(line_no, "missing tab");
    std::string_view key_text = line.substr(0, tab);
    std::string_view list = line.substr(tab + 1);

    Key key;
    if (type == ColumnType::kInt) {
      std::int64_t v = 0;
      if (!parse_number(key_text, v)) corrupt(line_no, "bad INT key");
      key = v;
    } else {
      std::string raw;
      if (!unescape_text(key_text, raw)) corrupt(line_no, "bad escape in key");
      key = std::move(raw);
    }
    if (previous && !(*previous < key)) corrupt(line_no, "keys not in ascending order");

    if (list.empty()) corrupt(line_no, "empty record list");
    while (true) {
      auto comma = list.find(',');
      std::string_view item = list.substr(0, comma);
      RecordNumber r = 0;
      if (!parse_number(item, r)) corrupt(line_no, "bad record number");
      if (r >= slot_count) corrupt(line_no, "record " + std::to_string(r) + " past end of table");
      if (!seen.insert(r).second) corrupt(line_no, "record " + std::to_string(r) + " listed twice");
      tree.insert(key, r);
      if (comma == std::string_view::npos) break;
      list.remove_prefix(comma + 1);
    }
    previous = std::move(key);
  }
  return tree;
}

fs::path index_path(const fs::path& dir, std::string_view table, std::string_view column) {
  return dir / (std::string(table) + "." + std::string(column) + ".idx");
}

void persist(const BPlusTree& tree, const fs::path& path) {
  storage::write_file_atomically(path, render_index(tree));
}

BPlusTree load(const fs::path& path, const storage::Table& table, std::string_view column, std::size_t order) {
  auto idx = table.schema().column_index(column);
  if (!idx) throw DbError(ErrorCode::kUnknownColumn, "no column '" + std::string(column) + "'");
  return parse_index(storage::read_file(path), table.schema().columns[*idx].type, table.slot_count(), order);
}

BPlusTree rebuild(const storage::Table& table, std::string_view column, std::size_t order) {
  auto idx = table.schema().column_index(column);
  if (!idx) {
    throw DbError(ErrorCode::kUnknownColumn,
                  "table '" + table.name() + "' has no column '" + std::string(column) + "'");
  }
  BPlusTree tree(order);
  table.for_each_valid([&](std::size_t r, const storage::RecordSlot& slot) { tree.insert(slot.values[*idx], r); });
  return tree;
}

// ---------------------------------------------------------------------------

LoadSource IndexManager::open(const storage::Table& table, const std::string& column) {
  fs::path path = index_path(table.data_path().parent_path(), table.name(), column);
  std::error_code ec;
  if (fs::exists(path, ec)) {
    try {
      BPlusTree tree = load(path, table, column, order_);
      if (tree.size() == table.valid_count()) {
        std::lock_guard lock(mutex_);
        trees_[{table.name(), column}] = std::make_unique<BPlusTree>(std::move(tree));
        return LoadSource::kFile;
      }
    } catch (const DbError& e) {
      if (e.code() != ErrorCode::kCorruptIndexFile && e.code() != ErrorCode::kIo) throw;
    }
  }
  build(table, column);
  return LoadSource::kRebuilt;
}

void IndexManager::build(const storage::Table& table, const std::string& column) {
  auto tree = std::make_unique<BPlusTree>(rebuild(table, column, order_));
  std::lock_guard lock(mutex_);
  trees_[{table.name(), column}] = std::move(tree);
}

BPlusTree* IndexManager::find(std::string_view table, std::string_view column) {
  std::lock_guard lock(mutex_);
  auto it = trees_.find({std::string(table), std::string(column)});
  return it == trees_.end() ? nullptr : it->second.get();
}

const BPlusTree* IndexManager::find(std::string_view table, std::string_view column) const {
  std::lock_guard lock(mutex_);
  auto it = trees_.find({std::string(table), std::string(column)});
  return it == trees_.end() ? nullptr : it->second.get();
}

std::vector<std::string> IndexManager::columns_of(std::string_view table) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (auto it = trees_.lower_bound({std::string(table), std::string()});
       it != trees_.end() && it->first.first == table; ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

void IndexManager::persist_table(const storage::Table& table) const {
  const fs::path dir = table.data_path().parent_path();
  for (const auto& column : columns_of(table.name())) {
    persist(*find(table.name(), column), index_path(dir, table.name(), column));
  }
}

void IndexManager::persist_all(const storage::TableRegistry& registry) const {
  for (const auto& name : registry.table_names()) persist_table(registry.get(name));
}

void IndexManager::invalidate_files(const storage::Table& table) const {
  const fs::path dir = table.data_path().parent_path();
  for (const auto& column : columns_of(table.name())) {
    std::error_code ec;
    fs::remove(index_path(dir, table.name(), column), ec);
  }
}

}  // namespace autodb::index
