#include "autodb/storage/storage.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "autodb/error.hpp"
#include "autodb/escape.hpp"
#include "autodb/sql/token.hpp"

namespace autodb::storage {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_error(const std::string& what) {
  throw DbError(ErrorCode::kIo, what + ": " + std::strerror(errno));
}

bool valid_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

// Escaped form as stored in a STR field. A trailing space is written as \s
// so that stripping the pad spaces cannot eat it.
std::string encode_string(std::string_view raw) {
  std::string out = escape_text(raw);
  if (!out.empty() && out.back() == ' ') {
    out.pop_back();
    out += "\\s";
  }
  return out;
}

std::vector<std::string> split_spaces(std::string_view line, std::size_t max_parts) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < line.size() && parts.size() + 1 < max_parts) {
    std::size_t j = line.find(' ', i);
    if (j == std::string_view::npos) break;
    parts.emplace_back(line.substr(i, j - i));
    i = j + 1;
  }
  parts.emplace_back(line.substr(i));
  return parts;
}

std::optional<CompareOp> parse_op(std::string_view s) {
  for (auto op : {CompareOp::kEq, CompareOp::kNe, CompareOp::kLt, CompareOp::kLe, CompareOp::kGt,
                  CompareOp::kGe}) {
    if (to_string(op) == s) return op;
  }
  return std::nullopt;
}

std::optional<Value> parse_literal(std::string_view text) {
  std::string raw;
  if (!unescape_text(text, raw)) return std::nullopt;
  try {
    auto toks = sql::tokenize(raw);
    if (toks.size() == 1 && toks[0].kind == sql::TokenKind::kString) return Value(toks[0].text);
    if (toks.size() == 1 && toks[0].kind == sql::TokenKind::kInteger) {
      return Value(std::stoll(toks[0].text));
    }
    if (toks.size() == 2 && toks[0].text == "-" && toks[1].kind == sql::TokenKind::kInteger) {
      return Value(-std::stoll(toks[1].text));
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

void pwrite_all(int fd, std::string_view bytes, off_t offset) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    ssize_t n = ::pwrite(fd, bytes.data() + done, bytes.size() - done,
                         offset + static_cast<off_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("write failed");
    }
    done += static_cast<std::size_t>(n);
  }
}

void pread_all(int fd, char* out, std::size_t len, off_t offset) {
  std::size_t done = 0;
  while (done < len) {
    ssize_t n = ::pread(fd, out + done, len - done, offset + static_cast<off_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("read failed");
    }
    if (n == 0) throw DbError(ErrorCode::kIo, "unexpected end of data file");
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema

std::size_t TableSchema::record_width() const {
  std::size_t w = 2;
  for (const auto& c : columns) w += static_cast<std::size_t>(c.width);
  return w;
}

std::size_t TableSchema::field_offset(std::size_t column) const {
  std::size_t off = 1;
  for (std::size_t i = 0; i < column; ++i) off += static_cast<std::size_t>(columns[i].width);
  return off;
}

std::optional<std::size_t> TableSchema::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> TableSchema::primary_key() const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].primary_key) return i;
  }
  return std::nullopt;
}

bool TableSchema::is_indexed(std::string_view column) const {
  return std::find(indexed_columns.begin(), indexed_columns.end(), column) != indexed_columns.end();
}

TableSchema schema_from(const sql::CreateTable& statement) {
  TableSchema s{statement.name, statement.columns, statement.checks, {}};
  for (auto& c : s.columns) {
    if (c.type == ColumnType::kInt) c.width = kIntWidth;
  }
  validate_schema(s);
  // The primary key is always indexed: uniqueness checks go through it.
  if (auto pk = s.primary_key()) s.indexed_columns.push_back(s.columns[*pk].name);
  return s;
}

void validate_schema(const TableSchema& s) {
  auto invalid = [&](const std::string& what) {
    throw DbError(ErrorCode::kInvalidSchema, "table '" + s.name + "': " + what);
  };
  if (!valid_identifier(s.name)) invalid("invalid table name");
  if (s.columns.empty()) invalid("no columns");
  std::set<std::string> seen;
  int pks = 0;
  for (const auto& c : s.columns) {
    if (!valid_identifier(c.name)) invalid("invalid column name '" + c.name + "'");
    if (!seen.insert(c.name).second) invalid("duplicate column '" + c.name + "'");
    if (c.type == ColumnType::kStr && (c.width < 1 || c.width > kMaxStrWidth)) {
      invalid("column '" + c.name + "' width " + std::to_string(c.width) + " outside 1.." +
              std::to_string(kMaxStrWidth));
    }
    if (c.type == ColumnType::kInt && c.width != kIntWidth) invalid("INT width must be 20");
    if (c.primary_key) ++pks;
  }
  if (pks > 1) invalid("more than one primary key");
  for (const auto& ck : s.checks) {
    auto idx = s.column_index(ck.column);
    if (!idx) invalid("check on unknown column '" + ck.column + "'");
    if (type_of(ck.literal) != s.columns[*idx].type) invalid("check literal type mismatch on '" + ck.column + "'");
  }
  for (const auto& col : s.indexed_columns) {
    if (!s.column_index(col)) invalid("index on unknown column '" + col + "'");
  }
}

std::string render_meta(const TableSchema& s) {
  std::ostringstream out;
  out << "table " << s.name << '\n';
  for (const auto& c : s.columns) {
    out << "column " << c.name << ' ' << to_string(c.type) << ' ' << c.width << ' '
        << (c.not_null ? 1 : 0) << ' ' << (c.primary_key ? 1 : 0) << '\n';
  }
  for (const auto& ck : s.checks) {
    out << "check " << ck.column << ' ' << to_string(ck.op) << ' '
        << escape_text(to_sql_literal(ck.literal)) << '\n';
  }
  for (const auto& col : s.indexed_columns) out << "index " << col << '\n';
  return out.str();
}

TableSchema parse_meta(std::string_view text) {
  TableSchema s;
  std::size_t line_no = 0;
  auto corrupt = [&](const std::string& what) {
    throw DbError(ErrorCode::kCorruptMeta, "meta line " + std::to_string(line_no) + ": " + what);
  };
  std::size_t pos = 0;
  bool have_table = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    auto head = split_spaces(line, 2);
    const std::string& kind = head[0];
    if (kind == "table") {
      if (have_table || head.size() != 2) corrupt("bad table line");
      s.name = head[1];
      have_table = true;
    } else if (kind == "column") {
      auto p = split_spaces(line, 6);
      if (p.size() != 6) corrupt("bad column line");
      sql::ColumnDef c;
      c.name = p[1];
      if (p[2] == "INT") {
        c.type = ColumnType::kInt;
      } else if (p[2] == "STR") {
        c.type = ColumnType::kStr;
      } else {
        corrupt("unknown type " + p[2]);
      }
      auto [ptr, ec] = std::from_chars(p[3].data(), p[3].data() + p[3].size(), c.width);
      if (ec != std::errc() || ptr != p[3].data() + p[3].size()) corrupt("bad width");
      if ((p[4] != "0" && p[4] != "1") || (p[5] != "0" && p[5] != "1")) corrupt("bad flags");
      c.not_null = p[4] == "1";
      c.primary_key = p[5] == "1";
      s.columns.push_back(c);
    } else if (kind == "check") {
      auto p = split_spaces(line, 4);
      if (p.size() != 4) corrupt("bad check line");
      auto op = parse_op(p[2]);
      auto lit = parse_literal(p[3]);
      if (!op || !lit) corrupt("bad check");
      s.checks.push_back(sql::CheckDef{p[1], *op, *lit});
    } else if (kind == "index") {
      if (head.size() != 2) corrupt("bad index line");
      s.indexed_columns.push_back(head[1]);
    } else {
      corrupt("unknown line kind '" + kind + "'");
    }
  }
  if (!have_table) throw DbError(ErrorCode::kCorruptMeta, "meta file has no table line");
  try {
    validate_schema(s);
  } catch (const DbError& e) {
    throw DbError(ErrorCode::kCorruptMeta, e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Record encoding

std::size_t encoded_length(std::string_view s) { return encode_string(s).size(); }

void check_row(const TableSchema& schema, const std::vector<Value>& values) {
  if (values.size() != schema.columns.size()) {
    throw DbError(ErrorCode::kArity, "table '" + schema.name + "' has " +
                                         std::to_string(schema.columns.size()) + " columns, got " +
                                         std::to_string(values.size()) + " values");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& col = schema.columns[i];
    if (type_of(values[i]) != col.type) {
      throw DbError(ErrorCode::kTypeMismatch, "column '" + col.name + "' expects " +
                                                  std::string(to_string(col.type)));
    }
    if (col.type == ColumnType::kStr) {
      std::size_t len = encoded_length(std::get<std::string>(values[i]));
      if (len > static_cast<std::size_t>(col.width)) {
        throw DbError(ErrorCode::kStringTooLong, "value for '" + col.name + "' needs " +
                                                     std::to_string(len) + " bytes, width is " +
                                                     std::to_string(col.width));
      }
    }
  }
}

std::string encode_slot(const TableSchema& schema, const RecordSlot& slot) {
  check_row(schema, slot.values);
  std::string out;
  out.reserve(schema.record_width());
  out += slot.valid ? '1' : '0';
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    const auto width = static_cast<std::size_t>(schema.columns[i].width);
    if (const auto* v = std::get_if<std::int64_t>(&slot.values[i])) {
      std::string digits = std::to_string(*v);
      out.append(width - digits.size(), ' ');
      out += digits;
    } else {
      std::string enc = encode_string(std::get<std::string>(slot.values[i]));
      out += enc;
      out.append(width - enc.size(), ' ');
    }
  }
  out += '\n';
  return out;
}

RecordSlot decode_slot(const TableSchema& schema, std::string_view bytes) {
  auto bad = [&](const std::string& what) -> RecordSlot {
    throw DbError(ErrorCode::kDecodeError, "table '" + schema.name + "': " + what);
  };
  if (bytes.size() != schema.record_width()) return bad("slot has wrong width");
  if (bytes.back() != '\n') return bad("slot not newline-terminated");
  RecordSlot slot;
  if (bytes[0] == '1') {
    slot.valid = true;
  } else if (bytes[0] != '0') {
    return bad("invalid flag byte");
  }
  std::size_t off = 1;
  slot.values.reserve(schema.columns.size());
  for (const auto& col : schema.columns) {
    std::string_view field = bytes.substr(off, static_cast<std::size_t>(col.width));
    off += static_cast<std::size_t>(col.width);
    if (col.type == ColumnType::kInt) {
      std::size_t start = field.find_first_not_of(' ');
      if (start == std::string_view::npos) return bad("empty INT field '" + col.name + "'");
      std::string_view digits = field.substr(start);
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc() || p != digits.data() + digits.size()) {
        return bad("malformed INT field '" + col.name + "'");
      }
      slot.values.emplace_back(v);
    } else {
      std::size_t end = field.find_last_not_of(' ');
      std::string_view enc = end == std::string_view::npos ? std::string_view{} : field.substr(0, end + 1);
      std::string raw;
      if (!unescape_text(enc, raw)) return bad("malformed escape in '" + col.name + "'");
      slot.values.emplace_back(std::move(raw));
    }
  }
  return slot;
}

// ---------------------------------------------------------------------------
// Files

FileHandle& FileHandle::operator=(FileHandle&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

FileHandle::~FileHandle() {
  if (fd_ >= 0) ::close(fd_);
}

void write_file_atomically(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DbError(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DbError(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DbError(ErrorCode::kIo, "rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DbError(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Table

Table::Table(TableSchema schema, fs::path dir, bool sync_writes)
    : schema_(std::move(schema)),
      dir_(std::move(dir)),
      sync_writes_(sync_writes),
      width_(schema_.record_width()) {}

fs::path Table::data_path() const { return dir_ / (schema_.name + ".dat"); }
fs::path Table::meta_path() const { return dir_ / (schema_.name + ".meta"); }

void Table::open_data_file(bool create) {
  int flags = O_RDWR | O_CLOEXEC;
  if (create) flags |= O_CREAT | O_TRUNC;
  int fd = ::open(data_path().c_str(), flags, 0644);
  if (fd < 0) {
    if (!create && errno == ENOENT) {
      throw DbError(ErrorCode::kCorruptMeta, "table '" + schema_.name + "' has no data file");
    }
    io_error("open " + data_path().string());
  }
  fd_ = FileHandle(fd);
  struct stat st {};
  if (::fstat(fd, &st) != 0) io_error("stat " + data_path().string());
  auto size = static_cast<std::size_t>(st.st_size);
  if (size % width_ != 0) {
    throw DbError(ErrorCode::kSizeMismatch,
                  "table '" + schema_.name + "': data file length " + std::to_string(size) +
                      " is not a multiple of record width " + std::to_string(width_));
  }
  slot_count_ = size / width_;
}

void Table::write_meta() const { write_file_atomically(meta_path(), render_meta(schema_)); }

void Table::write_slot(std::size_t record_number, std::string_view bytes) {
  pwrite_all(fd_.get(), bytes, static_cast<off_t>(record_number * width_));
  if (sync_writes_ && ::fdatasync(fd_.get()) != 0) io_error("fdatasync");
}

char Table::read_flag(std::size_t record_number) const {
  char flag = 0;
  pread_all(fd_.get(), &flag, 1, static_cast<off_t>(record_number * width_));
  return flag;
}

std::vector<RecordSlot> Table::read_page(std::size_t page_no, std::size_t page_size) const {
  if (page_size == 0 || page_no * page_size >= slot_count_) {
    throw DbError(ErrorCode::kPageOutOfRange,
                  "table '" + schema_.name + "': page " + std::to_string(page_no) + " of size " +
                      std::to_string(page_size) + " is past " + std::to_string(slot_count_) +
                      " records");
  }
  const std::size_t first = page_no * page_size;
  const std::size_t count = std::min(page_size, slot_count_ - first);
  std::string buf(count * width_, '\0');
  pread_all(fd_.get(), buf.data(), buf.size(), static_cast<off_t>(first * width_));
  std::vector<RecordSlot> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(decode_slot(schema_, std::string_view(buf).substr(i * width_, width_)));
  }
  return out;
}

RecordSlot Table::read_record(std::size_t record_number) const {
  if (record_number >= slot_count_) {
    throw DbError(ErrorCode::kNoSuchRecord, "table '" + schema_.name + "' has no record " +
                                                std::to_string(record_number));
  }
  return read_page(record_number, 1).front();
}

std::size_t Table::append_record(const std::vector<Value>& values) {
  std::string bytes = encode_slot(schema_, RecordSlot{true, values});
  write_slot(slot_count_, bytes);
  return slot_count_++;
}

void Table::overwrite_record(std::size_t record_number, const std::vector<Value>& values) {
  if (record_number >= slot_count_) {
    throw DbError(ErrorCode::kNoSuchRecord, "table '" + schema_.name + "' has no record " +
                                                std::to_string(record_number));
  }
  if (read_flag(record_number) != '1') {
    throw DbError(ErrorCode::kDeletedRecord, "record " + std::to_string(record_number) + " of '" +
                                                 schema_.name + "' is deleted");
  }
  write_slot(record_number, encode_slot(schema_, RecordSlot{true, values}));
}

void Table::delete_record(std::size_t record_number) {
  if (record_number >= slot_count_) {
    throw DbError(ErrorCode::kNoSuchRecord, "table '" + schema_.name + "' has no record " +
                                                std::to_string(record_number));
  }
  if (read_flag(record_number) != '1') {
    throw DbError(ErrorCode::kDeletedRecord, "record " + std::to_string(record_number) + " of '" +
                                                 schema_.name + "' is already deleted");
  }
  write_slot(record_number, "0");
}

void Table::for_each_valid(const std::function<void(std::size_t, const RecordSlot&)>& fn) const {
  constexpr std::size_t kChunk = 256;
  for (std::size_t page = 0; page * kChunk < slot_count_; ++page) {
    auto slots = read_page(page, kChunk);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i].valid) fn(page * kChunk + i, slots[i]);
    }
  }
}

std::size_t Table::valid_count() const {
  std::size_t n = 0;
  for_each_valid([&](std::size_t, const RecordSlot&) { ++n; });
  return n;
}

void Table::add_indexed_column(const std::string& column) {
  if (!schema_.column_index(column)) {
    throw DbError(ErrorCode::kUnknownColumn, "table '" + schema_.name + "' has no column '" + column + "'");
  }
  if (schema_.is_indexed(column)) return;
  schema_.indexed_columns.push_back(column);
  write_meta();
}

// ---------------------------------------------------------------------------
// Registry

std::unique_ptr<TableRegistry> TableRegistry::open(const fs::path& base_dir, StorageOptions options) {
  std::error_code ec;
  if (!fs::is_directory(base_dir, ec)) {
    throw DbError(ErrorCode::kIo, "data directory " + base_dir.string() + " does not exist");
  }
  std::unique_ptr<TableRegistry> reg(new TableRegistry(base_dir, options));
  for (const auto& entry : fs::directory_iterator(base_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".meta") continue;
    TableSchema schema = parse_meta(read_file(entry.path()));
    if (schema.name != entry.path().stem().string()) {
      throw DbError(ErrorCode::kCorruptMeta, entry.path().string() + " describes table '" + schema.name + "'");
    }
    auto table = std::make_unique<Table>(std::move(schema), base_dir, options.sync_writes);
    table->open_data_file(false);
    std::string name = table->name();
    reg->tables_.emplace(std::move(name), std::move(table));
  }
  return reg;
}

Table& TableRegistry::create_table(TableSchema schema) {
  validate_schema(schema);
  if (tables_.count(schema.name) != 0) {
    throw DbError(ErrorCode::kTableExists, "table '" + schema.name + "' already exists");
  }
  auto table = std::make_unique<Table>(std::move(schema), base_dir_, options_.sync_writes);
  table->open_data_file(true);
  table->write_meta();
  Table& ref = *table;
  tables_.emplace(ref.name(), std::move(table));
  return ref;
}

Table* TableRegistry::find(std::string_view name) const {
  auto it = tables_.find(name);
  return it == tables_.end() ? nullptr : it->second.get();
}

Table& TableRegistry::get(std::string_view name) const {
  Table* t = find(name);
  if (t == nullptr) throw DbError(ErrorCode::kUnknownTable, "no table '" + std::string(name) + "'");
  return *t;
}

std::vector<std::string> TableRegistry::table_names() const {
  std::vector<std::string> out;
  for (const auto& [name, t] : tables_) out.push_back(name);
  return out;
}

}  // namespace autodb::storage
