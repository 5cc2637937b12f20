#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <shared_mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "autodb/error.hpp"
#include "autodb/sql/parser.hpp"
#include "autodb/storage/storage.hpp"
#include "test_support.hpp"

using namespace autodb;
using namespace autodb::storage;
using autodb::testing::TempDir;

namespace {

TableSchema schema_of(const std::string& create) {
  return schema_from(std::get<sql::CreateTable>(sql::parse(create)));
}

TableSchema course_schema() {
  return schema_of("create table course (id int primary key, name str(32), capacity int, check capacity >= 0)");
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const DbError& e) {
    return e.code();
  }
  FAIL("expected a DbError");
  return ErrorCode::kInternal;
}

// Hand-built slot bytes: flag, INT right-aligned in 20, STR escaped and left
// aligned in its width, LF.
std::string expected_slot(const TableSchema& s, const std::vector<Value>& values, bool valid = true) {
  std::string out(1, valid ? '1' : '0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int w = s.columns[i].width;
    std::string field;
    if (const auto* n = std::get_if<std::int64_t>(&values[i])) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%*lld", w, static_cast<long long>(*n));
      field = buf;
    } else {
      for (char c : std::get<std::string>(values[i])) {
        if (c == '\\') field += "\\\\";
        else if (c == '\n') field += "\\n";
        else if (c == '\t') field += "\\t";
        else field += c;
      }
      if (!field.empty() && field.back() == ' ') field.replace(field.size() - 1, 1, "\\s");
      field.resize(static_cast<std::size_t>(w), ' ');
    }
    out += field;
  }
  out += '\n';
  return out;
}

std::string random_text(std::mt19937& rng, std::size_t max_len) {
  static const std::string alphabet = "abcXYZ019 _-'\\\t\n";
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s(len(rng), ' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("course schema width and meta") {
  TableSchema s = course_schema();
  CHECK(s.record_width() == 74);
  CHECK(s.field_offset(0) == 1);
  CHECK(s.field_offset(1) == 21);
  CHECK(s.field_offset(2) == 53);
  CHECK(s.primary_key() == 0u);
  CHECK(s.is_indexed("id"));

  std::string meta = render_meta(s);
  std::istringstream in(meta);
  int columns = 0, checks = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("column ", 0) == 0) ++columns;
    if (line.rfind("check ", 0) == 0) ++checks;
  }
  CHECK(columns == 3);
  CHECK(checks == 1);
  CHECK(meta.find("column name STR 32 0 0\n") != std::string::npos);
  CHECK(parse_meta(meta) == s);
}

TEST_CASE("meta round trip with awkward check literals") {
  TableSchema s = schema_of("create table t (a str(8) not null, b int, check a != 'x y''z', check b > -5)");
  CHECK(parse_meta(render_meta(s)) == s);
  CHECK(code_of([] { parse_meta("table t\ncolumn a FLOAT 3 0 0\n"); }) == ErrorCode::kCorruptMeta);
  CHECK(code_of([] { parse_meta("column a INT 20 0 0\n"); }) == ErrorCode::kCorruptMeta);
}

TEST_CASE("schema validation") {
  CHECK(code_of([] { schema_of("create table t (a str(0))"); }) == ErrorCode::kInvalidSchema);
  CHECK(code_of([] { schema_of("create table t (a str(5000))"); }) == ErrorCode::kInvalidSchema);
  CHECK(code_of([] { schema_of("create table t (a int, a int)"); }) == ErrorCode::kInvalidSchema);
  CHECK(code_of([] { schema_of("create table t (a int primary key, b int primary key)"); }) ==
        ErrorCode::kInvalidSchema);
  CHECK(code_of([] { schema_of("create table t (a int, check b > 0)"); }) == ErrorCode::kInvalidSchema);
  CHECK(code_of([] { schema_of("create table t (a int, check a > 'x')"); }) == ErrorCode::kInvalidSchema);
}

TEST_CASE("slot encoding matches the hand-built layout") {
  TableSchema s = course_schema();
  std::vector<Value> row{std::int64_t{7}, std::string("OS"), std::int64_t{50}};
  CHECK(encode_slot(s, {true, row}) == expected_slot(s, row));
  CHECK(decode_slot(s, expected_slot(s, row)) == RecordSlot{true, row});
  CHECK(decode_slot(s, expected_slot(s, row, false)).valid == false);

  std::string bad = expected_slot(s, row);
  bad[0] = 'x';
  CHECK(code_of([&] { decode_slot(s, bad); }) == ErrorCode::kDecodeError);
  CHECK(code_of([&] { check_row(s, {std::int64_t{1}}); }) == ErrorCode::kArity);
  CHECK(code_of([&] { check_row(s, {std::int64_t{1}, std::int64_t{2}, std::int64_t{3}}); }) ==
        ErrorCode::kTypeMismatch);
}

TEST_CASE("random rows survive encode and decode") {
  TableSchema s = schema_of("create table r (k int, a str(12), b str(3))");
  std::mt19937 rng(11);
  std::uniform_int_distribution<std::int64_t> num(INT64_MIN, INT64_MAX);
  int tested = 0;
  for (int i = 0; i < 2000; ++i) {
    std::vector<Value> row{num(rng), random_text(rng, 12), random_text(rng, 3)};
    bool fits = encoded_length(std::get<std::string>(row[1])) <= 12 &&
                encoded_length(std::get<std::string>(row[2])) <= 3;
    if (!fits) {
      CHECK(code_of([&] { check_row(s, row); }) == ErrorCode::kStringTooLong);
      continue;
    }
    ++tested;
    std::string bytes = encode_slot(s, {true, row});
    REQUIRE(bytes == expected_slot(s, row));
    REQUIRE(decode_slot(s, bytes) == RecordSlot{true, row});
  }
  CHECK(tested > 200);
}

TEST_CASE("create, append, page reads") {
  TempDir dir;
  auto reg = TableRegistry::open(dir.path());
  Table& t = reg->create_table(course_schema());
  CHECK(std::filesystem::exists(dir / "course.meta"));
  CHECK(std::filesystem::file_size(dir / "course.dat") == 0);
  CHECK(code_of([&] { reg->create_table(course_schema()); }) == ErrorCode::kTableExists);

  for (std::int64_t i = 0; i < 10; ++i) {
    CHECK(t.append_record({i, std::string("c") + std::to_string(i), i * 10}) == static_cast<std::size_t>(i));
  }
  auto page = t.read_page(2, 4);
  REQUIRE(page.size() == 2);
  CHECK(page[0].values[0] == Value(std::int64_t{8}));
  CHECK(page[1].values[0] == Value(std::int64_t{9}));
  CHECK(t.read_page(0, 4).size() == 4);
  CHECK(code_of([&] { t.read_page(3, 4); }) == ErrorCode::kPageOutOfRange);
  CHECK(code_of([&] { t.append_record({std::int64_t{1}, std::string(33, 'x'), std::int64_t{0}}); }) ==
        ErrorCode::kStringTooLong);
}

TEST_CASE("fixed addressing after many appends") {
  TempDir dir;
  auto reg = TableRegistry::open(dir.path());
  Table& t = reg->create_table(course_schema());
  for (std::int64_t i = 0; i < 1000; ++i) {
    REQUIRE(t.append_record({i, std::string("n") + std::to_string(i), i}) == static_cast<std::size_t>(i));
  }
  CHECK(std::filesystem::file_size(dir / "course.dat") == 1000 * 74);

  std::ifstream raw(dir / "course.dat", std::ios::binary);
  std::mt19937 rng(3);
  std::uniform_int_distribution<std::int64_t> pick(0, 999);
  for (int k = 0; k < 50; ++k) {
    std::int64_t r = pick(rng);
    std::string bytes(74, '\0');
    raw.seekg(r * 74);
    raw.read(bytes.data(), 74);
    CHECK(decode_slot(t.schema(), bytes).values[0] == Value(r));
  }
}

TEST_CASE("overwrite and delete keep record numbers") {
  TempDir dir;
  auto reg = TableRegistry::open(dir.path());
  Table& t = reg->create_table(course_schema());
  for (std::int64_t i = 0; i < 3; ++i) t.append_record({i, std::string("c"), std::int64_t{50}});
  auto size_before = std::filesystem::file_size(dir / "course.dat");

  t.overwrite_record(0, {std::int64_t{0}, std::string("c"), std::int64_t{49}});
  CHECK(t.read_page(0, 4)[0].values[2] == Value(std::int64_t{49}));
  CHECK(std::filesystem::file_size(dir / "course.dat") == size_before);
  CHECK(code_of([&] { t.overwrite_record(5, {std::int64_t{0}, std::string("c"), std::int64_t{1}}); }) ==
        ErrorCode::kNoSuchRecord);

  auto r0 = t.read_record(0), r2 = t.read_record(2);
  CHECK(t.valid_count() == 3);
  t.delete_record(1);
  CHECK(t.read_record(0) == r0);
  CHECK(t.read_record(2) == r2);
  CHECK_FALSE(t.read_record(1).valid);
  CHECK(t.valid_count() == 2);
  CHECK(code_of([&] { t.delete_record(1); }) == ErrorCode::kDeletedRecord);
  CHECK(code_of([&] { t.overwrite_record(1, {std::int64_t{1}, std::string("c"), std::int64_t{1}}); }) ==
        ErrorCode::kDeletedRecord);

  std::vector<std::size_t> seen;
  t.for_each_valid([&](std::size_t r, const RecordSlot&) { seen.push_back(r); });
  CHECK(seen == std::vector<std::size_t>{0, 2});
}

TEST_CASE("reopen sees every mutation") {
  TempDir dir;
  std::vector<RecordSlot> before;
  {
    auto reg = TableRegistry::open(dir.path());
    Table& t = reg->create_table(course_schema());
    t.append_record({std::int64_t{1}, std::string("trailing "), std::int64_t{5}});
    t.append_record({std::int64_t{2}, std::string("tab\there"), std::int64_t{6}});
    t.delete_record(0);
    t.add_indexed_column("capacity");
    before = t.read_page(0, 8);
  }
  auto reg = TableRegistry::open(dir.path());
  CHECK(reg->table_names() == std::vector<std::string>{"course"});
  Table& t = reg->get("course");
  CHECK(t.read_page(0, 8) == before);
  CHECK(t.schema().is_indexed("capacity"));
  CHECK(std::get<std::string>(t.read_record(1).values[1]) == "tab\there");
  CHECK(code_of([&] { reg->get("nope"); }) == ErrorCode::kUnknownTable);
}

TEST_CASE("open rejects damaged directories") {
  SUBCASE("empty") {
    TempDir dir;
    CHECK(TableRegistry::open(dir.path())->table_names().empty());
  }
  SUBCASE("missing directory") {
    TempDir dir;
    CHECK(code_of([&] { TableRegistry::open(dir / "absent"); }) == ErrorCode::kIo);
  }
  SUBCASE("truncated slot") {
    TempDir dir;
    {
      auto reg = TableRegistry::open(dir.path());
      Table& t = reg->create_table(course_schema());
      t.append_record({std::int64_t{1}, std::string("x"), std::int64_t{1}});
    }
    std::filesystem::resize_file(dir / "course.dat", 73);
    try {
      TableRegistry::open(dir.path());
      FAIL("expected SizeMismatch");
    } catch (const DbError& e) {
      CHECK(e.code() == ErrorCode::kSizeMismatch);
      CHECK(std::string(e.what()).find("course") != std::string::npos);
    }
  }
  SUBCASE("garbage meta") {
    TempDir dir;
    std::ofstream(dir / "bad.meta") << "hello\n";
    CHECK(code_of([&] { TableRegistry::open(dir.path()); }) == ErrorCode::kCorruptMeta);
  }
}

TEST_CASE("readers never observe a torn slot") {
  TempDir dir;
  auto reg = TableRegistry::open(dir.path());
  Table& t = reg->create_table(schema_of("create table w (a int, s str(64))"));
  for (int i = 0; i < 8; ++i) t.append_record({std::int64_t{0}, std::string(64, 'a')});

  std::atomic<bool> stop{false};
  std::atomic<int> bad{0}, reads{0};
  std::vector<std::thread> readers;
  for (int k = 0; k < 3; ++k) {
    readers.emplace_back([&] {
      while (!stop) {
        {
          std::shared_lock lock(t.mutex());
          for (const auto& slot : t.read_page(0, 8)) {
            // the writer keeps s as 64 copies of the letter a selects
            const auto& s = std::get<std::string>(slot.values[1]);
            char c = static_cast<char>('a' + std::get<std::int64_t>(slot.values[0]) % 26);
            if (s != std::string(64, c)) ++bad;
          }
        }
        ++reads;
        std::this_thread::yield();  // shared_mutex may prefer readers
      }
    });
  }
  for (std::int64_t v = 1; v < 400; ++v) {
    {
      std::unique_lock lock(t.mutex());
      t.overwrite_record(static_cast<std::size_t>(v % 8), {v, std::string(64, static_cast<char>('a' + v % 26))});
    }
    std::this_thread::yield();
  }
  while (reads < 400) std::this_thread::yield();
  stop = true;
  for (auto& r : readers) r.join();
  CHECK(bad == 0);
  MESSAGE(reads.load() << " page reads");
}
