#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "autodb/engine/constraints.hpp"
#include "autodb/engine/database.hpp"
#include "autodb/error.hpp"
#include "autodb/sql/parser.hpp"
#include "test_support.hpp"

using namespace autodb;
using namespace autodb::engine;
using autodb::testing::TempDir;
namespace fs = std::filesystem;

namespace {

using Rows = std::vector<std::vector<Value>>;

Rows sorted(Rows rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

Rows query(Database& db, const std::string& sql) { return expect_view(db.execute_sql(sql)).rows; }

void run(Database& db, const std::string& sql) {
  auto r = db.execute_sql(sql);
  if (const auto* e = std::get_if<EngineError>(&r)) FAIL(sql << " -> " << e->message);
}

ErrorCode error_of(Database& db, const std::string& sql) {
  auto r = db.execute_sql(sql);
  const auto* e = std::get_if<EngineError>(&r);
  REQUIRE_MESSAGE(e != nullptr, sql);
  return e->code;
}

Value I(std::int64_t v) { return Value(v); }
Value S(std::string v) { return Value(std::move(v)); }

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::map<std::string, std::string> dir_snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".log") out[e.path().filename().string()] = file_bytes(e.path());
  }
  return out;
}

void make_course(Database& db) {
  run(db, "create table course (id int primary key, name str(32), capacity int, check capacity >= 0)");
}

}  // namespace

TEST_CASE("subquery over TA equals the flattened query") {
  TempDir dir;
  auto db = Database::open(dir.path());
  run(*db, "create table TA (c1 int, c2 str(8), c3 int)");
  run(*db, "insert into TA values (1, 'a', 10)");
  run(*db, "insert into TA values (2, 'b', 20)");
  View v = expect_view(db->execute_sql("select c1,c2 from (select * from TA) as tmp"));
  CHECK(v.columns == std::vector<ViewColumn>{{"c1", ColumnType::kInt}, {"c2", ColumnType::kStr}});
  CHECK(v.rows == Rows{{I(1), S("a")}, {I(2), S("b")}});
  CHECK(v == expect_view(db->execute_sql("select c1,c2 from TA")));
}

TEST_CASE("randomized subquery equivalence") {
  std::mt19937 rng(10);
  for (int instance = 0; instance < 25; ++instance) {
    TempDir dir;
    auto db = Database::open(dir.path(), EngineConfig{{3, 2, cache::Policy::kLru}});
    run(*db, "create table TA (c1 int, c2 str(8), c3 int)");
    Rows expected_all, expected_filtered;
    int n = static_cast<int>(rng() % 30);
    std::int64_t cut = static_cast<std::int64_t>(rng() % 50);
    for (int i = 0; i < n; ++i) {
      std::int64_t c1 = rng() % 50, c3 = rng() % 1000;
      std::string c2 = "s" + std::to_string(rng() % 7);
      run(*db, "insert into TA values (" + std::to_string(c1) + ", '" + c2 + "', " + std::to_string(c3) + ")");
      expected_all.push_back({I(c1), S(c2)});
      if (c1 < cut) expected_filtered.push_back({I(c1), S(c2)});
    }
    CHECK(sorted(query(*db, "select c1,c2 from (select * from TA) as tmp")) == sorted(expected_all));
    CHECK(sorted(query(*db, "select c1,c2 from (select * from TA) as tmp where c1 < " + std::to_string(cut))) ==
          sorted(expected_filtered));
    CHECK(sorted(query(*db, "select c1,c2 from (select c1,c2,c3 from (select * from TA) x) y")) ==
          sorted(expected_all));
  }
}

TEST_CASE("capacity check stops the decrement at zero") {
  TempDir dir;
  auto db = Database::open(dir.path());
  make_course(*db);
  run(*db, "insert into course values (7, 'OS', 1)");
  CHECK(expect_count(db->execute_sql("update course set capacity = capacity - 1 where id = 7")) == 1);
  auto r = db->execute_sql("update course set capacity = capacity - 1 where id = 7");
  REQUIRE(is_error(r));
  CHECK(std::get<EngineError>(r).code == ErrorCode::kConstraint);
  CHECK(std::get<EngineError>(r).message.find("capacity") != std::string::npos);
  CHECK(query(*db, "select capacity from course where id = 7") == Rows{{I(0)}});
}

TEST_CASE("constraint strategies") {
  TempDir dir;
  auto db = Database::open(dir.path());
  run(*db, "create table student (sid str(10) primary key, name str(4) not null, age int, check age > 0)");
  run(*db, "insert into student values ('s1', 'ann', 20)");
  CHECK(error_of(*db, "insert into student values ('', 'bob', 20)") == ErrorCode::kConstraint);
  CHECK(error_of(*db, "insert into student values ('s1', 'bob', 20)") == ErrorCode::kConstraint);
  CHECK(error_of(*db, "insert into student values ('s2', 'bob', 20, 1)") == ErrorCode::kArity);
  CHECK(error_of(*db, "insert into student values ('s2', 5, 20)") == ErrorCode::kTypeMismatch);
  run(*db, "insert into student values ('s2', 'bob', 20)");

  auto& table = db->registry().get("student");
  auto checker = ConstraintChecker::for_schema(table.schema());
  auto none = [](std::size_t, const Value&) { return std::vector<std::size_t>{}; };
  auto taken = [](std::size_t, const Value& v) {
    return v == Value(std::string("s1")) ? std::vector<std::size_t>{0} : std::vector<std::size_t>{};
  };
  CHECK(checker.evaluate({{{S("x"), S("y"), I(3)}, {}}}, none).empty());
  // every failure is reported, not just the first
  auto v = checker.evaluate({{{S("s1"), S(""), I(0)}, {}}, {{S("s9"), S("toolong"), I(5)}, {}}}, taken);
  std::vector<std::string> kinds;
  for (const auto& x : v) kinds.push_back(x.strategy + ":" + x.column);
  std::sort(kinds.begin(), kinds.end());
  CHECK(kinds == std::vector<std::string>{"check:age", "not-null:name", "unique:sid", "width:name"});
  // replacing the holder of a key frees it
  CHECK(checker.evaluate({{{S("s1"), S("z"), I(1)}, 0}}, taken).empty());
  CHECK(checker.evaluate({{{S("q"), S("z"), I(1)}, {}}, {{S("q"), S("w"), I(1)}, {}}}, none).size() == 1);
}

TEST_CASE("primary key updates check against the final state") {
  TempDir dir;
  auto db = Database::open(dir.path(), EngineConfig{{}, 3});
  run(*db, "create table t (id int primary key, v int)");
  for (int i = 1; i <= 5; ++i) run(*db, "insert into t values (" + std::to_string(i) + ", 0)");
  CHECK(expect_count(db->execute_sql("update t set id = id + 1")) == 5);
  CHECK(sorted(query(*db, "select id from t")) == Rows{{I(2)}, {I(3)}, {I(4)}, {I(5)}, {I(6)}});
  CHECK(error_of(*db, "update t set id = 2 where id > 4") == ErrorCode::kConstraint);
  CHECK(error_of(*db, "update t set id = 4 where id = 2") == ErrorCode::kConstraint);
  CHECK(query(*db, "select v from t where id = 6") == Rows{{I(0)}});
}

TEST_CASE("statement errors") {
  TempDir dir;
  auto db = Database::open(dir.path());
  make_course(*db);
  CHECK(error_of(*db, "select * from nope") == ErrorCode::kUnknownTable);
  CHECK(error_of(*db, "select zz from course") == ErrorCode::kUnknownColumn);
  CHECK(error_of(*db, "select * from course where zz = 1") == ErrorCode::kUnknownColumn);
  CHECK(error_of(*db, "select * from course where id = 'x'") == ErrorCode::kTypeMismatch);
  CHECK(error_of(*db, "update course set name = 3") == ErrorCode::kTypeMismatch);
  CHECK(error_of(*db, "update course set name = name + 1") == ErrorCode::kTypeMismatch);
  CHECK(error_of(*db, "selec * from course") == ErrorCode::kSyntax);
  CHECK(error_of(*db, "create table course (a int)") == ErrorCode::kTableExists);
  CHECK(error_of(*db, "create index on course (id)") == ErrorCode::kIndexExists);
  CHECK(error_of(*db, "create index on course (zz)") == ErrorCode::kUnknownColumn);
  run(*db, "insert into course values (1, 'x', 9223372036854775807)");
  CHECK(error_of(*db, "update course set capacity = capacity + 1") == ErrorCode::kIntegerOutOfRange);
}

TEST_CASE("index plans agree with full scans") {
  TempDir dir;
  auto db = Database::open(dir.path(), EngineConfig{{64, 8, cache::Policy::kLru}});
  run(*db, "create table big (id int primary key, grp int, tag str(6))");
  std::mt19937 rng(1);
  for (int i = 0; i < 10000; ++i) {
    run(*db, "insert into big values (" + std::to_string(i) + ", " + std::to_string(rng() % 100) + ", 't" +
                 std::to_string(rng() % 10) + "')");
  }
  run(*db, "create index on big (grp)");

  auto plan = [&](const std::string& sql) { return db->plan_for(std::get<sql::Select>(sql::parse(sql))); };
  CHECK(plan("select * from big where id = 5").kind == PlanKind::kIndexEq);
  CHECK(plan("select * from big where tag = 't1' and grp = 5").column == "grp");
  CHECK(plan("select * from big where grp > 5 and grp <= 9").kind == PlanKind::kIndexRange);
  CHECK(plan("select * from big where tag = 't1'").kind == PlanKind::kScan);
  CHECK(plan("select * from (select * from big) x").kind == PlanKind::kView);

  auto misses = [&] { return db->caches().stats("big").misses; };
  // A wide range touches every page either way; only selective ones must read less.
  const std::vector<std::pair<std::string, bool>> queries = {
      {"select * from big where id = 4321", true},
      {"select * from big where grp = 17", true},
      {"select id from big where grp > 90 and tag = 't3'", false},
      {"select * from big where grp >= 40 and grp < 42 and id > 5000", true},
      {"select * from big where id < 30", true},
      {"select * from big where grp > 50 and grp < 10", true},
      {"select * from big where grp >= 20 and grp <= 20", true},
      {"select * from big where grp > 20 and grp <= 20", true},
  };
  for (const auto& [q, selective] : queries) {
    CAPTURE(q);
    db->set_force_scan(false);
    db->caches().cache_for(db->registry().get("big")).clear();
    auto before = misses();
    Rows indexed = query(*db, q);
    auto index_reads = misses() - before;
    db->set_force_scan(true);
    db->caches().cache_for(db->registry().get("big")).clear();
    before = misses();
    Rows scanned = query(*db, q);
    auto scan_reads = misses() - before;
    CHECK(indexed == scanned);
    CHECK(index_reads <= scan_reads);
    if (selective) CHECK(index_reads < scan_reads);
  }
}

TEST_CASE("failed statements leave no trace") {
  TempDir dir;
  auto db = Database::open(dir.path(), EngineConfig{{2, 2, cache::Policy::kFifo}, 3});
  make_course(*db);
  for (int i = 0; i < 6; ++i) run(*db, "insert into course values (" + std::to_string(i) + ", 'c', 1)");
  run(*db, "checkpoint");
  run(*db, "update course set capacity = 0 where id = 0");
  auto files = dir_snapshot(dir.path());
  auto mapping = db->indexes().find("course", "id")->entries();
  auto rows = query(*db, "select * from course");
  for (const char* bad : {"update course set capacity = capacity - 1",
                          "update course set id = 3 where id = 4",
                          "insert into course values (2, 'dup', 1)",
                          "insert into course values (9, 'neg', -1)",
                          "insert into course values (10, 'this name is far too long for the column', 1)"}) {
    CAPTURE(bad);
    CHECK(error_of(*db, bad) == ErrorCode::kConstraint);
    CHECK(dir_snapshot(dir.path()) == files);
    CHECK(db->indexes().find("course", "id")->entries() == mapping);
    CHECK(query(*db, "select * from course") == rows);
  }
}

TEST_CASE("indexes stay coherent with the table") {
  TempDir dir;
  auto db = Database::open(dir.path(), EngineConfig{{4, 2, cache::Policy::kLfu}, 3});
  run(*db, "create table t (id int primary key, g int, s str(4))");
  run(*db, "create index on t (g)");
  run(*db, "create index on t (s)");
  std::mt19937 rng(99);
  int next = 0;
  for (int op = 0; op < 400; ++op) {
    switch (rng() % 4) {
      case 0:
      case 1:
        db->execute_sql("insert into t values (" + std::to_string(next++) + ", " + std::to_string(rng() % 10) +
                        ", 'k" + std::to_string(rng() % 5) + "')");
        break;
      case 2:
        db->execute_sql("update t set g = g + 1, s = 'k" + std::to_string(rng() % 5) + "' where g = " +
                        std::to_string(rng() % 10));
        break;
      default:
        db->execute_sql("delete from t where id < " + std::to_string(rng() % next + 1) + " and g > " +
                        std::to_string(rng() % 10));
    }
  }
  auto& table = db->registry().get("t");
  for (const char* col : {"id", "g", "s"}) {
    CAPTURE(col);
    CHECK(index::rebuild(table, col).entries() == db->indexes().find("t", col)->entries());
  }
}

TEST_CASE("restart after checkpoint returns identical results") {
  TempDir dir;
  const std::vector<std::string> probes = {"select * from course", "select name from course where id = 3",
                                           "select * from course where capacity > 10",
                                           "select id from (select * from course) x where capacity < 20"};
  std::vector<Rows> before;
  std::map<std::string, std::string> idx_before;
  {
    auto db = Database::open(dir.path());
    make_course(*db);
    run(*db, "create index on course (capacity)");
    for (int i = 0; i < 40; ++i) {
      run(*db, "insert into course values (" + std::to_string(i) + ", 'n" + std::to_string(i) + "', " +
                   std::to_string(i % 25) + ")");
    }
    run(*db, "delete from course where id = 5");
    run(*db, "checkpoint");
    CHECK(fs::exists(dir / "course.id.idx"));
    CHECK(fs::exists(dir / "course.capacity.idx"));
    for (const auto& q : probes) before.push_back(query(*db, q));
    run(*db, "update course set capacity = 24 where id = 1");
    CHECK_FALSE(fs::exists(dir / "course.id.idx"));  // stale files are removed on first write
    run(*db, "update course set capacity = 1 where id = 1");
  }
  auto db = Database::open(dir.path());
  for (std::size_t i = 0; i < probes.size(); ++i) CHECK(query(*db, probes[i]) == before[i]);
  auto mapping = db->indexes().find("course", "capacity")->entries();
  db->close();

  std::ofstream(dir / "course.capacity.idx", std::ios::trunc) << "3\t1\n2\t0\n";
  auto reopened = Database::open(dir.path());
  CHECK(reopened->indexes().find("course", "capacity")->entries() == mapping);
  for (std::size_t i = 0; i < probes.size(); ++i) CHECK(query(*reopened, probes[i]) == before[i]);
}

TEST_CASE("statement log brackets mutations") {
  TempDir dir;
  auto log = dir / "server.log";
  {
    auto db = Database::open(dir.path(), EngineConfig{{}, 32, {}, false, log});
    make_course(*db);
    run(*db, "insert into course values (1, 'a\tb', 0)");
    CHECK(is_error(db->execute_sql("update course set capacity = capacity - 1")));
    CHECK(is_error(db->execute_sql("select * from nope")));
    run(*db, "select * from course");
  }
  auto entries = read_log(log);
  std::vector<std::pair<LogKind, std::string>> got;
  for (const auto& e : entries) got.emplace_back(e.kind, e.text);
  using P = std::pair<LogKind, std::string>;
  const std::string create = "create table course (id int primary key, name str(32), capacity int, check capacity >= 0)";
  CHECK(got == std::vector<P>{{LogKind::kBegin, create},
                              {LogKind::kCommit, create},
                              {LogKind::kBegin, "insert into course values (1, 'a\tb', 0)"},
                              {LogKind::kCommit, "insert into course values (1, 'a\tb', 0)"},
                              {LogKind::kBegin, "update course set capacity = capacity - 1"},
                              {LogKind::kAbort, "update course set capacity = capacity - 1"}});
  CHECK(file_bytes(log).find("'a\\tb'") != std::string::npos);
}

TEST_CASE("log parsing and commit matching") {
  CHECK(parse_log("").empty());
  CHECK(parse_log("1\tBEGIN\tx\n2\tCOMMIT\tx\n3\tBEGIN\ty").size() == 2);  // torn tail
  CHECK_THROWS_AS(parse_log("1\tSTART\tx\n"), DbError);
  CHECK_THROWS_AS(parse_log("abc\tBEGIN\tx\n"), DbError);
  CHECK_THROWS_AS(parse_log("1 BEGIN x\n"), DbError);

  auto e = [](LogKind k, std::string t) { return LogEntry{0, k, std::move(t)}; };
  using K = LogKind;
  CHECK(committed_statements({e(K::kBegin, "a"), e(K::kBegin, "b"), e(K::kCommit, "b"), e(K::kCommit, "a"),
                              e(K::kBegin, "c"), e(K::kAbort, "c"), e(K::kBegin, "a"), e(K::kCommit, "a"),
                              e(K::kBegin, "d")}) == std::vector<std::string>{"a", "b", "a"});
  try {
    committed_statements({e(K::kCommit, "a")});
    FAIL("expected LogCorrupt");
  } catch (const DbError& err) {
    CHECK(err.code() == ErrorCode::kLogCorrupt);
  }
}

TEST_CASE("replay reproduces the data files") {
  TempDir original, fresh, empty;
  auto log = original / "server.log";
  std::mt19937 rng(5);
  {
    auto db = Database::open(original.path(), EngineConfig{{}, 32, {}, false, log});
    make_course(*db);
    run(*db, "create table enroll (sid int, cid int)");
    for (int i = 0; i < 3; ++i) run(*db, "insert into course values (" + std::to_string(i) + ", 'c', 2)");
    run(*db, "update course set capacity = capacity - 1 where id = 1");
    for (int i = 0; i < 60; ++i) {
      std::int64_t c = rng() % 3;
      auto r = db->execute_sql("update course set capacity = capacity - 1 where id = " + std::to_string(c));
      if (!is_error(r)) run(*db, "insert into enroll values (" + std::to_string(i) + ", " + std::to_string(c) + ")");
    }
    run(*db, "delete from enroll where sid = 3");
  }
  // a crash mid-statement leaves a dangling BEGIN
  std::ofstream(log, std::ios::app) << "1\tBEGIN\tinsert into course values (99, 'ghost', 1)\n";

  auto db = replay_log(log, fresh.path());
  for (const char* f : {"course.dat", "enroll.dat", "course.meta", "enroll.meta"}) {
    CAPTURE(f);
    CHECK(file_bytes(fresh / f) == file_bytes(original / f));
  }
  CHECK(query(*db, "select * from course where id = 99").empty());
  db.reset();

  std::ofstream(empty / "empty.log");
  auto untouched = replay_log(empty / "empty.log", empty.path());
  CHECK(untouched->registry().table_names().empty());
}

TEST_CASE("replay reports divergence") {
  TempDir dir, target;
  std::ofstream(dir / "bad.log") << "1\tBEGIN\tinsert into nope values (1)\n2\tCOMMIT\tinsert into nope values (1)\n";
  try {
    replay_log(dir / "bad.log", target.path());
    FAIL("expected ReplayDivergence");
  } catch (const DbError& e) {
    CHECK(e.code() == ErrorCode::kReplayDivergence);
  }
}

TEST_CASE("concurrent enrollment never oversubscribes") {
  TempDir dir;
  auto db = Database::open(dir.path());
  make_course(*db);
  run(*db, "insert into course values (1, 'db', 10)");
  std::atomic<int> ok{0}, rejected{0}, other{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i) {
        auto r = db->execute_sql("update course set capacity = capacity - 1 where id = 1");
        if (!is_error(r)) ++ok;
        else if (std::get<EngineError>(r).code == ErrorCode::kConstraint) ++rejected;
        else ++other;
        db->execute_sql("select * from course");
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 10);
  CHECK(rejected == 30);
  CHECK(other == 0);
  CHECK(query(*db, "select capacity from course") == Rows{{I(0)}});
}
