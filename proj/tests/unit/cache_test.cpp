#include <doctest.h>

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "autodb/cache/cache.hpp"
#include "autodb/error.hpp"
#include "autodb/sql/parser.hpp"
#include "test_support.hpp"
#include "unit/cache_sim.hpp"

using namespace autodb;
using namespace autodb::cache;
using autodb::testing::SimResult;
using autodb::testing::simulate;
using autodb::testing::TempDir;

namespace {

SimResult replay(Policy policy, std::size_t capacity, const std::vector<std::size_t>& refs) {
  PageReplacer r(policy, capacity);
  SimResult out;
  for (std::size_t p : refs) {
    auto o = r.access(p);
    if (!o.hit) ++out.misses;
    out.evictions.push_back(o.evicted);
    REQUIRE(r.size() <= capacity);
  }
  return out;
}

const std::vector<std::size_t> kBelady{1, 2, 3, 4, 1, 2, 5, 1, 2, 3, 4, 5};

storage::TableSchema wide_schema() {
  return storage::schema_from(std::get<sql::CreateTable>(sql::parse("create table t (k int, s str(16))")));
}

}  // namespace

TEST_CASE("policy names") {
  CHECK(parse_policy("LRU") == Policy::kLru);
  CHECK(parse_policy("fifo") == Policy::kFifo);
  CHECK(parse_policy("Lfu") == Policy::kLfu);
  CHECK_FALSE(parse_policy("mru"));
  CHECK(to_string(Policy::kLfu) == "lfu");
}

TEST_CASE("Belady reference string") {
  CHECK(simulate(Policy::kFifo, 3, kBelady).misses == 9);
  CHECK(simulate(Policy::kLru, 3, kBelady).misses == 10);
  CHECK(simulate(Policy::kFifo, 4, kBelady).misses == 10);  // the anomaly
  for (auto policy : {Policy::kFifo, Policy::kLru, Policy::kLfu}) {
    for (std::size_t cap : {3u, 4u}) {
      auto expected = simulate(policy, cap, kBelady);
      auto actual = replay(policy, cap, kBelady);
      CHECK(actual.misses == expected.misses);
      CHECK(actual.evictions == expected.evictions);
    }
  }
  CHECK(replay(Policy::kFifo, 3, kBelady).misses == 9);
  CHECK(replay(Policy::kLru, 3, kBelady).misses == 10);
}

TEST_CASE("eviction sequences match the simulator on random strings") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t capacity = 3 + static_cast<std::size_t>(trial % 6);
    std::size_t pages = capacity + 1 + rng() % 8;
    std::vector<std::size_t> refs(20 + rng() % 80);
    for (auto& p : refs) p = rng() % pages;
    for (auto policy : {Policy::kFifo, Policy::kLru, Policy::kLfu}) {
      auto expected = simulate(policy, capacity, refs);
      auto actual = replay(policy, capacity, refs);
      REQUIRE(actual.misses == expected.misses);
      REQUIRE(actual.evictions == expected.evictions);
    }
  }
}

TEST_CASE("LFU keeps the hot page and breaks ties first-in") {
  PageReplacer r(Policy::kLfu, 2);
  r.access(1);
  r.access(1);
  r.access(2);
  CHECK(r.access(3).evicted == 2u);
  CHECK(r.access(4).evicted == 3u);
  PageReplacer tie(Policy::kLfu, 2);
  tie.access(5);
  tie.access(6);
  CHECK(tie.access(7).evicted == 5u);
}

TEST_CASE("record to page arithmetic and stats") {
  TempDir dir;
  auto reg = storage::TableRegistry::open(dir.path());
  auto& t = reg->create_table(wide_schema());
  for (std::int64_t i = 0; i < 10; ++i) t.append_record({i, std::string("r") + std::to_string(i)});

  TableCache c(t, {4, 2, Policy::kLru});
  CHECK(c.stats() == CacheStats{});
  CHECK(c.get_record(9).values[0] == Value(std::int64_t{9}));
  CHECK(c.resident_page_numbers() == std::vector<std::size_t>{2});

  TableCache warm(t, {4, 2, Policy::kLru});
  warm.get_record(0);
  warm.get_record(0);
  CHECK(warm.stats() == CacheStats{1, 1, 0});
  for (int i = 0; i < 5; ++i) warm.get_record(1);
  CHECK(warm.stats().hits == 6);

  CHECK_THROWS_AS(c.get_record(10), DbError);
}

TEST_CASE("capacity one with alternating pages evicts on every access after the first") {
  TempDir dir;
  auto reg = storage::TableRegistry::open(dir.path());
  auto& t = reg->create_table(wide_schema());
  for (std::int64_t i = 0; i < 8; ++i) t.append_record({i, std::string("x")});
  for (auto policy : {Policy::kFifo, Policy::kLru, Policy::kLfu}) {
    TableCache c(t, {4, 1, policy});
    const std::uint64_t n = 9;
    for (std::uint64_t k = 0; k < n; ++k) c.get_record(k % 2 == 0 ? 0 : 4);
    CHECK(c.stats() == CacheStats{0, n, n - 1});
    CHECK(c.stats().evictions == simulate(policy, 1, {0, 1, 0, 1, 0, 1, 0, 1, 0}).misses - 1);
  }
}

TEST_CASE("write-through keeps resident pages coherent") {
  TempDir dir;
  auto reg = storage::TableRegistry::open(dir.path());
  auto& t = reg->create_table(wide_schema());
  for (std::int64_t i = 0; i < 6; ++i) t.append_record({i, std::string("a")});
  TableCache c(t, {4, 1, Policy::kLru});

  c.get_record(0);
  t.overwrite_record(1, {std::int64_t{1}, std::string("b")});
  c.apply_write(1, t.read_record(1));
  auto before = c.stats();
  CHECK(std::get<std::string>(c.get_record(1).values[1]) == "b");
  CHECK(c.stats().misses == before.misses);

  t.overwrite_record(5, {std::int64_t{5}, std::string("z")});
  c.apply_write(5, t.read_record(5));
  CHECK(c.resident_page_numbers() == std::vector<std::size_t>{0});
  CHECK(std::get<std::string>(c.get_record(5).values[1]) == "z");
  CHECK(c.stats().misses == before.misses + 1);
}

TEST_CASE("cache is transparent for every configuration") {
  std::mt19937 rng(77);
  for (auto policy : {Policy::kFifo, Policy::kLru, Policy::kLfu}) {
    for (std::size_t capacity : {1u, 2u, 3u}) {
      for (std::size_t page_size : {1u, 3u, 8u}) {
        TempDir dir;
        auto reg = storage::TableRegistry::open(dir.path());
        auto& t = reg->create_table(wide_schema());
        TableCache c(t, {page_size, capacity, policy});
        for (std::int64_t i = 0; i < 5; ++i) {
          auto r = t.append_record({i, std::string("v")});
          c.apply_write(r, t.read_record(r));
        }
        for (int op = 0; op < 400; ++op) {
          std::size_t n = t.slot_count();
          std::size_t r = rng() % n;
          switch (rng() % 5) {
            case 0: {
              auto nr = t.append_record({static_cast<std::int64_t>(op), std::string("n") + std::to_string(op)});
              c.apply_write(nr, t.read_record(nr));
              break;
            }
            case 1:
              if (t.read_record(r).valid) {
                t.overwrite_record(r, {static_cast<std::int64_t>(op), std::string("u") + std::to_string(op)});
                c.apply_write(r, t.read_record(r));
              }
              break;
            case 2:
              if (t.read_record(r).valid && rng() % 4 == 0) {
                t.delete_record(r);
                c.apply_write(r, t.read_record(r));
              }
              break;
            default:
              REQUIRE(c.get_record(r) == t.read_record(r));
          }
          REQUIRE(c.resident_pages() <= capacity);
        }
        for (std::size_t r = 0; r < t.slot_count(); ++r) REQUIRE(c.get_record(r) == t.read_record(r));
      }
    }
  }
}

TEST_CASE("cache manager") {
  TempDir dir;
  auto reg = storage::TableRegistry::open(dir.path());
  auto& t = reg->create_table(wide_schema());
  t.append_record({std::int64_t{1}, std::string("a")});
  CacheManager m({16, 4, Policy::kFifo});
  CHECK_THROWS_AS(m.stats("t"), DbError);
  m.configure("t", {2, 1, Policy::kLfu});
  auto& c = m.cache_for(t);
  CHECK(&c == &m.cache_for(t));
  CHECK(c.config().policy == Policy::kLfu);
  c.get_record(0);
  CHECK(m.stats("t").misses == 1);
}
