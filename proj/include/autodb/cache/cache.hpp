#pragma once

// Per-table page cache. A page is `page_size` consecutive records; record r
// sits in page r / page_size at offset r % page_size. Pages are filled from
// the record file on a miss and evicted by a pluggable replacement policy.
// Writes go to the file first and are mirrored into resident pages, so a page
// is never dirty.

#include <cstddef>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "autodb/storage/storage.hpp"

namespace autodb::cache {

enum class Policy { kFifo, kLru, kLfu };

std::string_view to_string(Policy p) noexcept;
std::optional<Policy> parse_policy(std::string_view name);  // "fifo", "lru", "lfu", any case

struct CacheConfig {
  std::size_t page_size = 64;
  std::size_t capacity = 128;
  Policy policy = Policy::kLru;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;

  bool operator==(const CacheStats&) const = default;
};

/// Residency bookkeeping for one cache: which page numbers are resident and
/// which one goes next. Knows nothing about page contents.
class PageReplacer {
 public:
  struct Outcome {
    bool hit = false;
    std::optional<std::size_t> evicted;
  };

  PageReplacer(Policy policy, std::size_t capacity);

  /// Records an access. On a miss the page becomes resident, evicting a
  /// victim first when full.
  Outcome access(std::size_t page);
  bool contains(std::size_t page) const { return entries_.count(page) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  Policy policy() const noexcept { return policy_; }
  void clear();

 private:
  struct Entry {
    std::uint64_t frequency = 0;
    std::uint64_t inserted = 0;  // insertion sequence, the FIFO and LFU tie-break order
    std::list<std::size_t>::iterator order;  // position in order_
  };

  std::size_t pick_victim() const;

  Policy policy_;
  std::size_t capacity_;
  std::uint64_t sequence_ = 0;
  std::unordered_map<std::size_t, Entry> entries_;
  // FIFO: insertion order. LRU: recency order, least recent first.
  std::list<std::size_t> order_;
  // LFU: (frequency, inserted, page), smallest first.
  std::set<std::tuple<std::uint64_t, std::uint64_t, std::size_t>> by_frequency_;
};

class TableCache {
 public:
  TableCache(const storage::Table& table, CacheConfig config);

  const CacheConfig& config() const noexcept { return config_; }

  /// Reads through the cache. Throws kNoSuchRecord past the last slot.
  storage::RecordSlot get_record(std::size_t record_number);

  /// Mirrors a write that has already reached the record file. `slot` is the
  /// new full slot (a tombstone has valid == false).
  void apply_write(std::size_t record_number, const storage::RecordSlot& slot);

  CacheStats stats() const;
  std::size_t resident_pages() const;
  std::vector<std::size_t> resident_page_numbers() const;
  void clear();

 private:
  const storage::Table& table_;
  CacheConfig config_;
  mutable std::mutex mutex_;
  PageReplacer replacer_;
  std::unordered_map<std::size_t, std::vector<storage::RecordSlot>> pages_;
  CacheStats stats_;
};

/// One TableCache per table, created on first use.
class CacheManager {
 public:
  explicit CacheManager(CacheConfig defaults = {}) : defaults_(defaults) {}

  const CacheConfig& defaults() const noexcept { return defaults_; }

  /// Overrides the configuration for one table; drops its current cache.
  void configure(const std::string& table, CacheConfig config);

  TableCache& cache_for(const storage::Table& table);
  CacheStats stats(std::string_view table) const;  // kUnknownTable if never opened
  void drop(std::string_view table);

 private:
  CacheConfig defaults_;
  mutable std::mutex mutex_;
  std::map<std::string, CacheConfig, std::less<>> overrides_;
  std::map<std::string, std::unique_ptr<TableCache>, std::less<>> caches_;
};

}  // namespace autodb::cache
