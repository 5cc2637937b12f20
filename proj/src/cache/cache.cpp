#include "autodb/cache/cache.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <tuple>

#include "autodb/error.hpp"

namespace autodb::cache {

std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::kFifo: return "fifo";
    case Policy::kLru: return "lru";
    case Policy::kLfu: return "lfu";
  }
  return "?";
}

std::optional<Policy> parse_policy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "fifo") return Policy::kFifo;
  if (lower == "lru") return Policy::kLru;
  if (lower == "lfu") return Policy::kLfu;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

PageReplacer::PageReplacer(Policy policy, std::size_t capacity)
    : policy_(policy), capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("cache capacity must be at least 1");
}

std::size_t PageReplacer::pick_victim() const {
  if (policy_ == Policy::kLfu) return std::get<2>(*by_frequency_.begin());
  return order_.front();
}

PageReplacer::Outcome PageReplacer::access(std::size_t page) {
  Outcome out;
  auto it = entries_.find(page);
  if (it != entries_.end()) {
    out.hit = true;
    Entry& e = it->second;
    switch (policy_) {
      case Policy::kFifo:
        break;
      case Policy::kLru:
        order_.splice(order_.end(), order_, e.order);
        break;
      case Policy::kLfu:
        by_frequency_.erase({e.frequency, e.inserted, page});
        ++e.frequency;
        by_frequency_.insert({e.frequency, e.inserted, page});
        break;
    }
    return out;
  }

  if (entries_.size() == capacity_) {
    std::size_t victim = pick_victim();
    Entry& v = entries_.at(victim);
    if (policy_ == Policy::kLfu) {
      by_frequency_.erase({v.frequency, v.inserted, victim});
    } else {
      order_.erase(v.order);
    }
    entries_.erase(victim);
    out.evicted = victim;
  }

  Entry e;
  e.frequency = 1;
  e.inserted = sequence_++;
  if (policy_ == Policy::kLfu) {
    by_frequency_.insert({e.frequency, e.inserted, page});
  } else {
    e.order = order_.insert(order_.end(), page);
  }
  entries_.emplace(page, e);
  return out;
}

void PageReplacer::clear() {
  entries_.clear();
  order_.clear();
  by_frequency_.clear();
}

// ---------------------------------------------------------------------------

TableCache::TableCache(const storage::Table& table, CacheConfig config)
    : table_(table), config_(config), replacer_(config.policy, config.capacity) {
  if (config.page_size == 0) throw std::invalid_argument("page size must be at least 1");
}

storage::RecordSlot TableCache::get_record(std::size_t record_number) {
  if (record_number >= table_.slot_count()) {
    throw DbError(ErrorCode::kNoSuchRecord, "table '" + table_.name() + "' has no record " +
                                                std::to_string(record_number));
  }
  const std::size_t page_no = record_number / config_.page_size;
  const std::size_t offset = record_number % config_.page_size;

  std::lock_guard lock(mutex_);
  // Fill before touching the replacer so a failed read leaves no trace.
  std::vector<storage::RecordSlot> filled;
  if (!replacer_.contains(page_no)) filled = table_.read_page(page_no, config_.page_size);

  auto outcome = replacer_.access(page_no);
  if (outcome.hit) {
    ++stats_.hits;
  } else {
    ++stats_.misses;
    if (outcome.evicted) {
      ++stats_.evictions;
      pages_.erase(*outcome.evicted);
    }
    pages_[page_no] = std::move(filled);
  }
  const auto& slots = pages_.at(page_no);
  if (offset >= slots.size()) {
    // The page was filled before this record was appended and the append did
    // not fit the mirror rule; refresh it.
    pages_[page_no] = table_.read_page(page_no, config_.page_size);
  }
  return pages_.at(page_no).at(offset);
}

void TableCache::apply_write(std::size_t record_number, const storage::RecordSlot& slot) {
  const std::size_t page_no = record_number / config_.page_size;
  const std::size_t offset = record_number % config_.page_size;
  std::lock_guard lock(mutex_);
  auto it = pages_.find(page_no);
  if (it == pages_.end()) return;
  auto& slots = it->second;
  if (offset < slots.size()) {
    slots[offset] = slot;
  } else if (offset == slots.size()) {
    slots.push_back(slot);  // append into the resident final page
  }
}

CacheStats TableCache::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::size_t TableCache::resident_pages() const {
  std::lock_guard lock(mutex_);
  return pages_.size();
}

std::vector<std::size_t> TableCache::resident_page_numbers() const {
  std::lock_guard lock(mutex_);
  std::vector<std::size_t> out;
  for (const auto& [p, s] : pages_) out.push_back(p);
  std::sort(out.begin(), out.end());
  return out;
}

void TableCache::clear() {
  std::lock_guard lock(mutex_);
  pages_.clear();
  replacer_.clear();
}

// ---------------------------------------------------------------------------

void CacheManager::configure(const std::string& table, CacheConfig config) {
  std::lock_guard lock(mutex_);
  overrides_[table] = config;
  caches_.erase(table);
}

TableCache& CacheManager::cache_for(const storage::Table& table) {
  std::lock_guard lock(mutex_);
  auto it = caches_.find(table.name());
  if (it != caches_.end()) return *it->second;
  auto o = overrides_.find(table.name());
  CacheConfig cfg = o == overrides_.end() ? defaults_ : o->second;
  auto [pos, inserted] = caches_.emplace(table.name(), std::make_unique<TableCache>(table, cfg));
  return *pos->second;
}

CacheStats CacheManager::stats(std::string_view table) const {
  std::lock_guard lock(mutex_);
  auto it = caches_.find(table);
  if (it == caches_.end()) {
    throw DbError(ErrorCode::kUnknownTable, "no cache for table '" + std::string(table) + "'");
  }
  return it->second->stats();
}

void CacheManager::drop(std::string_view table) {
  std::lock_guard lock(mutex_);
  auto it = caches_.find(table);
  if (it != caches_.end()) caches_.erase(it);
}

}  // namespace autodb::cache
