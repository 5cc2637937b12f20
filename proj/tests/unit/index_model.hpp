#pragma once

#include <cstdint>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "autodb/error.hpp"
#include "autodb/index/bplus_tree.hpp"

namespace autodb::testing {

// Sorted map of sorted record sets: the reference the tree must agree with.
class IndexModel {
 public:
  bool insert(std::int64_t k, std::uint64_t r) { return map_[k].insert(r).second; }
  bool remove(std::int64_t k, std::uint64_t r) {
    auto it = map_.find(k);
    if (it == map_.end() || it->second.erase(r) == 0) return false;
    if (it->second.empty()) map_.erase(it);
    return true;
  }
  std::vector<std::uint64_t> eq(std::int64_t k) const {
    auto it = map_.find(k);
    return it == map_.end() ? std::vector<std::uint64_t>{}
                            : std::vector<std::uint64_t>(it->second.begin(), it->second.end());
  }
  std::vector<std::uint64_t> range(std::int64_t lo, std::int64_t hi, bool lo_inc, bool hi_inc) const {
    std::vector<std::uint64_t> out;
    for (const auto& [k, rs] : map_) {
      if (k < lo || (k == lo && !lo_inc)) continue;
      if (k > hi || (k == hi && !hi_inc)) break;
      out.insert(out.end(), rs.begin(), rs.end());
    }
    return out;
  }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [k, rs] : map_) n += rs.size();
    return n;
  }
  std::vector<std::pair<index::Key, std::vector<std::uint64_t>>> mapping() const {
    std::vector<std::pair<index::Key, std::vector<std::uint64_t>>> out;
    for (const auto& [k, rs] : map_) out.emplace_back(k, std::vector<std::uint64_t>(rs.begin(), rs.end()));
    return out;
  }
  // A random present (key, record) pair.
  std::optional<std::pair<std::int64_t, std::uint64_t>> sample(std::mt19937& rng) const {
    if (map_.empty()) return std::nullopt;
    auto it = map_.begin();
    std::advance(it, static_cast<long>(rng() % map_.size()));
    auto r = it->second.begin();
    std::advance(r, static_cast<long>(rng() % it->second.size()));
    return std::make_pair(it->first, *r);
  }

 private:
  std::map<std::int64_t, std::set<std::uint64_t>> map_;
};

// Runs `ops` random operations against a tree and the model, auditing after
// every mutation. Returns an empty string on agreement, else a description
// of the first divergence.
inline std::string run_index_model(std::size_t order, std::uint32_t seed, int ops) {
  std::mt19937 rng(seed);
  index::BPlusTree tree(order);
  IndexModel model;
  const std::int64_t key_space = 400;
  auto at = [&](int i, const std::string& what) { return "op " + std::to_string(i) + ": " + what; };
  for (int i = 0; i < ops; ++i) {
    std::int64_t k = static_cast<std::int64_t>(rng() % key_space) - key_space / 4;
    std::uint64_t r = rng() % 64;
    switch (rng() % 6) {
      case 0:
      case 1: {
        bool fresh = model.insert(k, r);
        try {
          tree.insert(k, r);
          if (!fresh) return at(i, "duplicate insert accepted");
        } catch (const DbError& e) {
          if (fresh || e.code() != ErrorCode::kDuplicateEntry) return at(i, "insert rejected");
        }
        break;
      }
      case 2: {
        if (rng() % 3 == 0) {
          bool present = model.remove(k, r);
          try {
            tree.remove(k, r);
            if (!present) return at(i, "remove of absent entry accepted");
          } catch (const DbError& e) {
            if (present || e.code() != ErrorCode::kNoSuchEntry) return at(i, "remove rejected");
          }
        } else if (auto s = model.sample(rng)) {
          model.remove(s->first, s->second);
          tree.remove(s->first, s->second);
        }
        break;
      }
      case 3:
        if (tree.lookup_eq(k) != model.eq(k)) return at(i, "lookup_eq differs");
        continue;
      default: {
        std::int64_t hi = k + static_cast<std::int64_t>(rng() % 120);
        bool li = rng() % 2, hi_inc = rng() % 2;
        if (tree.lookup_range(k, hi, li, hi_inc) != model.range(k, hi, li, hi_inc)) {
          return at(i, "lookup_range differs");
        }
        continue;
      }
    }
    try {
      tree.audit();
    } catch (const std::logic_error& e) {
      return at(i, e.what());
    }
    if (tree.size() != model.size()) return at(i, "size differs");
  }
  if (tree.entries() != model.mapping()) return "final mapping differs";
  return {};
}

}  // namespace autodb::testing
