#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "autodb/value.hpp"

namespace autodb::index {

using Key = Value;
using RecordNumber = std::uint64_t;

/// B+ tree from column value to the sorted list of record numbers holding it.
///
/// `order` is the maximum number of children of an internal node; every node
/// holds at most order-1 keys and, except the root, at least
/// ceil(order/2)-1. Record numbers live only in the leaves, which are chained
/// left to right in key order.
class BPlusTree {
 public:
  static constexpr std::size_t kDefaultOrder = 32;

  struct Bound {
    Key key;
    bool inclusive = true;
  };

  explicit BPlusTree(std::size_t order = kDefaultOrder);
  BPlusTree(BPlusTree&&) noexcept;
  BPlusTree& operator=(BPlusTree&&) noexcept;
  ~BPlusTree();

  /// Throws DbError(kDuplicateEntry) if (key, record) is already present.
  void insert(const Key& key, RecordNumber record);
  /// Throws DbError(kNoSuchEntry) if (key, record) is absent.
  void remove(const Key& key, RecordNumber record);

  std::vector<RecordNumber> lookup_eq(const Key& key) const;

  /// Record numbers of all keys within the bounds, in ascending key order.
  /// A missing bound is open. Throws DbError(kBoundsInverted) if lo > hi.
  std::vector<RecordNumber> lookup_range(const std::optional<Bound>& lo,
                                         const std::optional<Bound>& hi) const;
  std::vector<RecordNumber> lookup_range(const Key& lo, const Key& hi, bool lo_inclusive,
                                         bool hi_inclusive) const;

  /// Walks the leaf chain in key order.
  void for_each(const std::function<void(const Key&, const std::vector<RecordNumber>&)>& fn) const;
  std::vector<std::pair<Key, std::vector<RecordNumber>>> entries() const;

  std::size_t order() const noexcept { return order_; }
  std::size_t size() const noexcept { return size_; }  // (key, record) pairs
  std::size_t key_count() const noexcept { return keys_; }
  bool empty() const noexcept { return size_ == 0; }
  std::size_t height() const;

  /// Checks every structural invariant; throws std::logic_error naming the
  /// first violation.
  void audit() const;

 private:
  struct Node;

  std::size_t max_keys() const noexcept { return order_ - 1; }
  std::size_t min_keys() const noexcept { return (order_ + 1) / 2 - 1; }

  const Node* leaf_for(const Key& key) const;
  const Node* leftmost_leaf() const;

  // Returns the split-off right sibling and its separator, if the child split.
  std::optional<std::pair<Key, std::unique_ptr<Node>>> insert_into(Node& node, const Key& key,
                                                                   RecordNumber record);
  void remove_from(Node& node, const Key& key, RecordNumber record);
  void fix_underflow(Node& parent, std::size_t child);

  std::size_t order_;
  std::unique_ptr<Node> root_;
  std::size_t size_ = 0;
  std::size_t keys_ = 0;
};

}  // namespace autodb::index
