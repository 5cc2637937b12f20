#include "autodb/index/bplus_tree.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "autodb/error.hpp"

namespace autodb::index {

struct BPlusTree::Node {
  bool leaf = true;
  std::vector<Key> keys;
  std::vector<std::unique_ptr<Node>> children;     // internal only, keys.size() + 1
  std::vector<std::vector<RecordNumber>> records;  // leaf only, parallel to keys
  Node* next = nullptr;                            // leaf chain
};

namespace {

std::string describe(const Key& k) { return to_sql_literal(k); }

}  // namespace

BPlusTree::BPlusTree(std::size_t order) : order_(order), root_(std::make_unique<Node>()) {
  if (order < 3) throw std::invalid_argument("B+ tree order must be at least 3");
}

BPlusTree::BPlusTree(BPlusTree&&) noexcept = default;
BPlusTree& BPlusTree::operator=(BPlusTree&&) noexcept = default;
BPlusTree::~BPlusTree() = default;

const BPlusTree::Node* BPlusTree::leaf_for(const Key& key) const {
  const Node* n = root_.get();
  while (!n->leaf) {
    auto idx = std::upper_bound(n->keys.begin(), n->keys.end(), key) - n->keys.begin();
    n = n->children[static_cast<std::size_t>(idx)].get();
  }
  return n;
}

const BPlusTree::Node* BPlusTree::leftmost_leaf() const {
  const Node* n = root_.get();
  while (!n->leaf) n = n->children.front().get();
  return n;
}

std::size_t BPlusTree::height() const {
  std::size_t h = 1;
  for (const Node* n = root_.get(); !n->leaf; n = n->children.front().get()) ++h;
  return h;
}

// ---------------------------------------------------------------------------
// Insert

void BPlusTree::insert(const Key& key, RecordNumber record) {
  auto split = insert_into(*root_, key, record);
  if (split) {
    auto root = std::make_unique<Node>();
    root->leaf = false;
    root->keys.push_back(std::move(split->first));
    root->children.push_back(std::move(root_));
    root->children.push_back(std::move(split->second));
    root_ = std::move(root);
  }
}

std::optional<std::pair<Key, std::unique_ptr<BPlusTree::Node>>> BPlusTree::insert_into(
    Node& node, const Key& key, RecordNumber record) {
  if (node.leaf) {
    auto it = std::lower_bound(node.keys.begin(), node.keys.end(), key);
    auto pos = static_cast<std::size_t>(it - node.keys.begin());
    if (it != node.keys.end() && *it == key) {
      auto& list = node.records[pos];
      auto r = std::lower_bound(list.begin(), list.end(), record);
      if (r != list.end() && *r == record) {
        throw DbError(ErrorCode::kDuplicateEntry, "index already maps " + describe(key) + " to record " +
                                                      std::to_string(record));
      }
      list.insert(r, record);
      ++size_;
      return std::nullopt;
    }
    node.keys.insert(it, key);
    node.records.insert(node.records.begin() + static_cast<long>(pos), std::vector<RecordNumber>{record});
    ++size_;
    ++keys_;
    if (node.keys.size() <= max_keys()) return std::nullopt;

    const std::size_t n = node.keys.size();
    const std::size_t keep = n - n / 2;
    auto right = std::make_unique<Node>();
    right->keys.assign(std::make_move_iterator(node.keys.begin() + static_cast<long>(keep)),
                       std::make_move_iterator(node.keys.end()));
    right->records.assign(std::make_move_iterator(node.records.begin() + static_cast<long>(keep)),
                          std::make_move_iterator(node.records.end()));
    node.keys.resize(keep);
    node.records.resize(keep);
    right->next = node.next;
    node.next = right.get();
    Key separator = right->keys.front();
    return std::make_pair(std::move(separator), std::move(right));
  }

  auto idx = static_cast<std::size_t>(std::upper_bound(node.keys.begin(), node.keys.end(), key) -
                                       node.keys.begin());
  auto split = insert_into(*node.children[idx], key, record);
  if (!split) return std::nullopt;
  node.keys.insert(node.keys.begin() + static_cast<long>(idx), std::move(split->first));
  node.children.insert(node.children.begin() + static_cast<long>(idx) + 1, std::move(split->second));
  if (node.keys.size() <= max_keys()) return std::nullopt;

  const std::size_t n = node.keys.size();
  const std::size_t mid = n / 2;
  auto right = std::make_unique<Node>();
  right->leaf = false;
  Key separator = std::move(node.keys[mid]);
  right->keys.assign(std::make_move_iterator(node.keys.begin() + static_cast<long>(mid) + 1),
                     std::make_move_iterator(node.keys.end()));
  right->children.assign(std::make_move_iterator(node.children.begin() + static_cast<long>(mid) + 1),
                         std::make_move_iterator(node.children.end()));
  node.keys.resize(mid);
  node.children.resize(mid + 1);
  return std::make_pair(std::move(separator), std::move(right));
}

// ---------------------------------------------------------------------------
// Remove

void BPlusTree::remove(const Key& key, RecordNumber record) {
  remove_from(*root_, key, record);
  if (!root_->leaf && root_->keys.empty()) {
    std::unique_ptr<Node> child = std::move(root_->children.front());
    root_ = std::move(child);
  }
}

void BPlusTree::remove_from(Node& node, const Key& key, RecordNumber record) {
  if (node.leaf) {
    auto it = std::lower_bound(node.keys.begin(), node.keys.end(), key);
    auto missing = [&] {
      throw DbError(ErrorCode::kNoSuchEntry, "index has no entry " + describe(key) + " -> " +
                                                 std::to_string(record));
    };
    if (it == node.keys.end() || *it != key) missing();
    auto pos = static_cast<std::size_t>(it - node.keys.begin());
    auto& list = node.records[pos];
    auto r = std::lower_bound(list.begin(), list.end(), record);
    if (r == list.end() || *r != record) missing();
    list.erase(r);
    --size_;
    if (list.empty()) {
      node.keys.erase(it);
      node.records.erase(node.records.begin() + static_cast<long>(pos));
      --keys_;
    }
    return;
  }
  auto idx = static_cast<std::size_t>(std::upper_bound(node.keys.begin(), node.keys.end(), key) -
                                       node.keys.begin());
  remove_from(*node.children[idx], key, record);
  if (node.children[idx]->keys.size() < min_keys()) fix_underflow(node, idx);
}

// Restores the occupancy of parent.children[i]: borrow from a sibling with a
// spare key, otherwise merge with one.
void BPlusTree::fix_underflow(Node& parent, std::size_t i) {
  Node& child = *parent.children[i];
  Node* left = i > 0 ? parent.children[i - 1].get() : nullptr;
  Node* right = i + 1 < parent.children.size() ? parent.children[i + 1].get() : nullptr;
  const auto at = [](auto& v, std::size_t k) { return v.begin() + static_cast<long>(k); };

  if (child.leaf) {
    if (left != nullptr && left->keys.size() > min_keys()) {
      child.keys.insert(child.keys.begin(), std::move(left->keys.back()));
      child.records.insert(child.records.begin(), std::move(left->records.back()));
      left->keys.pop_back();
      left->records.pop_back();
      parent.keys[i - 1] = child.keys.front();
      return;
    }
    if (right != nullptr && right->keys.size() > min_keys()) {
      child.keys.push_back(std::move(right->keys.front()));
      child.records.push_back(std::move(right->records.front()));
      right->keys.erase(right->keys.begin());
      right->records.erase(right->records.begin());
      parent.keys[i] = right->keys.front();
      return;
    }
    if (left != nullptr) {
      for (auto& k : child.keys) left->keys.push_back(std::move(k));
      for (auto& r : child.records) left->records.push_back(std::move(r));
      left->next = child.next;
      parent.keys.erase(at(parent.keys, i - 1));
      parent.children.erase(at(parent.children, i));
    } else {
      for (auto& k : right->keys) child.keys.push_back(std::move(k));
      for (auto& r : right->records) child.records.push_back(std::move(r));
      child.next = right->next;
      parent.keys.erase(at(parent.keys, i));
      parent.children.erase(at(parent.children, i + 1));
    }
    return;
  }

  if (left != nullptr && left->keys.size() > min_keys()) {
    child.keys.insert(child.keys.begin(), std::move(parent.keys[i - 1]));
    child.children.insert(child.children.begin(), std::move(left->children.back()));
    parent.keys[i - 1] = std::move(left->keys.back());
    left->keys.pop_back();
    left->children.pop_back();
    return;
  }
  if (right != nullptr && right->keys.size() > min_keys()) {
    child.keys.push_back(std::move(parent.keys[i]));
    child.children.push_back(std::move(right->children.front()));
    parent.keys[i] = std::move(right->keys.front());
    right->keys.erase(right->keys.begin());
    right->children.erase(right->children.begin());
    return;
  }
  if (left != nullptr) {
    left->keys.push_back(std::move(parent.keys[i - 1]));
    for (auto& k : child.keys) left->keys.push_back(std::move(k));
    for (auto& c : child.children) left->children.push_back(std::move(c));
    parent.keys.erase(at(parent.keys, i - 1));
    parent.children.erase(at(parent.children, i));
  } else {
    child.keys.push_back(std::move(parent.keys[i]));
    for (auto& k : right->keys) child.keys.push_back(std::move(k));
    for (auto& c : right->children) child.children.push_back(std::move(c));
    parent.keys.erase(at(parent.keys, i));
    parent.children.erase(at(parent.children, i + 1));
  }
}

// ---------------------------------------------------------------------------
// Lookup

std::vector<RecordNumber> BPlusTree::lookup_eq(const Key& key) const {
  const Node* leaf = leaf_for(key);
  auto it = std::lower_bound(leaf->keys.begin(), leaf->keys.end(), key);
  if (it == leaf->keys.end() || *it != key) return {};
  return leaf->records[static_cast<std::size_t>(it - leaf->keys.begin())];
}

std::vector<RecordNumber> BPlusTree::lookup_range(const std::optional<Bound>& lo,
                                                  const std::optional<Bound>& hi) const {
  if (lo && hi && hi->key < lo->key) {
    throw DbError(ErrorCode::kBoundsInverted,
                  "range lower bound " + describe(lo->key) + " exceeds upper bound " + describe(hi->key));
  }
  std::vector<RecordNumber> out;
  const Node* leaf = lo ? leaf_for(lo->key) : leftmost_leaf();
  for (; leaf != nullptr; leaf = leaf->next) {
    for (std::size_t i = 0; i < leaf->keys.size(); ++i) {
      const Key& k = leaf->keys[i];
      if (lo && (k < lo->key || (!lo->inclusive && k == lo->key))) continue;
      if (hi && (hi->key < k || (!hi->inclusive && k == hi->key))) return out;
      out.insert(out.end(), leaf->records[i].begin(), leaf->records[i].end());
    }
  }
  return out;
}

std::vector<RecordNumber> BPlusTree::lookup_range(const Key& lo, const Key& hi, bool lo_inclusive,
                                                  bool hi_inclusive) const {
  return lookup_range(Bound{lo, lo_inclusive}, Bound{hi, hi_inclusive});
}

void BPlusTree::for_each(
    const std::function<void(const Key&, const std::vector<RecordNumber>&)>& fn) const {
  for (const Node* leaf = leftmost_leaf(); leaf != nullptr; leaf = leaf->next) {
    for (std::size_t i = 0; i < leaf->keys.size(); ++i) fn(leaf->keys[i], leaf->records[i]);
  }
}

std::vector<std::pair<Key, std::vector<RecordNumber>>> BPlusTree::entries() const {
  std::vector<std::pair<Key, std::vector<RecordNumber>>> out;
  out.reserve(keys_);
  for_each([&](const Key& k, const std::vector<RecordNumber>& r) { out.emplace_back(k, r); });
  return out;
}

// ---------------------------------------------------------------------------
// Audit

void BPlusTree::audit() const {
  auto fail = [](const std::string& what) { throw std::logic_error("B+ tree audit: " + what); };
  std::vector<const Node*> leaves;
  std::size_t leaf_depth = 0;
  std::size_t pairs = 0;
  std::size_t keys = 0;

  std::function<void(const Node*, std::size_t, const Key*, const Key*)> visit =
      [&](const Node* n, std::size_t depth, const Key* lo, const Key* hi) {
        const bool is_root = n == root_.get();
        for (std::size_t i = 1; i < n->keys.size(); ++i) {
          if (!(n->keys[i - 1] < n->keys[i])) fail("keys out of order at depth " + std::to_string(depth));
        }
        if (n->keys.size() > max_keys()) fail("node overfull at depth " + std::to_string(depth));
        if (!is_root && n->keys.size() < min_keys()) fail("node underfull at depth " + std::to_string(depth));
        for (const Key& k : n->keys) {
          if (lo != nullptr && k < *lo) fail("key " + describe(k) + " below its separator");
          if (hi != nullptr && !(k < *hi)) fail("key " + describe(k) + " not below its separator");
        }
        if (n->leaf) {
          if (!n->children.empty()) fail("leaf has children");
          if (n->records.size() != n->keys.size()) fail("leaf record lists misaligned");
          for (const auto& list : n->records) {
            if (list.empty()) fail("empty record list");
            for (std::size_t i = 1; i < list.size(); ++i) {
              if (!(list[i - 1] < list[i])) fail("record list not strictly sorted");
            }
            pairs += list.size();
          }
          keys += n->keys.size();
          if (leaves.empty()) {
            leaf_depth = depth;
          } else if (depth != leaf_depth) {
            fail("leaves at different depths");
          }
          leaves.push_back(n);
          return;
        }
        if (!n->records.empty()) fail("internal node holds records");
        if (n->keys.empty()) fail("internal node without keys");
        if (n->children.size() != n->keys.size() + 1) fail("child count mismatch");
        for (std::size_t i = 0; i < n->children.size(); ++i) {
          const Key* clo = i == 0 ? lo : &n->keys[i - 1];
          const Key* chi = i == n->keys.size() ? hi : &n->keys[i];
          visit(n->children[i].get(), depth + 1, clo, chi);
        }
      };
  visit(root_.get(), 1, nullptr, nullptr);

  if (root_->leaf && root_->keys.empty() && size_ != 0) fail("empty root in non-empty tree");
  if (pairs != size_) fail("entry count " + std::to_string(pairs) + " != size " + std::to_string(size_));
  if (keys != keys_) fail("key count mismatch");

  const Node* chain = leftmost_leaf();
  for (std::size_t i = 0; i < leaves.size(); ++i, chain = chain->next) {
    if (chain != leaves[i]) fail("leaf chain diverges from tree order at leaf " + std::to_string(i));
  }
  if (chain != nullptr) fail("leaf chain runs past the last leaf");
  const Key* prev = nullptr;
  for (const Node* leaf : leaves) {
    for (const Key& k : leaf->keys) {
      if (prev != nullptr && !(*prev < k)) fail("leaf chain not sorted");
      prev = &k;
    }
  }
}

}  // namespace autodb::index
