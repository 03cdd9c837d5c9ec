#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace synrec {

// Prefix trie over item identifier token sequences. Suffix disambiguation
// guarantees a node is either internal or terminal, never both: a colliding
// code tuple gives every member a suffix token, so no identifier is a
// prefix of another.
class PrefixTrie {
 public:
  static constexpr std::int32_t kNoItem = -1;

  PrefixTrie();

  // identifiers[i] becomes the path for item i.
  explicit PrefixTrie(const std::vector<std::vector<std::int32_t>>& identifiers);

  void insert(const std::vector<std::int32_t>& tokens, std::int32_t item);

  // Node handles: 0 is the root; kNoNode means "no such child".
  static constexpr std::int32_t kNoNode = -1;
  std::int32_t root() const { return 0; }
  std::int32_t child(std::int32_t node, std::int32_t token) const;
  const std::map<std::int32_t, std::int32_t>& children(std::int32_t node) const;
  std::int32_t item_at(std::int32_t node) const;  // kNoItem unless terminal
  bool is_terminal(std::int32_t node) const { return item_at(node) != kNoItem; }

  // Item for a full token path, kNoItem if the path is not a terminal.
  std::int32_t lookup(const std::vector<std::int32_t>& tokens) const;

  std::size_t item_count() const { return item_count_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::map<std::int32_t, std::int32_t> kids;
    std::int32_t item = kNoItem;
  };
  std::vector<Node> nodes_;
  std::size_t item_count_ = 0;
};

}  // namespace synrec
