#include "synrec/model/trie.hpp"

#include <stdexcept>
#include <string>

namespace synrec {

PrefixTrie::PrefixTrie() { nodes_.emplace_back(); }

PrefixTrie::PrefixTrie(const std::vector<std::vector<std::int32_t>>& identifiers)
    : PrefixTrie() {
  for (std::size_t i = 0; i < identifiers.size(); ++i)
    insert(identifiers[i], static_cast<std::int32_t>(i));
}

void PrefixTrie::insert(const std::vector<std::int32_t>& tokens, std::int32_t item) {
  if (tokens.empty())
    throw std::invalid_argument("trie: empty identifier for item " +
                                std::to_string(item));
  std::int32_t node = 0;
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    if (nodes_[node].item != kNoItem)
      throw std::invalid_argument(
          "trie: item " + std::to_string(item) +
          " extends the identifier of item " + std::to_string(nodes_[node].item));
    auto [it, fresh] = nodes_[node].kids.emplace(
        tokens[j], static_cast<std::int32_t>(nodes_.size()));
    if (fresh) nodes_.emplace_back();
    node = it->second;
  }
  if (nodes_[node].item != kNoItem)
    throw std::invalid_argument("trie: items " +
                                std::to_string(nodes_[node].item) + " and " +
                                std::to_string(item) + " share an identifier");
  if (!nodes_[node].kids.empty())
    throw std::invalid_argument("trie: identifier of item " +
                                std::to_string(item) +
                                " is a prefix of another item's");
  nodes_[node].item = item;
  ++item_count_;
}

std::int32_t PrefixTrie::child(std::int32_t node, std::int32_t token) const {
  const auto& kids = nodes_[static_cast<std::size_t>(node)].kids;
  const auto it = kids.find(token);
  return it == kids.end() ? kNoNode : it->second;
}

const std::map<std::int32_t, std::int32_t>& PrefixTrie::children(
    std::int32_t node) const {
  return nodes_[static_cast<std::size_t>(node)].kids;
}

std::int32_t PrefixTrie::item_at(std::int32_t node) const {
  return nodes_[static_cast<std::size_t>(node)].item;
}

std::int32_t PrefixTrie::lookup(const std::vector<std::int32_t>& tokens) const {
  std::int32_t node = 0;
  for (std::int32_t t : tokens) {
    node = child(node, t);
    if (node == kNoNode) return kNoItem;
  }
  return item_at(node);
}

}  // namespace synrec
