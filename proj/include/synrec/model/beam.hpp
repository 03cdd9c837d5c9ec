#pragma once

#include <cstdint>
#include <vector>

#include "synrec/model/backbone.hpp"
#include "synrec/model/trie.hpp"

namespace synrec {

struct BeamHit {
  std::int32_t item = -1;
  std::vector<std::int32_t> tokens;  // identifier path, no <bos>
  double log_prob = 0.0;
};

// Trie-constrained beam decode over an encoded history. Each step scores
// the full-vocabulary log-softmax, then extends only along trie children,
// so every finished hypothesis is exactly one known item. Results are
// sorted by log-probability, ties by lexicographic token order, at most
// beam_width of them.
std::vector<BeamHit> beam_search(const Backbone& model,
                                 const EncodeResult& history,
                                 const PrefixTrie& trie,
                                 std::size_t beam_width);

}  // namespace synrec
