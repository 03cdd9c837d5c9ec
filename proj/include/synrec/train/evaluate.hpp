#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "synrec/model/backbone.hpp"
#include "synrec/model/beam.hpp"
#include "synrec/model/trie.hpp"
#include "synrec/tokenizer/rqvae.hpp"
#include "synrec/train/split.hpp"

namespace synrec {

struct EvalReport {
  double hr1 = 0.0, hr5 = 0.0, hr10 = 0.0;
  double ndcg5 = 0.0, ndcg10 = 0.0;
  std::vector<std::size_t> ranks;  // per pair, 1-based; 0 = not in the beam
  std::size_t beam_width = 0;
};

// History items concatenated as their identifier tokens; an empty history
// encodes as a lone <bos> so the encoder always sees one real token.
std::vector<std::int32_t> history_tokens(const IdentifierSet& ids,
                                         const std::vector<std::int32_t>& items);

// Rank of each pair's target in the constrained beam output.
std::vector<std::size_t> beam_ranks(const Backbone& model,
                                    const PrefixTrie& trie,
                                    const IdentifierSet& ids,
                                    const std::vector<EvalPair>& pairs,
                                    std::size_t beam_width);

// HR@K = fraction of ranks in [1, K]; NDCG@K adds the 1/log2(rank+1)
// discount for the single relevant item and scores 0 past K.
EvalReport metrics_from_ranks(std::vector<std::size_t> ranks,
                              std::size_t beam_width);

EvalReport evaluate(const Backbone& model, const PrefixTrie& trie,
                    const IdentifierSet& ids,
                    const std::vector<EvalPair>& pairs,
                    std::size_t beam_width);

// CSV rows "metric,name,value" for the five headline metrics.
std::string eval_report_csv(const EvalReport& report, const std::string& name);
// Fixed-width text rendering of the same numbers.
std::string eval_report_table(const EvalReport& report);

}  // namespace synrec
