#include "synrec/model/beam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "synrec/tokenizer/vocab.hpp"

namespace synrec {

namespace {

struct Hypothesis {
  std::vector<std::int32_t> prefix;  // starts with <bos>
  std::int32_t node = 0;
  double log_prob = 0.0;
};

bool better(const BeamHit& a, const BeamHit& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

bool hyp_better(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.prefix < b.prefix;
}

double log_sum_exp(const std::vector<double>& v) {
  double hi = v[0];
  for (double x : v) hi = std::max(hi, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace

std::vector<BeamHit> beam_search(const Backbone& model,
                                 const EncodeResult& history,
                                 const PrefixTrie& trie,
                                 std::size_t beam_width) {
  if (beam_width == 0) throw std::invalid_argument("beam: width must be positive");
  if (trie.item_count() == 0) throw std::invalid_argument("beam: empty trie");

  std::vector<Hypothesis> active = {{{Vocabulary::kBos}, trie.root(), 0.0}};
  std::vector<BeamHit> finished;
  while (!active.empty()) {
    std::vector<Hypothesis> next;
    for (const Hypothesis& h : active) {
      const std::vector<double> logits =
          model.decode_step(h.prefix, history.hidden, history.pad_mask);
      const double lse = log_sum_exp(logits);
      for (const auto& [token, child] : trie.children(h.node)) {
        Hypothesis ext;
        ext.prefix = h.prefix;
        ext.prefix.push_back(token);
        ext.node = child;
        ext.log_prob =
            h.log_prob + (logits[static_cast<std::size_t>(token)] - lse);
        if (trie.is_terminal(child)) {
          BeamHit hit;
          hit.item = trie.item_at(child);
          hit.tokens.assign(ext.prefix.begin() + 1, ext.prefix.end());
          hit.log_prob = ext.log_prob;
          finished.push_back(std::move(hit));
        } else {
          next.push_back(std::move(ext));
        }
      }
    }
    std::sort(next.begin(), next.end(), hyp_better);
    if (next.size() > beam_width) next.resize(beam_width);
    active = std::move(next);
  }
  std::sort(finished.begin(), finished.end(), better);
  if (finished.size() > beam_width) finished.resize(beam_width);
  return finished;
}

}  // namespace synrec
