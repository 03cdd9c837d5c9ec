#include "synrec/train/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace synrec {

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<std::int32_t> history_tokens(const IdentifierSet& ids,
                                         const std::vector<std::int32_t>& items) {
  std::vector<std::int32_t> tokens;
  for (std::int32_t item : items) {
    if (item < 0 || static_cast<std::size_t>(item) >= ids.identifiers.size())
      throw std::out_of_range("history references unknown item " +
                              std::to_string(item));
    const auto& ident = ids.identifiers[item];
    tokens.insert(tokens.end(), ident.begin(), ident.end());
  }
  if (tokens.empty()) tokens.push_back(Vocabulary::kBos);
  return tokens;
}

std::vector<std::size_t> beam_ranks(const Backbone& model,
                                    const PrefixTrie& trie,
                                    const IdentifierSet& ids,
                                    const std::vector<EvalPair>& pairs,
                                    std::size_t beam_width) {
  NoGradGuard ng;
  std::vector<std::size_t> ranks;
  ranks.reserve(pairs.size());
  for (const EvalPair& pair : pairs) {
    const std::vector<std::int32_t> tokens = history_tokens(ids, pair.history);
    const EncodeResult enc =
        model.encode(tokens, std::vector<std::uint8_t>(tokens.size(), 1));
    const std::vector<BeamHit> hits = beam_search(model, enc, trie, beam_width);
    std::size_t rank = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (hits[i].item == pair.target) {
        rank = i + 1;
        break;
      }
    }
    ranks.push_back(rank);
  }
  return ranks;
}

EvalReport metrics_from_ranks(std::vector<std::size_t> ranks,
                              std::size_t beam_width) {
  EvalReport r;
  r.beam_width = beam_width;
  r.ranks = std::move(ranks);
  if (r.ranks.empty()) return r;
  const double n = static_cast<double>(r.ranks.size());
  for (std::size_t rank : r.ranks) {
    if (rank == 0) continue;
    if (rank <= 1) r.hr1 += 1.0;
    if (rank <= 5) {
      r.hr5 += 1.0;
      r.ndcg5 += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    }
    if (rank <= 10) {
      r.hr10 += 1.0;
      r.ndcg10 += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    }
  }
  r.hr1 /= n;
  r.hr5 /= n;
  r.hr10 /= n;
  r.ndcg5 /= n;
  r.ndcg10 /= n;
  return r;
}

EvalReport evaluate(const Backbone& model, const PrefixTrie& trie,
                    const IdentifierSet& ids,
                    const std::vector<EvalPair>& pairs,
                    std::size_t beam_width) {
  return metrics_from_ranks(beam_ranks(model, trie, ids, pairs, beam_width),
                            beam_width);
}

std::string eval_report_csv(const EvalReport& report, const std::string& name) {
  std::string out = "metric,name,value\n";
  const std::pair<const char*, double> rows[] = {
      {"HR@1", report.hr1},     {"HR@5", report.hr5},
      {"HR@10", report.hr10},   {"NDCG@5", report.ndcg5},
      {"NDCG@10", report.ndcg10}};
  for (const auto& [metric, value] : rows)
    out += std::string(metric) + "," + name + "," + format_value(value) + "\n";
  return out;
}

std::string eval_report_table(const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-8s %8s\n%-8s %8.4f\n%-8s %8.4f\n%-8s %8.4f\n%-8s %8.4f\n"
                "%-8s %8.4f\n",
                "metric", "value", "HR@1", report.hr1, "HR@5", report.hr5,
                "HR@10", report.hr10, "NDCG@5", report.ndcg5, "NDCG@10",
                report.ndcg10);
  return buf;
}

}  // namespace synrec
