#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "synrec/model/backbone.hpp"
#include "synrec/model/trie.hpp"
#include "synrec/tokenizer/rqvae.hpp"
#include "synrec/train/evaluate.hpp"
#include "synrec/train/split.hpp"

namespace synrec {

// Performance-proxy decomposition of a joint score into synergy,
// redundancy, and per-modality unique shares, each normalized by the
// joint score. Whenever P_j >= max(P_t, P_v) the four components sum to
// one exactly; below that the raw formulas are kept and flagged instead
// of renormalized.
struct PidReport {
  double p_t = 0.0, p_v = 0.0, p_j = 0.0;
  double synergy = 0.0, redundancy = 0.0;
  double unique_t = 0.0, unique_v = 0.0;
  bool sub_additive = false;
};

PidReport normalized_pid(double p_t, double p_v, double p_j);

enum class AuditMetric { hr1, hr5, hr10, ndcg5, ndcg10 };

AuditMetric audit_metric_from_string(const std::string& name);
const char* audit_metric_name(AuditMetric metric);
double metric_value(const EvalReport& report, AuditMetric metric);

// Scores the same eval pairs three ways: full bimodal histories, then
// text-only and vision-only views with the other modality's tokens
// dropped, and decomposes the joint score.
PidReport audit_model(const Backbone& model, const PrefixTrie& trie,
                      const IdentifierSet& ids,
                      const std::vector<EvalPair>& pairs,
                      std::size_t beam_width, AuditMetric metric);

std::string pid_report_csv(const PidReport& report, const std::string& run_id,
                           AuditMetric metric);

// Fraction of per-token attention density received by each modality,
// averaged over histories. A sequence missing one modality contributes
// zero density on that side.
std::pair<double, double> attention_share(
    const Backbone& model, const IdentifierSet& ids,
    const std::vector<std::vector<std::int32_t>>& histories);

std::string attention_share_csv(double text_share, double vision_share);

}  // namespace synrec
