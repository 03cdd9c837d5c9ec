#include "synrec/pid/pid.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "synrec/loss/synergy.hpp"
#include "synrec/model/beam.hpp"
#include "synrec/saliency/saliency.hpp"

namespace synrec {

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Ranks with every history reduced by the given view transform.
std::vector<std::size_t> view_ranks(
    const Backbone& model, const PrefixTrie& trie, const IdentifierSet& ids,
    const std::vector<EvalPair>& pairs, std::size_t beam_width,
    const Modality* keep_only) {
  NoGradGuard ng;
  std::vector<std::size_t> ranks;
  ranks.reserve(pairs.size());
  for (const EvalPair& pair : pairs) {
    std::vector<std::int32_t> tokens = history_tokens(ids, pair.history);
    if (keep_only) tokens = unimodal_view(tokens, *keep_only, ids.vocab);
    if (tokens.empty()) tokens.push_back(Vocabulary::kBos);
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

}  // namespace

PidReport normalized_pid(double p_t, double p_v, double p_j) {
  if (!(p_j > 0.0))
    throw std::invalid_argument(
        "pid: decomposition undefined for joint score <= 0");
  if (p_t < 0.0 || p_v < 0.0)
    throw std::invalid_argument("pid: unimodal scores must be >= 0");
  const double mx = std::max(p_t, p_v);
  const double mn = std::min(p_t, p_v);
  PidReport r;
  r.p_t = p_t;
  r.p_v = p_v;
  r.p_j = p_j;
  r.synergy = std::max(0.0, p_j - mx) / p_j;
  r.redundancy = mn / p_j;
  r.unique_t = (p_t - mn) / p_j;
  r.unique_v = (p_v - mn) / p_j;
  r.sub_additive = p_j < mx;
  return r;
}

AuditMetric audit_metric_from_string(const std::string& name) {
  if (name == "hr@1") return AuditMetric::hr1;
  if (name == "hr@5") return AuditMetric::hr5;
  if (name == "hr@10") return AuditMetric::hr10;
  if (name == "ndcg@5") return AuditMetric::ndcg5;
  if (name == "ndcg@10") return AuditMetric::ndcg10;
  throw std::invalid_argument("pid: unknown metric '" + name + "'");
}

const char* audit_metric_name(AuditMetric metric) {
  switch (metric) {
    case AuditMetric::hr1: return "hr@1";
    case AuditMetric::hr5: return "hr@5";
    case AuditMetric::hr10: return "hr@10";
    case AuditMetric::ndcg5: return "ndcg@5";
    case AuditMetric::ndcg10: return "ndcg@10";
  }
  throw std::logic_error("pid: unhandled metric");
}

double metric_value(const EvalReport& report, AuditMetric metric) {
  switch (metric) {
    case AuditMetric::hr1: return report.hr1;
    case AuditMetric::hr5: return report.hr5;
    case AuditMetric::hr10: return report.hr10;
    case AuditMetric::ndcg5: return report.ndcg5;
    case AuditMetric::ndcg10: return report.ndcg10;
  }
  throw std::logic_error("pid: unhandled metric");
}

PidReport audit_model(const Backbone& model, const PrefixTrie& trie,
                      const IdentifierSet& ids,
                      const std::vector<EvalPair>& pairs,
                      std::size_t beam_width, AuditMetric metric) {
  const Modality text = Modality::text;
  const Modality vision = Modality::vision;
  const double p_j = metric_value(
      metrics_from_ranks(view_ranks(model, trie, ids, pairs, beam_width, nullptr),
                         beam_width),
      metric);
  const double p_t = metric_value(
      metrics_from_ranks(view_ranks(model, trie, ids, pairs, beam_width, &text),
                         beam_width),
      metric);
  const double p_v = metric_value(
      metrics_from_ranks(view_ranks(model, trie, ids, pairs, beam_width, &vision),
                         beam_width),
      metric);
  return normalized_pid(p_t, p_v, p_j);
}

std::string pid_report_csv(const PidReport& report, const std::string& run_id,
                           AuditMetric metric) {
  std::string out = "run_id,metric,P_t,P_v,P_j,S,R,U_t,U_v,flags\n";
  out += run_id;
  out += ",";
  out += audit_metric_name(metric);
  for (double v : {report.p_t, report.p_v, report.p_j, report.synergy,
                   report.redundancy, report.unique_t, report.unique_v}) {
    out += ",";
    out += format_value(v);
  }
  out += ",";
  out += report.sub_additive ? "sub-additive" : "none";
  out += "\n";
  return out;
}

std::pair<double, double> attention_share(
    const Backbone& model, const IdentifierSet& ids,
    const std::vector<std::vector<std::int32_t>>& histories) {
  NoGradGuard ng;
  double sum_t = 0.0, sum_v = 0.0;
  std::size_t counted = 0;
  for (const auto& items : histories) {
    const std::vector<std::int32_t> tokens = history_tokens(ids, items);
    const EncodeResult enc =
        model.encode(tokens, std::vector<std::uint8_t>(tokens.size(), 1));
    const std::vector<double> scores = saliency_scores(enc.maps, enc.pad_mask);
    double mass_t = 0.0, mass_v = 0.0;
    std::size_t n_t = 0, n_v = 0;
    for (std::size_t i = 0; i < enc.tokens.size(); ++i) {
      if (ids.vocab.is_modality(enc.tokens[i], Modality::text)) {
        mass_t += scores[i];
        ++n_t;
      } else if (ids.vocab.is_modality(enc.tokens[i], Modality::vision)) {
        mass_v += scores[i];
        ++n_v;
      }
    }
    if (n_t == 0 && n_v == 0) continue;
    sum_t += n_t ? mass_t / static_cast<double>(n_t) : 0.0;
    sum_v += n_v ? mass_v / static_cast<double>(n_v) : 0.0;
    ++counted;
  }
  if (counted == 0) return {0.0, 0.0};
  const double mean_t = sum_t / static_cast<double>(counted);
  const double mean_v = sum_v / static_cast<double>(counted);
  const double total = mean_t + mean_v;
  if (total <= 0.0) return {0.0, 0.0};
  return {mean_t / total, mean_v / total};
}

std::string attention_share_csv(double text_share, double vision_share) {
  return "modality,share\ntext," + format_value(text_share) + "\nvision," +
         format_value(vision_share) + "\n";
}

}  // namespace synrec
