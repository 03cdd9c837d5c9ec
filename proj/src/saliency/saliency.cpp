#include "synrec/saliency/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace synrec {

std::vector<double> saliency_scores(const AttentionMaps& maps,
                                    const std::vector<std::uint8_t>& pad_mask) {
  const std::size_t n = maps.n;
  if (n == 0 || maps.heads.empty())
    throw std::invalid_argument("saliency: empty attention maps");
  if (pad_mask.size() != n)
    throw std::invalid_argument("saliency: mask length mismatch");
  std::size_t n_valid = 0;
  for (std::uint8_t v : pad_mask) n_valid += v != 0;
  if (n_valid == 0) throw std::invalid_argument("saliency: all positions padded");
  std::vector<double> scores(n, 0.0);
  for (const auto& head : maps.heads) {
    if (head.size() != n * n)
      throw std::invalid_argument("saliency: head is not n x n");
    for (std::size_t q = 0; q < n; ++q) {
      if (!pad_mask[q]) continue;  // pad queries carry no meaning
      for (std::size_t i = 0; i < n; ++i) scores[i] += head[q * n + i];
    }
  }
  const double norm =
      1.0 / (static_cast<double>(maps.heads.size()) * static_cast<double>(n_valid));
  for (double& s : scores) s *= norm;
  return scores;
}

ModalityDensities dominant_modality(const std::vector<double>& scores,
                                    const std::vector<std::size_t>& text_idx,
                                    const std::vector<std::size_t>& vision_idx) {
  if (text_idx.empty() || vision_idx.empty())
    throw std::invalid_argument(
        "saliency: cannot diagnose dominance with an empty modality set");
  ModalityDensities out;
  for (std::size_t i : text_idx) out.text += scores.at(i);
  for (std::size_t i : vision_idx) out.vision += scores.at(i);
  out.text /= static_cast<double>(text_idx.size());
  out.vision /= static_cast<double>(vision_idx.size());
  out.dominant = out.vision > out.text ? Modality::vision : Modality::text;
  return out;
}

SaliencyProfile saliency_profile(const AttentionMaps& maps,
                                 const std::vector<std::int32_t>& tokens,
                                 const std::vector<std::uint8_t>& pad_mask,
                                 const Vocabulary& vocab) {
  if (tokens.size() != maps.n)
    throw std::invalid_argument("saliency: token count does not match maps");
  SaliencyProfile p;
  p.scores = saliency_scores(maps, pad_mask);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!pad_mask[i]) continue;
    if (vocab.is_modality(tokens[i], Modality::text))
      p.text_idx.push_back(i);
    else if (vocab.is_modality(tokens[i], Modality::vision))
      p.vision_idx.push_back(i);
  }
  const ModalityDensities d =
      dominant_modality(p.scores, p.text_idx, p.vision_idx);
  p.text_density = d.text;
  p.vision_density = d.vision;
  p.dominant = d.dominant;
  return p;
}

std::size_t mask_count(double r, std::size_t n) {
  if (r < 0.0 || r > 1.0)
    throw std::invalid_argument("saliency: mask ratio outside [0, 1]");
  if (n == 0) return 0;
  const double raw = r * static_cast<double>(n) - 1e-9;
  const double k = std::ceil(raw);
  if (k <= 0.0) return 0;
  return std::min(n, static_cast<std::size_t>(k));
}

namespace {

MaskedView mask_positions(const std::vector<std::int32_t>& tokens,
                          std::vector<std::size_t> picks, double r) {
  MaskedView view;
  view.tokens = tokens;
  view.ratio = r;
  std::sort(picks.begin(), picks.end());
  for (std::size_t i : picks) view.tokens[i] = Vocabulary::kMaskTok;
  view.masked = std::move(picks);
  return view;
}

}  // namespace

MaskedView apply_mask(const std::vector<std::int32_t>& tokens,
                      const SaliencyProfile& profile, double r) {
  const std::vector<std::size_t>& pool =
      profile.dominant == Modality::text ? profile.text_idx : profile.vision_idx;
  const std::size_t k = mask_count(r, pool.size());
  std::vector<std::size_t> order = pool;
  std::stable_sort(order.begin(), order.end(),
                   [&profile](std::size_t a, std::size_t b) {
                     if (profile.scores[a] != profile.scores[b])
                       return profile.scores[a] > profile.scores[b];
                     return a < b;
                   });
  order.resize(k);
  return mask_positions(tokens, std::move(order), r);
}

MaskedView apply_random_mask(const std::vector<std::int32_t>& tokens,
                             const SaliencyProfile& profile, double r,
                             std::mt19937_64& rng) {
  std::vector<std::size_t> pool = profile.text_idx;
  pool.insert(pool.end(), profile.vision_idx.begin(), profile.vision_idx.end());
  std::sort(pool.begin(), pool.end());
  return random_mask_count(tokens, profile, mask_count(r, pool.size()), r, rng);
}

MaskedView random_mask_count(const std::vector<std::int32_t>& tokens,
                             const SaliencyProfile& profile, std::size_t k,
                             double r, std::mt19937_64& rng) {
  std::vector<std::size_t> pool = profile.text_idx;
  pool.insert(pool.end(), profile.vision_idx.begin(), profile.vision_idx.end());
  std::sort(pool.begin(), pool.end());
  if (k > pool.size())
    throw std::invalid_argument("saliency: mask count exceeds maskable pool");
  // Partial Fisher-Yates: the first k slots become the sample.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng() % (pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return mask_positions(tokens, std::move(pool), r);
}

}  // namespace synrec
