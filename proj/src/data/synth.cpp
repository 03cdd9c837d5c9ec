#include "synrec/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "synrec/common/rng.hpp"

namespace synrec {

namespace {

std::string padded_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

// Stored tables are float32, so the in-memory corpus is snapped to that
// precision up front; save/load is then an exact round trip.
double snap(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

SynthResult generate_synthetic(const SynthConfig& cfg) {
  if (cfg.window < 2)
    throw std::invalid_argument("synth: parity window must be >= 2");
  if (cfg.sigma < 0.0)
    throw std::invalid_argument("synth: noise level must be >= 0");
  if (cfg.bits == 0 || cfg.bits > 16)
    throw std::invalid_argument("synth: bits per modality must be in [1, 16]");
  if (cfg.dim < cfg.bits)
    throw std::invalid_argument(
        "synth: embedding dim must cover one axis per hidden bit");
  const std::size_t categories = std::size_t{1} << cfg.bits;
  if (cfg.items < categories)
    throw std::invalid_argument("synth: fewer items than categories");
  if (cfg.min_len < 3 || cfg.max_len < cfg.min_len)
    throw std::invalid_argument(
        "synth: need 3 <= min_len <= max_len for leave-one-out splits");
  if (cfg.users == 0) throw std::invalid_argument("synth: no users requested");
  if (cfg.popularity < 0.0 || cfg.popularity >= 1.0)
    throw std::invalid_argument("synth: popularity must be in [0, 1)");
  if (cfg.leakage < 0.0 || cfg.leakage >= 1.0)
    throw std::invalid_argument("synth: leakage must be in [0, 1)");
  if (cfg.popularity > 0.0 &&
      cfg.items % (categories * categories) != 0)
    throw std::invalid_argument(
        "synth: popularity skew needs item count divisible by pattern count");

  SynthResult out;
  Dataset& data = out.data;
  data.text.dim = cfg.dim;
  data.vision.dim = cfg.dim;

  const std::uint32_t bit_mask = static_cast<std::uint32_t>(categories - 1);
  const std::size_t patterns = categories * categories;
  const double delta = std::max(1.0, 3.0 * cfg.sigma);
  auto emb_rng = make_rng(cfg.seed, "synth-embeddings");
  std::normal_distribution<double> noise(0.0, cfg.sigma > 0.0 ? cfg.sigma : 1.0);
  auto fill_row = [&](std::vector<double>& rows, std::uint32_t bits_val) {
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      double v = 0.0;
      if (j < cfg.bits) v = (bits_val >> j & 1u) ? delta : -delta;
      if (cfg.sigma > 0.0) v += noise(emb_rng);
      rows.push_back(snap(v));
    }
  };
  for (std::size_t i = 0; i < cfg.items; ++i) {
    const std::uint32_t pattern = static_cast<std::uint32_t>(i % patterns);
    const std::uint32_t b_t = pattern & bit_mask;
    const std::uint32_t b_v = pattern >> cfg.bits;
    out.bits_text.push_back(b_t);
    out.bits_vision.push_back(b_v);
    out.category.push_back(b_t ^ b_v);
    data.item_ids.push_back(padded_name("item", i));
    fill_row(data.text.rows, b_t);
    fill_row(data.vision.rows, b_v);
  }

  std::vector<std::vector<std::int32_t>> by_category(categories);
  for (std::size_t i = 0; i < cfg.items; ++i)
    by_category[out.category[i]].push_back(static_cast<std::int32_t>(i));

  // Per-category cumulative weights for skewed draws. An item's weight
  // depends only on its pattern block, and every complete block holds each
  // hidden-bit pattern of a category exactly once, so the weight total per
  // hidden-bit group is identical by construction.
  std::vector<std::vector<double>> cumulative(categories);
  if (cfg.popularity > 0.0) {
    for (std::size_t c = 0; c < categories; ++c) {
      double acc = 0.0;
      for (std::int32_t idx : by_category[c]) {
        acc += std::pow(cfg.popularity,
                        static_cast<double>(static_cast<std::size_t>(idx) /
                                            patterns));
        cumulative[c].push_back(acc);
      }
    }
  }

  auto seq_rng = make_rng(cfg.seed, "synth-sequences");
  std::uniform_int_distribution<std::size_t> len_dist(cfg.min_len, cfg.max_len);
  std::uniform_int_distribution<std::size_t> item_dist(0, cfg.items - 1);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t len = len_dist(seq_rng);
    std::vector<std::int32_t> seq;
    seq.reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
      if (t < cfg.window) {
        seq.push_back(static_cast<std::int32_t>(item_dist(seq_rng)));
        continue;
      }
      std::uint32_t parity = 0;
      for (std::size_t k = t - cfg.window; k < t; ++k)
        parity ^= out.category[seq[k]];
      std::uint32_t label = parity;
      // The extra draw only happens when leakage is on, so zero-leakage
      // corpora stay byte-identical across versions.
      if (cfg.leakage > 0.0) {
        const double coin = static_cast<double>(seq_rng() >> 11) * 0x1p-53;
        if (coin < cfg.leakage) label = out.bits_text[seq[t - 1]];
      }
      const auto& pool = by_category[label];
      if (cfg.popularity > 0.0) {
        const auto& cdf = cumulative[label];
        const double u = static_cast<double>(seq_rng() >> 11) * 0x1p-53;
        const auto it =
            std::lower_bound(cdf.begin(), cdf.end(), u * cdf.back());
        const std::size_t j = std::min<std::size_t>(
            static_cast<std::size_t>(it - cdf.begin()), pool.size() - 1);
        seq.push_back(pool[j]);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        seq.push_back(pool[pick(seq_rng)]);
      }
    }
    data.user_ids.push_back(padded_name("user", u));
    data.interactions.push_back(std::move(seq));
  }
  return out;
}

}  // namespace synrec
