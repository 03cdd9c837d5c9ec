#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "synrec/model/backbone.hpp"
#include "synrec/tokenizer/vocab.hpp"

namespace synrec {

// Per-position received attention mass, with the modality split needed to
// diagnose which stream the encoder leans on.
struct SaliencyProfile {
  std::vector<double> scores;            // aligned with the token sequence
  std::vector<std::size_t> text_idx;     // positions holding text codes
  std::vector<std::size_t> vision_idx;   // positions holding vision codes
  double text_density = 0.0;
  double vision_density = 0.0;
  Modality dominant = Modality::text;
};

struct MaskedView {
  std::vector<std::int32_t> tokens;
  std::vector<std::size_t> masked;  // ascending positions
  double ratio = 0.0;
};

// score_i = (1/(M*N)) * sum over heads and non-pad queries of column i.
// N is the non-pad length, so the scores of a row-normalized, pad-blind
// map sum to exactly 1.
std::vector<double> saliency_scores(const AttentionMaps& maps,
                                    const std::vector<std::uint8_t>& pad_mask);

// Mean score per modality; exact tie goes to text.
struct ModalityDensities {
  double text = 0.0;
  double vision = 0.0;
  Modality dominant = Modality::text;
};
ModalityDensities dominant_modality(const std::vector<double>& scores,
                                    const std::vector<std::size_t>& text_idx,
                                    const std::vector<std::size_t>& vision_idx);

// Scores plus modality bookkeeping for one encoded sequence. Specials and
// collision suffixes belong to neither modality and are never maskable.
SaliencyProfile saliency_profile(const AttentionMaps& maps,
                                 const std::vector<std::int32_t>& tokens,
                                 const std::vector<std::uint8_t>& pad_mask,
                                 const Vocabulary& vocab);

// Number of positions a ratio r selects out of n. Plain ceil(r*n) overshoots
// when r*n lands epsilon above an integer (0.1*10, 0.3*10, ...), so the
// product is nudged down first.
std::size_t mask_count(double r, std::size_t n);

// Masks the top mask_count(r, |dominant set|) positions of the dominant
// modality, highest score first, score ties to the lower index.
MaskedView apply_mask(const std::vector<std::int32_t>& tokens,
                      const SaliencyProfile& profile, double r);

// Ablation view: mask_count(r, |maskable|) positions drawn uniformly from
// the union of both modality sets, saliency ignored.
MaskedView apply_random_mask(const std::vector<std::int32_t>& tokens,
                             const SaliencyProfile& profile, double r,
                             std::mt19937_64& rng);

// Random selection with an explicit count, for ablations that must keep
// the saliency-driven k while randomizing only the choice.
MaskedView random_mask_count(const std::vector<std::int32_t>& tokens,
                             const SaliencyProfile& profile, std::size_t k,
                             double r, std::mt19937_64& rng);

}  // namespace synrec
