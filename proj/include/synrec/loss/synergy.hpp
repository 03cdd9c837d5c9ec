#pragma once

#include <cstdint>
#include <vector>

#include "synrec/model/backbone.hpp"
#include "synrec/tensor/tensor.hpp"
#include "synrec/tokenizer/vocab.hpp"

namespace synrec {

// Stability constant shared by pooling and cosine denominators.
inline constexpr double kPoolEps = 1e-7;

// The three input views of one interaction history. uni holds tokens of a
// single modality plus specials; all three condition the same target.
struct ViewTriplet {
  std::vector<std::int32_t> ori;
  std::vector<std::int32_t> mask;
  std::vector<std::int32_t> uni;
};

// Drops every token of the other modality (and collision suffixes),
// keeping specials in place.
std::vector<std::int32_t> unimodal_view(const std::vector<std::int32_t>& tokens,
                                        Modality m, const Vocabulary& vocab);

// Pad-aware mean of decoder states over real target positions:
// Z = sum_t 1[y_t != pad] h_t / (count + eps). All-pad targets pool to the
// zero vector. Returns 1 x d.
Tensor pool(const Tensor& decoder_hidden,
            const std::vector<std::int32_t>& targets);

// dot(a, b) / (|a| |b| + eps); the guard keeps zero vectors finite.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// softplus((sim(mask, uni) - sim(mask, ori)) / tau): the stable form of
// -log of the two-way softmax that pushes the anchor toward the holistic
// view and away from the unimodal shortcut. Equal similarities give ln 2.
Tensor synergy_contrastive(const Tensor& z_mask, const Tensor& z_ori,
                           const Tensor& z_uni, double tau);

// Teacher-forced negative log-likelihood of y given one input view,
// summed over real target positions.
Tensor view_nll(const Backbone& model, const std::vector<std::int32_t>& view,
                const std::vector<std::int32_t>& y);
// Same on an already-encoded view, so callers can share the encoder pass.
Tensor view_nll(const Backbone& model, const EncodeResult& enc,
                const std::vector<std::int32_t>& y);

// Sum of view_nll over the triplet's three views. y must stay inside the
// modality block of the unimodal view (specials aside).
Tensor multiview_gen_loss(const Backbone& model, const ViewTriplet& triplet,
                          const std::vector<std::int32_t>& y,
                          const Vocabulary& vocab);

// gen + lambda * syn.
Tensor total_loss(const Tensor& gen, const Tensor& syn, double lambda);

}  // namespace synrec
