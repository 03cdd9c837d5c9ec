#include "synrec/loss/synergy.hpp"

#include <stdexcept>
#include <string>

#include "synrec/tensor/ops.hpp"

namespace synrec {

std::vector<std::int32_t> unimodal_view(const std::vector<std::int32_t>& tokens,
                                        Modality m, const Vocabulary& vocab) {
  std::vector<std::int32_t> out;
  out.reserve(tokens.size());
  for (std::int32_t t : tokens)
    if (vocab.is_special(t) || vocab.is_modality(t, m)) out.push_back(t);
  return out;
}

Tensor pool(const Tensor& decoder_hidden,
            const std::vector<std::int32_t>& targets) {
  if (decoder_hidden.rank() != 2)
    throw std::invalid_argument("pool: decoder states must be rank 2");
  const std::size_t t = decoder_hidden.dim(0);
  if (targets.size() != t)
    throw std::invalid_argument("pool: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(t) + " rows");
  Tensor w = Tensor::zeros({1, t});
  double count = 0.0;
  for (std::size_t i = 0; i < t; ++i)
    if (targets[i] != Vocabulary::kPad) count += w[i] = 1.0;
  return scale(matmul(w, decoder_hidden), 1.0 / (count + kPoolEps));
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel())
    throw std::invalid_argument("cosine: size mismatch");
  Tensor dot = sum(mul(a, b));
  Tensor norms = mul(sqrt(sum(mul(a, a))), sqrt(sum(mul(b, b))));
  return div(dot, add_const(norms, kPoolEps));
}

Tensor synergy_contrastive(const Tensor& z_mask, const Tensor& z_ori,
                           const Tensor& z_uni, double tau) {
  if (tau <= 0.0)
    throw std::invalid_argument("contrastive: temperature must be positive");
  Tensor s_ori = cosine_similarity(z_mask, z_ori);
  Tensor s_uni = cosine_similarity(z_mask, z_uni);
  return softplus(scale(sub(s_uni, s_ori), 1.0 / tau));
}

Tensor view_nll(const Backbone& model, const EncodeResult& enc,
                const std::vector<std::int32_t>& y) {
  if (y.empty()) throw std::invalid_argument("view_nll: empty target");
  std::vector<std::int32_t> tf_input = {Vocabulary::kBos};
  tf_input.insert(tf_input.end(), y.begin(), y.end() - 1);
  Tensor logits = model.decode(tf_input, enc.hidden, enc.pad_mask);
  double real = 0.0;
  for (std::int32_t t : y) real += t != Vocabulary::kPad;
  return scale(cross_entropy(logits, y, Vocabulary::kPad), real);
}

Tensor view_nll(const Backbone& model, const std::vector<std::int32_t>& view,
                const std::vector<std::int32_t>& y) {
  const std::vector<std::uint8_t> valid(view.size(), 1);
  return view_nll(model, model.encode(view, valid), y);
}

Tensor multiview_gen_loss(const Backbone& model, const ViewTriplet& triplet,
                          const std::vector<std::int32_t>& y,
                          const Vocabulary& vocab) {
  // The unimodal view names the active sub-task; the target has to live in
  // that modality's block.
  bool has_text = false, has_vision = false;
  for (std::int32_t t : triplet.uni) {
    has_text |= vocab.is_modality(t, Modality::text);
    has_vision |= vocab.is_modality(t, Modality::vision);
  }
  if (has_text == has_vision)
    throw std::invalid_argument(
        "gen loss: unimodal view must hold exactly one modality");
  const Modality m = has_text ? Modality::text : Modality::vision;
  for (std::int32_t t : y)
    if (!vocab.is_special(t) && !vocab.is_modality(t, m))
      throw std::invalid_argument("gen loss: target token " +
                                  vocab.token_string(t) +
                                  " outside the active modality block");
  Tensor loss = view_nll(model, triplet.ori, y);
  loss = add(loss, view_nll(model, triplet.mask, y));
  return add(loss, view_nll(model, triplet.uni, y));
}

Tensor total_loss(const Tensor& gen, const Tensor& syn, double lambda) {
  if (lambda < 0.0)
    throw std::invalid_argument("total loss: negative weight");
  return add(gen, scale(syn, lambda));
}

}  // namespace synrec
