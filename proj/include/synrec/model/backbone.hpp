#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "synrec/tensor/tensor.hpp"

namespace synrec {

struct BackboneConfig {
  std::size_t layers = 4;
  std::size_t heads = 4;  // d_model % heads == 0
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  std::size_t max_len = 128;        // encoder positions
  std::size_t max_target_len = 16;  // decoder positions
  std::size_t vocab_size = 0;
  bool use_positions = true;  // off: permutation-equivariant encoder
  std::uint64_t seed = 1;
};

// Post-softmax attention of the final encoder layer, detached from the
// graph. heads[m] is n*n row-major; row q is query q's distribution over
// keys, so each row sums to 1 and padded keys hold exact zeros.
struct AttentionMaps {
  std::size_t n = 0;
  std::vector<std::vector<double>> heads;
};

struct EncodeResult {
  Tensor hidden;                       // n x d_model
  AttentionMaps maps;
  std::vector<std::int32_t> tokens;    // after any truncation
  std::vector<std::uint8_t> pad_mask;  // 1 = real token, aligned with tokens
  bool truncated = false;
};

// Pre-norm encoder-decoder transformer over the unified vocabulary. All
// projections are bias-free; layer norms carry the affine parameters.
// Every view of a sequence runs through this one parameter set.
class Backbone {
 public:
  explicit Backbone(const BackboneConfig& cfg);

  const BackboneConfig& config() const { return cfg_; }

  // Oversize inputs keep the most recent max_len tokens and set truncated.
  EncodeResult encode(const std::vector<std::int32_t>& tokens,
                      const std::vector<std::uint8_t>& pad_mask) const;

  // Teacher-forced pass: logits for every prefix position at once.
  // prefix must start with BOS; row j conditions only on prefix[0..j].
  Tensor decode(const std::vector<std::int32_t>& prefix,
                const Tensor& encoder_hidden,
                const std::vector<std::uint8_t>& enc_pad_mask) const;

  // Final decoder states (the input of the output projection), one row per
  // prefix position. decode() is exactly these times the unembedding.
  Tensor decode_hidden(const std::vector<std::int32_t>& prefix,
                       const Tensor& encoder_hidden,
                       const std::vector<std::uint8_t>& enc_pad_mask) const;

  // Untracked logits at the last prefix position.
  std::vector<double> decode_step(const std::vector<std::int32_t>& prefix,
                                  const Tensor& encoder_hidden,
                                  const std::vector<std::uint8_t>& enc_pad_mask) const;

  std::vector<std::pair<std::string, Tensor>> named_params();
  std::vector<Tensor> params();

 private:
  struct AttnBlock {
    Tensor wq, wk, wv, wo;
  };
  struct EncoderLayer {
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    AttnBlock attn;
    Tensor ff_w1, ff_w2;
  };
  struct DecoderLayer {
    Tensor ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
    AttnBlock self_attn, cross_attn;
    Tensor ff_w1, ff_w2;
  };

  Tensor attention(const AttnBlock& w, const Tensor& queries,
                   const Tensor& keys_values, const Tensor& mask,
                   AttentionMaps* maps) const;

  BackboneConfig cfg_;
  Tensor tok_emb_, enc_pos_, dec_pos_, out_w_;
  std::vector<EncoderLayer> enc_;
  std::vector<DecoderLayer> dec_;
  Tensor enc_ln_g_, enc_ln_b_, dec_ln_g_, dec_ln_b_;
};

// Checkpoint: tensor blob at path, text metadata at path + ".meta" holding
// config key=value lines plus any extra entries (unknown keys round trip).
void save_checkpoint(Backbone& model, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& extra);
Backbone load_checkpoint(const std::string& path,
                         std::vector<std::pair<std::string, std::string>>* extra);

}  // namespace synrec
