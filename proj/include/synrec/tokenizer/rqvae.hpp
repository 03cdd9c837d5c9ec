#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synrec/tensor/tensor.hpp"
#include "synrec/tokenizer/codebook.hpp"
#include "synrec/tokenizer/vocab.hpp"

namespace synrec {

struct RqVaeConfig {
  Modality modality = Modality::text;
  std::size_t input_dim = 32;
  std::size_t latent_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t depth = 3;          // quantization levels
  std::size_t codebook_size = 256;
  double beta = 0.25;             // commitment weight
  double ema_decay = 0.99;
  std::size_t kmeans_iters = 10;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  // Square identity start (requires input == latent == hidden); the MLPs
  // then pass non-negative inputs through unchanged.
  bool identity_init = false;
};

struct RqVaeTrainStats {
  std::vector<double> epoch_recon;  // mean squared reconstruction per epoch
  std::size_t reseeded = 0;         // dead codewords revived
};

// Residual-quantized autoencoder for one modality: linear projection into
// the latent space, a 2-layer MLP encoder, a depth-D codebook stack with
// EMA updates, and a 2-layer MLP decoder trained with a straight-through
// estimator plus commitment term.
class RqVae {
 public:
  explicit RqVae(const RqVaeConfig& cfg);

  const RqVaeConfig& config() const { return cfg_; }
  const CodebookStack& codebooks() const { return stack_; }
  CodebookStack& codebooks() { return stack_; }

  // rows holds n * input_dim doubles, row-major.
  RqVaeTrainStats train(const std::vector<double>& rows, std::size_t n);

  std::vector<double> encode_latent(const double* x) const;
  QuantizeResult tokenize_one(const double* x) const;
  std::vector<double> reconstruct(const double* x) const;
  double recon_error(const std::vector<double>& rows, std::size_t n) const;

 private:
  Tensor encode_batch(const Tensor& x) const;
  Tensor decode_batch(const Tensor& z) const;
  void init_codebooks(const std::vector<double>& rows, std::size_t n,
                      std::mt19937_64& rng);

  RqVaeConfig cfg_;
  Tensor proj_, enc_w1_, enc_b1_, enc_w2_, enc_b2_;
  Tensor dec_w1_, dec_b1_, dec_w2_, dec_b2_;
  CodebookStack stack_;
  std::vector<double> ema_count_;  // [depth][K]
  std::vector<double> ema_sum_;    // [depth][K][latent]
  bool codebooks_ready_ = false;
};

// Joint identifiers over both modality code stacks. Layout per item:
// text codes depth 1..D, then vision codes depth 1..D, then one suffix
// token when the full 2D-code tuple collides with another item's.
struct IdentifierSet {
  Vocabulary vocab;
  std::vector<std::vector<std::int32_t>> identifiers;  // per item
  std::size_t collision_groups = 0;
  std::size_t max_group = 1;
};

IdentifierSet build_identifiers(
    const Vocabulary& base,
    const std::vector<std::vector<std::int32_t>>& text_codes,
    const std::vector<std::vector<std::int32_t>>& vision_codes);

// identifier map file: item_id <TAB> space-separated token strings.
void write_identifier_map(const std::string& path, const IdentifierSet& ids,
                          const std::vector<std::string>& item_ids);
IdentifierSet read_identifier_map(const std::string& path, Vocabulary base,
                                  std::vector<std::string>* item_ids);

}  // namespace synrec
