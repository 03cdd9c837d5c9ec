#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "synrec/model/backbone.hpp"
#include "synrec/tokenizer/rqvae.hpp"
#include "synrec/train/split.hpp"

namespace synrec {

// Ablation switches: wo_SM randomizes the masked positions (same count),
// wo_UN swaps the contrastive negative for another in-batch history, and
// wo_SCL forces the contrastive weight to zero on the unchanged code path.
enum class Variant { full, wo_SM, wo_UN, wo_SCL };

Variant variant_from_string(const std::string& name);
const char* variant_name(Variant v);

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double warmup_ratio = 0.1;   // fraction of total steps ramped linearly
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double mask_ratio = 0.3;
  double lambda = 0.003;
  double tau = 0.07;
  std::uint64_t seed = 1;
  Variant variant = Variant::full;
  std::size_t patience = 0;    // early-stop window on validation NDCG@10; 0 off
  std::size_t eval_beam = 20;  // beam width for validation scoring
  std::size_t log_every = 10;  // emit a log row every this many steps
};

struct TrainLogRow {
  std::size_t step = 0;
  double gen = 0.0, syn = 0.0, total = 0.0;
  double grad_norm = 0.0, lr_scale = 0.0;
  double text_density = 0.0, vision_density = 0.0;
};

struct TrainStats {
  std::vector<TrainLogRow> rows;
  std::vector<double> epoch_loss;     // mean batch loss per epoch
  std::vector<double> valid_ndcg10;   // one entry per validated epoch
  std::size_t steps = 0;
  std::size_t masked_text = 0, masked_vision = 0;  // dominant-side counts
  std::size_t best_epoch = 0;
  double best_valid = 0.0;
  bool stopped_early = false;
};

// Optimizes the generation objective over the four input views plus the
// weighted two-block contrastive term, with linear warmup and the
// variant's substitutions. Deterministic for a fixed seed and config.
TrainStats train_model(Backbone& model, const IdentifierSet& ids,
                       const SplitResult& split, const TrainConfig& cfg);

std::string train_log_csv(const TrainStats& stats);

}  // namespace synrec
