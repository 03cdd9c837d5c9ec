#include "synrec/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "synrec/common/rng.hpp"
#include "synrec/loss/synergy.hpp"
#include "synrec/model/trie.hpp"
#include "synrec/saliency/saliency.hpp"
#include "synrec/tensor/ops.hpp"
#include "synrec/train/evaluate.hpp"
#include "synrec/train/optimizer.hpp"

namespace synrec {

namespace {

std::vector<std::int32_t> teacher_input(const std::vector<std::int32_t>& y) {
  std::vector<std::int32_t> tf = {Vocabulary::kBos};
  tf.insert(tf.end(), y.begin(), y.end() - 1);
  return tf;
}

std::vector<std::uint8_t> all_valid(std::size_t n) {
  return std::vector<std::uint8_t>(n, 1);
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void check_config(const TrainConfig& cfg) {
  if (cfg.lr < 0.0 || cfg.weight_decay < 0.0 || cfg.lambda < 0.0)
    throw std::invalid_argument("trainer: rates must be >= 0");
  if (!(cfg.tau > 0.0))
    throw std::invalid_argument("trainer: temperature must be positive");
  if (cfg.mask_ratio < 0.0 || cfg.mask_ratio > 1.0)
    throw std::invalid_argument("trainer: mask ratio outside [0, 1]");
  if (cfg.warmup_ratio < 0.0 || cfg.warmup_ratio > 1.0)
    throw std::invalid_argument("trainer: warmup ratio outside [0, 1]");
  if (cfg.epochs == 0 || cfg.batch_size == 0)
    throw std::invalid_argument("trainer: epochs and batch size must be >= 1");
}

}  // namespace

Variant variant_from_string(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "wo_SM") return Variant::wo_SM;
  if (name == "wo_UN") return Variant::wo_UN;
  if (name == "wo_SCL") return Variant::wo_SCL;
  throw std::invalid_argument("trainer: unknown variant '" + name + "'");
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::wo_SM: return "wo_SM";
    case Variant::wo_UN: return "wo_UN";
    case Variant::wo_SCL: return "wo_SCL";
  }
  throw std::logic_error("trainer: unhandled variant");
}

TrainStats train_model(Backbone& model, const IdentifierSet& ids,
                       const SplitResult& split, const TrainConfig& cfg) {
  check_config(cfg);
  if (split.train.empty())
    throw std::invalid_argument("trainer: no training examples");
  const std::size_t depth = ids.vocab.depth();
  for (const auto& ident : ids.identifiers)
    if (ident.size() < 2 * depth)
      throw std::invalid_argument("trainer: identifier shorter than two blocks");

  // wo_SCL is the lambda = 0 run under another name: only the weight
  // changes, never the sequence of tensor ops or random draws.
  const double lambda_eff =
      cfg.variant == Variant::wo_SCL ? 0.0 : cfg.lambda;

  const std::size_t n_train = split.train.size();
  const std::size_t batches =
      (n_train + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = cfg.epochs * batches;
  const std::size_t warmup_steps = static_cast<std::size_t>(
      cfg.warmup_ratio * static_cast<double>(total_steps));

  AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  AdamW opt(model.params(), opt_cfg);

  auto shuffle_rng = make_rng(cfg.seed, "trainer-shuffle");
  auto mask_rng = make_rng(cfg.seed, "trainer-mask");
  auto neg_rng = make_rng(cfg.seed, "trainer-negatives");

  TrainStats stats;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  PrefixTrie trie;
  bool have_trie = false;
  std::size_t since_best = 0;

  auto block_target = [&](const std::vector<std::int32_t>& y, Modality m) {
    const std::size_t off = m == Modality::text ? 0 : depth;
    return std::vector<std::int32_t>(y.begin() + off, y.begin() + off + depth);
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(lo + cfg.batch_size, n_train);
      const std::size_t n = hi - lo;

      // In-batch negatives for wo_UN: detached holistic poolings of the
      // other examples, computed before the graph-building pass.
      std::vector<std::vector<std::vector<double>>> frozen(n);
      if (cfg.variant == Variant::wo_UN) {
        NoGradGuard ng;
        for (std::size_t i = 0; i < n; ++i) {
          const EvalPair& pair = split.train[order[lo + i]];
          const auto tokens = history_tokens(ids, pair.history);
          const EncodeResult enc = model.encode(tokens, all_valid(tokens.size()));
          const auto& y = ids.identifiers[pair.target];
          for (Modality m : {Modality::text, Modality::vision}) {
            const auto y_m = block_target(y, m);
            Tensor z = pool(
                model.decode_hidden(teacher_input(y_m), enc.hidden, enc.pad_mask),
                y_m);
            frozen[i].emplace_back(z.data(), z.data() + z.numel());
          }
        }
      }

      Tensor batch_gen, batch_syn;
      double dens_t = 0.0, dens_v = 0.0;
      std::size_t profiled = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const EvalPair& pair = split.train[order[lo + i]];
        const auto& y = ids.identifiers[pair.target];
        const auto tokens = history_tokens(ids, pair.history);
        const EncodeResult e_ori = model.encode(tokens, all_valid(tokens.size()));
        const auto& x = e_ori.tokens;  // recency-truncated input

        bool both_modalities = false;
        {
          bool has_t = false, has_v = false;
          for (std::int32_t t : x) {
            has_t |= ids.vocab.is_modality(t, Modality::text);
            has_v |= ids.vocab.is_modality(t, Modality::vision);
          }
          both_modalities = has_t && has_v;
        }

        std::vector<std::int32_t> mask_tokens = x;
        if (both_modalities) {
          const SaliencyProfile profile =
              saliency_profile(e_ori.maps, x, e_ori.pad_mask, ids.vocab);
          if (cfg.variant == Variant::wo_SM) {
            const std::size_t dom =
                profile.dominant == Modality::text ? profile.text_idx.size()
                                                   : profile.vision_idx.size();
            mask_tokens = random_mask_count(x, profile,
                                            mask_count(cfg.mask_ratio, dom),
                                            cfg.mask_ratio, mask_rng)
                              .tokens;
          } else {
            mask_tokens = apply_mask(x, profile, cfg.mask_ratio).tokens;
          }
          if (profile.dominant == Modality::text)
            ++stats.masked_text;
          else
            ++stats.masked_vision;
          dens_t += profile.text_density;
          dens_v += profile.vision_density;
          ++profiled;
        }

        auto uni_t = unimodal_view(x, Modality::text, ids.vocab);
        auto uni_v = unimodal_view(x, Modality::vision, ids.vocab);
        if (uni_t.empty()) uni_t.push_back(Vocabulary::kBos);
        if (uni_v.empty()) uni_v.push_back(Vocabulary::kBos);

        const EncodeResult e_mask =
            model.encode(mask_tokens, all_valid(mask_tokens.size()));
        const EncodeResult e_uni_t = model.encode(uni_t, all_valid(uni_t.size()));
        const EncodeResult e_uni_v = model.encode(uni_v, all_valid(uni_v.size()));

        Tensor gen = add(add(view_nll(model, e_ori, y), view_nll(model, e_mask, y)),
                         add(view_nll(model, e_uni_t, y), view_nll(model, e_uni_v, y)));

        Tensor syn;
        bool first_block = true;
        for (Modality m : {Modality::text, Modality::vision}) {
          const auto y_m = block_target(y, m);
          const auto tf_m = teacher_input(y_m);
          Tensor z_mask =
              pool(model.decode_hidden(tf_m, e_mask.hidden, e_mask.pad_mask), y_m);
          Tensor z_ori =
              pool(model.decode_hidden(tf_m, e_ori.hidden, e_ori.pad_mask), y_m);
          Tensor z_uni;
          if (cfg.variant == Variant::wo_UN) {
            std::size_t j = i;
            if (n > 1) {
              j = neg_rng() % (n - 1);
              if (j >= i) ++j;
            }
            const auto& zv = frozen[j][m == Modality::text ? 0 : 1];
            z_uni = Tensor::from_data({1, zv.size()}, zv);
          } else {
            const EncodeResult& e_uni =
                m == Modality::text ? e_uni_t : e_uni_v;
            z_uni =
                pool(model.decode_hidden(tf_m, e_uni.hidden, e_uni.pad_mask), y_m);
          }
          Tensor term = synergy_contrastive(z_mask, z_ori, z_uni, cfg.tau);
          syn = first_block ? term : add(syn, term);
          first_block = false;
        }

        batch_gen = i == 0 ? gen : add(batch_gen, gen);
        batch_syn = i == 0 ? syn : add(batch_syn, syn);
      }

      Tensor loss = scale(total_loss(batch_gen, batch_syn, lambda_eff),
                          1.0 / static_cast<double>(n));
      const double loss_val = loss.item();
      const double gen_val = batch_gen.item() / static_cast<double>(n);
      const double syn_val = batch_syn.item() / static_cast<double>(n);
      if (!std::isfinite(loss_val))
        throw std::runtime_error(
            "trainer: non-finite loss at step " + std::to_string(stats.steps) +
            " (gen " + format_value(gen_val) + ", syn " + format_value(syn_val) +
            ")");

      // Linear warmup, then linear decay to zero over the remaining steps;
      // keeps late training stable once gradients grow sharp.
      const double warm =
          warmup_steps == 0
              ? 1.0
              : std::min(1.0, static_cast<double>(stats.steps + 1) /
                                  static_cast<double>(warmup_steps));
      const double decay =
          total_steps == warmup_steps
              ? 1.0
              : static_cast<double>(total_steps - stats.steps) /
                    static_cast<double>(total_steps - warmup_steps);
      const double lr_scale = std::min(warm, decay);
      opt.zero_grad();
      Tape::active().backward(loss);
      const double grad_norm = opt.step(lr_scale);
      Tape::active().clear();

      epoch_sum += loss_val;
      ++stats.steps;
      if (cfg.log_every && (stats.steps % cfg.log_every == 0 ||
                            stats.steps == total_steps)) {
        TrainLogRow row;
        row.step = stats.steps;
        row.gen = gen_val;
        row.syn = syn_val;
        row.total = loss_val;
        row.grad_norm = grad_norm;
        row.lr_scale = lr_scale;
        row.text_density = profiled ? dens_t / static_cast<double>(profiled) : 0.0;
        row.vision_density =
            profiled ? dens_v / static_cast<double>(profiled) : 0.0;
        stats.rows.push_back(row);
      }
    }
    stats.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));

    if (cfg.patience > 0 && !split.valid.empty()) {
      if (!have_trie) {
        trie = PrefixTrie(ids.identifiers);
        have_trie = true;
      }
      NoGradGuard ng;
      const EvalReport report =
          evaluate(model, trie, ids, split.valid, cfg.eval_beam);
      stats.valid_ndcg10.push_back(report.ndcg10);
      if (report.ndcg10 > stats.best_valid || stats.valid_ndcg10.size() == 1) {
        stats.best_valid = report.ndcg10;
        stats.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        stats.stopped_early = true;
        break;
      }
    }
  }
  return stats;
}

std::string train_log_csv(const TrainStats& stats) {
  std::string out =
      "step,gen,syn,total,grad_norm,lr_scale,text_density,vision_density\n";
  for (const TrainLogRow& r : stats.rows) {
    out += std::to_string(r.step);
    for (double v : {r.gen, r.syn, r.total, r.grad_norm, r.lr_scale,
                     r.text_density, r.vision_density}) {
      out += ",";
      out += format_value(v);
    }
    out += "\n";
  }
  return out;
}

}  // namespace synrec
