#include "synrec/tokenizer/rqvae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "synrec/common/rng.hpp"
#include "synrec/tensor/ops.hpp"
#include "synrec/train/optimizer.hpp"

namespace synrec {

namespace {

Tensor identity_matrix(std::size_t n) {
  Tensor t = Tensor::zeros({n, n}, true);
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

}  // namespace

RqVae::RqVae(const RqVaeConfig& cfg) : cfg_(cfg) {
  if (cfg.depth == 0 || cfg.codebook_size == 0)
    throw std::invalid_argument("rqvae: depth and codebook size must be positive");
  if (cfg.identity_init &&
      (cfg.input_dim != cfg.latent_dim || cfg.latent_dim != cfg.hidden_dim))
    throw std::invalid_argument("rqvae: identity init needs equal widths");
  auto rng = make_rng(cfg.seed, "rqvae-params");
  if (cfg.identity_init) {
    proj_ = identity_matrix(cfg.input_dim);
    enc_w1_ = identity_matrix(cfg.latent_dim);
    enc_w2_ = identity_matrix(cfg.latent_dim);
    dec_w1_ = identity_matrix(cfg.latent_dim);
    dec_w2_ = identity_matrix(cfg.latent_dim);
  } else {
    const double ps = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
    const double ls = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
    const double hs = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
    proj_ = Tensor::randn({cfg.input_dim, cfg.latent_dim}, rng, ps, true);
    enc_w1_ = Tensor::randn({cfg.latent_dim, cfg.hidden_dim}, rng, ls, true);
    enc_w2_ = Tensor::randn({cfg.hidden_dim, cfg.latent_dim}, rng, hs, true);
    dec_w1_ = Tensor::randn({cfg.latent_dim, cfg.hidden_dim}, rng, ls, true);
    dec_w2_ = Tensor::randn({cfg.hidden_dim, cfg.input_dim}, rng, hs, true);
  }
  enc_b1_ = Tensor::zeros({cfg.hidden_dim}, true);
  enc_b2_ = Tensor::zeros({cfg.latent_dim}, true);
  dec_b1_ = Tensor::zeros({cfg.hidden_dim}, true);
  dec_b2_ = Tensor::zeros({cfg.input_dim}, true);
  stack_.modality = cfg.modality;
  stack_.depth = cfg.depth;
  stack_.codebook_size = cfg.codebook_size;
  stack_.dim = cfg.latent_dim;
  stack_.codes.assign(cfg.depth * cfg.codebook_size * cfg.latent_dim, 0.0);
  ema_count_.assign(cfg.depth * cfg.codebook_size, 0.0);
  ema_sum_.assign(stack_.codes.size(), 0.0);
}

Tensor RqVae::encode_batch(const Tensor& x) const {
  Tensor z = matmul(x, proj_);
  Tensor h = relu(add(matmul(z, enc_w1_), enc_b1_));
  return add(matmul(h, enc_w2_), enc_b2_);
}

Tensor RqVae::decode_batch(const Tensor& z) const {
  Tensor h = relu(add(matmul(z, dec_w1_), dec_b1_));
  return add(matmul(h, dec_w2_), dec_b2_);
}

std::vector<double> RqVae::encode_latent(const double* x) const {
  NoGradGuard ng;
  Tensor xin = Tensor::from_data({1, cfg_.input_dim},
                                 std::vector<double>(x, x + cfg_.input_dim));
  Tensor z = encode_batch(xin);
  return {z.data(), z.data() + cfg_.latent_dim};
}

QuantizeResult RqVae::tokenize_one(const double* x) const {
  if (!codebooks_ready_)
    throw std::logic_error("rqvae: codebooks not trained yet");
  const std::vector<double> z = encode_latent(x);
  return quantize(z.data(), stack_);
}

std::vector<double> RqVae::reconstruct(const double* x) const {
  NoGradGuard ng;
  const std::vector<double> z = encode_latent(x);
  QuantizeResult q = quantize(z.data(), stack_);
  std::vector<double> zq(cfg_.latent_dim, 0.0);
  for (std::size_t level = 0; level < cfg_.depth; ++level) {
    const double* e = stack_.codeword(level, static_cast<std::size_t>(q.codes[level]));
    for (std::size_t j = 0; j < cfg_.latent_dim; ++j) zq[j] += e[j];
  }
  Tensor zt = Tensor::from_data({1, cfg_.latent_dim}, std::move(zq));
  Tensor out = decode_batch(zt);
  return {out.data(), out.data() + cfg_.input_dim};
}

double RqVae::recon_error(const std::vector<double>& rows, std::size_t n) const {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = rows.data() + i * cfg_.input_dim;
    const std::vector<double> xhat = reconstruct(x);
    double e = 0.0;
    for (std::size_t j = 0; j < cfg_.input_dim; ++j)
      e += (xhat[j] - x[j]) * (xhat[j] - x[j]);
    total += e / static_cast<double>(cfg_.input_dim);
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

void RqVae::init_codebooks(const std::vector<double>& rows, std::size_t n,
                           std::mt19937_64& rng) {
  const std::size_t d = cfg_.latent_dim;
  const std::size_t K = cfg_.codebook_size;
  // Latents of the whole corpus, then greedy level-by-level k-means on the
  // residuals left by the levels above.
  std::vector<double> residual(n * d);
  {
    NoGradGuard ng;
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> z = encode_latent(rows.data() + i * cfg_.input_dim);
      std::copy(z.begin(), z.end(), residual.begin() + i * d);
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t level = 0; level < cfg_.depth; ++level) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < K; ++k) {
      const double* src = residual.data() + order[k % n] * d;
      std::copy(src, src + d, stack_.codeword(level, k));
    }
    std::vector<std::size_t> assign(n, 0);
    for (std::size_t iter = 0; iter < cfg_.kmeans_iters; ++iter) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* x = residual.data() + i * d;
        std::size_t best = 0;
        double best_dist = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          const double* c = stack_.codeword(level, k);
          double dist = 0.0;
          for (std::size_t j = 0; j < d; ++j) dist += (x[j] - c[j]) * (x[j] - c[j]);
          if (k == 0 || dist < best_dist) {
            best = k;
            best_dist = dist;
          }
        }
        assign[i] = best;
      }
      std::vector<double> sums(K * d, 0.0);
      std::vector<std::size_t> counts(K, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* x = residual.data() + i * d;
        double* s = sums.data() + assign[i] * d;
        for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
        ++counts[assign[i]];
      }
      for (std::size_t k = 0; k < K; ++k) {
        double* c = stack_.codeword(level, k);
        if (counts[k] == 0) {
          // Empty cluster: restart it at a random residual.
          const double* src =
              residual.data() + (rng() % static_cast<std::uint64_t>(n)) * d;
          std::copy(src, src + d, c);
        } else {
          const double inv = 1.0 / static_cast<double>(counts[k]);
          for (std::size_t j = 0; j < d; ++j) c[j] = sums[k * d + j] * inv;
        }
      }
    }
    // Seed EMA state from the final assignment and peel off this level.
    std::vector<double> sums(K * d, 0.0);
    std::vector<std::size_t> counts(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double* x = residual.data() + i * d;
      std::size_t best = 0;
      double best_dist = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double* c = stack_.codeword(level, k);
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) dist += (x[j] - c[j]) * (x[j] - c[j]);
        if (k == 0 || dist < best_dist) {
          best = k;
          best_dist = dist;
        }
      }
      double* s = sums.data() + best * d;
      for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
      ++counts[best];
      const double* c = stack_.codeword(level, best);
      for (std::size_t j = 0; j < d; ++j) x[j] -= c[j];
    }
    for (std::size_t k = 0; k < K; ++k) {
      ema_count_[level * K + k] = static_cast<double>(std::max<std::size_t>(counts[k], 1));
      double* s = ema_sum_.data() + (level * K + k) * d;
      if (counts[k] == 0) {
        const double* c = stack_.codeword(level, k);
        std::copy(c, c + d, s);
      } else {
        std::copy(sums.begin() + k * d, sums.begin() + (k + 1) * d, s);
      }
    }
  }
  codebooks_ready_ = true;
}

RqVaeTrainStats RqVae::train(const std::vector<double>& rows, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rqvae: empty training set");
  if (rows.size() != n * cfg_.input_dim)
    throw std::invalid_argument("rqvae: row buffer does not match count");
  const std::size_t d = cfg_.latent_dim;
  const std::size_t K = cfg_.codebook_size;
  auto rng = make_rng(cfg_.seed, "rqvae-train");
  init_codebooks(rows, n, rng);

  std::vector<Tensor> params = {proj_,   enc_w1_, enc_b1_, enc_w2_, enc_b2_,
                                dec_w1_, dec_b1_, dec_w2_, dec_b2_};
  AdamWConfig ocfg;
  ocfg.lr = cfg_.lr;
  ocfg.weight_decay = 0.0;
  AdamW opt(params, ocfg);

  RqVaeTrainStats stats;
  stats.epoch_recon.push_back(recon_error(rows, n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> epoch_usage(cfg_.depth * K, 0);
    for (std::size_t start = 0; start < n; start += cfg_.batch_size) {
      const std::size_t b = std::min(cfg_.batch_size, n - start);
      std::vector<double> xb(b * cfg_.input_dim);
      for (std::size_t i = 0; i < b; ++i)
        std::copy_n(rows.data() + order[start + i] * cfg_.input_dim, cfg_.input_dim,
                    xb.data() + i * cfg_.input_dim);
      Tape::active().clear();
      Tensor x = Tensor::from_data({b, cfg_.input_dim}, std::move(xb));
      Tensor ze = encode_batch(x);

      // Assignments and partial codeword sums are plain values.
      std::vector<double> qsum(b * d, 0.0);
      std::vector<std::vector<double>> partial(cfg_.depth,
                                               std::vector<double>(b * d, 0.0));
      std::vector<double> batch_counts(cfg_.depth * K, 0.0);
      std::vector<double> batch_sums(cfg_.depth * K * d, 0.0);
      for (std::size_t i = 0; i < b; ++i) {
        QuantizeResult q = quantize(ze.data() + i * d, stack_);
        std::vector<double> run(d, 0.0);
        for (std::size_t level = 0; level < cfg_.depth; ++level) {
          const std::size_t k = static_cast<std::size_t>(q.codes[level]);
          ++epoch_usage[level * K + k];
          batch_counts[level * K + k] += 1.0;
          // EMA target at this level is the residual the codeword served.
          const double* e = stack_.codeword(level, k);
          double* bs = batch_sums.data() + (level * K + k) * d;
          for (std::size_t j = 0; j < d; ++j) {
            const double r_prev = ze[i * d + j] - run[j];
            bs[j] += r_prev;
            run[j] += e[j];
            partial[level][i * d + j] = run[j];
          }
        }
        std::copy(run.begin(), run.end(), qsum.begin() + i * d);
      }

      Tensor q_minus_ze = Tensor::zeros({b, d});
      for (std::size_t i = 0; i < b * d; ++i) q_minus_ze[i] = qsum[i] - ze[i];
      Tensor zq_st = add(ze, q_minus_ze);  // straight-through to the encoder
      Tensor xhat = decode_batch(zq_st);
      Tensor diff = sub(xhat, x);
      Tensor loss = mean(mul(diff, diff));
      for (std::size_t level = 0; level < cfg_.depth; ++level) {
        Tensor target = Tensor::from_data({b, d}, partial[level]);
        Tensor cdiff = sub(ze, target);
        loss = add(loss, scale(mean(mul(cdiff, cdiff)), cfg_.beta));
      }
      if (!std::isfinite(loss.item()))
        throw std::runtime_error("rqvae: non-finite loss at epoch " +
                                 std::to_string(epoch));
      opt.zero_grad();
      Tape::active().backward(loss);
      opt.step();
      Tape::active().clear();

      // EMA codebook update from this batch's assignments.
      const double g = cfg_.ema_decay;
      for (std::size_t level = 0; level < cfg_.depth; ++level) {
        for (std::size_t k = 0; k < K; ++k) {
          const std::size_t ck = level * K + k;
          ema_count_[ck] = g * ema_count_[ck] + (1.0 - g) * batch_counts[ck];
          double* s = ema_sum_.data() + ck * d;
          const double* bs = batch_sums.data() + ck * d;
          for (std::size_t j = 0; j < d; ++j)
            s[j] = g * s[j] + (1.0 - g) * bs[j];
          double* c = stack_.codeword(level, k);
          for (std::size_t j = 0; j < d; ++j)
            c[j] = s[j] / (ema_count_[ck] + 1e-7);
        }
      }
    }

    // Reseed codewords that served nothing this epoch.
    for (std::size_t level = 0; level < cfg_.depth; ++level) {
      for (std::size_t k = 0; k < K; ++k) {
        if (epoch_usage[level * K + k] > 0) continue;
        const std::size_t pick = rng() % n;
        const std::vector<double> z =
            encode_latent(rows.data() + pick * cfg_.input_dim);
        double* c = stack_.codeword(level, k);
        std::copy(z.begin(), z.end(), c);
        ema_count_[level * K + k] = 1.0;
        std::copy(z.begin(), z.end(), ema_sum_.begin() + (level * K + k) * d);
        ++stats.reseeded;
      }
    }
    stats.epoch_recon.push_back(recon_error(rows, n));
  }
  return stats;
}

IdentifierSet build_identifiers(
    const Vocabulary& base,
    const std::vector<std::vector<std::int32_t>>& text_codes,
    const std::vector<std::vector<std::int32_t>>& vision_codes) {
  if (text_codes.size() != vision_codes.size())
    throw std::invalid_argument("identifiers: modality code counts differ");
  const std::size_t n = text_codes.size();
  const std::size_t dep = base.depth();
  IdentifierSet out{base, {}, 0, 1};
  out.identifiers.resize(n);

  std::map<std::vector<std::int32_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    if (text_codes[i].size() != dep || vision_codes[i].size() != dep)
      throw std::invalid_argument("identifiers: code depth mismatch at item " +
                                  std::to_string(i));
    std::vector<std::int32_t> key = text_codes[i];
    key.insert(key.end(), vision_codes[i].begin(), vision_codes[i].end());
    groups[key].push_back(i);
  }
  std::size_t max_group = 1;
  for (const auto& [key, members] : groups)
    max_group = std::max(max_group, members.size());
  out.max_group = max_group;
  out.vocab.set_suffix_count(max_group > 1 ? max_group : 0);

  for (const auto& [key, members] : groups) {
    const bool collided = members.size() > 1;
    if (collided) ++out.collision_groups;
    for (std::size_t slot = 0; slot < members.size(); ++slot) {
      const std::size_t item = members[slot];
      std::vector<std::int32_t>& id = out.identifiers[item];
      id.reserve(2 * dep + (collided ? 1 : 0));
      for (std::size_t level = 0; level < dep; ++level)
        id.push_back(out.vocab.id_of(Modality::text, level + 1,
                                     static_cast<std::size_t>(text_codes[item][level])));
      for (std::size_t level = 0; level < dep; ++level)
        id.push_back(out.vocab.id_of(Modality::vision, level + 1,
                                     static_cast<std::size_t>(vision_codes[item][level])));
      if (collided) id.push_back(out.vocab.suffix_id(slot));
    }
  }
  if (out.collision_groups == 0) out.vocab.set_suffix_count(0);

  // Uniqueness is the whole point; fail loudly if it ever breaks.
  std::map<std::vector<std::int32_t>, std::size_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = seen.emplace(out.identifiers[i], i);
    if (!fresh)
      throw std::logic_error("identifiers: items " + std::to_string(it->second) +
                             " and " + std::to_string(i) + " share an identifier");
  }
  return out;
}

void write_identifier_map(const std::string& path, const IdentifierSet& ids,
                          const std::vector<std::string>& item_ids) {
  if (item_ids.size() != ids.identifiers.size())
    throw std::invalid_argument("identifier map: item id count mismatch");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    os << item_ids[i];
    os << '\t';
    const auto& toks = ids.identifiers[i];
    for (std::size_t j = 0; j < toks.size(); ++j) {
      if (j) os << ' ';
      os << ids.vocab.token_string(toks[j]);
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

IdentifierSet read_identifier_map(const std::string& path, Vocabulary base,
                                  std::vector<std::string>* item_ids) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open");
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t max_suffix = 0;
  bool any_suffix = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ": line without tab: '" + line + "'");
    names.push_back(line.substr(0, tab));
    std::istringstream rest(line.substr(tab + 1));
    std::vector<std::string> toks;
    std::string t;
    while (rest >> t) {
      if (t.size() > 1 && t[0] == '#') {
        any_suffix = true;
        max_suffix = std::max(max_suffix,
                              static_cast<std::size_t>(std::stoul(t.substr(1))));
      }
      toks.push_back(t);
    }
    rows.push_back(std::move(toks));
  }
  IdentifierSet out{base, {}, 0, 1};
  out.vocab.set_suffix_count(any_suffix ? max_suffix + 1 : 0);
  out.max_group = any_suffix ? max_suffix + 1 : 1;
  out.identifiers.reserve(rows.size());
  for (const auto& toks : rows) {
    std::vector<std::int32_t> id;
    id.reserve(toks.size());
    for (const std::string& t : toks) id.push_back(out.vocab.parse_token(t));
    out.identifiers.push_back(std::move(id));
  }
  if (item_ids) *item_ids = std::move(names);
  return out;
}

}  // namespace synrec
