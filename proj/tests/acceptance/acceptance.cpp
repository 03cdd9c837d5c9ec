// End-to-end acceptance gate. Each check prints exactly one PASS/FAIL line;
// the process exits nonzero if any check fails. Run with
//   acceptance --tool <path to synrec cli> --workdir <scratch dir>
// --only N restricts the run to one check while debugging.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../testutil.hpp"
#include "synrec/common/rng.hpp"
#include "synrec/data/synth.hpp"
#include "synrec/loss/synergy.hpp"
#include "synrec/model/backbone.hpp"
#include "synrec/model/beam.hpp"
#include "synrec/model/trie.hpp"
#include "synrec/pid/pid.hpp"
#include "synrec/saliency/saliency.hpp"
#include "synrec/tensor/ops.hpp"
#include "synrec/tokenizer/codebook.hpp"
#include "synrec/tokenizer/rqvae.hpp"
#include "synrec/train/evaluate.hpp"
#include "synrec/train/split.hpp"
#include "synrec/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace synrec;
using testutil::bitwise_equal;
using testutil::gradient_check;
using testutil::uniform_tensor;

namespace {

std::string g_tool;
fs::path g_work;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

std::vector<std::uint8_t> ones_mask(std::size_t n) {
  return std::vector<std::uint8_t>(n, 1);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor find_param(Backbone& model, const std::string& name) {
  for (auto& [n, t] : model.named_params())
    if (n == name) return t;
  throw std::runtime_error("no parameter named " + name);
}

BackboneConfig tiny_config(std::size_t vocab_total, std::uint64_t seed) {
  BackboneConfig c;
  c.layers = 1;
  c.heads = 2;
  c.d_model = 16;
  c.d_ff = 32;
  c.max_len = 40;
  c.max_target_len = 6;
  c.vocab_size = vocab_total;
  c.seed = seed;
  return c;
}

// Shared fixture for the composite objectives: a four-token bimodal
// history, its masked and text-only views, and a two-token text target.
struct LossRig {
  Vocabulary vocab{1, 4};
  Backbone model;
  ViewTriplet views;
  std::vector<std::int32_t> y;

  explicit LossRig(std::uint64_t seed)
      : model(tiny_config(Vocabulary(1, 4).total_size(), seed)) {
    const auto T = [this](std::size_t c) {
      return vocab.id_of(Modality::text, 1, c);
    };
    const auto V = [this](std::size_t c) {
      return vocab.id_of(Modality::vision, 1, c);
    };
    views.ori = {T(0), V(1), T(2), V(3)};
    views.mask = {T(0), Vocabulary::kMaskTok, T(2), V(3)};
    views.uni = {T(0), T(2)};
    y = {T(1), T(3)};
  }
};

// ---------------------------------------------------------------------------
// 1. Central differences agree with backprop on every op and on the
//    composite objectives, relative error < 1e-4, 100 instances, < 60 s.

double check_single_op(std::size_t kind, std::mt19937_64& rng) {
  // Fixed per-instance mixing weights give the op non-uniform upstream
  // gradients; drawn once so every finite-difference probe sees the same
  // scalar function.
  auto wfix = [&rng](std::vector<std::size_t> shape) {
    return uniform_tensor(std::move(shape), rng, -1.0, 1.0, false);
  };
  switch (kind) {
    case 0: {  // add, same shape
      Tensor a = uniform_tensor({3, 4}, rng), b = uniform_tensor({3, 4}, rng);
      Tensor w = wfix({3, 4});
      return gradient_check({a, b}, [&] { return sum(mul(add(a, b), w)); });
    }
    case 1: {  // add, row broadcast
      Tensor a = uniform_tensor({3, 4}, rng), b = uniform_tensor({4}, rng);
      Tensor w = wfix({3, 4});
      return gradient_check({a, b}, [&] { return sum(mul(add(a, b), w)); });
    }
    case 2: {
      Tensor a = uniform_tensor({3, 4}, rng), b = uniform_tensor({3, 4}, rng);
      Tensor w = wfix({3, 4});
      return gradient_check({a, b}, [&] { return sum(mul(sub(a, b), w)); });
    }
    case 3: {
      Tensor a = uniform_tensor({3, 4}, rng), b = uniform_tensor({3, 4}, rng);
      Tensor w = wfix({3, 4});
      return gradient_check({a, b}, [&] { return sum(mul(mul(a, b), w)); });
    }
    case 4: {  // div, denominator kept away from zero
      Tensor a = uniform_tensor({3, 4}, rng);
      Tensor b = uniform_tensor({3, 4}, rng, 0.5, 1.5);
      Tensor w = wfix({3, 4});
      return gradient_check({a, b}, [&] { return sum(mul(div(a, b), w)); });
    }
    case 5: {
      Tensor a = uniform_tensor({3, 4}, rng);
      Tensor w = wfix({3, 4});
      return gradient_check({a}, [&] { return sum(mul(scale(a, 1.7), w)); });
    }
    case 6: {
      Tensor a = uniform_tensor({3, 4}, rng);
      Tensor w = wfix({3, 4});
      return gradient_check({a},
                            [&] { return sum(mul(add_const(a, -0.4), w)); });
    }
    case 7: {
      Tensor a = uniform_tensor({3, 4}, rng), b = uniform_tensor({4, 2}, rng);
      Tensor w = wfix({3, 2});
      return gradient_check({a, b}, [&] { return sum(mul(matmul(a, b), w)); });
    }
    case 8: {
      Tensor a = uniform_tensor({3, 4}, rng);
      Tensor w = wfix({4, 3});
      return gradient_check({a}, [&] { return sum(mul(transpose(a), w)); });
    }
    case 9: {  // relu, values nudged off the kink
      Tensor a = uniform_tensor({3, 4}, rng);
      for (std::size_t i = 0; i < a.numel(); ++i)
        if (std::abs(a[i]) < 0.02) a[i] += a[i] >= 0.0 ? 0.05 : -0.05;
      Tensor w = wfix({3, 4});
      return gradient_check({a}, [&] { return sum(mul(relu(a), w)); });
    }
    case 10: {
      Tensor a = uniform_tensor({3, 4}, rng, 0.5, 2.0);
      Tensor w = wfix({3, 4});
      return gradient_check({a}, [&] { return sum(mul(synrec::sqrt(a), w)); });
    }
    case 11: {
      Tensor a = uniform_tensor({3, 4}, rng, -3.0, 3.0);
      Tensor w = wfix({3, 4});
      return gradient_check({a}, [&] { return sum(mul(softplus(a), w)); });
    }
    case 12: {
      Tensor a = uniform_tensor({3, 4}, rng, -2.0, 2.0);
      Tensor w = wfix({3, 4});
      return gradient_check({a}, [&] { return sum(mul(softmax(a, 0), w)); });
    }
    case 13: {
      Tensor a = uniform_tensor({3, 4}, rng, -2.0, 2.0);
      Tensor w = wfix({3, 4});
      return gradient_check({a}, [&] { return sum(mul(softmax(a, 1), w)); });
    }
    case 14: {
      Tensor a = uniform_tensor({3, 4}, rng, -2.0, 2.0);
      Tensor w = wfix({3, 4});
      return gradient_check({a},
                            [&] { return sum(mul(log_softmax(a, 1), w)); });
    }
    case 15: {
      Tensor a = uniform_tensor({3, 4}, rng);
      return gradient_check({a}, [&] { return sum(a); });
    }
    case 16: {
      Tensor a = uniform_tensor({3, 4}, rng);
      return gradient_check({a}, [&] { return mean(a); });
    }
    case 17: {
      Tensor x = uniform_tensor({4, 6}, rng);
      Tensor g = uniform_tensor({6}, rng, 0.5, 1.5);
      Tensor b = uniform_tensor({6}, rng);
      Tensor w = wfix({4, 6});
      return gradient_check(
          {x, g, b}, [&] { return sum(mul(layer_norm(x, g, b), w)); });
    }
    case 18: {  // embedding with a repeated row exercises scatter-add
      Tensor table = uniform_tensor({6, 4}, rng);
      const std::vector<std::int32_t> ids = {0, 2, 2, 5, 1};
      Tensor w = wfix({5, 4});
      return gradient_check(
          {table}, [&] { return sum(mul(embedding(table, ids), w)); });
    }
    case 19: {  // cross entropy with one ignored row
      Tensor logits = uniform_tensor({4, 7}, rng, -2.0, 2.0);
      const std::vector<std::int32_t> targets = {1, 0, 3, 6};
      return gradient_check(
          {logits}, [&] { return cross_entropy(logits, targets, 0); });
    }
    case 20: {
      Tensor a = uniform_tensor({3, 6}, rng);
      Tensor w = wfix({3, 3});
      return gradient_check({a},
                            [&] { return sum(mul(slice_cols(a, 1, 3), w)); });
    }
    default: {  // concat of uneven column blocks
      Tensor a = uniform_tensor({3, 2}, rng), b = uniform_tensor({3, 3}, rng);
      Tensor c = uniform_tensor({3, 1}, rng);
      Tensor w = wfix({3, 6});
      return gradient_check(
          {a, b, c}, [&] { return sum(mul(concat_cols({a, b, c}), w)); });
    }
  }
}

double check_contrastive(std::mt19937_64& rng) {
  Tensor zm = uniform_tensor({1, 8}, rng);
  Tensor zo = uniform_tensor({1, 8}, rng);
  Tensor zu = uniform_tensor({1, 8}, rng);
  return gradient_check(
      {zm, zo, zu}, [&] { return synergy_contrastive(zm, zo, zu, 0.07); });
}

double check_generation(std::mt19937_64& rng) {
  LossRig rig(rng());
  static const char* probes[] = {"tok_emb", "enc.0.attn.wq", "dec.0.cross.wv",
                                 "out_w", "enc.0.ln1.g"};
  Tensor probe = find_param(rig.model, probes[rng() % 5]);
  return gradient_check({probe}, [&] {
    return multiview_gen_loss(rig.model, rig.views, rig.y, rig.vocab);
  });
}

double check_total_objective(std::mt19937_64& rng) {
  LossRig rig(rng());
  static const char* probes[] = {"enc.0.ln1.g", "dec.0.ln3.g", "out_w"};
  Tensor probe = find_param(rig.model, probes[rng() % 3]);
  std::vector<std::int32_t> tf = {Vocabulary::kBos};
  tf.insert(tf.end(), rig.y.begin(), rig.y.end() - 1);
  return gradient_check({probe}, [&] {
    Tensor gen = multiview_gen_loss(rig.model, rig.views, rig.y, rig.vocab);
    EncodeResult em =
        rig.model.encode(rig.views.mask, ones_mask(rig.views.mask.size()));
    EncodeResult eo =
        rig.model.encode(rig.views.ori, ones_mask(rig.views.ori.size()));
    EncodeResult eu =
        rig.model.encode(rig.views.uni, ones_mask(rig.views.uni.size()));
    auto pooled = [&](const EncodeResult& e) {
      return pool(rig.model.decode_hidden(tf, e.hidden, e.pad_mask), rig.y);
    };
    Tensor syn = synergy_contrastive(pooled(em), pooled(eo), pooled(eu), 0.07);
    return total_loss(gen, syn, 0.005);
  });
}

Outcome check_gradients() {
  const auto t0 = Clock::now();
  constexpr std::size_t kSingleKinds = 22;
  constexpr std::size_t kKinds = kSingleKinds + 3;
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    auto rng = make_rng(9000 + i, "acceptance-grad");
    const std::size_t kind = i % kKinds;
    double err = 0.0;
    if (kind < kSingleKinds)
      err = check_single_op(kind, rng);
    else if (kind == kSingleKinds)
      err = check_contrastive(rng);
    else if (kind == kSingleKinds + 1)
      err = check_generation(rng);
    else
      err = check_total_objective(rng);
    worst = std::max(worst, err);
  }
  const double elapsed = seconds_since(t0);
  const bool pass = worst < 1e-4 && elapsed < 60.0;
  return {pass, fmt("worst rel err %.2e over 100 instances in %.1fs", worst,
                    elapsed)};
}

// ---------------------------------------------------------------------------
// 2. Greedy residual quantization matches an exhaustive per-level scan,
//    including the lowest-index tie rule, and residual norms never grow
//    once every level carries a zero codeword.

Outcome check_quantizer() {
  static const std::size_t k_table[] = {2, 3, 4, 5, 8, 16, 33, 64};
  std::size_t exact = 0;
  for (std::size_t t = 0; t < 200; ++t) {
    auto rng = make_rng(5000 + t, "acceptance-quant");
    CodebookStack st;
    st.depth = 1 + t % 4;
    st.codebook_size = k_table[t % 8];
    st.dim = 1 + (t / 8) % 4;
    st.codes.resize(st.depth * st.codebook_size * st.dim);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : st.codes) v = u(rng);

    std::vector<double> z(st.dim);
    if (t % 3 == 0 && st.codebook_size >= 2) {
      // Duplicate codewords force exact distance ties at every level; the
      // probe sits right on the duplicated word.
      for (std::size_t level = 0; level < st.depth; ++level)
        std::memcpy(st.codeword(level, 1), st.codeword(level, 0),
                    st.dim * sizeof(double));
      std::memcpy(z.data(), st.codeword(0, 0), st.dim * sizeof(double));
    } else if (t % 5 == 0) {
      std::memcpy(z.data(), st.codeword(0, st.codebook_size - 1),
                  st.dim * sizeof(double));
    } else {
      for (auto& v : z) v = u(rng);
    }

    const QuantizeResult got = quantize(z.data(), st);

    std::vector<double> r = z;
    std::vector<std::int32_t> codes;
    std::vector<double> norms;
    auto norm = [&] {
      double s = 0.0;
      for (double v : r) s += v * v;
      return std::sqrt(s);
    };
    norms.push_back(norm());
    for (std::size_t level = 0; level < st.depth; ++level) {
      std::size_t best = 0;
      double best_dist = 0.0;
      for (std::size_t k = 0; k < st.codebook_size; ++k) {
        const double* e = st.codeword(level, k);
        double dist = 0.0;
        for (std::size_t j = 0; j < st.dim; ++j) {
          const double d = r[j] - e[j];
          dist += d * d;
        }
        if (k == 0 || dist < best_dist) {
          best = k;
          best_dist = dist;
        }
      }
      const double* e = st.codeword(level, best);
      for (std::size_t j = 0; j < st.dim; ++j) r[j] -= e[j];
      codes.push_back(static_cast<std::int32_t>(best));
      norms.push_back(norm());
    }

    const bool same =
        got.codes == codes &&
        got.residual.size() == r.size() &&
        std::memcmp(got.residual.data(), r.data(),
                    r.size() * sizeof(double)) == 0 &&
        got.residual_norms.size() == norms.size() &&
        std::memcmp(got.residual_norms.data(), norms.data(),
                    norms.size() * sizeof(double)) == 0;
    exact += same;
  }

  std::size_t monotone = 0;
  for (std::size_t t = 0; t < 200; ++t) {
    auto rng = make_rng(6000 + t, "acceptance-quant-zero");
    CodebookStack st;
    st.depth = 1 + t % 4;
    st.codebook_size = 2 + t % 7;
    st.dim = 1 + t % 5;
    st.codes.resize(st.depth * st.codebook_size * st.dim);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : st.codes) v = u(rng);
    for (std::size_t level = 0; level < st.depth; ++level)
      std::fill_n(st.codeword(level, st.codebook_size - 1), st.dim, 0.0);
    std::vector<double> z(st.dim);
    for (auto& v : z) v = u(rng);
    const QuantizeResult q = quantize(z.data(), st);
    bool ok = true;
    for (std::size_t d = 0; d + 1 < q.residual_norms.size(); ++d)
      ok = ok && q.residual_norms[d + 1] <= q.residual_norms[d];
    monotone += ok;
  }

  const bool pass = exact == 200 && monotone == 200;
  return {pass, fmt("exhaustive match %zu/200, zero-augmented monotone %zu/200",
                    exact, monotone)};
}

// ---------------------------------------------------------------------------
// 3. Saliency score identities: uniform attention spreads to 1/N on real
//    positions, a one-hot map concentrates to an indicator, and random
//    padded maps keep total mass 1 with exact zeros on padding.

Outcome check_saliency_scores() {
  bool pass = true;
  std::string note;

  {
    const std::size_t n = 7, valid = 5, heads = 2;
    AttentionMaps maps;
    maps.n = n;
    for (std::size_t h = 0; h < heads; ++h) {
      std::vector<double> m(n * n, 0.0);
      for (std::size_t q = 0; q < valid; ++q)
        for (std::size_t k = 0; k < valid; ++k) m[q * n + k] = 1.0 / 5.0;
      maps.heads.push_back(std::move(m));
    }
    std::vector<std::uint8_t> pad = {1, 1, 1, 1, 1, 0, 0};
    const std::vector<double> s = saliency_scores(maps, pad);
    for (std::size_t i = 0; i < valid; ++i)
      pass = pass && std::abs(s[i] - 0.2) <= 1e-12;
    for (std::size_t i = valid; i < n; ++i) pass = pass && s[i] == 0.0;
    if (!pass) note = "uniform identity failed";
  }

  if (pass) {
    const std::size_t n = 6, valid = 4, heads = 3, target = 2;
    AttentionMaps maps;
    maps.n = n;
    for (std::size_t h = 0; h < heads; ++h) {
      std::vector<double> m(n * n, 0.0);
      for (std::size_t q = 0; q < valid; ++q) m[q * n + target] = 1.0;
      maps.heads.push_back(std::move(m));
    }
    std::vector<std::uint8_t> pad(n, 0);
    for (std::size_t i = 0; i < valid; ++i) pad[i] = 1;
    const std::vector<double> s = saliency_scores(maps, pad);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == target)
        pass = pass && std::abs(s[i] - 1.0) <= 1e-12;
      else
        pass = pass && s[i] == 0.0;
    }
    if (!pass) note = "one-hot identity failed";
  }

  std::size_t batches_ok = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    auto rng = make_rng(4000 + t, "acceptance-sal");
    const std::size_t n = 2 + rng() % 9;
    const std::size_t valid = 1 + rng() % n;
    const std::size_t heads = 1 + rng() % 4;
    std::uniform_real_distribution<double> u(0.05, 1.0);
    AttentionMaps maps;
    maps.n = n;
    for (std::size_t h = 0; h < heads; ++h) {
      std::vector<double> m(n * n, 0.0);
      for (std::size_t q = 0; q < valid; ++q) {
        double row_sum = 0.0;
        for (std::size_t k = 0; k < valid; ++k) {
          m[q * n + k] = u(rng);
          row_sum += m[q * n + k];
        }
        for (std::size_t k = 0; k < valid; ++k) m[q * n + k] /= row_sum;
      }
      maps.heads.push_back(std::move(m));
    }
    std::vector<std::uint8_t> pad(n, 0);
    for (std::size_t i = 0; i < valid; ++i) pad[i] = 1;
    const std::vector<double> s = saliency_scores(maps, pad);
    double total = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      ok = ok && s[i] >= 0.0;
      if (i >= valid) ok = ok && s[i] == 0.0;
      total += s[i];
    }
    ok = ok && std::abs(total - 1.0) <= 1e-12;
    batches_ok += ok;
  }
  pass = pass && batches_ok == 100;
  if (note.empty()) note = fmt("identities hold, %zu/100 random padded batches",
                               batches_ok);
  return {pass, note};
}

// ---------------------------------------------------------------------------
// 4. Masking contract over the full ratio grid: exact ceil count, masked
//    positions stay inside the dominant modality, and the selection equals
//    a sort oracle under score ties.

Outcome check_masking() {
  std::size_t trials_ok = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    auto rng = make_rng(7000 + t, "acceptance-mask");
    const std::size_t n = 4 + rng() % 17;
    SaliencyProfile prof;
    prof.scores.resize(n);
    for (;;) {
      prof.text_idx.clear();
      prof.vision_idx.clear();
      for (std::size_t p = 0; p < n; ++p) {
        switch (rng() % 5) {
          case 0: break;  // special position, never maskable
          case 1:
          case 2: prof.text_idx.push_back(p); break;
          default: prof.vision_idx.push_back(p); break;
        }
      }
      if (!prof.text_idx.empty() && !prof.vision_idx.empty()) break;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& s : prof.scores) s = u(rng);
    if (t % 2 == 0 && prof.text_idx.size() >= 2)
      prof.scores[prof.text_idx[1]] = prof.scores[prof.text_idx[0]];
    if (t % 3 == 0 && prof.vision_idx.size() >= 2)
      prof.scores[prof.vision_idx[1]] = prof.scores[prof.vision_idx[0]];
    const ModalityDensities d =
        dominant_modality(prof.scores, prof.text_idx, prof.vision_idx);
    prof.text_density = d.text;
    prof.vision_density = d.vision;
    prof.dominant = d.dominant;
    const auto& dom =
        prof.dominant == Modality::text ? prof.text_idx : prof.vision_idx;

    std::vector<std::int32_t> tokens(n);
    for (std::size_t p = 0; p < n; ++p)
      tokens[p] = 100 + static_cast<std::int32_t>(p);

    bool all_r_ok = true;
    for (std::size_t i = 0; i <= 10; ++i) {
      const double r = static_cast<double>(i) / 10.0;
      const MaskedView mv = apply_mask(tokens, prof, r);
      const std::size_t expect = (i * dom.size() + 9) / 10;  // ceil(i*n/10)
      bool ok = mv.masked.size() == expect;

      std::vector<std::size_t> order = dom;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return prof.scores[a] > prof.scores[b];
                       });
      order.resize(expect);
      std::sort(order.begin(), order.end());
      ok = ok && mv.masked == order;

      std::vector<bool> is_masked(n, false);
      for (std::size_t p : mv.masked) is_masked[p] = true;
      for (std::size_t p = 0; p < n; ++p) {
        const std::int32_t want =
            is_masked[p] ? Vocabulary::kMaskTok : tokens[p];
        ok = ok && mv.tokens[p] == want;
      }
      all_r_ok = all_r_ok && ok;
    }
    trials_ok += all_r_ok;
  }
  return {trials_ok == 100,
          fmt("%zu/100 profiles exact on the 11-point ratio grid", trials_ok)};
}

// ---------------------------------------------------------------------------
// 5. Loss closed forms: ln 2 at equal similarities, saturation toward 0 at
//    opposite poles, and the uniform-logit value of the generation loss.

Outcome check_loss_values() {
  bool pass = true;
  std::string note;
  NoGradGuard ng;

  auto rng = make_rng(31, "acceptance-loss");
  Tensor zm = uniform_tensor({1, 8}, rng, -1.0, 1.0, false);
  Tensor zo = uniform_tensor({1, 8}, rng, -1.0, 1.0, false);
  const double ln2_val = synergy_contrastive(zm, zo, zo, 0.07).item();
  pass = pass && std::abs(ln2_val - std::log(2.0)) <= 1e-12;

  Tensor pole = uniform_tensor({1, 8}, rng, 0.5, 1.5, false);
  Tensor anti = scale(pole, -1.0);
  const double sat = synergy_contrastive(pole, pole, anti, 0.07).item();
  pass = pass && sat >= 0.0 && sat < 1e-12;

  LossRig rig(123);
  Tensor out_w = find_param(rig.model, "out_w");
  std::fill(out_w.data(), out_w.data() + out_w.numel(), 0.0);
  const double gen =
      multiview_gen_loss(rig.model, rig.views, rig.y, rig.vocab).item();
  const double expect =
      3.0 * 2.0 * std::log(static_cast<double>(rig.vocab.total_size()));
  pass = pass && std::abs(gen - expect) <= 1e-9;

  note = fmt("ln2 err %.1e, saturation %.1e, uniform-logit err %.1e",
             std::abs(ln2_val - std::log(2.0)), sat, std::abs(gen - expect));
  return {pass, note};
}

// ---------------------------------------------------------------------------
// 6. With the beam as wide as the catalog, the top hit equals exhaustive
//    enumeration, bitwise, over 50 random model states; the best finished
//    score never drops as the beam widens.

double beam_lse(const std::vector<double>& v) {
  double hi = v[0];
  for (double x : v) hi = std::max(hi, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

Outcome check_beam() {
  NoGradGuard ng;
  Vocabulary base(2, 8);
  std::vector<std::vector<std::int32_t>> tc, vc;
  for (std::int32_t i = 0; i < 64; ++i) {
    tc.push_back({i / 8, i % 8});
    vc.push_back({i % 8, (i / 8 + 3) % 8});
  }
  const IdentifierSet ids = build_identifiers(base, tc, vc);
  const PrefixTrie trie(ids.identifiers);

  std::size_t states_ok = 0;
  bool monotone = true;
  for (std::size_t s = 0; s < 50; ++s) {
    Backbone model(tiny_config(ids.vocab.total_size(), 1000 + s));
    auto rng = make_rng(2000 + s, "acceptance-beam");
    std::vector<std::int32_t> items(3 + rng() % 5);
    for (auto& it : items) it = static_cast<std::int32_t>(rng() % 64);
    const std::vector<std::int32_t> toks = history_tokens(ids, items);
    const EncodeResult enc = model.encode(toks, ones_mask(toks.size()));

    std::int32_t best_item = -1;
    double best_lp = 0.0;
    std::vector<std::int32_t> best_path;
    for (std::int32_t item = 0; item < 64; ++item) {
      double lp = 0.0;
      std::vector<std::int32_t> prefix = {Vocabulary::kBos};
      for (std::int32_t tok : ids.identifiers[item]) {
        const std::vector<double> logits =
            model.decode_step(prefix, enc.hidden, enc.pad_mask);
        lp = lp + (logits[static_cast<std::size_t>(tok)] - beam_lse(logits));
        prefix.push_back(tok);
      }
      const bool better =
          best_item < 0 || lp > best_lp ||
          (lp == best_lp && ids.identifiers[item] < best_path);
      if (better) {
        best_item = item;
        best_lp = lp;
        best_path = ids.identifiers[item];
      }
    }

    const std::vector<BeamHit> full = beam_search(model, enc, trie, 64);
    const bool ok = !full.empty() && full[0].item == best_item &&
                    bitwise_equal(full[0].log_prob, best_lp);
    states_ok += ok;

    double prev = -1e300;
    for (std::size_t width : {1u, 2u, 4u, 8u, 16u, 32u, 64u}) {
      const std::vector<BeamHit> hits = beam_search(model, enc, trie, width);
      if (hits.empty()) {
        monotone = false;
        break;
      }
      monotone = monotone && hits[0].log_prob >= prev - 1e-12;
      prev = std::max(prev, hits[0].log_prob);
    }
  }
  const bool pass = states_ok == 50 && monotone;
  return {pass, fmt("exhaustive match %zu/50, width-monotone %s", states_ok,
                    monotone ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 7. Synergy decomposition: pinned example, exact sum to one, scale
//    invariance, and the sub-additive flag.

Outcome check_decomposition() {
  bool pass = true;

  const PidReport ex = normalized_pid(0.04, 0.02, 0.08);
  pass = pass && std::abs(ex.synergy - 0.5) <= 1e-12;
  pass = pass && std::abs(ex.redundancy - 0.25) <= 1e-12;
  pass = pass && std::abs(ex.unique_t - 0.25) <= 1e-12;
  pass = pass && std::abs(ex.unique_v) <= 1e-12;
  pass = pass && !ex.sub_additive;

  auto rng = make_rng(77, "acceptance-pid");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t triples_ok = 0;
  for (std::size_t t = 0; t < 1000; ++t) {
    const double p_t = u(rng) + 1e-6;
    const double p_v = u(rng) + 1e-6;
    const double p_j = std::max(p_t, p_v) + u(rng) + 1e-6;
    const PidReport r = normalized_pid(p_t, p_v, p_j);
    bool ok = !r.sub_additive;
    const double total = r.synergy + r.redundancy + r.unique_t + r.unique_v;
    ok = ok && std::abs(total - 1.0) <= 1e-12;
    ok = ok && r.synergy >= 0.0 && r.redundancy >= 0.0 && r.unique_t >= 0.0 &&
         r.unique_v >= 0.0;
    for (double c : {1e-3, 0.5, 3.0}) {
      const PidReport rs = normalized_pid(c * p_t, c * p_v, c * p_j);
      ok = ok && std::abs(rs.synergy - r.synergy) <= 1e-12 &&
           std::abs(rs.redundancy - r.redundancy) <= 1e-12 &&
           std::abs(rs.unique_t - r.unique_t) <= 1e-12 &&
           std::abs(rs.unique_v - r.unique_v) <= 1e-12;
    }
    triples_ok += ok;
  }
  pass = pass && triples_ok == 1000;

  const PidReport sub = normalized_pid(0.5, 0.1, 0.4);
  pass = pass && sub.sub_additive && sub.synergy == 0.0;
  const PidReport edge = normalized_pid(0.3, 0.1, 0.3);
  pass = pass && !edge.sub_additive && edge.synergy == 0.0;
  const double edge_sum =
      edge.synergy + edge.redundancy + edge.unique_t + edge.unique_v;
  pass = pass && std::abs(edge_sum - 1.0) <= 1e-12;

  return {pass, fmt("pinned example exact, %zu/1000 triples within 1e-12",
                    triples_ok)};
}

// ---------------------------------------------------------------------------
// 8. Ranking metrics equal the direct formulas on random rank lists and
//    are monotone in the cutoff.

Outcome check_metrics() {
  std::size_t lists_ok = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    auto rng = make_rng(8800 + t, "acceptance-metr");
    const std::size_t n = 1 + rng() % 50;
    std::vector<std::size_t> ranks(n);
    for (auto& r : ranks) r = rng() % 26;  // 0 = missing from the beam

    const EvalReport rep = metrics_from_ranks(ranks, 20);

    double hr1 = 0.0, hr5 = 0.0, hr10 = 0.0, nd5 = 0.0, nd10 = 0.0;
    for (std::size_t rank : ranks) {
      if (rank == 0) continue;
      if (rank <= 1) hr1 += 1.0;
      if (rank <= 5) {
        hr5 += 1.0;
        nd5 += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
      }
      if (rank <= 10) {
        hr10 += 1.0;
        nd10 += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
      }
    }
    const double dn = static_cast<double>(n);
    hr1 /= dn;
    hr5 /= dn;
    hr10 /= dn;
    nd5 /= dn;
    nd10 /= dn;

    bool ok = bitwise_equal(rep.hr1, hr1) && bitwise_equal(rep.hr5, hr5) &&
              bitwise_equal(rep.hr10, hr10) && bitwise_equal(rep.ndcg5, nd5) &&
              bitwise_equal(rep.ndcg10, nd10);
    ok = ok && rep.hr1 <= rep.hr5 && rep.hr5 <= rep.hr10;
    ok = ok && rep.ndcg5 <= rep.ndcg10;
    ok = ok && rep.ndcg5 <= rep.hr5 && rep.ndcg10 <= rep.hr10;
    lists_ok += ok;
  }
  return {lists_ok == 100,
          fmt("%zu/100 rank lists exact and cutoff-monotone", lists_ok)};
}

// ---------------------------------------------------------------------------
// 9. On a corpus whose next item is predictable only from both modalities
//    together, training with the contrastive term beats the ablation
//    without it on HR@1, beats both single-modality input views, and shows
//    a larger synergy share, with the same sign on three seeds.

struct VariantScores {
  double hr1 = 0.0;
  double uni_t_hr1 = 0.0, uni_v_hr1 = 0.0;
  PidReport pid;
};

std::vector<std::size_t> view_beam_ranks(const Backbone& model,
                                         const PrefixTrie& trie,
                                         const IdentifierSet& ids,
                                         const std::vector<EvalPair>& pairs,
                                         std::size_t width,
                                         const Modality* keep) {
  NoGradGuard ng;
  std::vector<std::size_t> ranks;
  ranks.reserve(pairs.size());
  for (const EvalPair& p : pairs) {
    std::vector<std::int32_t> toks = history_tokens(ids, p.history);
    if (keep) {
      toks = unimodal_view(toks, *keep, ids.vocab);
      if (toks.empty()) toks.push_back(Vocabulary::kBos);
    }
    const EncodeResult enc = model.encode(toks, ones_mask(toks.size()));
    const std::vector<BeamHit> hits = beam_search(model, enc, trie, width);
    std::size_t rank = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (hits[i].item == p.target) {
        rank = i + 1;
        break;
      }
    }
    ranks.push_back(rank);
  }
  return ranks;
}

Outcome check_planted_synergy() {
  const auto t0 = Clock::now();
  constexpr std::size_t kBeam = 10;

  SynthConfig sc;
  sc.items = 512;
  sc.dim = 16;
  sc.users = 2000;
  sc.min_len = 4;
  sc.max_len = 7;
  sc.bits = 1;
  sc.window = 2;
  sc.sigma = 0.2;
  sc.popularity = 0.75;
  sc.seed = 20260822;
  const SynthResult gen = generate_synthetic(sc);

  SplitResult split = split_leave_one_out(gen.data.interactions);
  if (split.valid.size() > 150) split.valid.resize(150);
  std::vector<EvalPair> test = split.test;
  if (test.size() > 800) test.resize(800);

  std::vector<std::vector<std::int32_t>> tc, vc;
  for (Modality m : {Modality::text, Modality::vision}) {
    RqVaeConfig rc;
    rc.modality = m;
    rc.input_dim = sc.dim;
    rc.latent_dim = 16;
    rc.hidden_dim = 32;
    rc.depth = 2;
    rc.codebook_size = 16;
    rc.kmeans_iters = 10;
    rc.epochs = 10;
    rc.batch_size = 64;
    rc.lr = 1e-3;
    rc.seed = m == Modality::text ? 7 : 8;
    RqVae vae(rc);
    const ModalityTable& table =
        m == Modality::text ? gen.data.text : gen.data.vision;
    vae.train(table.rows, table.count());
    auto& codes = m == Modality::text ? tc : vc;
    for (std::size_t i = 0; i < table.count(); ++i)
      codes.push_back(vae.tokenize_one(table.row(i)).codes);
  }
  const IdentifierSet ids = build_identifiers(Vocabulary(2, 16), tc, vc);
  const PrefixTrie trie(ids.identifiers);

  const Modality kText = Modality::text;
  const Modality kVision = Modality::vision;
  auto score_variant = [&](Variant variant, std::uint64_t seed) {
    BackboneConfig mc;
    mc.layers = 1;
    mc.heads = 4;
    mc.d_model = 32;
    mc.d_ff = 64;
    mc.max_len = 48;
    mc.max_target_len = 8;
    mc.vocab_size = ids.vocab.total_size();
    mc.seed = 300 + seed;
    Backbone model(mc);

    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.01;
    cfg.warmup_ratio = 0.1;
    cfg.epochs = 1;
    cfg.batch_size = 16;
    cfg.mask_ratio = 0.3;
    cfg.lambda = 0.005;
    cfg.tau = 0.07;
    cfg.seed = seed;
    cfg.variant = variant;
    cfg.patience = 0;
    cfg.eval_beam = kBeam;
    cfg.log_every = 200;
    train_model(model, ids, split, cfg);

    VariantScores out;
    const EvalReport joint = metrics_from_ranks(
        view_beam_ranks(model, trie, ids, test, kBeam, nullptr), kBeam);
    const EvalReport only_t = metrics_from_ranks(
        view_beam_ranks(model, trie, ids, test, kBeam, &kText), kBeam);
    const EvalReport only_v = metrics_from_ranks(
        view_beam_ranks(model, trie, ids, test, kBeam, &kVision), kBeam);
    out.hr1 = joint.hr1;
    out.uni_t_hr1 = only_t.hr1;
    out.uni_v_hr1 = only_v.hr1;
    out.pid = normalized_pid(only_t.ndcg10, only_v.ndcg10, joint.ndcg10);
    return out;
  };

  bool all_seeds = true;
  std::string note;
  for (std::uint64_t seed : {1, 2, 3}) {
    const VariantScores full = score_variant(Variant::full, seed);
    const VariantScores wo = score_variant(Variant::wo_SCL, seed);
    const bool beats_ablation = full.hr1 > wo.hr1;
    const bool beats_unimodal =
        full.hr1 > full.uni_t_hr1 && full.hr1 > full.uni_v_hr1;
    const bool more_synergy = full.pid.synergy > wo.pid.synergy;
    all_seeds = all_seeds && beats_ablation && beats_unimodal && more_synergy;
    note += fmt("s%llu hr1 %.3f>%.3f uni %.3f/%.3f S %.2f>%.2f; ",
                static_cast<unsigned long long>(seed), full.hr1, wo.hr1,
                full.uni_t_hr1, full.uni_v_hr1, full.pid.synergy,
                wo.pid.synergy);
  }
  const double elapsed = seconds_since(t0);
  const bool in_budget = elapsed < 1800.0;
  note += fmt("%.0fs", elapsed);
  return {all_seeds && in_budget, note};
}

// ---------------------------------------------------------------------------
// 10. Disabling the contrastive weight and disabling the contrastive term
//     produce bitwise-identical training trajectories.

Outcome check_ablation_identity() {
  SynthConfig sc;
  sc.items = 16;
  sc.dim = 8;
  sc.users = 48;
  sc.min_len = 4;
  sc.max_len = 6;
  sc.bits = 1;
  sc.window = 2;
  sc.sigma = 0.1;
  sc.seed = 777;
  const SynthResult gen = generate_synthetic(sc);
  const SplitResult split = split_leave_one_out(gen.data.interactions);

  Vocabulary base(1, 16);
  std::vector<std::vector<std::int32_t>> tc, vc;
  for (std::int32_t i = 0; i < 16; ++i) {
    tc.push_back({i});
    vc.push_back({(i * 7 + 3) % 16});
  }
  const IdentifierSet ids = build_identifiers(base, tc, vc);

  auto run = [&](Variant variant, double lambda, const fs::path& ckpt) {
    BackboneConfig mc = tiny_config(ids.vocab.total_size(), 91);
    mc.max_len = 32;
    mc.max_target_len = 4;
    Backbone model(mc);
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.01;
    cfg.warmup_ratio = 0.1;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    cfg.mask_ratio = 0.3;
    cfg.lambda = lambda;
    cfg.tau = 0.07;
    cfg.seed = 5;
    cfg.variant = variant;
    cfg.eval_beam = 5;
    cfg.log_every = 4;
    const TrainStats stats = train_model(model, ids, split, cfg);
    save_checkpoint(model, ckpt.string(), {});
    std::vector<std::pair<std::string, Tensor>> params = model.named_params();
    return std::make_pair(stats, params);
  };

  const fs::path ck_a = g_work / "ablation_zero_lambda.sgt";
  const fs::path ck_b = g_work / "ablation_wo_scl.sgt";
  auto [stats_a, params_a] = run(Variant::full, 0.0, ck_a);
  auto [stats_b, params_b] = run(Variant::wo_SCL, 0.003, ck_b);

  bool params_same = params_a.size() == params_b.size();
  for (std::size_t i = 0; params_same && i < params_a.size(); ++i)
    params_same = params_a[i].first == params_b[i].first &&
                  bitwise_equal(params_a[i].second, params_b[i].second);

  bool stats_same = stats_a.epoch_loss.size() == stats_b.epoch_loss.size() &&
                    stats_a.rows.size() == stats_b.rows.size();
  for (std::size_t i = 0; stats_same && i < stats_a.epoch_loss.size(); ++i)
    stats_same = bitwise_equal(stats_a.epoch_loss[i], stats_b.epoch_loss[i]);
  for (std::size_t i = 0; stats_same && i < stats_a.rows.size(); ++i) {
    const TrainLogRow& ra = stats_a.rows[i];
    const TrainLogRow& rb = stats_b.rows[i];
    stats_same = ra.step == rb.step && bitwise_equal(ra.gen, rb.gen) &&
                 bitwise_equal(ra.syn, rb.syn) &&
                 bitwise_equal(ra.total, rb.total) &&
                 bitwise_equal(ra.grad_norm, rb.grad_norm);
  }

  const bool blobs_same = slurp(ck_a) == slurp(ck_b);
  const bool pass = params_same && stats_same && blobs_same;
  return {pass, fmt("params %s, curves %s, checkpoint blobs %s",
                    params_same ? "identical" : "differ",
                    stats_same ? "identical" : "differ",
                    blobs_same ? "identical" : "differ")};
}

// ---------------------------------------------------------------------------
// 11. The command-line pipeline run twice from scratch emits byte-identical
//     identifier maps, training curves, metric CSVs, and audit CSVs.

Outcome check_pipeline_determinism() {
  if (g_tool.empty()) return {false, "no --tool given"};

  auto run_pipeline = [&](const std::string& name) -> std::string {
    const fs::path dir = g_work / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string data = (dir / "data").string();
    const std::string idmap = (dir / "ids.tsv").string();
    const std::string ckpt = (dir / "ck.sgt").string();
    const std::string log = (dir / "cmd.log").string();
    const std::vector<std::string> cmds = {
        g_tool + " synth --out " + data +
            " --items 64 --dim 8 --users 150 --min-len 4 --max-len 6"
            " --bits 1 --window 2 --sigma 0.2 --popularity 0.5 --seed 5",
        g_tool + " tokenize --data " + data + " --out " + idmap +
            " --depth 2 --codebook-size 8 --latent 8 --hidden 16"
            " --epochs 6 --batch 32 --kmeans-iters 5 --seed 3",
        g_tool + " train --data " + data + " --identifiers " + idmap +
            " --out " + ckpt + " --log " + (dir / "train_log.csv").string() +
            " --depth 2 --codebook-size 8 --layers 1 --heads 2 --d-model 16"
            " --ff 32 --max-len 48 --max-target-len 8 --model-seed 4"
            " --variant full --lr 0.001 --epochs 1 --batch 16 --eval-beam 5"
            " --seed 2",
        g_tool + " eval --checkpoint " + ckpt + " --data " + data +
            " --identifiers " + idmap + " --beam 10 --split test --out " +
            (dir / "eval.csv").string() + " --name pipeline",
        g_tool + " pid --checkpoint " + ckpt + " --data " + data +
            " --identifiers " + idmap + " --metric ndcg@10 --beam 10 --out " +
            (dir / "pid.csv").string() + " --run-id pipeline",
    };
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      const std::string full = cmds[i] + " >> " + log + " 2>&1";
      const int rc = std::system(full.c_str());
      if (rc != 0) return fmt("step %zu exited with %d", i + 1, rc);
    }
    return "";
  };

  const std::string err_a = run_pipeline("pipeline_a");
  if (!err_a.empty()) return {false, "first run: " + err_a};
  const std::string err_b = run_pipeline("pipeline_b");
  if (!err_b.empty()) return {false, "second run: " + err_b};

  bool pass = true;
  std::string diffs;
  for (const char* f :
       {"ids.tsv", "train_log.csv", "eval.csv", "pid.csv"}) {
    const bool same =
        slurp(g_work / "pipeline_a" / f) == slurp(g_work / "pipeline_b" / f);
    pass = pass && same;
    if (!same) diffs += std::string(f) + " differs; ";
  }
  if (!pass) return {false, diffs};

  std::string hr1_line = "?";
  std::istringstream eval_csv(slurp(g_work / "pipeline_a" / "eval.csv"));
  for (std::string line; std::getline(eval_csv, line);)
    if (line.rfind("HR@1,", 0) == 0) hr1_line = line;
  return {true, "both runs byte-identical, " + hr1_line};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  std::string work = "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--tool" && i + 1 < argc)
      g_tool = argv[++i];
    else if (arg == "--workdir" && i + 1 < argc)
      work = argv[++i];
    else if (arg == "--only" && i + 1 < argc)
      only = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "unknown argument %s\n", arg.c_str());
      return 2;
    }
  }
  g_work = fs::absolute(work);
  fs::create_directories(g_work);

  struct Check {
    int id;
    const char* label;
    Outcome (*fn)();
  };
  const Check checks[] = {
      {1, "gradients match finite differences", check_gradients},
      {2, "quantization matches exhaustive scan", check_quantizer},
      {3, "saliency score identities", check_saliency_scores},
      {4, "masking count and top-k contract", check_masking},
      {5, "loss closed forms", check_loss_values},
      {6, "beam equals exhaustive argmax", check_beam},
      {7, "synergy decomposition identities", check_decomposition},
      {8, "ranking metrics match formulas", check_metrics},
      {9, "planted cross-modal synergy is learned", check_planted_synergy},
      {10, "zero-weight ablation is bitwise identical", check_ablation_identity},
      {11, "pipeline reruns are byte-identical", check_pipeline_determinism},
  };

  bool all_pass = true;
  for (const Check& c : checks) {
    if (only != 0 && only != c.id) continue;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %-44s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.label,
                o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
