#include "synrec/model/backbone.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "synrec/common/rng.hpp"
#include "synrec/tensor/ops.hpp"
#include "synrec/tensor/serialize.hpp"
#include "synrec/tokenizer/vocab.hpp"

namespace synrec {

namespace {

constexpr double kMaskedOut = -1e30;

Tensor ones_vec(std::size_t n) {
  Tensor t = Tensor::zeros({n}, true);
  for (std::size_t i = 0; i < n; ++i) t[i] = 1.0;
  return t;
}

std::vector<std::int32_t> iota_ids(std::size_t n) {
  std::vector<std::int32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

// Additive mask: 0 at usable keys, kMaskedOut elsewhere. causal limits
// each query row q to keys <= q; key_valid (may be null) drops pad keys.
Tensor build_mask(std::size_t nq, std::size_t nk, bool causal,
                  const std::vector<std::uint8_t>* key_valid) {
  Tensor m = Tensor::zeros({nq, nk});
  for (std::size_t q = 0; q < nq; ++q)
    for (std::size_t k = 0; k < nk; ++k) {
      const bool pad = key_valid && !(*key_valid)[k];
      const bool future = causal && k > q;
      if (pad || future) m.at(q, k) = kMaskedOut;
    }
  return m;
}

}  // namespace

Backbone::Backbone(const BackboneConfig& cfg) : cfg_(cfg) {
  if (cfg.d_model == 0 || cfg.heads == 0 || cfg.d_model % cfg.heads != 0)
    throw std::invalid_argument("backbone: model dim " +
                                std::to_string(cfg.d_model) +
                                " not divisible by " + std::to_string(cfg.heads) +
                                " heads");
  if (cfg.vocab_size == 0)
    throw std::invalid_argument("backbone: vocab size must be set");
  if (cfg.layers == 0 || cfg.max_len == 0 || cfg.max_target_len == 0)
    throw std::invalid_argument("backbone: zero-size configuration");
  auto rng = make_rng(cfg.seed, "backbone-params");
  const std::size_t d = cfg.d_model;
  const double emb_sd = 0.02;
  const double d_sd = 1.0 / std::sqrt(static_cast<double>(d));
  const double ff_sd = 1.0 / std::sqrt(static_cast<double>(cfg.d_ff));
  tok_emb_ = Tensor::randn({cfg.vocab_size, d}, rng, emb_sd, true);
  enc_pos_ = Tensor::randn({cfg.max_len, d}, rng, emb_sd, true);
  dec_pos_ = Tensor::randn({cfg.max_target_len, d}, rng, emb_sd, true);
  auto attn_block = [&]() {
    AttnBlock b;
    b.wq = Tensor::randn({d, d}, rng, d_sd, true);
    b.wk = Tensor::randn({d, d}, rng, d_sd, true);
    b.wv = Tensor::randn({d, d}, rng, d_sd, true);
    b.wo = Tensor::randn({d, d}, rng, d_sd, true);
    return b;
  };
  enc_.resize(cfg.layers);
  for (EncoderLayer& l : enc_) {
    l.ln1_g = ones_vec(d);
    l.ln1_b = Tensor::zeros({d}, true);
    l.attn = attn_block();
    l.ln2_g = ones_vec(d);
    l.ln2_b = Tensor::zeros({d}, true);
    l.ff_w1 = Tensor::randn({d, cfg.d_ff}, rng, d_sd, true);
    l.ff_w2 = Tensor::randn({cfg.d_ff, d}, rng, ff_sd, true);
  }
  dec_.resize(cfg.layers);
  for (DecoderLayer& l : dec_) {
    l.ln1_g = ones_vec(d);
    l.ln1_b = Tensor::zeros({d}, true);
    l.self_attn = attn_block();
    l.ln2_g = ones_vec(d);
    l.ln2_b = Tensor::zeros({d}, true);
    l.cross_attn = attn_block();
    l.ln3_g = ones_vec(d);
    l.ln3_b = Tensor::zeros({d}, true);
    l.ff_w1 = Tensor::randn({d, cfg.d_ff}, rng, d_sd, true);
    l.ff_w2 = Tensor::randn({cfg.d_ff, d}, rng, ff_sd, true);
  }
  enc_ln_g_ = ones_vec(d);
  enc_ln_b_ = Tensor::zeros({d}, true);
  dec_ln_g_ = ones_vec(d);
  dec_ln_b_ = Tensor::zeros({d}, true);
  out_w_ = Tensor::randn({d, cfg.vocab_size}, rng, d_sd, true);
}

Tensor Backbone::attention(const AttnBlock& w, const Tensor& queries,
                           const Tensor& keys_values, const Tensor& mask,
                           AttentionMaps* maps) const {
  const std::size_t dh = cfg_.d_model / cfg_.heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor q = matmul(queries, w.wq);
  Tensor k = matmul(keys_values, w.wk);
  Tensor v = matmul(keys_values, w.wv);
  std::vector<Tensor> parts;
  parts.reserve(cfg_.heads);
  if (maps) {
    maps->n = queries.dim(0);
    maps->heads.clear();
  }
  for (std::size_t m = 0; m < cfg_.heads; ++m) {
    Tensor qm = slice_cols(q, m * dh, dh);
    Tensor km = slice_cols(k, m * dh, dh);
    Tensor vm = slice_cols(v, m * dh, dh);
    Tensor scores = add(scale(matmul(qm, transpose(km)), inv_scale), mask);
    Tensor attn = softmax(scores, 1);
    if (maps)
      maps->heads.emplace_back(attn.data(), attn.data() + attn.numel());
    parts.push_back(matmul(attn, vm));
  }
  return matmul(concat_cols(parts), w.wo);
}

EncodeResult Backbone::encode(const std::vector<std::int32_t>& tokens,
                              const std::vector<std::uint8_t>& pad_mask) const {
  if (tokens.empty()) throw std::invalid_argument("encode: empty input");
  if (tokens.size() != pad_mask.size())
    throw std::invalid_argument("encode: mask length " +
                                std::to_string(pad_mask.size()) +
                                " does not match " + std::to_string(tokens.size()) +
                                " tokens");
  EncodeResult out;
  out.tokens = tokens;
  out.pad_mask = pad_mask;
  if (tokens.size() > cfg_.max_len) {
    const std::size_t drop = tokens.size() - cfg_.max_len;
    out.tokens.erase(out.tokens.begin(),
                     out.tokens.begin() + static_cast<std::ptrdiff_t>(drop));
    out.pad_mask.erase(out.pad_mask.begin(),
                       out.pad_mask.begin() + static_cast<std::ptrdiff_t>(drop));
    out.truncated = true;
  }
  const std::size_t n = out.tokens.size();
  bool any_valid = false;
  for (std::uint8_t v : out.pad_mask) any_valid |= v != 0;
  if (!any_valid) throw std::invalid_argument("encode: all positions padded");

  Tensor x = embedding(tok_emb_, out.tokens);
  if (cfg_.use_positions) x = add(x, embedding(enc_pos_, iota_ids(n)));
  Tensor mask = build_mask(n, n, false, &out.pad_mask);
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    const EncoderLayer& l = enc_[i];
    const bool last = i + 1 == enc_.size();
    Tensor a = layer_norm(x, l.ln1_g, l.ln1_b);
    x = add(x, attention(l.attn, a, a, mask, last ? &out.maps : nullptr));
    Tensor f = layer_norm(x, l.ln2_g, l.ln2_b);
    x = add(x, matmul(relu(matmul(f, l.ff_w1)), l.ff_w2));
  }
  out.hidden = layer_norm(x, enc_ln_g_, enc_ln_b_);
  return out;
}

Tensor Backbone::decode(const std::vector<std::int32_t>& prefix,
                        const Tensor& encoder_hidden,
                        const std::vector<std::uint8_t>& enc_pad_mask) const {
  return matmul(decode_hidden(prefix, encoder_hidden, enc_pad_mask), out_w_);
}

Tensor Backbone::decode_hidden(const std::vector<std::int32_t>& prefix,
                               const Tensor& encoder_hidden,
                               const std::vector<std::uint8_t>& enc_pad_mask) const {
  if (prefix.empty()) throw std::invalid_argument("decode: empty prefix");
  if (prefix[0] != Vocabulary::kBos)
    throw std::invalid_argument("decode: prefix must start with <bos>");
  if (prefix.size() > cfg_.max_target_len)
    throw std::invalid_argument("decode: prefix length " +
                                std::to_string(prefix.size()) + " exceeds " +
                                std::to_string(cfg_.max_target_len));
  if (encoder_hidden.dim(0) != enc_pad_mask.size())
    throw std::invalid_argument("decode: encoder mask length mismatch");
  const std::size_t t = prefix.size();
  Tensor y = embedding(tok_emb_, prefix);
  if (cfg_.use_positions) y = add(y, embedding(dec_pos_, iota_ids(t)));
  Tensor causal = build_mask(t, t, true, nullptr);
  Tensor cross = build_mask(t, enc_pad_mask.size(), false, &enc_pad_mask);
  for (const DecoderLayer& l : dec_) {
    Tensor a = layer_norm(y, l.ln1_g, l.ln1_b);
    y = add(y, attention(l.self_attn, a, a, causal, nullptr));
    Tensor b = layer_norm(y, l.ln2_g, l.ln2_b);
    y = add(y, attention(l.cross_attn, b, encoder_hidden, cross, nullptr));
    Tensor c = layer_norm(y, l.ln3_g, l.ln3_b);
    y = add(y, matmul(relu(matmul(c, l.ff_w1)), l.ff_w2));
  }
  return layer_norm(y, dec_ln_g_, dec_ln_b_);
}

std::vector<double> Backbone::decode_step(
    const std::vector<std::int32_t>& prefix, const Tensor& encoder_hidden,
    const std::vector<std::uint8_t>& enc_pad_mask) const {
  NoGradGuard ng;
  Tensor logits = decode(prefix, encoder_hidden, enc_pad_mask);
  const std::size_t v = cfg_.vocab_size;
  const double* last = logits.data() + (prefix.size() - 1) * v;
  return {last, last + v};
}

std::vector<std::pair<std::string, Tensor>> Backbone::named_params() {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("tok_emb", tok_emb_);
  out.emplace_back("enc_pos", enc_pos_);
  out.emplace_back("dec_pos", dec_pos_);
  auto attn = [&out](const std::string& p, AttnBlock& b) {
    out.emplace_back(p + ".wq", b.wq);
    out.emplace_back(p + ".wk", b.wk);
    out.emplace_back(p + ".wv", b.wv);
    out.emplace_back(p + ".wo", b.wo);
  };
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    const std::string p = "enc." + std::to_string(i);
    EncoderLayer& l = enc_[i];
    out.emplace_back(p + ".ln1.g", l.ln1_g);
    out.emplace_back(p + ".ln1.b", l.ln1_b);
    attn(p + ".attn", l.attn);
    out.emplace_back(p + ".ln2.g", l.ln2_g);
    out.emplace_back(p + ".ln2.b", l.ln2_b);
    out.emplace_back(p + ".ff.w1", l.ff_w1);
    out.emplace_back(p + ".ff.w2", l.ff_w2);
  }
  out.emplace_back("enc.ln.g", enc_ln_g_);
  out.emplace_back("enc.ln.b", enc_ln_b_);
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const std::string p = "dec." + std::to_string(i);
    DecoderLayer& l = dec_[i];
    out.emplace_back(p + ".ln1.g", l.ln1_g);
    out.emplace_back(p + ".ln1.b", l.ln1_b);
    attn(p + ".self", l.self_attn);
    out.emplace_back(p + ".ln2.g", l.ln2_g);
    out.emplace_back(p + ".ln2.b", l.ln2_b);
    attn(p + ".cross", l.cross_attn);
    out.emplace_back(p + ".ln3.g", l.ln3_g);
    out.emplace_back(p + ".ln3.b", l.ln3_b);
    out.emplace_back(p + ".ff.w1", l.ff_w1);
    out.emplace_back(p + ".ff.w2", l.ff_w2);
  }
  out.emplace_back("dec.ln.g", dec_ln_g_);
  out.emplace_back("dec.ln.b", dec_ln_b_);
  out.emplace_back("out_w", out_w_);
  return out;
}

std::vector<Tensor> Backbone::params() {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

void save_checkpoint(Backbone& model, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& extra) {
  write_tensor_blob(path, model.named_params());
  const BackboneConfig& c = model.config();
  std::ofstream os(path + ".meta", std::ios::trunc);
  if (!os) throw std::runtime_error(path + ".meta: cannot open for writing");
  os << "layers=" << c.layers << '\n'
     << "heads=" << c.heads << '\n'
     << "d_model=" << c.d_model << '\n'
     << "d_ff=" << c.d_ff << '\n'
     << "max_len=" << c.max_len << '\n'
     << "max_target_len=" << c.max_target_len << '\n'
     << "vocab_size=" << c.vocab_size << '\n'
     << "use_positions=" << (c.use_positions ? 1 : 0) << '\n'
     << "seed=" << c.seed << '\n';
  for (const auto& [k, v] : extra) os << k << '=' << v << '\n';
  if (!os) throw std::runtime_error(path + ".meta: write failed");
}

Backbone load_checkpoint(const std::string& path,
                         std::vector<std::pair<std::string, std::string>>* extra) {
  std::ifstream is(path + ".meta");
  if (!is) throw std::runtime_error(path + ".meta: cannot open");
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::string>> unknown;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ".meta: bad line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take = [&kv, &path](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw std::runtime_error(path + ".meta: missing key '" + key + "'");
    const std::string v = it->second;
    kv.erase(it);
    return v;
  };
  BackboneConfig c;
  c.layers = std::stoul(take("layers"));
  c.heads = std::stoul(take("heads"));
  c.d_model = std::stoul(take("d_model"));
  c.d_ff = std::stoul(take("d_ff"));
  c.max_len = std::stoul(take("max_len"));
  c.max_target_len = std::stoul(take("max_target_len"));
  c.vocab_size = std::stoul(take("vocab_size"));
  c.use_positions = std::stoul(take("use_positions")) != 0;
  c.seed = std::stoull(take("seed"));
  for (auto& [k, v] : kv) unknown.emplace_back(k, v);
  if (extra) *extra = std::move(unknown);

  Backbone model(c);
  std::map<std::string, Tensor> stored;
  for (auto& [name, t] : read_tensor_blob(path)) stored.emplace(name, t);
  for (auto& [name, param] : model.named_params()) {
    const auto it = stored.find(name);
    if (it == stored.end())
      throw std::runtime_error(path + ": checkpoint missing tensor '" + name + "'");
    if (it->second.shape() != param.shape())
      throw std::runtime_error(path + ": tensor '" + name + "' has shape " +
                               shape_string(it->second.shape()) + ", expected " +
                               shape_string(param.shape()));
    std::copy(it->second.data(), it->second.data() + param.numel(), param.data());
    stored.erase(it);
  }
  if (!stored.empty())
    throw std::runtime_error(path + ": checkpoint holds unknown tensor '" +
                             stored.begin()->first + "'");
  return model;
}

}  // namespace synrec
