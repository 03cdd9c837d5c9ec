#include "synrec/train/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace synrec {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor& p : params_) {
    if (!p.requires_grad())
      throw std::invalid_argument("optimizer: parameter does not require grad");
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

double AdamW::step(double lr_scale) {
  double sq = 0.0;
  for (Tensor& p : params_)
    for (double g : p.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  double clip = 1.0;
  if (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.lr * lr_scale;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    double* p = params_[i].data();
    const std::vector<double>& grad = params_[i].grad();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t k = 0; k < grad.size(); ++k) {
      const double g = grad[k] * clip;
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p[k]);
    }
  }
  return norm;
}

void AdamW::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace synrec
