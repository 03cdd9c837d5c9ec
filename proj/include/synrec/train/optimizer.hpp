#pragma once

#include <cstddef>
#include <vector>

#include "synrec/tensor/tensor.hpp"

namespace synrec {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, applied directly to weights
  double clip_norm = 1.0;     // <= 0 disables clipping
};

// AdamW with decoupled weight decay and global-norm gradient clipping.
// Weight decay multiplies the raw parameter, not the adaptive update.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig cfg);

  // One update from the gradients currently accumulated on the parameters.
  // lr_scale scales the base rate (warmup). Returns the pre-clip global
  // gradient norm.
  double step(double lr_scale = 1.0);
  void zero_grad();
  std::size_t steps_taken() const { return t_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamWConfig cfg_;
  std::size_t t_ = 0;
};

}  // namespace synrec
