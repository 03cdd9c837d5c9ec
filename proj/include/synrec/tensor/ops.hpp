#pragma once

#include <cstdint>
#include <vector>

#include "synrec/tensor/tensor.hpp"

namespace synrec {

// Elementwise; add also broadcasts a rank-1 b across the rows of rank-2 a.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // same shape only
Tensor div(const Tensor& a, const Tensor& b);  // same shape only
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);  // (m x k)(k x n)
Tensor transpose(const Tensor& a);                // rank 2

Tensor relu(const Tensor& a);
Tensor sqrt(const Tensor& a);      // elementwise, domain x >= 0
Tensor softplus(const Tensor& a);  // log(1 + e^x), overflow-safe

// Softmax over the given axis, max-subtracted for stability. Entries at
// -1e30 or below come out exactly 0 (their exp underflows), which is how
// attention masking produces exact zeros at padded keys.
Tensor softmax(const Tensor& a, int axis);
Tensor log_softmax(const Tensor& a, int axis);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

// Normalizes each row of rank-2 x over its last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// Rows of table gathered by ids -> (ids.size() x d). Backward scatter-adds.
Tensor embedding(const Tensor& table, const std::vector<std::int32_t>& ids);

// Mean over non-ignored rows of -log softmax(logits)[t, target_t].
// All rows ignored -> 0.
Tensor cross_entropy(const Tensor& logits, const std::vector<std::int32_t>& targets,
                     std::int32_t ignore_id);

Tensor slice_cols(const Tensor& a, std::size_t j0, std::size_t n);
Tensor concat_cols(const std::vector<Tensor>& parts);

}  // namespace synrec
