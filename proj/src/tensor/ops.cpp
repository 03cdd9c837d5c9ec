#include "synrec/tensor/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace synrec {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              shape_string(a.shape()) + " vs " +
                              shape_string(b.shape()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error(op, a, b);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const bool bcast = a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1);
  if (!bcast && a.shape() != b.shape()) shape_error("add", a, b);
  bool track = false;
  Tensor out = detail::make_node("add", a.shape(), {a, b}, &track);
  const std::size_t n = a.numel();
  if (bcast) {
    const std::size_t cols = a.dim(1);
    for (std::size_t i = 0; i < n; ++i)
      out.node->value[i] = a.node->value[i] + b.node->value[i % cols];
  } else {
    for (std::size_t i = 0; i < n; ++i)
      out.node->value[i] = a.node->value[i] + b.node->value[i];
  }
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    TensorNode* bn = b.node.get();
    out.node->backward = [o, an, bn, bcast, n]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        if (bcast) {
          const std::size_t cols = bn->value.size();
          for (std::size_t i = 0; i < n; ++i) bn->grad[i % cols] += o->grad[i];
        } else {
          for (std::size_t i = 0; i < n; ++i) bn->grad[i] += o->grad[i];
        }
      }
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  bool track = false;
  Tensor out = detail::make_node("sub", a.shape(), {a, b}, &track);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i)
    out.node->value[i] = a.node->value[i] - b.node->value[i];
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    TensorNode* bn = b.node.get();
    out.node->backward = [o, an, bn, n]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) bn->grad[i] -= o->grad[i];
      }
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  bool track = false;
  Tensor out = detail::make_node("mul", a.shape(), {a, b}, &track);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i)
    out.node->value[i] = a.node->value[i] * b.node->value[i];
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    TensorNode* bn = b.node.get();
    out.node->backward = [o, an, bn, n]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          an->grad[i] += o->grad[i] * bn->value[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          bn->grad[i] += o->grad[i] * an->value[i];
      }
    };
  }
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape("div", a, b);
  bool track = false;
  Tensor out = detail::make_node("div", a.shape(), {a, b}, &track);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i)
    out.node->value[i] = a.node->value[i] / b.node->value[i];
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    TensorNode* bn = b.node.get();
    out.node->backward = [o, an, bn, n]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          an->grad[i] += o->grad[i] / bn->value[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          bn->grad[i] -= o->grad[i] * an->value[i] / (bn->value[i] * bn->value[i]);
      }
    };
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  bool track = false;
  Tensor out = detail::make_node("scale", a.shape(), {a}, &track);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) out.node->value[i] = a.node->value[i] * c;
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, c, n]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i] * c;
    };
  }
  return out;
}

Tensor add_const(const Tensor& a, double c) {
  bool track = false;
  Tensor out = detail::make_node("add_const", a.shape(), {a}, &track);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) out.node->value[i] = a.node->value[i] + c;
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, n]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) an->grad[i] += o->grad[i];
    };
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    shape_error("matmul", a, b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  bool track = false;
  Tensor out = detail::make_node("matmul", {m, n}, {a, b}, &track);
  MatMap(out.data(), m, n).noalias() =
      CMatMap(a.data(), m, k) * CMatMap(b.data(), k, n);
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    TensorNode* bn = b.node.get();
    out.node->backward = [o, an, bn, m, k, n]() {
      CMatMap g(o->grad.data(), m, n);
      if (an->requires_grad) {
        an->ensure_grad();
        MatMap(an->grad.data(), m, k).noalias() +=
            g * CMatMap(bn->value.data(), k, n).transpose();
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        MatMap(bn->grad.data(), k, n).noalias() +=
            CMatMap(an->value.data(), m, k).transpose() * g;
      }
    };
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2)
    throw std::invalid_argument("transpose: rank-2 tensor required, got " +
                                shape_string(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  bool track = false;
  Tensor out = detail::make_node("transpose", {n, m}, {a}, &track);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.node->value[j * m + i] = a.node->value[i * n + j];
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, m, n]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          an->grad[i * n + j] += o->grad[j * m + i];
    };
  }
  return out;
}

Tensor relu(const Tensor& a) {
  bool track = false;
  Tensor out = detail::make_node("relu", a.shape(), {a}, &track);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i)
    out.node->value[i] = a.node->value[i] > 0.0 ? a.node->value[i] : 0.0;
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, n]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        if (an->value[i] > 0.0) an->grad[i] += o->grad[i];
    };
  }
  return out;
}

Tensor sqrt(const Tensor& a) {
  bool track = false;
  Tensor out = detail::make_node("sqrt", a.shape(), {a}, &track);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) {
    if (a.node->value[i] < 0.0)
      throw std::domain_error("sqrt: negative input " +
                              std::to_string(a.node->value[i]));
    out.node->value[i] = std::sqrt(a.node->value[i]);
  }
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, n]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        an->grad[i] += o->grad[i] * 0.5 / std::max(o->value[i], 1e-150);
    };
  }
  return out;
}

Tensor softplus(const Tensor& a) {
  bool track = false;
  Tensor out = detail::make_node("softplus", a.shape(), {a}, &track);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) {
    double x = a.node->value[i];
    out.node->value[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, n]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        an->grad[i] += o->grad[i] * sigmoid(an->value[i]);
    };
  }
  return out;
}

namespace {

struct AxisView {
  std::size_t outer, n, inner;
};

AxisView axis_view(const Tensor& a, int axis) {
  const int r = static_cast<int>(a.rank());
  if (r == 0 || axis < 0 || axis >= r)
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) +
                                " out of range for " + shape_string(a.shape()));
  AxisView v{1, a.dim(axis), 1};
  for (int i = 0; i < axis; ++i) v.outer *= a.dim(i);
  for (int i = axis + 1; i < r; ++i) v.inner *= a.dim(i);
  return v;
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) {
  AxisView v = axis_view(a, axis);
  bool track = false;
  Tensor out = detail::make_node("softmax", a.shape(), {a}, &track);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t j = 0; j < v.inner; ++j) {
      const std::size_t base = o * v.n * v.inner + j;
      double mx = a.node->value[base];
      for (std::size_t i = 1; i < v.n; ++i)
        mx = std::max(mx, a.node->value[base + i * v.inner]);
      double denom = 0.0;
      for (std::size_t i = 0; i < v.n; ++i) {
        double e = std::exp(a.node->value[base + i * v.inner] - mx);
        out.node->value[base + i * v.inner] = e;
        denom += e;
      }
      for (std::size_t i = 0; i < v.n; ++i)
        out.node->value[base + i * v.inner] /= denom;
    }
  }
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, v]() {
      an->ensure_grad();
      for (std::size_t oo = 0; oo < v.outer; ++oo) {
        for (std::size_t j = 0; j < v.inner; ++j) {
          const std::size_t base = oo * v.n * v.inner + j;
          double gs = 0.0;
          for (std::size_t i = 0; i < v.n; ++i) {
            const std::size_t k = base + i * v.inner;
            gs += o->grad[k] * o->value[k];
          }
          for (std::size_t i = 0; i < v.n; ++i) {
            const std::size_t k = base + i * v.inner;
            an->grad[k] += o->value[k] * (o->grad[k] - gs);
          }
        }
      }
    };
  }
  return out;
}

Tensor log_softmax(const Tensor& a, int axis) {
  AxisView v = axis_view(a, axis);
  bool track = false;
  Tensor out = detail::make_node("log_softmax", a.shape(), {a}, &track);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t j = 0; j < v.inner; ++j) {
      const std::size_t base = o * v.n * v.inner + j;
      double mx = a.node->value[base];
      for (std::size_t i = 1; i < v.n; ++i)
        mx = std::max(mx, a.node->value[base + i * v.inner]);
      double denom = 0.0;
      for (std::size_t i = 0; i < v.n; ++i)
        denom += std::exp(a.node->value[base + i * v.inner] - mx);
      const double lse = mx + std::log(denom);
      for (std::size_t i = 0; i < v.n; ++i)
        out.node->value[base + i * v.inner] =
            a.node->value[base + i * v.inner] - lse;
    }
  }
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, v]() {
      an->ensure_grad();
      for (std::size_t oo = 0; oo < v.outer; ++oo) {
        for (std::size_t j = 0; j < v.inner; ++j) {
          const std::size_t base = oo * v.n * v.inner + j;
          double gs = 0.0;
          for (std::size_t i = 0; i < v.n; ++i) gs += o->grad[base + i * v.inner];
          for (std::size_t i = 0; i < v.n; ++i) {
            const std::size_t k = base + i * v.inner;
            an->grad[k] += o->grad[k] - std::exp(o->value[k]) * gs;
          }
        }
      }
    };
  }
  return out;
}

Tensor sum(const Tensor& a) {
  bool track = false;
  Tensor out = detail::make_node("sum", {}, {a}, &track);
  double s = 0.0;
  for (double x : a.node->value) s += x;
  out.node->value[0] = s;
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an]() {
      an->ensure_grad();
      const double g = o->grad[0];
      for (double& gi : an->grad) gi += g;
    };
  }
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  bool track = false;
  Tensor out = detail::make_node("mean", {}, {a}, &track);
  double s = 0.0;
  for (double x : a.node->value) s += x;
  const double inv = 1.0 / static_cast<double>(a.numel());
  out.node->value[0] = s * inv;
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, inv]() {
      an->ensure_grad();
      const double g = o->grad[0] * inv;
      for (double& gi : an->grad) gi += g;
    };
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (x.rank() != 2)
    throw std::invalid_argument("layer_norm: rank-2 input required, got " +
                                shape_string(x.shape()));
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (gamma.rank() != 1 || gamma.dim(0) != d) shape_error("layer_norm", x, gamma);
  if (beta.rank() != 1 || beta.dim(0) != d) shape_error("layer_norm", x, beta);
  bool track = false;
  Tensor out = detail::make_node("layer_norm", x.shape(), {x, gamma, beta}, &track);
  // xhat rows saved for backward; inv_std per row.
  auto xhat = std::make_shared<std::vector<double>>(rows * d);
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (xr[j] - mu) * is;
      (*xhat)[r * d + j] = xh;
      out.node->value[r * d + j] = xh * gamma.node->value[j] + beta.node->value[j];
    }
  }
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* xn = x.node.get();
    TensorNode* gn = gamma.node.get();
    TensorNode* bn = beta.node.get();
    out.node->backward = [o, xn, gn, bn, xhat, inv_std, rows, d]() {
      for (std::size_t r = 0; r < rows; ++r) {
        const double* g = o->grad.data() + r * d;
        const double* xh = xhat->data() + r * d;
        if (gn->requires_grad) {
          gn->ensure_grad();
          for (std::size_t j = 0; j < d; ++j) gn->grad[j] += g[j] * xh[j];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t j = 0; j < d; ++j) bn->grad[j] += g[j];
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          double mh = 0.0, mhx = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double h = g[j] * gn->value[j];
            mh += h;
            mhx += h * xh[j];
          }
          mh /= static_cast<double>(d);
          mhx /= static_cast<double>(d);
          const double is = (*inv_std)[r];
          for (std::size_t j = 0; j < d; ++j) {
            const double h = g[j] * gn->value[j];
            xn->grad[r * d + j] += (h - mh - xh[j] * mhx) * is;
          }
        }
      }
    };
  }
  return out;
}

Tensor embedding(const Tensor& table, const std::vector<std::int32_t>& ids) {
  if (table.rank() != 2)
    throw std::invalid_argument("embedding: rank-2 table required, got " +
                                shape_string(table.shape()));
  const std::size_t v = table.dim(0), d = table.dim(1);
  for (std::int32_t id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= v)
      throw std::out_of_range("embedding: id " + std::to_string(id) +
                              " outside table of " + std::to_string(v) + " rows");
  bool track = false;
  Tensor out = detail::make_node("embedding", {ids.size(), d}, {table}, &track);
  for (std::size_t t = 0; t < ids.size(); ++t)
    std::copy_n(table.data() + static_cast<std::size_t>(ids[t]) * d, d,
                out.data() + t * d);
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* tn = table.node.get();
    auto idv = std::make_shared<std::vector<std::int32_t>>(ids);
    out.node->backward = [o, tn, idv, d]() {
      tn->ensure_grad();
      for (std::size_t t = 0; t < idv->size(); ++t) {
        double* dst = tn->grad.data() + static_cast<std::size_t>((*idv)[t]) * d;
        const double* src = o->grad.data() + t * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    };
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::int32_t>& targets,
                     std::int32_t ignore_id) {
  if (logits.rank() != 2)
    throw std::invalid_argument("cross_entropy: rank-2 logits required, got " +
                                shape_string(logits.shape()));
  const std::size_t rows = logits.dim(0), v = logits.dim(1);
  if (targets.size() != rows)
    throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(rows) + " rows");
  for (std::int32_t t : targets)
    if (t != ignore_id && (t < 0 || static_cast<std::size_t>(t) >= v))
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) +
                              " outside vocab of " + std::to_string(v));
  bool track = false;
  Tensor out = detail::make_node("cross_entropy", {}, {logits}, &track);
  auto probs = std::make_shared<std::vector<double>>();
  if (track) probs->resize(rows * v);
  double loss = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] == ignore_id) continue;
    const double* l = logits.data() + r * v;
    double mx = l[0];
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, l[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < v; ++j) denom += std::exp(l[j] - mx);
    if (track)
      for (std::size_t j = 0; j < v; ++j)
        (*probs)[r * v + j] = std::exp(l[j] - mx) / denom;
    loss += mx + std::log(denom) - l[targets[r]];
    ++count;
  }
  out.node->value[0] = count ? loss / static_cast<double>(count) : 0.0;
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* ln = logits.node.get();
    auto tgt = std::make_shared<std::vector<std::int32_t>>(targets);
    out.node->backward = [o, ln, tgt, probs, rows, v, count, ignore_id]() {
      if (count == 0) return;
      ln->ensure_grad();
      const double g = o->grad[0] / static_cast<double>(count);
      for (std::size_t r = 0; r < rows; ++r) {
        if ((*tgt)[r] == ignore_id) continue;
        double* dst = ln->grad.data() + r * v;
        const double* p = probs->data() + r * v;
        for (std::size_t j = 0; j < v; ++j) dst[j] += g * p[j];
        dst[(*tgt)[r]] -= g;
      }
    };
  }
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t j0, std::size_t n) {
  if (a.rank() != 2 || j0 + n > a.dim(1))
    throw std::invalid_argument("slice_cols: [" + std::to_string(j0) + ", " +
                                std::to_string(j0 + n) + ") outside " +
                                shape_string(a.shape()));
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  bool track = false;
  Tensor out = detail::make_node("slice_cols", {rows, n}, {a}, &track);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(a.data() + r * cols + j0, n, out.data() + r * n);
  if (track) {
    TensorNode* o = out.node.get();
    TensorNode* an = a.node.get();
    out.node->backward = [o, an, j0, n, rows, cols]() {
      an->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j)
          an->grad[r * cols + j0 + j] += o->grad[r * n + j];
    };
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = parts[0].dim(0);
  std::size_t cols = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.dim(0) != rows) shape_error("concat_cols", parts[0], p);
    cols += p.dim(1);
  }
  bool track = false;
  Tensor out = detail::make_node("concat_cols", {rows, cols}, parts, &track);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    const std::size_t pc = p.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(p.data() + r * pc, pc, out.data() + r * cols + off);
    off += pc;
  }
  if (track) {
    TensorNode* o = out.node.get();
    std::vector<TensorNode*> ins;
    ins.reserve(parts.size());
    for (const Tensor& p : parts) ins.push_back(p.node.get());
    out.node->backward = [o, ins, rows, cols]() {
      std::size_t off = 0;
      for (TensorNode* p : ins) {
        const std::size_t pc = p->shape[1];
        if (p->requires_grad) {
          p->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < pc; ++j)
              p->grad[r * pc + j] += o->grad[r * cols + off + j];
        }
        off += pc;
      }
    };
  }
  return out;
}

}  // namespace synrec
