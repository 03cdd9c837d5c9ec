#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace synrec {

// Dense row-major tensor of doubles. A Tensor is a cheap handle onto a
// shared node; operations in ops.hpp produce new nodes and, while the
// thread-local Tape is recording and some input requires grad, register a
// backward closure on that tape. Gradients of leaf tensors accumulate
// across backward calls; gradients of tape nodes are reset per backward.
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on demand, same layout as value
  bool requires_grad = false;
  bool on_tape = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void()> backward;

  std::size_t numel() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node(std::move(n)) {}

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor constant(std::vector<std::size_t> shape, double v);
  static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> v,
                          bool requires_grad = false);
  static Tensor scalar(double v);
  // Gaussian init; draws numel values from rng in row-major order.
  static Tensor randn(std::vector<std::size_t> shape, std::mt19937_64& rng,
                      double stddev, bool requires_grad = false);

  bool defined() const { return node != nullptr; }
  const std::vector<std::size_t>& shape() const { return node->shape; }
  std::size_t rank() const { return node->shape.size(); }
  std::size_t numel() const { return node->value.size(); }
  std::size_t dim(std::size_t i) const { return node->shape[i]; }

  double* data() { return node->value.data(); }
  const double* data() const { return node->value.data(); }
  double& operator[](std::size_t i) { return node->value[i]; }
  double operator[](std::size_t i) const { return node->value[i]; }
  // Rank-2 element access, row i column j.
  double& at(std::size_t i, std::size_t j) {
    return node->value[i * node->shape[1] + j];
  }
  double at(std::size_t i, std::size_t j) const {
    return node->value[i * node->shape[1] + j];
  }
  // Value of a one-element tensor.
  double item() const;

  bool requires_grad() const { return node->requires_grad; }
  std::vector<double>& grad();
  void zero_grad();

  std::shared_ptr<TensorNode> node;
};

std::string shape_string(const std::vector<std::size_t>& s);

// Records op outputs in creation order; creation order is a topological
// order of the graph, so one reverse sweep visits every node once.
class Tape {
 public:
  static Tape& active();

  void record(const std::shared_ptr<TensorNode>& n);
  // Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. loss must be a
  // one-element tensor recorded on this tape.
  void backward(const Tensor& loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }

  bool recording() const { return recording_; }
  void set_recording(bool r) { recording_ = r; }

 private:
  std::vector<std::shared_ptr<TensorNode>> nodes_;
  bool recording_ = true;
};

// Disables tape recording in scope; forwards run value-only.
struct NoGradGuard {
  NoGradGuard() : prev_(Tape::active().recording()) {
    Tape::active().set_recording(false);
  }
  ~NoGradGuard() { Tape::active().set_recording(prev_); }

 private:
  bool prev_;
};

namespace detail {
// Builds the output node of an op: requires_grad is inherited from inputs,
// and the node is recorded when the tape is live. The caller fills value
// and, when track is true on return, installs the backward closure.
Tensor make_node(const char* op, std::vector<std::size_t> shape,
                 std::vector<Tensor> inputs, bool* track);
}  // namespace detail

}  // namespace synrec
