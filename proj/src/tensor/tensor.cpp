#include "synrec/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace synrec {

namespace {
std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}
}  // namespace

std::string shape_string(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << ")";
  return os.str();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->value.assign(shape_numel(shape), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::constant(std::vector<std::size_t> shape, double v) {
  Tensor t = zeros(std::move(shape), false);
  std::fill(t.node->value.begin(), t.node->value.end(), v);
  return t;
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> v,
                         bool requires_grad) {
  if (shape_numel(shape) != v.size())
    throw std::invalid_argument("from_data: " + shape_string(shape) +
                                " does not hold " + std::to_string(v.size()) +
                                " values");
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from_data({}, {v}, false); }

Tensor Tensor::randn(std::vector<std::size_t> shape, std::mt19937_64& rng,
                     double stddev, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : t.node->value) x = dist(rng);
  return t;
}

double Tensor::item() const {
  if (numel() != 1)
    throw std::invalid_argument("item: tensor " + shape_string(shape()) +
                                " is not a scalar");
  return node->value[0];
}

std::vector<double>& Tensor::grad() {
  if (!node->requires_grad)
    throw std::logic_error("grad: tensor does not require grad");
  node->ensure_grad();
  return node->grad;
}

void Tensor::zero_grad() {
  if (node->requires_grad) node->grad.assign(node->value.size(), 0.0);
}

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(const std::shared_ptr<TensorNode>& n) {
  n->on_tape = true;
  nodes_.push_back(n);
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be a one-element tensor");
  if (!loss.node->on_tape)
    throw std::invalid_argument("backward: loss is not on the active tape");
  // Tape nodes restart from zero; leaves keep accumulating across calls.
  for (auto& n : nodes_) {
    if (n->requires_grad) {
      n->ensure_grad();
      std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
  }
  loss.node->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if ((*it)->backward) (*it)->backward();
  }
}

void Tape::clear() {
  for (auto& n : nodes_) {
    n->on_tape = false;
    n->backward = nullptr;
    n->inputs.clear();
  }
  nodes_.clear();
}

namespace detail {

Tensor make_node(const char* op, std::vector<std::size_t> shape,
                 std::vector<Tensor> inputs, bool* track) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value.assign(shape_numel(n->shape), 0.0);
  n->op = op;
  bool any_grad = false;
  for (const Tensor& t : inputs) any_grad = any_grad || t.node->requires_grad;
  *track = any_grad && Tape::active().recording();
  if (*track) {
    n->requires_grad = true;
    n->inputs.reserve(inputs.size());
    for (Tensor& t : inputs) n->inputs.push_back(t.node);
    Tape::active().record(n);
  }
  return Tensor(std::move(n));
}

}  // namespace detail

}  // namespace synrec
