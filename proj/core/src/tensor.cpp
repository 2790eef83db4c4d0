#include "synparse/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace synparse {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ')';
  return os.str();
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::vector<double> data(shape_numel(shape), v);
  return from(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::ones(Shape shape, bool requires_grad) {
  return full(std::move(shape), 1.0, requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
  return from(Shape{rows, cols}, std::move(data), requires_grad);
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
  Shape s{data.size()};
  return from(std::move(s), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double v) { return from(Shape{1}, {v}); }

TensorNode& Tensor::node() const {
  if (!node_) throw Error("use of undefined tensor");
  return *node_;
}

std::size_t Tensor::rows() const {
  const auto& s = node().shape;
  if (s.size() != 2) throw DimensionError("rows() on tensor of shape " + shape_str(s));
  return s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = node().shape;
  if (s.size() != 2) throw DimensionError("cols() on tensor of shape " + shape_str(s));
  return s[1];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  }
  return node().value[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  const auto& s = node().shape;
  if (s.size() != 2 || i >= s[0] || j >= s[1]) {
    throw DimensionError("index (" + std::to_string(i) + "," + std::to_string(j) +
                         ") out of range for shape " + shape_str(s));
  }
  return node().value[i * s[1] + j];
}

std::vector<double>& Tensor::mutable_values() {
  TensorNode& n = node();
  if (!n.parents.empty()) {
    throw Error("mutating a non-leaf tensor (op " + std::string(n.op) + ")");
  }
  return n.value;
}

void Tensor::set_requires_grad(bool rg) {
  TensorNode& n = node();
  if (!n.parents.empty()) throw Error("set_requires_grad on a non-leaf tensor");
  n.requires_grad = rg;
}

void Tensor::zero_grad() {
  TensorNode& n = node();
  n.grad.assign(n.value.size(), 0.0);
}

void Tensor::backward() const {
  TensorNode& root = node();
  if (root.numel() != 1) {
    throw DimensionError("backward() requires a scalar, got shape " + shape_str(root.shape));
  }
  if (!root.requires_grad) return;

  // Post-order over the requires_grad subgraph, then run closures root-first.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(&root, 0);
  seen.insert(&root);
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      TensorNode* p = n->parents[i].get();
      ++i;
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (TensorNode* n : order) n->ensure_grad();
  root.grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward();
  }
}

Tensor OpBuilder::make(const char* op, Shape shape, std::vector<double> value,
                       const std::vector<Tensor>& parents) {
  if (shape_numel(shape) != value.size()) {
    throw DimensionError(std::string(op) + ": output buffer does not match shape " +
                         shape_str(shape));
  }
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  bool rg = false;
  for (const Tensor& p : parents) {
    n->parents.push_back(p.node_ptr());
    rg = rg || p.requires_grad();
  }
  n->requires_grad = rg;
  return Tensor(std::move(n));
}

}  // namespace synparse
