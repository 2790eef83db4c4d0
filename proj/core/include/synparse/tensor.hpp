#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "synparse/error.hpp"

namespace synparse {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Deterministic generator. Raw draws come from mt19937_64 (bit-exact across
// platforms); uniforms are derived by hand instead of std::distributions,
// whose sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // [0, n)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

 private:
  std::mt19937_64 engine_;
};

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.index(i)]);
  }
}

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily; persists on leaves until zeroed
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void()> backward;

  std::size_t numel() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Value-semantics handle on a tape node. Nodes produced by ops are immutable;
// only leaves (parameters, probe inputs) may be mutated in place, which is how
// optimizers and the finite-difference harness work. Each forward pass builds
// a fresh tape; graphs are never reused.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor ones(Shape shape, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);
  static Tensor vector(std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  std::size_t rank() const { return node().shape.size(); }
  std::size_t numel() const { return node().value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& values() const { return node().value; }
  const std::vector<double>& grad() const { return node().grad; }
  bool requires_grad() const { return node().requires_grad; }
  bool is_leaf() const { return node().parents.empty(); }

  double item() const;
  double at(std::size_t i, std::size_t j) const;

  // Leaf-only mutation hooks.
  std::vector<double>& mutable_values();
  void set_requires_grad(bool rg);
  void zero_grad();

  // Reverse-mode sweep from a scalar node.
  void backward() const;

  std::shared_ptr<TensorNode> node_ptr() const { return node_; }
  TensorNode& node() const;

 private:
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<TensorNode> node_;

  friend class OpBuilder;
};

// Internal helper used by ops.cpp to attach a new node to the tape. The
// backward closure is installed after construction so it can capture the
// output node pointer.
class OpBuilder {
 public:
  static Tensor make(const char* op, Shape shape, std::vector<double> value,
                     const std::vector<Tensor>& parents);
};

}  // namespace synparse
