#pragma once

#include <cstdint>
#include <vector>

#include "synparse/tensor.hpp"

namespace synparse {

// Boolean keep-mask over a scores matrix (rows = queries, cols = keys).
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> keep;

  static Mask all(std::size_t rows, std::size_t cols);
  static Mask causal(std::size_t n);

  bool at(std::size_t i, std::size_t j) const { return keep[i * cols + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { keep[i * cols + j] = v ? 1 : 0; }
};

// Elementwise and affine.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
// mul * x + shift, elementwise.
Tensor affine(const Tensor& x, double mul, double shift);
Tensor scale(const Tensor& x, double mul);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor sqrt_op(const Tensor& x);

// Linear algebra (2-D).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Structure.
Tensor concat_last_dim(const Tensor& a, const Tensor& b);
Tensor stack_rows(const std::vector<Tensor>& rows);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor reshape(const Tensor& a, Shape shape);

// Reductions.
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

// Row-wise softmax with max-subtraction stabilization. Input must be 2-D.
Tensor softmax_rows(const Tensor& m);
// Softmax restricted to kept columns; dropped columns get exactly zero weight,
// and a fully dropped row yields a zero row rather than NaN.
Tensor masked_softmax_rows(const Tensor& m, const Mask& mask);

// y = x + b with b broadcast over rows (b is 1-D of length cols or 1 x cols).
Tensor add_rowvec(const Tensor& x, const Tensor& b);
// matmul(x, w) + bias broadcast; pass an undefined bias to skip it.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Per-row layer normalization with learned gain and bias (both length cols).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// Rows of `table` selected by ids; gradients scatter-add back into the table.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

// Inverted dropout. Training mode draws a keep mask from `rng` and rescales by
// 1/(1-p); eval mode returns the input tensor unchanged (exact identity).
Tensor dropout(const Tensor& x, double p, Rng& rng, bool training);

// Mean over rows of -log softmax(logits)[target]. logits is n x vocab.
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets);

// out[k] = scale * dot(x[k, :], y[k+1, :]) for k in [0, n-1). Returns a 1-D
// tensor of length n-1 (empty for single-row inputs).
Tensor adjacent_dot(const Tensor& x, const Tensor& y, double mul);

// From links a (1-D, length n-1, strictly positive when gradients are needed)
// builds the n x n matrix P with P[i][j] = prod of a[k] over the span between
// i and j, P[i][i] = 1. Accumulation runs in log space row by row.
Tensor span_product(const Tensor& a);

}  // namespace synparse
