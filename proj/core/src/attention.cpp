#include "synparse/attention.hpp"

#include <cmath>

#include "synparse/error.hpp"

namespace synparse {

HeadScore head_score(const Tensor& q, const Tensor& k) {
  if (q.rank() != 2 || k.rank() != 2) {
    throw DimensionError("head_score: q and k must be 2-D, got " + shape_str(q.shape()) +
                         " and " + shape_str(k.shape()));
  }
  const std::size_t d = q.shape()[1];
  if (d == 0 || d != k.shape()[1]) {
    throw DimensionError("head_score: key dimension mismatch, " + shape_str(q.shape()) +
                         " vs " + shape_str(k.shape()));
  }
  HeadScore h;
  h.scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
  return h;
}

ConstituentPrior ConstituentPrior::ones(std::size_t n, std::size_t layer) {
  ConstituentPrior c;
  c.n = n;
  c.layer = layer;
  c.values.assign(n * n, 1.0);
  return c;
}

AttentionResult attend(const Tensor& q, const Tensor& k, const Tensor& v, const Mask& mask,
                       const Tensor& distance, const Tensor& prior) {
  Tensor scores = head_score(q, k).scores;
  if (v.rank() != 2 || v.shape()[0] != k.shape()[0]) {
    throw DimensionError("attend: v rows must match k rows, got " + shape_str(v.shape()) +
                         " vs " + shape_str(k.shape()));
  }
  if (distance.defined()) {
    scores = elementwise_mul(scores, distance);
  }
  Tensor weights = masked_softmax_rows(scores, mask);
  if (prior.defined()) {
    weights = elementwise_mul(prior, weights);
  }
  AttentionResult r;
  r.weights = weights;
  r.output = matmul(weights, v);
  return r;
}

Tensor standard_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          const Mask& mask) {
  return attend(q, k, v, mask).output;
}

Tensor pascal_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        const DistanceMatrix& d_mat, const Mask& mask) {
  return attend(q, k, v, mask, d_mat.as_tensor()).output;
}

Tensor ca_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                    const ConstituentPrior& c, const Mask& mask) {
  return attend(q, k, v, mask, {}, c.as_tensor()).output;
}

Tensor pascal_ca_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           const DistanceMatrix& d_mat, const ConstituentPrior& c,
                           const Mask& mask) {
  return attend(q, k, v, mask, d_mat.as_tensor(), c.as_tensor()).output;
}

Tensor adjacent_link_scores(const Tensor& hidden, const LinkScorer& scorer) {
  if (hidden.rank() != 2) {
    throw DimensionError("adjacent_link_scores: hidden must be 2-D, got " +
                         shape_str(hidden.shape()));
  }
  const std::size_t d_link = scorer.w_left.shape()[1];
  if (scorer.w_right.shape()[1] != d_link || d_link == 0) {
    throw DimensionError("adjacent_link_scores: projection widths disagree");
  }
  Tensor left = matmul(hidden, scorer.w_left);
  Tensor right = matmul(hidden, scorer.w_right);
  return adjacent_dot(left, right, 1.0 / std::sqrt(static_cast<double>(d_link)));
}

Tensor update_link_probs(const Tensor& scores, const Tensor& prev) {
  if (scores.rank() != 1) {
    throw DimensionError("update_link_probs: scores must be 1-D, got " +
                         shape_str(scores.shape()));
  }
  const std::size_t L = scores.shape()[0];
  if (prev.defined() && prev.shape() != Shape{L}) {
    throw DimensionError("update_link_probs: prev shape " + shape_str(prev.shape()) +
                         " does not match " + std::to_string(L) + " links");
  }
  if (L == 0) return Tensor::from({0}, {});

  // Token k links right with probability sigma(s_k - s_{k-1}) (its other
  // neighbor competes), and the sequence ends link their only neighbor with
  // probability one.
  Tensor s = reshape(scores, {1, L});
  Tensor one = Tensor::ones({1, 1});
  Tensor fwd = concat_last_dim(
      one, sigmoid(sub(slice_cols(s, 1, L - 1), slice_cols(s, 0, L - 1))));
  Tensor bwd = concat_last_dim(
      sigmoid(sub(slice_cols(s, 0, L - 1), slice_cols(s, 1, L - 1))), one);
  Tensor a_hat = sqrt_op(elementwise_mul(fwd, bwd));
  Tensor a;
  if (prev.defined()) {
    Tensor p = reshape(prev, {1, L});
    a = add(p, elementwise_mul(sub(Tensor::ones({1, L}), p), a_hat));
  } else {
    a = a_hat;
  }
  return reshape(a, {L});
}

LinkProbabilities neighbor_link_probs(const Tensor& hidden, const LinkScorer& scorer,
                                      const LinkProbabilities* prev) {
  Tensor prev_t;
  if (prev != nullptr) prev_t = Tensor::vector(prev->a);
  Tensor a = update_link_probs(adjacent_link_scores(hidden, scorer), prev_t);
  LinkProbabilities out;
  out.a = a.values();
  return out;
}

ConstituentPrior constituent_prior(const LinkProbabilities& links, std::size_t layer) {
  for (double v : links.a) {
    if (!(v >= 0.0) || v > 1.0) {
      throw DataError("constituent_prior: link value " + std::to_string(v) +
                      " outside [0, 1]");
    }
  }
  const std::size_t n = links.a.size() + 1;
  ConstituentPrior c;
  c.n = n;
  c.layer = layer;
  c.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    c.values[i * n + i] = 1.0;
    double log_sum = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      log_sum += std::log(links.a[j - 1]);
      const double v = std::exp(log_sum);
      c.values[i * n + j] = v;
      c.values[j * n + i] = v;
    }
  }
  return c;
}

}  // namespace synparse
