#pragma once

#include <cstddef>
#include <vector>

#include "synparse/deptree.hpp"
#include "synparse/ops.hpp"
#include "synparse/tensor.hpp"

namespace synparse {

// Scaled query-key scores, QK^T / sqrt(d).
struct HeadScore {
  Tensor scores;
};

HeadScore head_score(const Tensor& q, const Tensor& k);

// Probability that two tokens share a constituent. Symmetric, unit diagonal,
// entries in [0,1], and block-monotone: growing a span can only shrink it.
struct ConstituentPrior {
  std::size_t n = 0;
  std::size_t layer = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  Tensor as_tensor() const { return Tensor::from({n, n}, values); }
  static ConstituentPrior ones(std::size_t n, std::size_t layer = 0);
};

// Adjacent-pair link strengths after the hierarchical update. a[k] links
// token k with token k+1; values only grow from one layer to the next.
struct LinkProbabilities {
  std::vector<double> a;
};

// Learned projections behind the adjacent-pair link scores.
struct LinkScorer {
  Tensor w_left;   // d_model x d_link
  Tensor w_right;  // d_model x d_link
};

struct AttentionResult {
  Tensor output;
  Tensor weights;  // post-softmax (and post-damping, when a prior is applied)
};

// Shared kernel. `distance` scales scores before the softmax; `prior` damps
// weights after it. Pass undefined tensors to skip either step.
AttentionResult attend(const Tensor& q, const Tensor& k, const Tensor& v, const Mask& mask,
                       const Tensor& distance = {}, const Tensor& prior = {});

Tensor standard_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          const Mask& mask);
Tensor pascal_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        const DistanceMatrix& d_mat, const Mask& mask);
Tensor ca_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                    const ConstituentPrior& c, const Mask& mask);
Tensor pascal_ca_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           const DistanceMatrix& d_mat, const ConstituentPrior& c,
                           const Mask& mask);

// Raw link scores for adjacent pairs: dot of left and right projections of
// neighboring rows, scaled by 1/sqrt(d_link). Length n-1.
Tensor adjacent_link_scores(const Tensor& hidden, const LinkScorer& scorer);

// Two-way neighbor softmax, geometric-mean link strength, then the
// hierarchical update a = prev + (1 - prev) * a_hat. Pass an undefined prev
// at the first layer. Length n-1 in, length n-1 out.
Tensor update_link_probs(const Tensor& scores, const Tensor& prev = {});

// Struct-level mirror of the tensor path.
LinkProbabilities neighbor_link_probs(const Tensor& hidden, const LinkScorer& scorer,
                                      const LinkProbabilities* prev = nullptr);

// values[i][j] = product of a[k] over the span between i and j; log-space
// accumulation keeps long spans stable and zeros exact.
ConstituentPrior constituent_prior(const LinkProbabilities& links, std::size_t layer = 0);

}  // namespace synparse
