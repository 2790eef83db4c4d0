#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "synparse/tensor.hpp"

namespace synparse {

struct GradReport {
  std::string op_name;
  double max_rel_error = 0.0;
  std::size_t probe_count = 0;
};

// Central-difference check of reverse-mode gradients for a scalar-valued
// computation over one input tensor. Probes up to `probes` distinct
// coordinates (all of them when the input is smaller than that). The input is
// copied into a fresh differentiable leaf, so `x` itself is left untouched.
GradReport grad_check(const std::string& op_name,
                      const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                      double eps = 1e-5, std::size_t probes = 20,
                      std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

}  // namespace synparse
