#pragma once

#include <cstddef>
#include <vector>

#include "synparse/tensor.hpp"

namespace synparse {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

// Adam with decoupled weight decay. Decay touches matrices only; vectors
// (biases, norm gains) are left undecayed.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig cfg = {});

  void step();
  void zero_grad();
  std::size_t step_count() const { return steps_; }

 private:
  std::vector<Tensor> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

}  // namespace synparse
