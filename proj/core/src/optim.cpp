#include "synparse/optim.hpp"

#include <cmath>

#include "synparse/error.hpp"

namespace synparse {

void AdamWConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
}

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  cfg_.validate();
  for (const Tensor& t : params_) {
    if (!t.defined()) throw ConfigError("optimizer given an undefined tensor");
    if (!t.is_leaf() || !t.requires_grad()) {
      throw ConfigError("optimizer parameters must be gradient-enabled leaves");
    }
    m_.emplace_back(t.numel(), 0.0);
    v_.emplace_back(t.numel(), 0.0);
  }
}

void AdamW::step() {
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i];
    t.node().ensure_grad();
    const auto& g = t.node().grad;
    auto& val = t.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    const bool decay = cfg_.weight_decay > 0.0 && t.rank() >= 2;
    for (std::size_t k = 0; k < val.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      double upd = cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      if (decay) upd += cfg_.lr * cfg_.weight_decay * val[k];
      val[k] -= upd;
    }
  }
}

void AdamW::zero_grad() {
  for (Tensor& t : params_) t.zero_grad();
}

}  // namespace synparse
