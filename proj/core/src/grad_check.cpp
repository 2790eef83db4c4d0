#include "synparse/grad_check.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "synparse/error.hpp"

namespace synparse {

namespace {

double run_scalar(const std::string& op_name,
                  const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
  Tensor y = f(x);
  if (y.numel() != 1) {
    throw DimensionError("grad_check(" + op_name + "): computation must be scalar-valued, got " +
                         shape_str(y.shape()));
  }
  const double v = y.values()[0];
  if (!std::isfinite(v)) {
    throw NumericError("grad_check(" + op_name + "): non-finite function value");
  }
  return v;
}

}  // namespace

GradReport grad_check(const std::string& op_name,
                      const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                      double eps, std::size_t probes, std::uint64_t seed) {
  if (!(eps > 0.0) || eps > 1e-2) {
    throw ConfigError("grad_check: eps must lie in (0, 1e-2], got " + std::to_string(eps));
  }
  for (double v : x.values()) {
    if (!std::isfinite(v)) {
      throw NumericError("grad_check(" + op_name + "): non-finite input");
    }
  }

  Tensor probe = Tensor::from(x.shape(), x.values(), true);
  Tensor y = f(probe);
  if (y.numel() != 1) {
    throw DimensionError("grad_check(" + op_name + "): computation must be scalar-valued, got " +
                         shape_str(y.shape()));
  }
  if (!std::isfinite(y.values()[0])) {
    throw NumericError("grad_check(" + op_name + "): non-finite function value");
  }
  y.backward();

  std::vector<double> g_ad(probe.numel(), 0.0);
  if (!probe.grad().empty()) g_ad = probe.grad();
  for (double g : g_ad) {
    if (!std::isfinite(g)) {
      throw NumericError("grad_check(" + op_name + "): non-finite reverse-mode gradient");
    }
  }

  std::vector<std::size_t> coords(probe.numel());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(coords, rng);
  const std::size_t count = std::min(probes, coords.size());

  GradReport report;
  report.op_name = op_name;
  report.probe_count = count;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = coords[k];
    const double saved = probe.values()[i];
    probe.mutable_values()[i] = saved + eps;
    const double f_plus = run_scalar(op_name, f, probe);
    probe.mutable_values()[i] = saved - eps;
    const double f_minus = run_scalar(op_name, f, probe);
    probe.mutable_values()[i] = saved;
    const double g_fd = (f_plus - f_minus) / (2.0 * eps);
    if (!std::isfinite(g_fd)) {
      throw NumericError("grad_check(" + op_name + "): non-finite finite-difference gradient");
    }
    const double denom = std::max({std::fabs(g_ad[i]), std::fabs(g_fd), 1e-8});
    const double rel = std::fabs(g_ad[i] - g_fd) / denom;
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  return report;
}

}  // namespace synparse
