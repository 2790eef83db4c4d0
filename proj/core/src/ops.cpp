#include "synparse/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace synparse {

namespace {

TensorNode* N(const Tensor& t) { return t.node_ptr().get(); }

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
}

void check_2d(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a 2-D tensor, got shape " +
                         shape_str(t.shape()));
  }
}

// Accumulate into a parent's grad if it participates in the sweep.
bool wants_grad(TensorNode* p) {
  if (!p->requires_grad) return false;
  p->ensure_grad();
  return true;
}

}  // namespace

Mask Mask::all(std::size_t rows, std::size_t cols) {
  Mask m;
  m.rows = rows;
  m.cols = cols;
  m.keep.assign(rows * cols, 1);
  return m;
}

Mask Mask::causal(std::size_t n) {
  Mask m;
  m.rows = n;
  m.cols = n;
  m.keep.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) m.keep[i * n + j] = 1;
  }
  return m;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  Tensor t = OpBuilder::make("add", a.shape(), std::move(out), {a, b});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    TensorNode* pb = N(b);
    on->backward = [on, pa, pb] {
      if (wants_grad(pa)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) pa->grad[i] += on->grad[i];
      }
      if (wants_grad(pb)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) pb->grad[i] += on->grad[i];
      }
    };
  }
  return t;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  Tensor t = OpBuilder::make("sub", a.shape(), std::move(out), {a, b});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    TensorNode* pb = N(b);
    on->backward = [on, pa, pb] {
      if (wants_grad(pa)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) pa->grad[i] += on->grad[i];
      }
      if (wants_grad(pb)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) pb->grad[i] -= on->grad[i];
      }
    };
  }
  return t;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  check_same_shape("elementwise_mul", a, b);
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  Tensor t = OpBuilder::make("elementwise_mul", a.shape(), std::move(out), {a, b});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    TensorNode* pb = N(b);
    on->backward = [on, pa, pb] {
      if (wants_grad(pa)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          pa->grad[i] += on->grad[i] * pb->value[i];
      }
      if (wants_grad(pb)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          pb->grad[i] += on->grad[i] * pa->value[i];
      }
    };
  }
  return t;
}

Tensor affine(const Tensor& x, double mul, double shift) {
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mul * xv[i] + shift;
  Tensor t = OpBuilder::make("affine", x.shape(), std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    on->backward = [on, px, mul] {
      if (wants_grad(px)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) px->grad[i] += mul * on->grad[i];
      }
    };
  }
  return t;
}

Tensor scale(const Tensor& x, double mul) { return affine(x, mul, 0.0); }

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  Tensor t = OpBuilder::make("relu", x.shape(), std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    on->backward = [on, px] {
      if (wants_grad(px)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          if (px->value[i] > 0.0) px->grad[i] += on->grad[i];
      }
    };
  }
  return t;
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(xv[i]);
  Tensor t = OpBuilder::make("sigmoid", x.shape(), std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    on->backward = [on, px] {
      if (wants_grad(px)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
          double y = on->value[i];
          px->grad[i] += on->grad[i] * y * (1.0 - y);
        }
      }
    };
  }
  return t;
}

Tensor tanh_op(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  Tensor t = OpBuilder::make("tanh", x.shape(), std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    on->backward = [on, px] {
      if (wants_grad(px)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
          double y = on->value[i];
          px->grad[i] += on->grad[i] * (1.0 - y * y);
        }
      }
    };
  }
  return t;
}

Tensor sqrt_op(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (xv[i] < 0.0) throw NumericError("sqrt: negative input");
    out[i] = std::sqrt(xv[i]);
  }
  Tensor t = OpBuilder::make("sqrt", x.shape(), std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    on->backward = [on, px] {
      if (wants_grad(px)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
          px->grad[i] += on->grad[i] * 0.5 / on->value[i];
        }
      }
    };
  }
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d("matmul", a);
  check_2d("matmul", b);
  const std::size_t n = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], m = b.shape()[1];
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  }
  std::vector<double> out(n * m, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = av[i * k + kk];
      if (aik == 0.0) continue;
      const double* brow = bv.data() + kk * m;
      double* crow = out.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
    }
  }
  Tensor t = OpBuilder::make("matmul", Shape{n, m}, std::move(out), {a, b});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    TensorNode* pb = N(b);
    on->backward = [on, pa, pb, n, k, m] {
      if (wants_grad(pa)) {
        // dA = G * B^T
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            const double g = on->grad[i * m + j];
            if (g == 0.0) continue;
            const double* brow = pb->value.data() + 0;
            for (std::size_t kk = 0; kk < k; ++kk) {
              pa->grad[i * k + kk] += g * brow[kk * m + j];
            }
          }
        }
      }
      if (wants_grad(pb)) {
        // dB = A^T * G
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = pa->value[i * k + kk];
            if (aik == 0.0) continue;
            const double* grow = on->grad.data() + i * m;
            double* brow = pb->grad.data() + kk * m;
            for (std::size_t j = 0; j < m; ++j) brow[j] += aik * grow[j];
          }
        }
      }
    };
  }
  return t;
}

Tensor transpose(const Tensor& a) {
  check_2d("transpose", a);
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  std::vector<double> out(n * m);
  const auto& av = a.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = av[i * m + j];
  Tensor t = OpBuilder::make("transpose", Shape{m, n}, std::move(out), {a});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    on->backward = [on, pa, n, m] {
      if (wants_grad(pa)) {
        for (std::size_t j = 0; j < m; ++j)
          for (std::size_t i = 0; i < n; ++i) pa->grad[i * m + j] += on->grad[j * n + i];
      }
    };
  }
  return t;
}

Tensor concat_last_dim(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || a.rank() != b.rank()) {
    throw DimensionError("concat_last_dim: rank mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  for (std::size_t d = 0; d + 1 < a.rank(); ++d) {
    if (a.shape()[d] != b.shape()[d]) {
      throw DimensionError("concat_last_dim: leading dimensions disagree, " +
                           shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
  }
  const std::size_t la = a.shape().back(), lb = b.shape().back();
  Shape os = a.shape();
  os.back() = la + lb;
  const std::size_t outer = la + lb == 0 ? shape_numel(os) : shape_numel(os) / (la + lb);
  std::vector<double> out(shape_numel(os));
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t r = 0; r < outer; ++r) {
    std::copy(av.begin() + r * la, av.begin() + (r + 1) * la, out.begin() + r * (la + lb));
    std::copy(bv.begin() + r * lb, bv.begin() + (r + 1) * lb,
              out.begin() + r * (la + lb) + la);
  }
  Tensor t = OpBuilder::make("concat_last_dim", std::move(os), std::move(out), {a, b});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    TensorNode* pb = N(b);
    on->backward = [on, pa, pb, outer, la, lb] {
      const std::size_t w = la + lb;
      if (wants_grad(pa)) {
        for (std::size_t r = 0; r < outer; ++r)
          for (std::size_t j = 0; j < la; ++j) pa->grad[r * la + j] += on->grad[r * w + j];
      }
      if (wants_grad(pb)) {
        for (std::size_t r = 0; r < outer; ++r)
          for (std::size_t j = 0; j < lb; ++j)
            pb->grad[r * lb + j] += on->grad[r * w + la + j];
      }
    };
  }
  return t;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows");
  auto width = [](const Tensor& r) -> std::size_t {
    if (r.rank() == 1) return r.shape()[0];
    if (r.rank() == 2 && r.shape()[0] == 1) return r.shape()[1];
    throw DimensionError("stack_rows: row must be 1-D or 1 x d, got " + shape_str(r.shape()));
  };
  const std::size_t d = width(rows[0]);
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const Tensor& r : rows) {
    if (width(r) != d) {
      throw DimensionError("stack_rows: inconsistent widths " + std::to_string(d) + " vs " +
                           std::to_string(width(r)));
    }
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  Tensor t = OpBuilder::make("stack_rows", Shape{rows.size(), d}, std::move(out), rows);
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    std::vector<TensorNode*> ps;
    ps.reserve(rows.size());
    for (const Tensor& r : rows) ps.push_back(N(r));
    on->backward = [on, ps, d] {
      for (std::size_t r = 0; r < ps.size(); ++r) {
        if (wants_grad(ps[r])) {
          for (std::size_t j = 0; j < d; ++j) ps[r]->grad[j] += on->grad[r * d + j];
        }
      }
    };
  }
  return t;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  check_2d("slice_rows", a);
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (begin + count > n) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," +
                         std::to_string(begin + count) + ") exceeds " + std::to_string(n) +
                         " rows");
  }
  std::vector<double> out(a.values().begin() + begin * m,
                          a.values().begin() + (begin + count) * m);
  Tensor t = OpBuilder::make("slice_rows", Shape{count, m}, std::move(out), {a});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    on->backward = [on, pa, begin, count, m] {
      if (wants_grad(pa)) {
        for (std::size_t i = 0; i < count * m; ++i) pa->grad[begin * m + i] += on->grad[i];
      }
    };
  }
  return t;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  check_2d("slice_cols", a);
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (begin + count > m) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + "," +
                         std::to_string(begin + count) + ") exceeds " + std::to_string(m) +
                         " cols");
  }
  std::vector<double> out(n * count);
  const auto& av = a.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = av[i * m + begin + j];
  Tensor t = OpBuilder::make("slice_cols", Shape{n, count}, std::move(out), {a});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    on->backward = [on, pa, n, m, begin, count] {
      if (wants_grad(pa)) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < count; ++j)
            pa->grad[i * m + begin + j] += on->grad[i * count + j];
      }
    };
  }
  return t;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: element count mismatch " + shape_str(a.shape()) +
                         " -> " + shape_str(shape));
  }
  Tensor t = OpBuilder::make("reshape", std::move(shape), a.values(), {a});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    on->backward = [on, pa] {
      if (wants_grad(pa)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) pa->grad[i] += on->grad[i];
      }
    };
  }
  return t;
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  Tensor t = OpBuilder::make("sum_all", Shape{1}, {s}, {a});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    on->backward = [on, pa] {
      if (wants_grad(pa)) {
        for (std::size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += on->grad[0];
      }
    };
  }
  return t;
}

Tensor mean_all(const Tensor& a) {
  if (a.numel() == 0) throw DimensionError("mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor softmax_rows(const Tensor& m) {
  if (m.rank() != 2) {
    throw DimensionError("softmax_rows: expected a 2-D tensor, got shape " +
                         shape_str(m.shape()));
  }
  return masked_softmax_rows(m, Mask::all(m.shape()[0], m.shape()[1]));
}

Tensor masked_softmax_rows(const Tensor& m, const Mask& mask) {
  check_2d("masked_softmax_rows", m);
  const std::size_t n = m.shape()[0], w = m.shape()[1];
  if (mask.rows != n || mask.cols != w) {
    throw DimensionError("masked_softmax_rows: mask " + std::to_string(mask.rows) + "x" +
                         std::to_string(mask.cols) + " does not match scores " +
                         shape_str(m.shape()));
  }
  std::vector<double> out(n * w, 0.0);
  const auto& xv = m.values();
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < w; ++j)
      if (mask.at(i, j) && xv[i * w + j] > mx) mx = xv[i * w + j];
    if (mx == -std::numeric_limits<double>::infinity()) continue;  // fully masked row
    double z = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      if (!mask.at(i, j)) continue;
      const double e = std::exp(xv[i * w + j] - mx);
      out[i * w + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < w; ++j)
      if (mask.at(i, j)) out[i * w + j] /= z;
  }
  Tensor t = OpBuilder::make("masked_softmax_rows", m.shape(), std::move(out), {m});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pm = N(m);
    std::vector<std::uint8_t> keep = mask.keep;
    on->backward = [on, pm, keep, n, w] {
      if (!wants_grad(pm)) return;
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < w; ++j)
          if (keep[i * w + j]) dot += on->grad[i * w + j] * on->value[i * w + j];
        for (std::size_t j = 0; j < w; ++j) {
          if (!keep[i * w + j]) continue;
          pm->grad[i * w + j] += on->value[i * w + j] * (on->grad[i * w + j] - dot);
        }
      }
    };
  }
  return t;
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  check_2d("add_rowvec", x);
  const std::size_t n = x.shape()[0], m = x.shape()[1];
  std::size_t bw = 0;
  if (b.rank() == 1) {
    bw = b.shape()[0];
  } else if (b.rank() == 2 && b.shape()[0] == 1) {
    bw = b.shape()[1];
  } else {
    throw DimensionError("add_rowvec: bias must be 1-D or 1 x d, got " + shape_str(b.shape()));
  }
  if (bw != m) {
    throw DimensionError("add_rowvec: bias width " + std::to_string(bw) +
                         " does not match cols of " + shape_str(x.shape()));
  }
  std::vector<double> out(n * m);
  const auto& xv = x.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = xv[i * m + j] + bv[j];
  Tensor t = OpBuilder::make("add_rowvec", x.shape(), std::move(out), {x, b});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    TensorNode* pb = N(b);
    on->backward = [on, px, pb, n, m] {
      if (wants_grad(px)) {
        for (std::size_t i = 0; i < n * m; ++i) px->grad[i] += on->grad[i];
      }
      if (wants_grad(pb)) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) pb->grad[j] += on->grad[i * m + j];
      }
    };
  }
  return t;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y = matmul(x, w);
  if (!b.defined()) return y;
  return add_rowvec(y, b);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  check_2d("layer_norm", x);
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (gain.rank() != 1 || gain.shape()[0] != d || bias.rank() != 1 || bias.shape()[0] != d) {
    throw DimensionError("layer_norm: gain/bias must be 1-D of length " + std::to_string(d));
  }
  if (d == 0) throw DimensionError("layer_norm: zero-width rows");
  std::vector<double> out(n * d);
  std::vector<double> xhat(n * d);
  std::vector<double> inv(n);
  const auto& xv = x.values();
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  for (std::size_t i = 0; i < n; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xv[i * d + j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xv[i * d + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double iv = 1.0 / std::sqrt(var + eps);
    inv[i] = iv;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xv[i * d + j] - mu) * iv;
      xhat[i * d + j] = h;
      out[i * d + j] = gv[j] * h + bv[j];
    }
  }
  Tensor t = OpBuilder::make("layer_norm", x.shape(), std::move(out), {x, gain, bias});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    TensorNode* pg = N(gain);
    TensorNode* pb = N(bias);
    on->backward = [on, px, pg, pb, xhat = std::move(xhat), inv = std::move(inv), n, d] {
      const bool gx = wants_grad(px);
      const bool gg = wants_grad(pg);
      const bool gb = wants_grad(pb);
      for (std::size_t i = 0; i < n; ++i) {
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double h = on->grad[i * d + j] * pg->value[j];
          m1 += h;
          m2 += h * xhat[i * d + j];
        }
        m1 /= static_cast<double>(d);
        m2 /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
          const double g = on->grad[i * d + j];
          if (gx) {
            const double h = g * pg->value[j];
            px->grad[i * d + j] += inv[i] * (h - m1 - xhat[i * d + j] * m2);
          }
          if (gg) pg->grad[j] += g * xhat[i * d + j];
          if (gb) pb->grad[j] += g;
        }
      }
    };
  }
  return t;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  check_2d("embedding_lookup", table);
  const std::size_t v = table.shape()[0], d = table.shape()[1];
  std::vector<double> out(ids.size() * d);
  const auto& tv = table.values();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int id = ids[r];
    if (id < 0 || static_cast<std::size_t>(id) >= v) {
      throw DataError("embedding_lookup: id " + std::to_string(id) + " at position " +
                      std::to_string(r) + " outside table of " + std::to_string(v) + " rows");
    }
    std::copy(tv.begin() + id * d, tv.begin() + (id + 1) * d, out.begin() + r * d);
  }
  Tensor t = OpBuilder::make("embedding_lookup", Shape{ids.size(), d}, std::move(out), {table});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pt = N(table);
    on->backward = [on, pt, ids, d] {
      if (!wants_grad(pt)) return;
      for (std::size_t r = 0; r < ids.size(); ++r) {
        const std::size_t id = static_cast<std::size_t>(ids[r]);
        for (std::size_t j = 0; j < d; ++j) pt->grad[id * d + j] += on->grad[r * d + j];
      }
    };
  }
  return t;
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;  // exact identity in eval mode
  const double s = 1.0 / (1.0 - p);
  std::vector<std::uint8_t> keep(x.numel());
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    keep[i] = rng.uniform() >= p ? 1 : 0;
    out[i] = keep[i] ? xv[i] * s : 0.0;
  }
  Tensor t = OpBuilder::make("dropout", x.shape(), std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    on->backward = [on, px, keep = std::move(keep), s] {
      if (wants_grad(px)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          if (keep[i]) px->grad[i] += on->grad[i] * s;
      }
    };
  }
  return t;
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets) {
  check_2d("cross_entropy_rows", logits);
  const std::size_t n = logits.shape()[0], v = logits.shape()[1];
  if (targets.size() != n) {
    throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(n) + " rows");
  }
  if (n == 0 || v == 0) throw DimensionError("cross_entropy_rows: empty logits");
  const auto& xv = logits.values();
  std::vector<double> probs(n * v);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= v) {
      throw DataError("cross_entropy_rows: target id " + std::to_string(t) + " at row " +
                      std::to_string(i) + " outside vocabulary of " + std::to_string(v));
    }
    double mx = xv[i * v];
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, xv[i * v + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) z += std::exp(xv[i * v + j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < v; ++j) probs[i * v + j] = std::exp(xv[i * v + j] - lse);
    loss += lse - xv[i * v + static_cast<std::size_t>(t)];
  }
  loss /= static_cast<double>(n);
  Tensor t = OpBuilder::make("cross_entropy_rows", Shape{1}, {loss}, {logits});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pl = N(logits);
    on->backward = [on, pl, probs = std::move(probs), targets, n, v] {
      if (!wants_grad(pl)) return;
      const double g = on->grad[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < v; ++j) pl->grad[i * v + j] += g * probs[i * v + j];
        pl->grad[i * v + static_cast<std::size_t>(targets[i])] -= g;
      }
    };
  }
  return t;
}

Tensor adjacent_dot(const Tensor& x, const Tensor& y, double mul) {
  check_2d("adjacent_dot", x);
  check_same_shape("adjacent_dot", x, y);
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  const std::size_t L = n > 0 ? n - 1 : 0;
  std::vector<double> out(L, 0.0);
  const auto& xv = x.values();
  const auto& yv = y.values();
  for (std::size_t k = 0; k < L; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += xv[k * d + j] * yv[(k + 1) * d + j];
    out[k] = mul * s;
  }
  Tensor t = OpBuilder::make("adjacent_dot", Shape{L}, std::move(out), {x, y});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* px = N(x);
    TensorNode* py = N(y);
    on->backward = [on, px, py, mul, L, d] {
      const bool gx = wants_grad(px);
      const bool gy = wants_grad(py);
      for (std::size_t k = 0; k < L; ++k) {
        const double g = mul * on->grad[k];
        for (std::size_t j = 0; j < d; ++j) {
          if (gx) px->grad[k * d + j] += g * py->value[(k + 1) * d + j];
          if (gy) py->grad[(k + 1) * d + j] += g * px->value[k * d + j];
        }
      }
    };
  }
  return t;
}

Tensor span_product(const Tensor& a) {
  if (a.rank() != 1) {
    throw DimensionError("span_product: expected a 1-D link vector, got shape " +
                         shape_str(a.shape()));
  }
  const std::size_t L = a.shape()[0];
  const std::size_t n = L + 1;
  const auto& av = a.values();
  for (double v : av) {
    if (v < 0.0) throw NumericError("span_product: negative link value");
    if (a.requires_grad() && v == 0.0) {
      throw NumericError("span_product: zero link value on a differentiable path");
    }
  }
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i * n + i] = 1.0;
    double s = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      s += std::log(av[j - 1]);
      const double v = std::exp(s);
      out[i * n + j] = v;
      out[j * n + i] = v;
    }
  }
  Tensor t = OpBuilder::make("span_product", Shape{n, n}, std::move(out), {a});
  if (t.requires_grad()) {
    TensorNode* on = N(t);
    TensorNode* pa = N(a);
    on->backward = [on, pa, n] {
      if (!wants_grad(pa)) return;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const double ak = pa->value[k];
        double acc = 0.0;
        for (std::size_t i = 0; i <= k; ++i) {
          for (std::size_t j = k + 1; j < n; ++j) {
            const double c = on->value[i * n + j];
            acc += (on->grad[i * n + j] + on->grad[j * n + i]) * c;
          }
        }
        pa->grad[k] += acc / ak;
      }
    };
  }
  return t;
}

}  // namespace synparse
