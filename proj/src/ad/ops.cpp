#include <cmath>
#include <numeric>

#include "fullend/ad/ops.hpp"
#include "op_util.hpp"

namespace fullend::ad {

using detail::gbuf;
using detail::make_output;
using detail::val;
using detail::wants;

namespace {

template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, const char* name, Fwd fwd, Deriv deriv) {
  Tensor out = make_output(a.shape(), {&a}, name);
  const auto& x = a.values();
  auto y = out.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fwd(x[i]);
  if (out.requires_grad()) {
    out.node()->backward = [deriv](Node& self) {
      const auto& x = val(self, 0);
      auto& gx = gbuf(self, 0);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * deriv(x[i], self.value[i]);
    };
  }
  return out;
}

void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ContractError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "add");
  Tensor out = make_output(a.shape(), {&a, &b}, "add");
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a[i] + b[i];
  if (out.requires_grad()) {
    out.node()->backward = [](Node& self) {
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(self, k)) continue;
        auto& g = gbuf(self, k);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "sub");
  Tensor out = make_output(a.shape(), {&a, &b}, "sub");
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a[i] - b[i];
  if (out.requires_grad()) {
    out.node()->backward = [](Node& self) {
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(self, k)) continue;
        const double s = k == 0 ? 1.0 : -1.0;
        auto& g = gbuf(self, k);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
      }
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "mul");
  Tensor out = make_output(a.shape(), {&a, &b}, "mul");
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a[i] * b[i];
  if (out.requires_grad()) {
    out.node()->backward = [](Node& self) {
      const auto& x = val(self, 0);
      const auto& y = val(self, 1);
      if (wants(self, 0)) {
        auto& g = gbuf(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y[i];
      }
      if (wants(self, 1)) {
        auto& g = gbuf(self, 1);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x[i];
      }
    };
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  return unary(a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary(a, "sqrt", [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& a) {
  return unary(a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sum(const Tensor& a) {
  Tensor out = make_output({1}, {&a}, "sum");
  out.data()[0] = std::accumulate(a.values().begin(), a.values().end(), 0.0);
  if (out.requires_grad()) {
    out.node()->backward = [](Node& self) {
      auto& g = gbuf(self, 0);
      for (double& v : g) v += self.grad[0];
    };
  }
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ContractError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor squared_error(const Tensor& a, const std::vector<double>& target) {
  if (target.size() != a.size()) throw ContractError("squared_error: target size mismatch");
  Tensor out = make_output({1}, {&a}, "squared_error");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - target[i]) * (a[i] - target[i]);
  out.data()[0] = acc;
  if (out.requires_grad()) {
    out.node()->backward = [target](Node& self) {
      const auto& x = val(self, 0);
      auto& g = gbuf(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * 2.0 * (x[i] - target[i]);
    };
  }
  return out;
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (shape_size(shape) != a.size())
    throw ContractError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  Tensor out = make_output(shape, {&a}, "reshape");
  std::copy(a.values().begin(), a.values().end(), out.data());
  if (out.requires_grad()) {
    out.node()->backward = [](Node& self) {
      auto& g = gbuf(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    };
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw ContractError("concat: axis out of range");
  Shape shape = s0;
  shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.rank() != s0.size()) throw ContractError("concat: rank mismatch");
    for (std::size_t d = 0; d < s0.size(); ++d)
      if (d != axis && p.dim(d) != s0[d])
        throw ContractError("concat: shape mismatch " + shape_str(p.shape()) + " vs " + shape_str(s0));
    shape[axis] += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
  for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];

  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(shape_size(shape), 0.0);
  n->op = "concat";
  bool rg = false;
  if (grad_enabled())
    for (const auto& p : parts) rg = rg || p.requires_grad();
  n->requires_grad = rg;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    widths.push_back(p.dim(axis) * inner);
    if (rg) n->inputs.push_back(p.ptr());
  }
  const std::size_t row = shape[axis] * inner;
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(parts[k].data() + o * widths[k], widths[k], n->value.data() + o * row + off);
    off += widths[k];
  }
  if (rg) {
    n->backward = [widths, outer, row](Node& self) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        if (wants(self, k)) {
          auto& g = gbuf(self, k);
          for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t i = 0; i < widths[k]; ++i) g[o * widths[k] + i] += self.grad[o * row + off + i];
        }
        off += widths[k];
      }
    };
  }
  return Tensor(std::move(n));
}

Tensor slice0(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() == 0 || begin > end || end > a.dim(0)) throw ContractError("slice0: range out of bounds");
  Shape shape = a.shape();
  shape[0] = end - begin;
  const std::size_t inner = a.size() / a.dim(0);
  Tensor out = make_output(shape, {&a}, "slice0");
  std::copy_n(a.data() + begin * inner, (end - begin) * inner, out.data());
  if (out.requires_grad()) {
    out.node()->backward = [begin, inner](Node& self) {
      auto& g = gbuf(self, 0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * inner + i] += self.grad[i];
    };
  }
  return out;
}

Tensor repeat_rows(const Tensor& a, std::size_t rows) {
  const std::size_t n = a.size();
  if (!(a.rank() == 1 || (a.rank() == 2 && a.dim(0) == 1)))
    throw ContractError("repeat_rows: expects [N] or [1,N], got " + shape_str(a.shape()));
  Tensor out = make_output({rows, n}, {&a}, "repeat_rows");
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(a.data(), n, out.data() + r * n);
  if (out.requires_grad()) {
    out.node()->backward = [rows, n](Node& self) {
      auto& g = gbuf(self, 0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[r * n + i];
    };
  }
  return out;
}

Tensor frames_to_sequence(const Tensor& a) {
  detail::expect_rank(a, 3, "frames_to_sequence", "input");
  const std::size_t C = a.dim(0), T = a.dim(1), F = a.dim(2);
  Tensor out = make_output({T, C * F}, {&a}, "frames_to_sequence");
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < T; ++t) std::copy_n(a.data() + (c * T + t) * F, F, out.data() + t * C * F + c * F);
  if (out.requires_grad()) {
    out.node()->backward = [C, T, F](Node& self) {
      auto& g = gbuf(self, 0);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t f = 0; f < F; ++f) g[(c * T + t) * F + f] += self.grad[t * C * F + c * F + f];
    };
  }
  return out;
}

Tensor sequence_to_frames(const Tensor& a, std::size_t channels) {
  detail::expect_rank(a, 2, "sequence_to_frames", "input");
  const std::size_t T = a.dim(0), CF = a.dim(1);
  if (channels == 0 || CF % channels != 0) throw ContractError("sequence_to_frames: width not divisible by channels");
  const std::size_t C = channels, F = CF / channels;
  Tensor out = make_output({C, T, F}, {&a}, "sequence_to_frames");
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < T; ++t) std::copy_n(a.data() + t * CF + c * F, F, out.data() + (c * T + t) * F);
  if (out.requires_grad()) {
    out.node()->backward = [C, T, F](Node& self) {
      auto& g = gbuf(self, 0);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t f = 0; f < F; ++f) g[t * C * F + c * F + f] += self.grad[(c * T + t) * F + f];
    };
  }
  return out;
}

Tensor transpose2d(const Tensor& a) {
  detail::expect_rank(a, 2, "transpose2d", "input");
  const std::size_t R = a.dim(0), C = a.dim(1);
  Tensor out = make_output({C, R}, {&a}, "transpose2d");
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out.data()[c * R + r] = a[r * C + c];
  if (out.requires_grad()) {
    out.node()->backward = [R, C](Node& self) {
      auto& g = gbuf(self, 0);
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) g[r * C + c] += self.grad[c * R + r];
    };
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::expect_rank(a, 2, "matmul", "lhs");
  detail::expect_rank(b, 2, "matmul", "rhs");
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  if (b.dim(0) != K)
    throw ContractError("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor out = make_output({M, N}, {&a, &b}, "matmul");
  double* y = out.data();
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      const double aik = a[i * K + k];
      const double* brow = b.data() + k * N;
      for (std::size_t j = 0; j < N; ++j) y[i * N + j] += aik * brow[j];
    }
  if (out.requires_grad()) {
    out.node()->backward = [M, K, N](Node& self) {
      const auto& A = val(self, 0);
      const auto& B = val(self, 1);
      const auto& G = self.grad;
      if (wants(self, 0)) {
        auto& ga = gbuf(self, 0);
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t k = 0; k < K; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < N; ++j) acc += G[i * N + j] * B[k * N + j];
            ga[i * K + k] += acc;
          }
      }
      if (wants(self, 1)) {
        auto& gb = gbuf(self, 1);
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t k = 0; k < K; ++k) {
            const double aik = A[i * K + k];
            for (std::size_t j = 0; j < N; ++j) gb[k * N + j] += aik * G[i * N + j];
          }
      }
    };
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b) {
  detail::expect_rank(x, 2, "linear", "input");
  detail::expect_rank(w, 2, "linear", "weight");
  const std::size_t T = x.dim(0), I = x.dim(1), O = w.dim(0);
  if (w.dim(1) != I)
    throw ContractError("linear: input width " + std::to_string(I) + " does not match weight " + shape_str(w.shape()));
  if (b != nullptr) detail::expect_shape(*b, {O}, "linear", "bias");
  Tensor out = make_output({T, O}, {&x, &w, b}, "linear");
  double* y = out.data();
  for (std::size_t t = 0; t < T; ++t) {
    const double* xr = x.data() + t * I;
    for (std::size_t o = 0; o < O; ++o) {
      const double* wr = w.data() + o * I;
      double acc = b != nullptr ? (*b)[o] : 0.0;
      for (std::size_t i = 0; i < I; ++i) acc += wr[i] * xr[i];
      y[t * O + o] = acc;
    }
  }
  if (out.requires_grad()) {
    const bool has_bias = b != nullptr;
    out.node()->backward = [T, I, O, has_bias](Node& self) {
      const auto& X = val(self, 0);
      const auto& W = val(self, 1);
      const auto& G = self.grad;
      if (wants(self, 0)) {
        auto& gx = gbuf(self, 0);
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t o = 0; o < O; ++o) {
            const double g = G[t * O + o];
            if (g == 0.0) continue;
            const double* wr = W.data() + o * I;
            double* gr = gx.data() + t * I;
            for (std::size_t i = 0; i < I; ++i) gr[i] += g * wr[i];
          }
      }
      if (wants(self, 1)) {
        auto& gw = gbuf(self, 1);
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t o = 0; o < O; ++o) {
            const double g = G[t * O + o];
            if (g == 0.0) continue;
            const double* xr = X.data() + t * I;
            double* gr = gw.data() + o * I;
            for (std::size_t i = 0; i < I; ++i) gr[i] += g * xr[i];
          }
      }
      if (has_bias && wants(self, 2)) {
        auto& gb = gbuf(self, 2);
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t o = 0; o < O; ++o) gb[o] += G[t * O + o];
      }
    };
  }
  return out;
}

Tensor si_snr(const Tensor& est, const std::vector<double>& ref) {
  const std::size_t n = est.size();
  if (ref.size() != n || n == 0) throw ContractError("si_snr: length mismatch");
  const double me = std::accumulate(est.values().begin(), est.values().end(), 0.0) / static_cast<double>(n);
  const double mr = std::accumulate(ref.begin(), ref.end(), 0.0) / static_cast<double>(n);
  std::vector<double> e(n), r(n);
  double dot = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = est[i] - me;
    r[i] = ref[i] - mr;
    dot += e[i] * r[i];
    rr += r[i] * r[i];
  }
  if (rr <= 0.0) throw ContractError("si_snr: zero reference");
  constexpr double kEps = 1e-12;
  const double a = dot / rr;
  double target = 0.0, noise = 0.0;
  std::vector<double> tgt(n), err(n);
  for (std::size_t i = 0; i < n; ++i) {
    tgt[i] = a * r[i];
    err[i] = e[i] - tgt[i];
    target += tgt[i] * tgt[i];
    noise += err[i] * err[i];
  }
  Tensor out = make_output({1}, {&est}, "si_snr");
  out.data()[0] = 10.0 * std::log10((target + kEps) / (noise + kEps));
  if (out.requires_grad()) {
    out.node()->backward = [tgt = std::move(tgt), err = std::move(err), target, noise](Node& self) {
      const double c = self.grad[0] * 10.0 / std::log(10.0);
      const std::size_t n = tgt.size();
      std::vector<double> d(n);
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = c * (2.0 * tgt[i] / (target + kEps) - 2.0 * err[i] / (noise + kEps));
        m += d[i];
      }
      m /= static_cast<double>(n);
      auto& g = gbuf(self, 0);
      for (std::size_t i = 0; i < n; ++i) g[i] += d[i] - m;
    };
  }
  return out;
}

}  // namespace fullend::ad
