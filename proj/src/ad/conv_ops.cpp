#include <Eigen/Core>
#include <cmath>
#include <memory>

#include "fullend/ad/ops.hpp"
#include "op_util.hpp"

namespace fullend::ad {

using detail::gbuf;
using detail::make_output;
using detail::val;
using detail::wants;

std::size_t conv_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad_total) {
  if (stride == 0) throw ContractError("conv: zero stride");
  if (in + pad_total < k) throw ContractError("conv: input smaller than kernel");
  return (in + pad_total - k) / stride + 1;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Output index range [lo, hi) whose input index o*stride + j - pad lies in [0, n).
std::pair<std::size_t, std::size_t> valid_range(std::size_t out, std::size_t n, std::size_t stride, std::size_t j,
                                                std::size_t pad) {
  std::size_t lo = 0;
  if (pad > j) lo = (pad - j + stride - 1) / stride;
  if (n + pad <= j) return {0, 0};
  std::size_t hi = (n - 1 + pad - j) / stride + 1;
  if (hi > out) hi = out;
  if (lo > hi) lo = hi;
  return {lo, hi};
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeometry& geo) {
  detail::expect_rank(x, 3, "conv2d", "input");
  detail::expect_rank(w, 4, "conv2d", "weight");
  const std::size_t Ci = x.dim(0), T = x.dim(1), F = x.dim(2);
  const std::size_t Co = w.dim(0), kt = w.dim(2), kf = w.dim(3);
  if (w.dim(1) != Ci)
    throw ContractError("conv2d: input has " + std::to_string(Ci) + " channels, weight expects " +
                        std::to_string(w.dim(1)));
  detail::expect_shape(b, {Co}, "conv2d", "bias");
  const std::size_t Ot = conv_out_size(T, kt, geo.stride_t, geo.pad_t_before + geo.pad_t_after);
  const std::size_t Of = conv_out_size(F, kf, geo.stride_f, 2 * geo.pad_f);
  Tensor out = make_output({Co, Ot, Of}, {&x, &w, &b}, "conv2d");
  const std::size_t K = Ci * kt * kf, N = Ot * Of;

  // Visits every in-range (row of the column matrix, output position, input position).
  auto for_each_tap = [=](auto&& body) {
    for (std::size_t ci = 0; ci < Ci; ++ci)
      for (std::size_t i = 0; i < kt; ++i) {
        const auto [tlo, thi] = valid_range(Ot, T, geo.stride_t, i, geo.pad_t_before);
        for (std::size_t j = 0; j < kf; ++j) {
          const auto [flo, fhi] = valid_range(Of, F, geo.stride_f, j, geo.pad_f);
          if (flo >= fhi) continue;
          const std::size_t row = (ci * kt + i) * kf + j;
          for (std::size_t ot = tlo; ot < thi; ++ot) {
            const std::size_t ti = ot * geo.stride_t + i - geo.pad_t_before;
            for (std::size_t of = flo; of < fhi; ++of)
              body(row * N + ot * Of + of, (ci * T + ti) * F + of * geo.stride_f + j - geo.pad_f);
          }
        }
      }
  };

  auto cols = std::make_shared<std::vector<double>>(K * N, 0.0);
  const double* X = x.data();
  for_each_tap([&](std::size_t c, std::size_t xi) { (*cols)[c] = X[xi]; });

  double* y = out.data();
  for (std::size_t co = 0; co < Co; ++co) std::fill_n(y + co * N, N, b[co]);
  MatrixMap(y, Co, N).noalias() += ConstMatrixMap(w.data(), Co, K) * ConstMatrixMap(cols->data(), K, N);

  if (out.requires_grad()) {
    out.node()->backward = [=](Node& self) {
      const auto& Wv = val(self, 1);
      const auto& G = self.grad;
      if (wants(self, 2)) {
        auto& gb = gbuf(self, 2);
        for (std::size_t co = 0; co < Co; ++co)
          for (std::size_t k = 0; k < N; ++k) gb[co] += G[co * N + k];
      }
      const ConstMatrixMap g(G.data(), Co, N);
      if (wants(self, 1))
        MatrixMap(gbuf(self, 1).data(), Co, K).noalias() += g * ConstMatrixMap(cols->data(), K, N).transpose();
      if (wants(self, 0)) {
        std::vector<double> gcols(K * N);
        MatrixMap(gcols.data(), K, N).noalias() = ConstMatrixMap(Wv.data(), Co, K).transpose() * g;
        double* gx = gbuf(self, 0).data();
        for_each_tap([&](std::size_t c, std::size_t xi) { gx[xi] += gcols[c]; });
      }
    };
  }
  return out;
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride_f,
                        std::size_t output_padding) {
  detail::expect_rank(x, 3, "conv_transpose2d", "input");
  detail::expect_rank(w, 4, "conv_transpose2d", "weight");
  const std::size_t Ci = x.dim(0), T = x.dim(1), F = x.dim(2);
  const std::size_t Co = w.dim(1), kf = w.dim(3);
  if (w.dim(0) != Ci)
    throw ContractError("conv_transpose2d: input has " + std::to_string(Ci) + " channels, weight expects " +
                        std::to_string(w.dim(0)));
  if (w.dim(2) != 1) throw ContractError("conv_transpose2d: only time-kernel 1 is supported");
  if (stride_f == 0 || output_padding >= stride_f) throw ContractError("conv_transpose2d: bad stride/output padding");
  detail::expect_shape(b, {Co}, "conv_transpose2d", "bias");
  const std::size_t Of = (F - 1) * stride_f + kf + output_padding;
  Tensor out = make_output({Co, T, Of}, {&x, &w, &b}, "conv_transpose2d");
  double* y = out.data();
  for (std::size_t co = 0; co < Co; ++co) std::fill_n(y + co * T * Of, T * Of, b[co]);
  const double* X = x.data();
  const double* W = w.data();
  for (std::size_t ci = 0; ci < Ci; ++ci)
    for (std::size_t co = 0; co < Co; ++co)
      for (std::size_t j = 0; j < kf; ++j) {
        const double wv = W[(ci * Co + co) * kf + j];
        for (std::size_t t = 0; t < T; ++t) {
          const double* xr = X + (ci * T + t) * F;
          double* yr = y + (co * T + t) * Of + j;
          for (std::size_t f = 0; f < F; ++f) yr[f * stride_f] += wv * xr[f];
        }
      }
  if (out.requires_grad()) {
    out.node()->backward = [=](Node& self) {
      const auto& Xv = val(self, 0);
      const auto& Wv = val(self, 1);
      const auto& G = self.grad;
      const bool gx_on = wants(self, 0), gw_on = wants(self, 1);
      double* gx = gx_on ? gbuf(self, 0).data() : nullptr;
      double* gw = gw_on ? gbuf(self, 1).data() : nullptr;
      if (wants(self, 2)) {
        auto& gb = gbuf(self, 2);
        for (std::size_t co = 0; co < Co; ++co)
          for (std::size_t k = 0; k < T * Of; ++k) gb[co] += G[co * T * Of + k];
      }
      for (std::size_t ci = 0; ci < Ci; ++ci)
        for (std::size_t co = 0; co < Co; ++co)
          for (std::size_t j = 0; j < kf; ++j) {
            const std::size_t widx = (ci * Co + co) * kf + j;
            const double wv = Wv[widx];
            double acc = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
              const double* gr = G.data() + (co * T + t) * Of + j;
              const double* xr = Xv.data() + (ci * T + t) * F;
              if (gx_on) {
                double* gxr = gx + (ci * T + t) * F;
                for (std::size_t f = 0; f < F; ++f) gxr[f] += wv * gr[f * stride_f];
              }
              if (gw_on)
                for (std::size_t f = 0; f < F; ++f) acc += xr[f] * gr[f * stride_f];
            }
            if (gw_on) gw[widx] += acc;
          }
    };
  }
  return out;
}

Tensor conv1d_causal(const Tensor& x, const Tensor& w, const Tensor& b) {
  detail::expect_rank(x, 2, "conv1d", "input");
  detail::expect_rank(w, 3, "conv1d", "weight");
  const std::size_t T = x.dim(0), Ci = x.dim(1), Co = w.dim(0), K = w.dim(2);
  if (w.dim(1) != Ci)
    throw ContractError("conv1d: input has " + std::to_string(Ci) + " channels, weight expects " +
                        std::to_string(w.dim(1)));
  detail::expect_shape(b, {Co}, "conv1d", "bias");
  // Tap-major copy of the kernel so the channel loop is contiguous.
  std::vector<double> wt(K * Co * Ci);
  for (std::size_t co = 0; co < Co; ++co)
    for (std::size_t ci = 0; ci < Ci; ++ci)
      for (std::size_t j = 0; j < K; ++j) wt[(j * Co + co) * Ci + ci] = w[(co * Ci + ci) * K + j];
  Tensor out = make_output({T, Co}, {&x, &w, &b}, "conv1d");
  double* y = out.data();
  const double* X = x.data();
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t co = 0; co < Co; ++co) y[t * Co + co] = b[co];
    for (std::size_t j = 0; j < K; ++j) {
      if (t + j + 1 < K) continue;  // input index t - (K-1) + j < 0
      const double* xr = X + (t + j + 1 - K) * Ci;
      for (std::size_t co = 0; co < Co; ++co) {
        const double* wr = wt.data() + (j * Co + co) * Ci;
        double acc = 0.0;
        for (std::size_t ci = 0; ci < Ci; ++ci) acc += wr[ci] * xr[ci];
        y[t * Co + co] += acc;
      }
    }
  }
  if (out.requires_grad()) {
    out.node()->backward = [T, Ci, Co, K, wt = std::move(wt)](Node& self) {
      const auto& Xv = val(self, 0);
      const auto& G = self.grad;
      const bool gx_on = wants(self, 0), gw_on = wants(self, 1);
      double* gx = gx_on ? gbuf(self, 0).data() : nullptr;
      std::vector<double> gwt(gw_on ? K * Co * Ci : 0, 0.0);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < K; ++j) {
          if (t + j + 1 < K) continue;
          const std::size_t src = t + j + 1 - K;
          for (std::size_t co = 0; co < Co; ++co) {
            const double g = G[t * Co + co];
            if (g == 0.0) continue;
            if (gx_on) {
              const double* wr = wt.data() + (j * Co + co) * Ci;
              double* gr = gx + src * Ci;
              for (std::size_t ci = 0; ci < Ci; ++ci) gr[ci] += g * wr[ci];
            }
            if (gw_on) {
              const double* xr = Xv.data() + src * Ci;
              double* gr = gwt.data() + (j * Co + co) * Ci;
              for (std::size_t ci = 0; ci < Ci; ++ci) gr[ci] += g * xr[ci];
            }
          }
        }
      if (gw_on) {
        auto& gw = gbuf(self, 1);
        for (std::size_t co = 0; co < Co; ++co)
          for (std::size_t ci = 0; ci < Ci; ++ci)
            for (std::size_t j = 0; j < K; ++j) gw[(co * Ci + ci) * K + j] += gwt[(j * Co + co) * Ci + ci];
      }
      if (wants(self, 2)) {
        auto& gb = gbuf(self, 2);
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t co = 0; co < Co; ++co) gb[co] += G[t * Co + co];
      }
    };
  }
  return out;
}

Tensor frame_layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  detail::expect_rank(x, 3, "frame_layer_norm", "input");
  const std::size_t C = x.dim(0), T = x.dim(1), F = x.dim(2);
  detail::expect_shape(gamma, {C}, "frame_layer_norm", "gamma");
  detail::expect_shape(beta, {C}, "frame_layer_norm", "beta");
  const double N = static_cast<double>(C * F);
  Tensor out = make_output(x.shape(), {&x, &gamma, &beta}, "frame_layer_norm");
  std::vector<double> xhat(x.size()), inv_sigma(T);
  const double* X = x.data();
  for (std::size_t t = 0; t < T; ++t) {
    double s1 = 0.0;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t f = 0; f < F; ++f) s1 += X[(c * T + t) * F + f];
    const double mu = s1 / N;
    double s2 = 0.0;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t f = 0; f < F; ++f) {
        const double d = X[(c * T + t) * F + f] - mu;
        s2 += d * d;
      }
    inv_sigma[t] = 1.0 / std::sqrt(s2 / N + eps);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t f = 0; f < F; ++f) {
        const std::size_t i = (c * T + t) * F + f;
        xhat[i] = (X[i] - mu) * inv_sigma[t];
        out.data()[i] = gamma[c] * xhat[i] + beta[c];
      }
  }
  if (out.requires_grad()) {
    out.node()->backward = [C, T, F, N, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma)](Node& self) {
      const auto& gam = val(self, 1);
      const auto& G = self.grad;
      if (wants(self, 1) || wants(self, 2)) {
        std::vector<double> dg(C, 0.0), db(C, 0.0);
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t k = 0; k < T * F; ++k) {
            dg[c] += G[c * T * F + k] * xhat[c * T * F + k];
            db[c] += G[c * T * F + k];
          }
        if (wants(self, 1)) {
          auto& g = gbuf(self, 1);
          for (std::size_t c = 0; c < C; ++c) g[c] += dg[c];
        }
        if (wants(self, 2)) {
          auto& g = gbuf(self, 2);
          for (std::size_t c = 0; c < C; ++c) g[c] += db[c];
        }
      }
      if (!wants(self, 0)) return;
      auto& gx = gbuf(self, 0);
      for (std::size_t t = 0; t < T; ++t) {
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t f = 0; f < F; ++f) {
            const std::size_t i = (c * T + t) * F + f;
            const double gh = G[i] * gam[c];
            m1 += gh;
            m2 += gh * xhat[i];
          }
        m1 /= N;
        m2 /= N;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t f = 0; f < F; ++f) {
            const std::size_t i = (c * T + t) * F + f;
            gx[i] += inv_sigma[t] * (G[i] * gam[c] - m1 - xhat[i] * m2);
          }
      }
    };
  }
  return out;
}

Tensor cumulative_layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  detail::expect_rank(x, 2, "cumulative_layer_norm", "input");
  const std::size_t T = x.dim(0), C = x.dim(1);
  detail::expect_shape(gamma, {C}, "cumulative_layer_norm", "gamma");
  detail::expect_shape(beta, {C}, "cumulative_layer_norm", "beta");
  Tensor out = make_output(x.shape(), {&x, &gamma, &beta}, "cumulative_layer_norm");
  std::vector<double> mu(T), sigma(T), count(T);
  double s1 = 0.0, s2 = 0.0;
  const double* X = x.data();
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      s1 += X[t * C + c];
      s2 += X[t * C + c] * X[t * C + c];
    }
    count[t] = static_cast<double>((t + 1) * C);
    mu[t] = s1 / count[t];
    const double var = std::max(s2 / count[t] - mu[t] * mu[t], 0.0);
    sigma[t] = std::sqrt(var + eps);
    for (std::size_t c = 0; c < C; ++c)
      out.data()[t * C + c] = gamma[c] * (X[t * C + c] - mu[t]) / sigma[t] + beta[c];
  }
  if (out.requires_grad()) {
    out.node()->backward = [T, C, mu = std::move(mu), sigma = std::move(sigma), count = std::move(count)](Node& self) {
      const auto& Xv = val(self, 0);
      const auto& gam = val(self, 1);
      const auto& G = self.grad;
      if (wants(self, 1)) {
        auto& g = gbuf(self, 1);
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t c = 0; c < C; ++c) g[c] += G[t * C + c] * (Xv[t * C + c] - mu[t]) / sigma[t];
      }
      if (wants(self, 2)) {
        auto& g = gbuf(self, 2);
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t c = 0; c < C; ++c) g[c] += G[t * C + c];
      }
      if (!wants(self, 0)) return;
      // Gradients w.r.t. the running sums S1_t, S2_t, then suffix-accumulated.
      std::vector<double> dS1(T), dS2(T);
      for (std::size_t t = 0; t < T; ++t) {
        double dmu = 0.0, dsig = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double gh = G[t * C + c] * gam[c];
          dmu -= gh / sigma[t];
          dsig -= gh * (Xv[t * C + c] - mu[t]) / (sigma[t] * sigma[t]);
        }
        const double dvar = dsig / (2.0 * sigma[t]);
        dS1[t] = (dmu - 2.0 * mu[t] * dvar) / count[t];
        dS2[t] = dvar / count[t];
      }
      auto& gx = gbuf(self, 0);
      double a = 0.0, b = 0.0;
      for (std::size_t t = T; t-- > 0;) {
        a += dS1[t];
        b += dS2[t];
        for (std::size_t c = 0; c < C; ++c)
          gx[t * C + c] += G[t * C + c] * gam[c] / sigma[t] + a + 2.0 * Xv[t * C + c] * b;
      }
    };
  }
  return out;
}

Tensor prelu(const Tensor& x, const Tensor& alpha, std::size_t channel_axis) {
  if (channel_axis >= x.rank()) throw ContractError("prelu: channel axis out of range");
  const std::size_t C = x.dim(channel_axis);
  detail::expect_shape(alpha, {C}, "prelu", "alpha");
  std::size_t inner = 1;
  for (std::size_t d = channel_axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  Tensor out = make_output(x.shape(), {&x, &alpha}, "prelu");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    out.data()[i] = v > 0.0 ? v : alpha[(i / inner) % C] * v;
  }
  if (out.requires_grad()) {
    out.node()->backward = [C, inner](Node& self) {
      const auto& X = val(self, 0);
      const auto& A = val(self, 1);
      const auto& G = self.grad;
      if (wants(self, 0)) {
        auto& g = gbuf(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += X[i] > 0.0 ? G[i] : A[(i / inner) % C] * G[i];
      }
      if (wants(self, 1)) {
        auto& g = gbuf(self, 1);
        for (std::size_t i = 0; i < X.size(); ++i)
          if (!(X[i] > 0.0)) g[(i / inner) % C] += G[i] * X[i];
      }
    };
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  detail::expect_rank(x, 3, "global_avg_pool", "input");
  const std::size_t C = x.dim(0), n = x.dim(1) * x.dim(2);
  Tensor out = make_output({C}, {&x}, "global_avg_pool");
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += x[c * n + k];
    out.data()[c] = acc / static_cast<double>(n);
  }
  if (out.requires_grad()) {
    out.node()->backward = [C, n](Node& self) {
      auto& g = gbuf(self, 0);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t k = 0; k < n; ++k) g[c * n + k] += self.grad[c] / static_cast<double>(n);
    };
  }
  return out;
}

}  // namespace fullend::ad
