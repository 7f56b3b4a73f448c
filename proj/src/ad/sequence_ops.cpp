#include <algorithm>
#include <cmath>

#include "fullend/ad/ops.hpp"
#include "op_util.hpp"

namespace fullend::ad {

using detail::gbuf;
using detail::make_output;
using detail::val;
using detail::wants;

namespace {
inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Tensor lstm(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& b) {
  detail::expect_rank(x, 2, "lstm", "input");
  const std::size_t T = x.dim(0), I = x.dim(1);
  detail::expect_rank(w_hh, 2, "lstm", "w_hh");
  const std::size_t H = w_hh.dim(1);
  detail::expect_shape(w_ih, {4 * H, I}, "lstm", "w_ih");
  detail::expect_shape(w_hh, {4 * H, H}, "lstm", "w_hh");
  detail::expect_shape(b, {4 * H}, "lstm", "bias");
  Tensor out = make_output({T, H}, {&x, &w_ih, &w_hh, &b}, "lstm");

  // gates[t] = (i, f, g, o) after activation; cells[t] = c_t
  std::vector<double> gates(T * 4 * H), cells(T * H), z(4 * H);
  const double* X = x.data();
  const double* Wi = w_ih.data();
  const double* Wh = w_hh.data();
  double* Hs = out.data();
  for (std::size_t t = 0; t < T; ++t) {
    const double* xt = X + t * I;
    const double* hp = t > 0 ? Hs + (t - 1) * H : nullptr;
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double acc = b[r];
      const double* wr = Wi + r * I;
      for (std::size_t i = 0; i < I; ++i) acc += wr[i] * xt[i];
      if (hp != nullptr) {
        const double* hr = Wh + r * H;
        for (std::size_t j = 0; j < H; ++j) acc += hr[j] * hp[j];
      }
      z[r] = acc;
    }
    double* gt = gates.data() + t * 4 * H;
    for (std::size_t j = 0; j < H; ++j) {
      gt[j] = sigm(z[j]);
      gt[H + j] = sigm(z[H + j]);
      gt[2 * H + j] = std::tanh(z[2 * H + j]);
      gt[3 * H + j] = sigm(z[3 * H + j]);
      const double cprev = t > 0 ? cells[(t - 1) * H + j] : 0.0;
      const double c = gt[H + j] * cprev + gt[j] * gt[2 * H + j];
      cells[t * H + j] = c;
      Hs[t * H + j] = gt[3 * H + j] * std::tanh(c);
    }
  }

  if (out.requires_grad()) {
    out.node()->backward = [T, I, H, gates = std::move(gates), cells = std::move(cells)](Node& self) {
      const auto& Xv = val(self, 0);
      const auto& Wi = val(self, 1);
      const auto& Wh = val(self, 2);
      const auto& G = self.grad;
      const auto& Hs = self.value;
      const bool gx_on = wants(self, 0), gwi_on = wants(self, 1), gwh_on = wants(self, 2), gb_on = wants(self, 3);
      double* gx = gx_on ? gbuf(self, 0).data() : nullptr;
      double* gwi = gwi_on ? gbuf(self, 1).data() : nullptr;
      double* gwh = gwh_on ? gbuf(self, 2).data() : nullptr;
      double* gb = gb_on ? gbuf(self, 3).data() : nullptr;
      std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dz(4 * H);
      for (std::size_t t = T; t-- > 0;) {
        const double* gt = gates.data() + t * 4 * H;
        for (std::size_t j = 0; j < H; ++j) {
          const double ig = gt[j], fg = gt[H + j], gg = gt[2 * H + j], og = gt[3 * H + j];
          const double c = cells[t * H + j];
          const double tc = std::tanh(c);
          const double cprev = t > 0 ? cells[(t - 1) * H + j] : 0.0;
          const double dh = G[t * H + j] + dh_next[j];
          const double dc = dh * og * (1.0 - tc * tc) + dc_next[j];
          dz[j] = dc * gg * ig * (1.0 - ig);
          dz[H + j] = dc * cprev * fg * (1.0 - fg);
          dz[2 * H + j] = dc * ig * (1.0 - gg * gg);
          dz[3 * H + j] = dh * tc * og * (1.0 - og);
          dc_next[j] = dc * fg;
        }
        const double* xt = Xv.data() + t * I;
        const double* hp = t > 0 ? Hs.data() + (t - 1) * H : nullptr;
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t r = 0; r < 4 * H; ++r) {
          const double d = dz[r];
          if (d == 0.0) continue;
          if (gb_on) gb[r] += d;
          if (gwi_on)
            for (std::size_t i = 0; i < I; ++i) gwi[r * I + i] += d * xt[i];
          if (gx_on)
            for (std::size_t i = 0; i < I; ++i) gx[t * I + i] += d * Wi[r * I + i];
          if (hp != nullptr) {
            if (gwh_on)
              for (std::size_t j = 0; j < H; ++j) gwh[r * H + j] += d * hp[j];
            for (std::size_t j = 0; j < H; ++j) dh_next[j] += d * Wh[r * H + j];
          }
        }
      }
    };
  }
  return out;
}

Tensor multi_head_attention_core(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                                 std::vector<double>* weights) {
  detail::expect_rank(q, 2, "attention", "query");
  const std::size_t T = q.dim(0), D = q.dim(1);
  detail::expect_rank(k, 2, "attention", "keys");
  const std::size_t N = k.dim(0);
  detail::expect_shape(k, {N, D}, "attention", "keys");
  detail::expect_shape(v, {N, D}, "attention", "values");
  if (heads == 0 || D % heads != 0) throw ContractError("attention: model dim not divisible by heads");
  const std::size_t dh = D / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor out = make_output({T, D}, {&q, &k, &v}, "attention");
  std::vector<double> att(heads * T * N);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t t = 0; t < T; ++t) {
      double* a = att.data() + (h * T + t) * N;
      double mx = -1e300;
      for (std::size_t n = 0; n < N; ++n) {
        double s = 0.0;
        for (std::size_t d = h * dh; d < (h + 1) * dh; ++d) s += q[t * D + d] * k[n * D + d];
        a[n] = s * inv;
        mx = std::max(mx, a[n]);
      }
      double z = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        a[n] = std::exp(a[n] - mx);
        z += a[n];
      }
      for (std::size_t n = 0; n < N; ++n) a[n] /= z;
      for (std::size_t d = h * dh; d < (h + 1) * dh; ++d) {
        double acc = 0.0;
        for (std::size_t n = 0; n < N; ++n) acc += a[n] * v[n * D + d];
        out.data()[t * D + d] = acc;
      }
    }
  if (weights != nullptr) *weights = att;
  if (out.requires_grad()) {
    out.node()->backward = [T, D, N, heads, dh, inv, att = std::move(att)](Node& self) {
      const auto& Q = val(self, 0);
      const auto& K = val(self, 1);
      const auto& V = val(self, 2);
      const auto& G = self.grad;
      const bool gq_on = wants(self, 0), gk_on = wants(self, 1), gv_on = wants(self, 2);
      double* gq = gq_on ? gbuf(self, 0).data() : nullptr;
      double* gk = gk_on ? gbuf(self, 1).data() : nullptr;
      double* gv = gv_on ? gbuf(self, 2).data() : nullptr;
      std::vector<double> da(N);
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t t = 0; t < T; ++t) {
          const double* a = att.data() + (h * T + t) * N;
          double dot = 0.0;
          for (std::size_t n = 0; n < N; ++n) {
            double acc = 0.0;
            for (std::size_t d = h * dh; d < (h + 1) * dh; ++d) {
              acc += G[t * D + d] * V[n * D + d];
              if (gv_on) gv[n * D + d] += a[n] * G[t * D + d];
            }
            da[n] = acc;
            dot += a[n] * acc;
          }
          for (std::size_t n = 0; n < N; ++n) {
            const double ds = a[n] * (da[n] - dot) * inv;
            if (ds == 0.0) continue;
            for (std::size_t d = h * dh; d < (h + 1) * dh; ++d) {
              if (gq_on) gq[t * D + d] += ds * K[n * D + d];
              if (gk_on) gk[n * D + d] += ds * Q[t * D + d];
            }
          }
        }
    };
  }
  return out;
}

}  // namespace fullend::ad
