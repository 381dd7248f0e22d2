// Serial reference implementations of the numeric kernels. These are the
// ground truth the OpenMP variants are tested against (bit-exact).

#include "segref/kernels.hpp"

#include <vector>

#include "kernels_common.hpp"

namespace segref::kernels::serial {

using namespace segref::kernels::detail;

template <typename S>
void conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, int sy, int sx, int py,
            int px, Tensor<S>& y) {
  const int B = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = w.dim(0), Kh = w.dim(2), Kw = w.dim(3);
  const int Ho = y.dim(2), Wo = y.dim(3);
  for (int b = 0; b < B; ++b) {
    const S* xb = x.data() + static_cast<int64_t>(b) * Ci * H * W;
    for (int co = 0; co < Co; ++co) {
      S bv = bias ? bias->data()[co] : S(0);
      S* yp = y.data() + (static_cast<int64_t>(b) * Co + co) * Ho * Wo;
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox)
          yp[static_cast<int64_t>(oy) * Wo + ox] =
              conv2d_at(xb, w.data(), Ci, H, W, Kh, Kw, sy, sx, py, px, co, oy, ox) + bv;
    }
  }
}

template <typename S>
void conv2d_bwd_input(const Tensor<S>& gy, const Tensor<S>& w, int sy, int sx, int py, int px,
                      Tensor<S>& gx) {
  const int B = gx.dim(0), Ci = gx.dim(1), H = gx.dim(2), W = gx.dim(3);
  const int Co = w.dim(0), Kh = w.dim(2), Kw = w.dim(3);
  const int Ho = gy.dim(2), Wo = gy.dim(3);
  for (int b = 0; b < B; ++b) {
    const S* gyb = gy.data() + static_cast<int64_t>(b) * Co * Ho * Wo;
    for (int ci = 0; ci < Ci; ++ci) {
      S* gxp = gx.data() + (static_cast<int64_t>(b) * Ci + ci) * H * W;
      for (int iy = 0; iy < H; ++iy)
        for (int ix = 0; ix < W; ++ix)
          gxp[static_cast<int64_t>(iy) * W + ix] += conv2d_bwd_input_at(
              gyb, w.data(), Co, Ci, Kh, Kw, Ho, Wo, sy, sx, py, px, ci, iy, ix);
    }
  }
}

template <typename S>
void conv2d_bwd_weight(const Tensor<S>& gy, const Tensor<S>& x, int sy, int sx, int py, int px,
                       Tensor<S>& gw) {
  const int B = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = gw.dim(0), Kh = gw.dim(2), Kw = gw.dim(3);
  const int Ho = gy.dim(2), Wo = gy.dim(3);
  for (int co = 0; co < Co; ++co)
    for (int ci = 0; ci < Ci; ++ci)
      for (int ky = 0; ky < Kh; ++ky)
        for (int kx = 0; kx < Kw; ++kx)
          gw.at(co, ci, ky, kx) += conv2d_bwd_weight_elem(gy.data(), x.data(), B, Co, Ci, H, W, Ho,
                                                          Wo, sy, sx, py, px, co, ci, ky, kx);
}

template <typename S>
void conv2d_bwd_bias(const Tensor<S>& gy, Tensor<S>& gb) {
  const int B = gy.dim(0), Co = gy.dim(1);
  const int64_t plane = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
  for (int co = 0; co < Co; ++co) {
    S acc = S(0);
    for (int b = 0; b < B; ++b) {
      const S* p = gy.data() + (static_cast<int64_t>(b) * Co + co) * plane;
      for (int64_t i = 0; i < plane; ++i) acc += p[i];
    }
    gb[co] += acc;
  }
}

template <typename S>
void convt2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, int stride,
             Tensor<S>& y) {
  const int B = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = w.dim(1), K = w.dim(2);
  const int Ho = y.dim(2), Wo = y.dim(3);
  for (int b = 0; b < B; ++b) {
    const S* xb = x.data() + static_cast<int64_t>(b) * Ci * H * W;
    for (int co = 0; co < Co; ++co) {
      S bv = bias ? bias->data()[co] : S(0);
      S* yp = y.data() + (static_cast<int64_t>(b) * Co + co) * Ho * Wo;
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox)
          yp[static_cast<int64_t>(oy) * Wo + ox] =
              convt2d_at(xb, w.data(), Ci, Co, H, W, K, stride, co, oy, ox) + bv;
    }
  }
}

template <typename S>
void convt2d_bwd_input(const Tensor<S>& gy, const Tensor<S>& w, int stride, Tensor<S>& gx) {
  const int B = gx.dim(0), Ci = gx.dim(1), H = gx.dim(2), W = gx.dim(3);
  const int Co = w.dim(1), K = w.dim(2);
  const int Ho = gy.dim(2), Wo = gy.dim(3);
  for (int b = 0; b < B; ++b) {
    const S* gyb = gy.data() + static_cast<int64_t>(b) * Co * Ho * Wo;
    for (int ci = 0; ci < Ci; ++ci) {
      S* gxp = gx.data() + (static_cast<int64_t>(b) * Ci + ci) * H * W;
      for (int iy = 0; iy < H; ++iy)
        for (int ix = 0; ix < W; ++ix)
          gxp[static_cast<int64_t>(iy) * W + ix] +=
              convt2d_bwd_input_at(gyb, w.data(), Ci, Co, Ho, Wo, K, stride, ci, iy, ix);
    }
  }
}

template <typename S>
void convt2d_bwd_weight(const Tensor<S>& gy, const Tensor<S>& x, int stride, Tensor<S>& gw) {
  const int B = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = gw.dim(1), K = gw.dim(2);
  const int Ho = gy.dim(2), Wo = gy.dim(3);
  for (int ci = 0; ci < Ci; ++ci)
    for (int co = 0; co < Co; ++co)
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx)
          gw.at(ci, co, ky, kx) += convt2d_bwd_weight_elem(gy.data(), x.data(), B, Ci, Co, H, W,
                                                           Ho, Wo, K, stride, ci, co, ky, kx);
}

template <typename S>
void avgpool2d(const Tensor<S>& x, int k, Tensor<S>& y) {
  const int B = x.dim(0), C = x.dim(1), W = x.dim(3);
  const int Ho = y.dim(2), Wo = y.dim(3);
  for (int bc = 0; bc < B * C; ++bc) {
    const S* xp = x.data() + static_cast<int64_t>(bc) * x.dim(2) * W;
    S* yp = y.data() + static_cast<int64_t>(bc) * Ho * Wo;
    for (int oy = 0; oy < Ho; ++oy)
      for (int ox = 0; ox < Wo; ++ox)
        yp[static_cast<int64_t>(oy) * Wo + ox] = avgpool_at(xp, W, k, oy, ox);
  }
}

template <typename S>
void avgpool2d_bwd(const Tensor<S>& gy, int k, Tensor<S>& gx) {
  const int B = gx.dim(0), C = gx.dim(1), H = gx.dim(2), W = gx.dim(3);
  const int Wo = gy.dim(3);
  const S inv = S(1) / static_cast<S>(k * k);
  for (int bc = 0; bc < B * C; ++bc) {
    const S* gyp = gy.data() + static_cast<int64_t>(bc) * gy.dim(2) * Wo;
    S* gxp = gx.data() + static_cast<int64_t>(bc) * H * W;
    for (int iy = 0; iy < H; ++iy)
      for (int ix = 0; ix < W; ++ix)
        gxp[static_cast<int64_t>(iy) * W + ix] +=
            gyp[static_cast<int64_t>(iy / k) * Wo + (ix / k)] * inv;
  }
}

template <typename S>
void bilinear(const Tensor<S>& x, int ho, int wo, Tensor<S>& y) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  for (int bc = 0; bc < B * C; ++bc) {
    const S* xp = x.data() + static_cast<int64_t>(bc) * H * W;
    S* yp = y.data() + static_cast<int64_t>(bc) * ho * wo;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox)
        yp[static_cast<int64_t>(oy) * wo + ox] = bilinear_at(xp, H, W, ho, wo, oy, ox);
  }
}

template <typename S>
void bilinear_bwd(const Tensor<S>& gy, int hi, int wi, Tensor<S>& gx) {
  const int B = gx.dim(0), C = gx.dim(1);
  const int Ho = gy.dim(2), Wo = gy.dim(3);
  for (int bc = 0; bc < B * C; ++bc) {
    const S* gyp = gy.data() + static_cast<int64_t>(bc) * Ho * Wo;
    S* gxp = gx.data() + static_cast<int64_t>(bc) * hi * wi;
    for (int oy = 0; oy < Ho; ++oy) {
      int y0, y1, x0, x1;
      double wy, wx;
      bilinear_coeffs(oy, hi, Ho, y0, y1, wy);
      for (int ox = 0; ox < Wo; ++ox) {
        bilinear_coeffs(ox, wi, Wo, x0, x1, wx);
        S g = gyp[static_cast<int64_t>(oy) * Wo + ox];
        gxp[static_cast<int64_t>(y0) * wi + x0] += g * static_cast<S>((1.0 - wy) * (1.0 - wx));
        gxp[static_cast<int64_t>(y0) * wi + x1] += g * static_cast<S>((1.0 - wy) * wx);
        gxp[static_cast<int64_t>(y1) * wi + x0] += g * static_cast<S>(wy * (1.0 - wx));
        gxp[static_cast<int64_t>(y1) * wi + x1] += g * static_cast<S>(wy * wx);
      }
    }
  }
}

template <typename S>
void matmul(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, Tensor<S>& y) {
  const int M = x.dim(0), K = x.dim(1), N = w.dim(1);
  for (int m = 0; m < M; ++m) {
    const S* xr = x.data() + static_cast<int64_t>(m) * K;
    S* yr = y.data() + static_cast<int64_t>(m) * N;
    if (bias)
      for (int n = 0; n < N; ++n) yr[n] = bias->data()[n];
    else
      for (int n = 0; n < N; ++n) yr[n] = S(0);
    for (int k = 0; k < K; ++k) {
      S v = xr[k];
      const S* wr = w.data() + static_cast<int64_t>(k) * N;
      for (int n = 0; n < N; ++n) yr[n] += v * wr[n];
    }
  }
}

template <typename S>
void matmul_bwd_x(const Tensor<S>& gy, const Tensor<S>& w, Tensor<S>& gx) {
  const int M = gx.dim(0), K = gx.dim(1), N = w.dim(1);
  for (int m = 0; m < M; ++m) {
    const S* gyr = gy.data() + static_cast<int64_t>(m) * N;
    S* gxr = gx.data() + static_cast<int64_t>(m) * K;
    for (int k = 0; k < K; ++k)
      gxr[k] += dot(gyr, w.data() + static_cast<int64_t>(k) * N, N);
  }
}

template <typename S>
void matmul_bwd_w(const Tensor<S>& gy, const Tensor<S>& x, Tensor<S>& gw) {
  const int M = x.dim(0), K = x.dim(1), N = gy.dim(1);
  for (int k = 0; k < K; ++k) {
    S* gwr = gw.data() + static_cast<int64_t>(k) * N;
    for (int m = 0; m < M; ++m) {
      S v = x.data()[static_cast<int64_t>(m) * K + k];
      const S* gyr = gy.data() + static_cast<int64_t>(m) * N;
      for (int n = 0; n < N; ++n) gwr[n] += v * gyr[n];
    }
  }
}

template <typename S>
void matmul_bwd_bias(const Tensor<S>& gy, Tensor<S>& gb) {
  const int M = gy.dim(0), N = gy.dim(1);
  for (int n = 0; n < N; ++n) {
    S acc = S(0);
    for (int m = 0; m < M; ++m) acc += gy.data()[static_cast<int64_t>(m) * N + n];
    gb[n] += acc;
  }
}

template <typename S>
void bmm_nn(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate) {
  const int N = a.dim(0), P = a.dim(1), Q = a.dim(2), R = b.dim(2);
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p) {
      const S* ar = a.data() + (static_cast<int64_t>(n) * P + p) * Q;
      const S* bm = b.data() + static_cast<int64_t>(n) * Q * R;
      S* yr = y.data() + (static_cast<int64_t>(n) * P + p) * R;
      if (!accumulate)
        for (int r = 0; r < R; ++r) yr[r] = S(0);
      for (int q = 0; q < Q; ++q) {
        S v = ar[q];
        const S* br = bm + static_cast<int64_t>(q) * R;
        for (int r = 0; r < R; ++r) yr[r] += v * br[r];
      }
    }
}

template <typename S>
void bmm_nt(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate) {
  const int N = a.dim(0), P = a.dim(1), Q = a.dim(2), R = b.dim(1);
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p) {
      const S* ar = a.data() + (static_cast<int64_t>(n) * P + p) * Q;
      const S* bm = b.data() + static_cast<int64_t>(n) * R * Q;
      S* yr = y.data() + (static_cast<int64_t>(n) * P + p) * R;
      for (int r = 0; r < R; ++r) {
        S v = dot(ar, bm + static_cast<int64_t>(r) * Q, Q);
        yr[r] = accumulate ? yr[r] + v : v;
      }
    }
}

template <typename S>
void bmm_tn(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate) {
  // a is [N,Q,P] used transposed; y = a^T · b, [N,P,R].
  const int N = a.dim(0), Q = a.dim(1), P = a.dim(2), R = b.dim(2);
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p) {
      const S* am = a.data() + static_cast<int64_t>(n) * Q * P;
      const S* bm = b.data() + static_cast<int64_t>(n) * Q * R;
      S* yr = y.data() + (static_cast<int64_t>(n) * P + p) * R;
      if (!accumulate)
        for (int r = 0; r < R; ++r) yr[r] = S(0);
      for (int q = 0; q < Q; ++q) {
        S v = am[static_cast<int64_t>(q) * P + p];
        const S* br = bm + static_cast<int64_t>(q) * R;
        for (int r = 0; r < R; ++r) yr[r] += v * br[r];
      }
    }
}

template <typename S>
void softmax_lastdim(const Tensor<S>& x, Tensor<S>& y) {
  const int L = x.dim(x.rank() - 1);
  const int64_t rows = x.numel() / L;
  for (int64_t r = 0; r < rows; ++r) softmax_row(x.data() + r * L, y.data() + r * L, L);
}

template <typename S>
void softmax_lastdim_bwd(const Tensor<S>& y, const Tensor<S>& gy, Tensor<S>& gx) {
  const int L = y.dim(y.rank() - 1);
  const int64_t rows = y.numel() / L;
  for (int64_t r = 0; r < rows; ++r)
    softmax_row_bwd(y.data() + r * L, gy.data() + r * L, gx.data() + r * L, L);
}

template <typename S>
void layernorm_lastdim(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta, S eps,
                       Tensor<S>& y) {
  const int C = x.dim(x.rank() - 1);
  const int64_t rows = x.numel() / C;
  for (int64_t r = 0; r < rows; ++r)
    layernorm_row(x.data() + r * C, gamma.data(), beta.data(), eps, y.data() + r * C, C);
}

template <typename S>
void layernorm_lastdim_bwd(const Tensor<S>& x, const Tensor<S>& gamma, S eps, const Tensor<S>& gy,
                           Tensor<S>& gx, Tensor<S>& ggamma, Tensor<S>& gbeta) {
  const int C = x.dim(x.rank() - 1);
  const int64_t rows = x.numel() / C;
  std::vector<S> mean(rows), inv(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const S* xr = x.data() + r * C;
    S m = S(0);
    for (int i = 0; i < C; ++i) m += xr[i];
    m /= static_cast<S>(C);
    S var = S(0);
    for (int i = 0; i < C; ++i) {
      S d = xr[i] - m;
      var += d * d;
    }
    var /= static_cast<S>(C);
    mean[r] = m;
    inv[r] = S(1) / std::sqrt(var + eps);
  }
  for (int64_t r = 0; r < rows; ++r) {
    const S* xr = x.data() + r * C;
    const S* gyr = gy.data() + r * C;
    S* gxr = gx.data() + r * C;
    S sum_g = S(0), sum_gx = S(0);
    for (int i = 0; i < C; ++i) {
      S xhat = (xr[i] - mean[r]) * inv[r];
      S g = gyr[i] * gamma[i];
      sum_g += g;
      sum_gx += g * xhat;
    }
    S invn = S(1) / static_cast<S>(C);
    for (int i = 0; i < C; ++i) {
      S xhat = (xr[i] - mean[r]) * inv[r];
      S g = gyr[i] * gamma[i];
      gxr[i] += inv[r] * (g - invn * sum_g - xhat * invn * sum_gx);
    }
  }
  // Channel-parallel reduction keeps the row order fixed.
  for (int i = 0; i < C; ++i) {
    S ag = S(0), ab = S(0);
    for (int64_t r = 0; r < rows; ++r) {
      S xhat = (x.data()[r * C + i] - mean[r]) * inv[r];
      S g = gy.data()[r * C + i];
      ag += g * xhat;
      ab += g;
    }
    ggamma[i] += ag;
    gbeta[i] += ab;
  }
}

template <typename S>
void layernorm_channels(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta, S eps,
                        Tensor<S>& y) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t plane = static_cast<int64_t>(H) * W;
  for (int b = 0; b < B; ++b)
    for (int64_t p = 0; p < plane; ++p) {
      const S* xp = x.data() + static_cast<int64_t>(b) * C * plane + p;
      S* yp = y.data() + static_cast<int64_t>(b) * C * plane + p;
      S m = S(0);
      for (int c = 0; c < C; ++c) m += xp[c * plane];
      m /= static_cast<S>(C);
      S var = S(0);
      for (int c = 0; c < C; ++c) {
        S d = xp[c * plane] - m;
        var += d * d;
      }
      var /= static_cast<S>(C);
      S invs = S(1) / std::sqrt(var + eps);
      for (int c = 0; c < C; ++c)
        yp[c * plane] = (xp[c * plane] - m) * invs * gamma[c] + beta[c];
    }
}

template <typename S>
void layernorm_channels_bwd(const Tensor<S>& x, const Tensor<S>& gamma, S eps, const Tensor<S>& gy,
                            Tensor<S>& gx, Tensor<S>& ggamma, Tensor<S>& gbeta) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t plane = static_cast<int64_t>(H) * W;
  const int64_t npos = static_cast<int64_t>(B) * plane;
  std::vector<S> mean(npos), inv(npos);
  for (int64_t q = 0; q < npos; ++q) {
    int64_t b = q / plane, p = q % plane;
    const S* xp = x.data() + b * C * plane + p;
    S m = S(0);
    for (int c = 0; c < C; ++c) m += xp[c * plane];
    m /= static_cast<S>(C);
    S var = S(0);
    for (int c = 0; c < C; ++c) {
      S d = xp[c * plane] - m;
      var += d * d;
    }
    var /= static_cast<S>(C);
    mean[q] = m;
    inv[q] = S(1) / std::sqrt(var + eps);
  }
  for (int64_t q = 0; q < npos; ++q) {
    int64_t b = q / plane, p = q % plane;
    const S* xp = x.data() + b * C * plane + p;
    const S* gyp = gy.data() + b * C * plane + p;
    S* gxp = gx.data() + b * C * plane + p;
    S sum_g = S(0), sum_gx = S(0);
    for (int c = 0; c < C; ++c) {
      S xhat = (xp[c * plane] - mean[q]) * inv[q];
      S g = gyp[c * plane] * gamma[c];
      sum_g += g;
      sum_gx += g * xhat;
    }
    S invn = S(1) / static_cast<S>(C);
    for (int c = 0; c < C; ++c) {
      S xhat = (xp[c * plane] - mean[q]) * inv[q];
      S g = gyp[c * plane] * gamma[c];
      gxp[c * plane] += inv[q] * (g - invn * sum_g - xhat * invn * sum_gx);
    }
  }
  for (int c = 0; c < C; ++c) {
    S ag = S(0), ab = S(0);
    for (int64_t q = 0; q < npos; ++q) {
      int64_t b = q / plane, p = q % plane;
      S xhat = (x.data()[b * C * plane + c * plane + p] - mean[q]) * inv[q];
      S g = gy.data()[b * C * plane + c * plane + p];
      ag += g * xhat;
      ab += g;
    }
    ggamma[c] += ag;
    gbeta[c] += ab;
  }
}

template <typename S>
void gelu(const Tensor<S>& x, Tensor<S>& y) {
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) y[i] = gelu_val(x[i]);
}

template <typename S>
void gelu_bwd(const Tensor<S>& x, const Tensor<S>& gy, Tensor<S>& gx) {
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) gx[i] += gy[i] * gelu_grad(x[i]);
}

template <typename S>
void sigmoid(const Tensor<S>& x, Tensor<S>& y) {
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) y[i] = sigmoid_val(x[i]);
}

template <typename S>
void sigmoid_bwd(const Tensor<S>& y, const Tensor<S>& gy, Tensor<S>& gx) {
  const int64_t n = y.numel();
  for (int64_t i = 0; i < n; ++i) gx[i] += gy[i] * y[i] * (S(1) - y[i]);
}

template <typename S>
void add(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y) {
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

template <typename S>
void sub(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y) {
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

template <typename S>
void mul(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y) {
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

template <typename S>
void scale(const Tensor<S>& x, S c, Tensor<S>& y) {
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] * c;
}

template <typename S>
void axpy(S alpha, const Tensor<S>& x, Tensor<S>& y) {
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename S>
void fma_accum(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y) {
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

#define SEGREF_INSTANTIATE(S)                                                                     \
  template void conv2d<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>*, int, int, int,   \
                          int, Tensor<S>&);                                                       \
  template void conv2d_bwd_input<S>(const Tensor<S>&, const Tensor<S>&, int, int, int, int,      \
                                    Tensor<S>&);                                                  \
  template void conv2d_bwd_weight<S>(const Tensor<S>&, const Tensor<S>&, int, int, int, int,     \
                                     Tensor<S>&);                                                 \
  template void conv2d_bwd_bias<S>(const Tensor<S>&, Tensor<S>&);                                \
  template void convt2d<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>*, int,            \
                           Tensor<S>&);                                                           \
  template void convt2d_bwd_input<S>(const Tensor<S>&, const Tensor<S>&, int, Tensor<S>&);       \
  template void convt2d_bwd_weight<S>(const Tensor<S>&, const Tensor<S>&, int, Tensor<S>&);      \
  template void avgpool2d<S>(const Tensor<S>&, int, Tensor<S>&);                                 \
  template void avgpool2d_bwd<S>(const Tensor<S>&, int, Tensor<S>&);                             \
  template void bilinear<S>(const Tensor<S>&, int, int, Tensor<S>&);                             \
  template void bilinear_bwd<S>(const Tensor<S>&, int, int, Tensor<S>&);                         \
  template void matmul<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>*, Tensor<S>&);     \
  template void matmul_bwd_x<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);                 \
  template void matmul_bwd_w<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);                 \
  template void matmul_bwd_bias<S>(const Tensor<S>&, Tensor<S>&);                                \
  template void bmm_nn<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&, bool);                 \
  template void bmm_nt<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&, bool);                 \
  template void bmm_tn<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&, bool);                 \
  template void softmax_lastdim<S>(const Tensor<S>&, Tensor<S>&);                                \
  template void softmax_lastdim_bwd<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);          \
  template void layernorm_lastdim<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, S,    \
                                     Tensor<S>&);                                                 \
  template void layernorm_lastdim_bwd<S>(const Tensor<S>&, const Tensor<S>&, S, const Tensor<S>&,\
                                         Tensor<S>&, Tensor<S>&, Tensor<S>&);                    \
  template void layernorm_channels<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, S,   \
                                      Tensor<S>&);                                               \
  template void layernorm_channels_bwd<S>(const Tensor<S>&, const Tensor<S>&, S,                 \
                                          const Tensor<S>&, Tensor<S>&, Tensor<S>&, Tensor<S>&); \
  template void gelu<S>(const Tensor<S>&, Tensor<S>&);                                           \
  template void gelu_bwd<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);                     \
  template void sigmoid<S>(const Tensor<S>&, Tensor<S>&);                                        \
  template void sigmoid_bwd<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);                  \
  template void add<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);                          \
  template void sub<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);                          \
  template void mul<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);                          \
  template void scale<S>(const Tensor<S>&, S, Tensor<S>&);                                       \
  template void axpy<S>(S, const Tensor<S>&, Tensor<S>&);                                        \
  template void fma_accum<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);

SEGREF_INSTANTIATE(float)
SEGREF_INSTANTIATE(double)
#undef SEGREF_INSTANTIATE

}  // namespace segref::kernels::serial
