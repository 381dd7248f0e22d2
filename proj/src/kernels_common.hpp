#pragma once

// Per-element arithmetic shared by the serial and OpenMP kernel variants.
// Every reduction here runs in a fixed order, so a given output element is
// computed identically no matter which variant (or thread) evaluates it.

#include <cmath>

#include "segref/tensor.hpp"

namespace segref::kernels::detail {

template <typename S>
inline S conv2d_at(const S* x, const S* w, int Ci, int H, int W, int Kh, int Kw, int sy, int sx,
                   int py, int px, int64_t co, int64_t oy, int64_t ox) {
  S acc = S(0);
  const S* wc = w + co * Ci * Kh * Kw;
  for (int ci = 0; ci < Ci; ++ci) {
    const S* xc = x + static_cast<int64_t>(ci) * H * W;
    for (int ky = 0; ky < Kh; ++ky) {
      int iy = static_cast<int>(oy) * sy + ky - py;
      if (iy < 0 || iy >= H) continue;
      const S* xrow = xc + static_cast<int64_t>(iy) * W;
      const S* wrow = wc + (static_cast<int64_t>(ci) * Kh + ky) * Kw;
      for (int kx = 0; kx < Kw; ++kx) {
        int ix = static_cast<int>(ox) * sx + kx - px;
        if (ix < 0 || ix >= W) continue;
        acc += xrow[ix] * wrow[kx];
      }
    }
  }
  return acc;
}

template <typename S>
inline S conv2d_bwd_input_at(const S* gy, const S* w, int Co, int Ci, int Kh, int Kw, int Ho,
                             int Wo, int sy, int sx, int py, int px, int ci, int iy, int ix) {
  S acc = S(0);
  for (int co = 0; co < Co; ++co) {
    const S* gyc = gy + static_cast<int64_t>(co) * Ho * Wo;
    const S* wc = w + (static_cast<int64_t>(co) * Ci + ci) * Kh * Kw;
    for (int ky = 0; ky < Kh; ++ky) {
      int num = iy + py - ky;
      if (num < 0 || num % sy != 0) continue;
      int oy = num / sy;
      if (oy >= Ho) continue;
      for (int kx = 0; kx < Kw; ++kx) {
        int numx = ix + px - kx;
        if (numx < 0 || numx % sx != 0) continue;
        int ox = numx / sx;
        if (ox >= Wo) continue;
        acc += gyc[static_cast<int64_t>(oy) * Wo + ox] * wc[static_cast<int64_t>(ky) * Kw + kx];
      }
    }
  }
  return acc;
}

template <typename S>
inline S conv2d_bwd_weight_elem(const S* gy, const S* x, int B, int Co, int Ci, int H, int W,
                                int Ho, int Wo, int sy, int sx, int py, int px, int co, int ci,
                                int ky, int kx) {
  S acc = S(0);
  for (int b = 0; b < B; ++b) {
    const S* gyc = gy + (static_cast<int64_t>(b) * Co + co) * Ho * Wo;
    const S* xc = x + (static_cast<int64_t>(b) * Ci + ci) * H * W;
    for (int oy = 0; oy < Ho; ++oy) {
      int iy = oy * sy + ky - py;
      if (iy < 0 || iy >= H) continue;
      const S* gyrow = gyc + static_cast<int64_t>(oy) * Wo;
      const S* xrow = xc + static_cast<int64_t>(iy) * W;
      for (int ox = 0; ox < Wo; ++ox) {
        int ix = ox * sx + kx - px;
        if (ix < 0 || ix >= W) continue;
        acc += gyrow[ox] * xrow[ix];
      }
    }
  }
  return acc;
}

template <typename S>
inline S convt2d_at(const S* x, const S* w, int Ci, int Co, int H, int W, int K, int stride,
                    int co, int oy, int ox) {
  S acc = S(0);
  for (int ci = 0; ci < Ci; ++ci) {
    const S* xc = x + static_cast<int64_t>(ci) * H * W;
    const S* wc = w + (static_cast<int64_t>(ci) * Co + co) * K * K;
    for (int ky = 0; ky < K; ++ky) {
      int num = oy - ky;
      if (num < 0 || num % stride != 0) continue;
      int iy = num / stride;
      if (iy >= H) continue;
      for (int kx = 0; kx < K; ++kx) {
        int numx = ox - kx;
        if (numx < 0 || numx % stride != 0) continue;
        int ix = numx / stride;
        if (ix >= W) continue;
        acc += xc[static_cast<int64_t>(iy) * W + ix] * wc[static_cast<int64_t>(ky) * K + kx];
      }
    }
  }
  return acc;
}

template <typename S>
inline S convt2d_bwd_input_at(const S* gy, const S* w, int Ci, int Co, int Ho, int Wo, int K,
                              int stride, int ci, int iy, int ix) {
  S acc = S(0);
  for (int co = 0; co < Co; ++co) {
    const S* gyc = gy + static_cast<int64_t>(co) * Ho * Wo;
    const S* wc = w + (static_cast<int64_t>(ci) * Co + co) * K * K;
    for (int ky = 0; ky < K; ++ky) {
      int oy = iy * stride + ky;
      if (oy >= Ho) continue;
      for (int kx = 0; kx < K; ++kx) {
        int ox = ix * stride + kx;
        if (ox >= Wo) continue;
        acc += gyc[static_cast<int64_t>(oy) * Wo + ox] * wc[static_cast<int64_t>(ky) * K + kx];
      }
    }
  }
  return acc;
}

template <typename S>
inline S convt2d_bwd_weight_elem(const S* gy, const S* x, int B, int Ci, int Co, int H, int W,
                                 int Ho, int Wo, int K, int stride, int ci, int co, int ky,
                                 int kx) {
  S acc = S(0);
  for (int b = 0; b < B; ++b) {
    const S* gyc = gy + (static_cast<int64_t>(b) * Co + co) * Ho * Wo;
    const S* xc = x + (static_cast<int64_t>(b) * Ci + ci) * H * W;
    for (int iy = 0; iy < H; ++iy) {
      int oy = iy * stride + ky;
      if (oy >= Ho) continue;
      for (int ix = 0; ix < W; ++ix) {
        int ox = ix * stride + kx;
        if (ox >= Wo) continue;
        acc += xc[static_cast<int64_t>(iy) * W + ix] * gyc[static_cast<int64_t>(oy) * Wo + ox];
      }
    }
  }
  return acc;
}

template <typename S>
inline S avgpool_at(const S* xplane, int W, int k, int oy, int ox) {
  S acc = S(0);
  for (int dy = 0; dy < k; ++dy) {
    const S* row = xplane + static_cast<int64_t>(oy * k + dy) * W + static_cast<int64_t>(ox) * k;
    for (int dx = 0; dx < k; ++dx) acc += row[dx];
  }
  return acc / static_cast<S>(k * k);
}

/// Half-pixel-center source coordinates for bilinear resize.
inline void bilinear_coeffs(int o, int in_size, int out_size, int& i0, int& i1, double& w1) {
  double src = (static_cast<double>(o) + 0.5) * static_cast<double>(in_size) /
                   static_cast<double>(out_size) -
               0.5;
  if (src < 0.0) src = 0.0;
  double f = std::floor(src);
  i0 = static_cast<int>(f);
  if (i0 > in_size - 1) i0 = in_size - 1;
  i1 = i0 + 1 < in_size ? i0 + 1 : in_size - 1;
  w1 = src - static_cast<double>(i0);
  if (w1 < 0.0) w1 = 0.0;
  if (w1 > 1.0) w1 = 1.0;
}

template <typename S>
inline S bilinear_at(const S* xplane, int H, int W, int Ho, int Wo, int oy, int ox) {
  int y0, y1, x0, x1;
  double wy, wx;
  bilinear_coeffs(oy, H, Ho, y0, y1, wy);
  bilinear_coeffs(ox, W, Wo, x0, x1, wx);
  S top = static_cast<S>((1.0 - wx)) * xplane[static_cast<int64_t>(y0) * W + x0] +
          static_cast<S>(wx) * xplane[static_cast<int64_t>(y0) * W + x1];
  S bot = static_cast<S>((1.0 - wx)) * xplane[static_cast<int64_t>(y1) * W + x0] +
          static_cast<S>(wx) * xplane[static_cast<int64_t>(y1) * W + x1];
  return static_cast<S>((1.0 - wy)) * top + static_cast<S>(wy) * bot;
}

template <typename S>
inline S dot(const S* a, const S* b, int n) {
  S acc = S(0);
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

/// dot over b with stride for the second operand (for x[M,K]·w[K,N] columns).
template <typename S>
inline S dot_strided(const S* a, const S* b, int n, int strideb) {
  S acc = S(0);
  for (int i = 0; i < n; ++i) acc += a[i] * b[static_cast<int64_t>(i) * strideb];
  return acc;
}

template <typename S>
inline void softmax_row(const S* x, S* y, int n) {
  S m = x[0];
  for (int i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  S sum = S(0);
  for (int i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - m);
    sum += y[i];
  }
  S inv = S(1) / sum;
  for (int i = 0; i < n; ++i) y[i] *= inv;
}

template <typename S>
inline void softmax_row_bwd(const S* y, const S* gy, S* gx, int n) {
  S dotv = S(0);
  for (int i = 0; i < n; ++i) dotv += y[i] * gy[i];
  for (int i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - dotv);
}

template <typename S>
inline void layernorm_row(const S* x, const S* gamma, const S* beta, S eps, S* y, int n) {
  S mean = S(0);
  for (int i = 0; i < n; ++i) mean += x[i];
  mean /= static_cast<S>(n);
  S var = S(0);
  for (int i = 0; i < n; ++i) {
    S d = x[i] - mean;
    var += d * d;
  }
  var /= static_cast<S>(n);
  S inv = S(1) / std::sqrt(var + eps);
  for (int i = 0; i < n; ++i) y[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
}

/// Standard layer-norm backward; writes gx additively, accumulates per-channel
/// ggamma/gbeta into the provided scratch row (caller handles reduction).
template <typename S>
inline void layernorm_row_bwd(const S* x, const S* gamma, S eps, const S* gy, S* gx, S* ggamma,
                              S* gbeta, int n) {
  S mean = S(0);
  for (int i = 0; i < n; ++i) mean += x[i];
  mean /= static_cast<S>(n);
  S var = S(0);
  for (int i = 0; i < n; ++i) {
    S d = x[i] - mean;
    var += d * d;
  }
  var /= static_cast<S>(n);
  S inv = S(1) / std::sqrt(var + eps);
  // xhat_i = (x_i - mean)*inv ; y_i = xhat_i*gamma_i + beta_i
  S sum_g = S(0), sum_gx = S(0);
  for (int i = 0; i < n; ++i) {
    S xhat = (x[i] - mean) * inv;
    S g = gy[i] * gamma[i];
    sum_g += g;
    sum_gx += g * xhat;
    ggamma[i] += gy[i] * xhat;
    gbeta[i] += gy[i];
  }
  S invn = S(1) / static_cast<S>(n);
  for (int i = 0; i < n; ++i) {
    S xhat = (x[i] - mean) * inv;
    S g = gy[i] * gamma[i];
    gx[i] += inv * (g - invn * sum_g - xhat * invn * sum_gx);
  }
}

template <typename S>
inline S gelu_val(S x) {
  // Exact erf form.
  return S(0.5) * x * (S(1) + static_cast<S>(std::erf(static_cast<double>(x) * 0.70710678118654752440)));
}

template <typename S>
inline S gelu_grad(S x) {
  double xd = static_cast<double>(x);
  double cdf = 0.5 * (1.0 + std::erf(xd * 0.70710678118654752440));
  double pdf = std::exp(-0.5 * xd * xd) * 0.39894228040143267794;  // 1/sqrt(2*pi)
  return static_cast<S>(cdf + xd * pdf);
}

template <typename S>
inline S sigmoid_val(S x) {
  if (x >= S(0)) {
    S e = std::exp(-x);
    return S(1) / (S(1) + e);
  }
  S e = std::exp(x);
  return e / (S(1) + e);
}

}  // namespace segref::kernels::detail
