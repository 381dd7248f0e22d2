#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "segref/tensor.hpp"

namespace segref::posenc {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Fixed 2-D sinusoidal encoding for an h x w token grid, [1, h*w, c].
/// Coordinates are normalized to pixel centers so grids of different
/// granularity share one spatial frame. First c/2 channels encode y, rest x.
template <typename S>
Tensor<S> sinusoid2d_tokens(int c, int h, int w) {
  if (c % 4 != 0) throw ShapeError("sinusoid2d: channels must be divisible by 4");
  Tensor<S> pe({1, h * w, c});
  const int half = c / 2;
  const int quarter = c / 4;
  for (int y = 0; y < h; ++y) {
    double yn = (y + 0.5) / h * kTwoPi;
    for (int x = 0; x < w; ++x) {
      double xn = (x + 0.5) / w * kTwoPi;
      S* row = pe.data() + static_cast<int64_t>(y * w + x) * c;
      for (int i = 0; i < quarter; ++i) {
        double freq = std::pow(10000.0, -static_cast<double>(i) / quarter);
        row[2 * i] = static_cast<S>(std::sin(yn * freq * quarter));
        row[2 * i + 1] = static_cast<S>(std::cos(yn * freq * quarter));
        row[half + 2 * i] = static_cast<S>(std::sin(xn * freq * quarter));
        row[half + 2 * i + 1] = static_cast<S>(std::cos(xn * freq * quarter));
      }
    }
  }
  return pe;
}

/// 1-D sinusoidal encoding of an integer position (frame index), [c].
template <typename S>
Tensor<S> sinusoid1d(int c, int pos) {
  if (c % 2 != 0) throw ShapeError("sinusoid1d: channels must be even");
  Tensor<S> pe({c});
  const int half = c / 2;
  for (int i = 0; i < half; ++i) {
    double freq = std::pow(10000.0, -static_cast<double>(i) / half);
    pe[2 * i] = static_cast<S>(std::sin(pos * freq));
    pe[2 * i + 1] = static_cast<S>(std::cos(pos * freq));
  }
  return pe;
}

/// Gaussian Fourier features of a point with coordinates normalized to [0,1];
/// bmat is [c/2, 2]. Returns a length-c vector [sin(2*pi*B p), cos(2*pi*B p)].
template <typename S>
std::vector<S> fourier_features(const Tensor<S>& bmat, double xn, double yn) {
  const int half = bmat.dim(0);
  std::vector<S> out(static_cast<size_t>(2 * half));
  for (int i = 0; i < half; ++i) {
    double f = kTwoPi * (static_cast<double>(bmat.at(i, 0)) * xn +
                         static_cast<double>(bmat.at(i, 1)) * yn);
    out[static_cast<size_t>(i)] = static_cast<S>(std::sin(f));
    out[static_cast<size_t>(half + i)] = static_cast<S>(std::cos(f));
  }
  return out;
}

/// Fourier grid encoding at pixel centers, [1, h*w, c] with c = 2*bmat.dim(0).
template <typename S>
Tensor<S> fourier_grid_tokens(const Tensor<S>& bmat, int h, int w) {
  const int c = 2 * bmat.dim(0);
  Tensor<S> pe({1, h * w, c});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::vector<S> f = fourier_features(bmat, (x + 0.5) / w, (y + 0.5) / h);
      S* row = pe.data() + static_cast<int64_t>(y * w + x) * c;
      for (int i = 0; i < c; ++i) row[i] = f[static_cast<size_t>(i)];
    }
  return pe;
}

}  // namespace segref::posenc
