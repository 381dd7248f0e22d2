#include "segref/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstring>

namespace segref::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace data {

namespace {

// Shape split around `axis`: outer (dims before), span (dim at axis), inner.
template <typename S>
void axis_split(const Tensor<S>& t, int axis, int64_t& outer, int64_t& span, int64_t& inner) {
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= t.dim(i);
  span = t.dim(axis);
  for (int i = axis + 1; i < t.rank(); ++i) inner *= t.dim(i);
}

}  // namespace

template <typename S>
void concat(const std::vector<const Tensor<S>*>& parts, int axis, Tensor<S>& y) {
  int64_t outer, yspan, inner;
  axis_split(y, axis, outer, yspan, inner);
  int64_t off = 0;
  for (const Tensor<S>* part : parts) {
    int64_t po, pspan, pi;
    axis_split(*part, axis, po, pspan, pi);
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(y.data() + (o * yspan + off) * inner, part->data() + o * pspan * inner,
                  sizeof(S) * static_cast<size_t>(pspan * inner));
    off += pspan;
  }
}

template <typename S>
void concat_bwd(const Tensor<S>& gy, int axis, const std::vector<std::vector<int>>& part_shapes,
                int index, Tensor<S>& gpart) {
  int64_t outer, yspan, inner;
  axis_split(gy, axis, outer, yspan, inner);
  int64_t off = 0;
  for (int i = 0; i < index; ++i) off += part_shapes[static_cast<size_t>(i)][static_cast<size_t>(axis)];
  int64_t pspan = part_shapes[static_cast<size_t>(index)][static_cast<size_t>(axis)];
  for (int64_t o = 0; o < outer; ++o) {
    const S* src = gy.data() + (o * yspan + off) * inner;
    S* dst = gpart.data() + o * pspan * inner;
    for (int64_t i = 0; i < pspan * inner; ++i) dst[i] += src[i];
  }
}

template <typename S>
void slice(const Tensor<S>& x, int axis, int start, int len, Tensor<S>& y) {
  int64_t outer, xspan, inner;
  axis_split(x, axis, outer, xspan, inner);
  for (int64_t o = 0; o < outer; ++o)
    std::memcpy(y.data() + o * len * inner, x.data() + (o * xspan + start) * inner,
                sizeof(S) * static_cast<size_t>(len) * static_cast<size_t>(inner));
}

template <typename S>
void slice_bwd(const Tensor<S>& gy, int axis, int start, Tensor<S>& gx) {
  int64_t outer, xspan, inner;
  axis_split(gx, axis, outer, xspan, inner);
  int64_t len = gy.dim(axis);
  for (int64_t o = 0; o < outer; ++o) {
    const S* src = gy.data() + o * len * inner;
    S* dst = gx.data() + (o * xspan + start) * inner;
    for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
  }
}

template <typename S>
void spatial_crop(const Tensor<S>& x, int y0, int x0, Tensor<S>& y) {
  const int B = x.dim(0), C = x.dim(1), W = x.dim(3);
  const int h = y.dim(2), w = y.dim(3);
  for (int bc = 0; bc < B * C; ++bc)
    for (int r = 0; r < h; ++r)
      std::memcpy(y.data() + (static_cast<int64_t>(bc) * h + r) * w,
                  x.data() + (static_cast<int64_t>(bc) * x.dim(2) + y0 + r) * W + x0,
                  sizeof(S) * static_cast<size_t>(w));
}

template <typename S>
void spatial_crop_bwd(const Tensor<S>& gy, int y0, int x0, Tensor<S>& gx) {
  const int B = gx.dim(0), C = gx.dim(1), W = gx.dim(3);
  const int h = gy.dim(2), w = gy.dim(3);
  for (int bc = 0; bc < B * C; ++bc)
    for (int r = 0; r < h; ++r) {
      const S* src = gy.data() + (static_cast<int64_t>(bc) * h + r) * w;
      S* dst = gx.data() + (static_cast<int64_t>(bc) * gx.dim(2) + y0 + r) * W + x0;
      for (int c = 0; c < w; ++c) dst[c] += src[c];
    }
}

template <typename S>
void tokenize(const Tensor<S>& x, Tensor<S>& y) {
  const int B = x.dim(0), C = x.dim(1);
  const int64_t hw = static_cast<int64_t>(x.dim(2)) * x.dim(3);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const S* src = x.data() + (static_cast<int64_t>(b) * C + c) * hw;
      S* dst = y.data() + static_cast<int64_t>(b) * hw * C + c;
      for (int64_t p = 0; p < hw; ++p) dst[p * C] = src[p];
    }
}

template <typename S>
void tokenize_bwd(const Tensor<S>& gy, Tensor<S>& gx) {
  const int B = gx.dim(0), C = gx.dim(1);
  const int64_t hw = static_cast<int64_t>(gx.dim(2)) * gx.dim(3);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const S* src = gy.data() + static_cast<int64_t>(b) * hw * C + c;
      S* dst = gx.data() + (static_cast<int64_t>(b) * C + c) * hw;
      for (int64_t p = 0; p < hw; ++p) dst[p] += src[p * C];
    }
}

template <typename S>
void detokenize(const Tensor<S>& x, int h, int w, Tensor<S>& y) {
  const int B = x.dim(0), C = x.dim(2);
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const S* src = x.data() + static_cast<int64_t>(b) * hw * C + c;
      S* dst = y.data() + (static_cast<int64_t>(b) * C + c) * hw;
      for (int64_t p = 0; p < hw; ++p) dst[p] = src[p * C];
    }
}

template <typename S>
void detokenize_bwd(const Tensor<S>& gy, Tensor<S>& gx) {
  const int B = gx.dim(0), C = gx.dim(2);
  const int64_t hw = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const S* src = gy.data() + (static_cast<int64_t>(b) * C + c) * hw;
      S* dst = gx.data() + static_cast<int64_t>(b) * hw * C + c;
      for (int64_t p = 0; p < hw; ++p) dst[p * C] += src[p];
    }
}

template <typename S>
void split_heads(const Tensor<S>& x, int heads, Tensor<S>& y) {
  const int B = x.dim(0), T = x.dim(1), C = x.dim(2);
  const int d = C / heads;
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < heads; ++h)
      for (int t = 0; t < T; ++t)
        std::memcpy(y.data() + ((static_cast<int64_t>(b) * heads + h) * T + t) * d,
                    x.data() + (static_cast<int64_t>(b) * T + t) * C + static_cast<int64_t>(h) * d,
                    sizeof(S) * static_cast<size_t>(d));
}

template <typename S>
void split_heads_bwd(const Tensor<S>& gy, int heads, Tensor<S>& gx) {
  const int B = gx.dim(0), T = gx.dim(1), C = gx.dim(2);
  const int d = C / heads;
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < heads; ++h)
      for (int t = 0; t < T; ++t) {
        const S* src = gy.data() + ((static_cast<int64_t>(b) * heads + h) * T + t) * d;
        S* dst = gx.data() + (static_cast<int64_t>(b) * T + t) * C + static_cast<int64_t>(h) * d;
        for (int i = 0; i < d; ++i) dst[i] += src[i];
      }
}

template <typename S>
void merge_heads(const Tensor<S>& x, int heads, Tensor<S>& y) {
  const int T = x.dim(1), d = x.dim(2);
  const int B = x.dim(0) / heads;
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < heads; ++h)
      for (int t = 0; t < T; ++t)
        std::memcpy(
            y.data() + (static_cast<int64_t>(b) * T + t) * heads * d + static_cast<int64_t>(h) * d,
            x.data() + ((static_cast<int64_t>(b) * heads + h) * T + t) * d,
            sizeof(S) * static_cast<size_t>(d));
}

template <typename S>
void merge_heads_bwd(const Tensor<S>& gy, int heads, Tensor<S>& gx) {
  const int T = gx.dim(1), d = gx.dim(2);
  const int B = gx.dim(0) / heads;
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < heads; ++h)
      for (int t = 0; t < T; ++t) {
        const S* src = gy.data() + (static_cast<int64_t>(b) * T + t) * heads * d +
                       static_cast<int64_t>(h) * d;
        S* dst = gx.data() + ((static_cast<int64_t>(b) * heads + h) * T + t) * d;
        for (int i = 0; i < d; ++i) dst[i] += src[i];
      }
}

template <typename S>
void mosaic2x2(const Tensor<S>& t00, const Tensor<S>& t01, const Tensor<S>& t10,
               const Tensor<S>& t11, Tensor<S>& y) {
  const int B = t00.dim(0), C = t00.dim(1), h = t00.dim(2), w = t00.dim(3);
  const Tensor<S>* tiles[4] = {&t00, &t01, &t10, &t11};
  for (int q = 0; q < 4; ++q) {
    const int ry = (q / 2) * h, rx = (q % 2) * w;
    for (int bc = 0; bc < B * C; ++bc)
      for (int r = 0; r < h; ++r)
        std::memcpy(y.data() + (static_cast<int64_t>(bc) * 2 * h + ry + r) * 2 * w + rx,
                    tiles[q]->data() + (static_cast<int64_t>(bc) * h + r) * w,
                    sizeof(S) * static_cast<size_t>(w));
  }
}

template <typename S>
void mosaic2x2_bwd(const Tensor<S>& gy, int quadrant, Tensor<S>& gt) {
  const int B = gt.dim(0), C = gt.dim(1), h = gt.dim(2), w = gt.dim(3);
  const int ry = (quadrant / 2) * h, rx = (quadrant % 2) * w;
  for (int bc = 0; bc < B * C; ++bc)
    for (int r = 0; r < h; ++r) {
      const S* src = gy.data() + (static_cast<int64_t>(bc) * 2 * h + ry + r) * 2 * w + rx;
      S* dst = gt.data() + (static_cast<int64_t>(bc) * h + r) * w;
      for (int c = 0; c < w; ++c) dst[c] += src[c];
    }
}

template <typename S>
void broadcast_vec_map(const Tensor<S>& v, int b, int h, int w, Tensor<S>& y) {
  const int C = v.dim(0);
  const int64_t plane = static_cast<int64_t>(h) * w;
  for (int bi = 0; bi < b; ++bi)
    for (int c = 0; c < C; ++c) {
      S* dst = y.data() + (static_cast<int64_t>(bi) * C + c) * plane;
      const S val = v[c];
      for (int64_t p = 0; p < plane; ++p) dst[p] = val;
    }
}

template <typename S>
void broadcast_vec_map_bwd(const Tensor<S>& gy, Tensor<S>& gv) {
  const int B = gy.dim(0), C = gy.dim(1);
  const int64_t plane = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
  for (int c = 0; c < C; ++c) {
    S acc = S(0);
    for (int b = 0; b < B; ++b) {
      const S* src = gy.data() + (static_cast<int64_t>(b) * C + c) * plane;
      for (int64_t p = 0; p < plane; ++p) acc += src[p];
    }
    gv[c] += acc;
  }
}

template <typename S>
void add_rows(const Tensor<S>& x, const Tensor<S>& pe, Tensor<S>& y) {
  const int B = x.dim(0);
  const int64_t tc = static_cast<int64_t>(x.dim(1)) * x.dim(2);
  for (int b = 0; b < B; ++b) {
    const S* xp = x.data() + static_cast<int64_t>(b) * tc;
    S* yp = y.data() + static_cast<int64_t>(b) * tc;
    for (int64_t i = 0; i < tc; ++i) yp[i] = xp[i] + pe[i];
  }
}

template <typename S>
S sum_all(const Tensor<S>& x) {
  S acc = S(0);
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <typename S>
S bce_with_logits_mean(const Tensor<S>& logits, const Tensor<S>& target) {
  const int64_t n = logits.numel();
  S acc = S(0);
  for (int64_t i = 0; i < n; ++i) {
    S z = logits[i], t = target[i];
    S pos = z > S(0) ? z : S(0);
    acc += pos - z * t + std::log1p(std::exp(-std::abs(z)));
  }
  return acc / static_cast<S>(n);
}

template <typename S>
void bce_with_logits_mean_bwd(const Tensor<S>& logits, const Tensor<S>& target, S gout,
                              Tensor<S>& gx) {
  const int64_t n = logits.numel();
  const S inv = gout / static_cast<S>(n);
  for (int64_t i = 0; i < n; ++i) {
    S z = logits[i];
    S p = z >= S(0) ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
    gx[i] += inv * (p - target[i]);
  }
}

#define SEGREF_INSTANTIATE(S)                                                                      \
  template void concat<S>(const std::vector<const Tensor<S>*>&, int, Tensor<S>&);                 \
  template void concat_bwd<S>(const Tensor<S>&, int, const std::vector<std::vector<int>>&, int,   \
                              Tensor<S>&);                                                         \
  template void slice<S>(const Tensor<S>&, int, int, int, Tensor<S>&);                            \
  template void slice_bwd<S>(const Tensor<S>&, int, int, Tensor<S>&);                             \
  template void spatial_crop<S>(const Tensor<S>&, int, int, Tensor<S>&);                          \
  template void spatial_crop_bwd<S>(const Tensor<S>&, int, int, Tensor<S>&);                      \
  template void tokenize<S>(const Tensor<S>&, Tensor<S>&);                                        \
  template void tokenize_bwd<S>(const Tensor<S>&, Tensor<S>&);                                    \
  template void detokenize<S>(const Tensor<S>&, int, int, Tensor<S>&);                            \
  template void detokenize_bwd<S>(const Tensor<S>&, Tensor<S>&);                                  \
  template void split_heads<S>(const Tensor<S>&, int, Tensor<S>&);                                \
  template void split_heads_bwd<S>(const Tensor<S>&, int, Tensor<S>&);                            \
  template void merge_heads<S>(const Tensor<S>&, int, Tensor<S>&);                                \
  template void merge_heads_bwd<S>(const Tensor<S>&, int, Tensor<S>&);                            \
  template void mosaic2x2<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,                \
                             const Tensor<S>&, Tensor<S>&);                                       \
  template void mosaic2x2_bwd<S>(const Tensor<S>&, int, Tensor<S>&);                              \
  template void broadcast_vec_map<S>(const Tensor<S>&, int, int, int, Tensor<S>&);                \
  template void broadcast_vec_map_bwd<S>(const Tensor<S>&, Tensor<S>&);                           \
  template void add_rows<S>(const Tensor<S>&, const Tensor<S>&, Tensor<S>&);                      \
  template S sum_all<S>(const Tensor<S>&);                                                        \
  template S bce_with_logits_mean<S>(const Tensor<S>&, const Tensor<S>&);                         \
  template void bce_with_logits_mean_bwd<S>(const Tensor<S>&, const Tensor<S>&, S, Tensor<S>&);

SEGREF_INSTANTIATE(float)
SEGREF_INSTANTIATE(double)
#undef SEGREF_INSTANTIATE

}  // namespace data

}  // namespace segref::kernels
