#pragma once

#include <vector>

#include "segref/tensor.hpp"

// Numeric kernels. Every compute kernel exists twice with an identical
// contract: kernels::serial is the plain-loop reference, kernels::omp the
// OpenMP-parallel variant. Both share the per-element arithmetic helpers, so
// results are bit-identical regardless of thread count; tests assert this and
// bench/ compares throughput. The unqualified functions dispatch on a runtime
// flag. Backward kernels accumulate (+=) into their gradient outputs.
//
// Data-movement helpers (copies, concat/slice, tokenize) live in
// kernels::data with a single implementation.

namespace segref::kernels {

bool parallel_enabled();
void set_parallel(bool on);

#define SEGREF_KERNEL_DECLS                                                                        \
  template <typename S>                                                                            \
  void conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, int sy, int sx,       \
              int py, int px, Tensor<S>& y);                                                       \
  template <typename S>                                                                            \
  void conv2d_bwd_input(const Tensor<S>& gy, const Tensor<S>& w, int sy, int sx, int py, int px,   \
                        Tensor<S>& gx);                                                            \
  template <typename S>                                                                            \
  void conv2d_bwd_weight(const Tensor<S>& gy, const Tensor<S>& x, int sy, int sx, int py, int px,  \
                         Tensor<S>& gw);                                                           \
  template <typename S>                                                                            \
  void conv2d_bwd_bias(const Tensor<S>& gy, Tensor<S>& gb);                                        \
  template <typename S>                                                                            \
  void convt2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, int stride,          \
               Tensor<S>& y);                                                                      \
  template <typename S>                                                                            \
  void convt2d_bwd_input(const Tensor<S>& gy, const Tensor<S>& w, int stride, Tensor<S>& gx);      \
  template <typename S>                                                                            \
  void convt2d_bwd_weight(const Tensor<S>& gy, const Tensor<S>& x, int stride, Tensor<S>& gw);     \
  template <typename S>                                                                            \
  void avgpool2d(const Tensor<S>& x, int k, Tensor<S>& y);                                         \
  template <typename S>                                                                            \
  void avgpool2d_bwd(const Tensor<S>& gy, int k, Tensor<S>& gx);                                   \
  template <typename S>                                                                            \
  void bilinear(const Tensor<S>& x, int ho, int wo, Tensor<S>& y);                                 \
  template <typename S>                                                                            \
  void bilinear_bwd(const Tensor<S>& gy, int hi, int wi, Tensor<S>& gx);                           \
  template <typename S>                                                                            \
  void matmul(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, Tensor<S>& y);        \
  template <typename S>                                                                            \
  void matmul_bwd_x(const Tensor<S>& gy, const Tensor<S>& w, Tensor<S>& gx);                       \
  template <typename S>                                                                            \
  void matmul_bwd_w(const Tensor<S>& gy, const Tensor<S>& x, Tensor<S>& gw);                       \
  template <typename S>                                                                            \
  void matmul_bwd_bias(const Tensor<S>& gy, Tensor<S>& gb);                                        \
  template <typename S>                                                                            \
  void bmm_nn(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate);              \
  template <typename S>                                                                            \
  void bmm_nt(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate);              \
  template <typename S>                                                                            \
  void bmm_tn(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate);              \
  template <typename S>                                                                            \
  void softmax_lastdim(const Tensor<S>& x, Tensor<S>& y);                                          \
  template <typename S>                                                                            \
  void softmax_lastdim_bwd(const Tensor<S>& y, const Tensor<S>& gy, Tensor<S>& gx);                \
  template <typename S>                                                                            \
  void layernorm_lastdim(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,        \
                         S eps, Tensor<S>& y);                                                     \
  template <typename S>                                                                            \
  void layernorm_lastdim_bwd(const Tensor<S>& x, const Tensor<S>& gamma, S eps,                    \
                             const Tensor<S>& gy, Tensor<S>& gx, Tensor<S>& ggamma,                \
                             Tensor<S>& gbeta);                                                    \
  template <typename S>                                                                            \
  void layernorm_channels(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,       \
                          S eps, Tensor<S>& y);                                                    \
  template <typename S>                                                                            \
  void layernorm_channels_bwd(const Tensor<S>& x, const Tensor<S>& gamma, S eps,                   \
                              const Tensor<S>& gy, Tensor<S>& gx, Tensor<S>& ggamma,               \
                              Tensor<S>& gbeta);                                                   \
  template <typename S>                                                                            \
  void gelu(const Tensor<S>& x, Tensor<S>& y);                                                     \
  template <typename S>                                                                            \
  void gelu_bwd(const Tensor<S>& x, const Tensor<S>& gy, Tensor<S>& gx);                           \
  template <typename S>                                                                            \
  void sigmoid(const Tensor<S>& x, Tensor<S>& y);                                                  \
  template <typename S>                                                                            \
  void sigmoid_bwd(const Tensor<S>& y, const Tensor<S>& gy, Tensor<S>& gx);                        \
  template <typename S>                                                                            \
  void add(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y);                                  \
  template <typename S>                                                                            \
  void sub(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y);                                  \
  template <typename S>                                                                            \
  void mul(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y);                                  \
  template <typename S>                                                                            \
  void scale(const Tensor<S>& x, S c, Tensor<S>& y);                                               \
  template <typename S>                                                                            \
  void axpy(S alpha, const Tensor<S>& x, Tensor<S>& y);                                            \
  template <typename S>                                                                            \
  void fma_accum(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y);

namespace serial {
SEGREF_KERNEL_DECLS
}
namespace omp {
SEGREF_KERNEL_DECLS
}

#undef SEGREF_KERNEL_DECLS

// ---- dispatch ------------------------------------------------------------

#define SEGREF_DISPATCH(fn, ...)                 \
  do {                                           \
    if (parallel_enabled())                      \
      omp::fn(__VA_ARGS__);                      \
    else                                         \
      serial::fn(__VA_ARGS__);                   \
  } while (0)

template <typename S>
inline void conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, int sy, int sx,
                   int py, int px, Tensor<S>& y) {
  SEGREF_DISPATCH(conv2d, x, w, bias, sy, sx, py, px, y);
}
template <typename S>
inline void conv2d_bwd_input(const Tensor<S>& gy, const Tensor<S>& w, int sy, int sx, int py,
                             int px, Tensor<S>& gx) {
  SEGREF_DISPATCH(conv2d_bwd_input, gy, w, sy, sx, py, px, gx);
}
template <typename S>
inline void conv2d_bwd_weight(const Tensor<S>& gy, const Tensor<S>& x, int sy, int sx, int py,
                              int px, Tensor<S>& gw) {
  SEGREF_DISPATCH(conv2d_bwd_weight, gy, x, sy, sx, py, px, gw);
}
template <typename S>
inline void conv2d_bwd_bias(const Tensor<S>& gy, Tensor<S>& gb) {
  SEGREF_DISPATCH(conv2d_bwd_bias, gy, gb);
}
template <typename S>
inline void convt2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, int stride,
                    Tensor<S>& y) {
  SEGREF_DISPATCH(convt2d, x, w, bias, stride, y);
}
template <typename S>
inline void convt2d_bwd_input(const Tensor<S>& gy, const Tensor<S>& w, int stride, Tensor<S>& gx) {
  SEGREF_DISPATCH(convt2d_bwd_input, gy, w, stride, gx);
}
template <typename S>
inline void convt2d_bwd_weight(const Tensor<S>& gy, const Tensor<S>& x, int stride, Tensor<S>& gw) {
  SEGREF_DISPATCH(convt2d_bwd_weight, gy, x, stride, gw);
}
template <typename S>
inline void avgpool2d(const Tensor<S>& x, int k, Tensor<S>& y) {
  SEGREF_DISPATCH(avgpool2d, x, k, y);
}
template <typename S>
inline void avgpool2d_bwd(const Tensor<S>& gy, int k, Tensor<S>& gx) {
  SEGREF_DISPATCH(avgpool2d_bwd, gy, k, gx);
}
template <typename S>
inline void bilinear(const Tensor<S>& x, int ho, int wo, Tensor<S>& y) {
  SEGREF_DISPATCH(bilinear, x, ho, wo, y);
}
template <typename S>
inline void bilinear_bwd(const Tensor<S>& gy, int hi, int wi, Tensor<S>& gx) {
  SEGREF_DISPATCH(bilinear_bwd, gy, hi, wi, gx);
}
template <typename S>
inline void matmul(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, Tensor<S>& y) {
  SEGREF_DISPATCH(matmul, x, w, bias, y);
}
template <typename S>
inline void matmul_bwd_x(const Tensor<S>& gy, const Tensor<S>& w, Tensor<S>& gx) {
  SEGREF_DISPATCH(matmul_bwd_x, gy, w, gx);
}
template <typename S>
inline void matmul_bwd_w(const Tensor<S>& gy, const Tensor<S>& x, Tensor<S>& gw) {
  SEGREF_DISPATCH(matmul_bwd_w, gy, x, gw);
}
template <typename S>
inline void matmul_bwd_bias(const Tensor<S>& gy, Tensor<S>& gb) {
  SEGREF_DISPATCH(matmul_bwd_bias, gy, gb);
}
template <typename S>
inline void bmm_nn(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate) {
  SEGREF_DISPATCH(bmm_nn, a, b, y, accumulate);
}
template <typename S>
inline void bmm_nt(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate) {
  SEGREF_DISPATCH(bmm_nt, a, b, y, accumulate);
}
template <typename S>
inline void bmm_tn(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y, bool accumulate) {
  SEGREF_DISPATCH(bmm_tn, a, b, y, accumulate);
}
template <typename S>
inline void softmax_lastdim(const Tensor<S>& x, Tensor<S>& y) {
  SEGREF_DISPATCH(softmax_lastdim, x, y);
}
template <typename S>
inline void softmax_lastdim_bwd(const Tensor<S>& y, const Tensor<S>& gy, Tensor<S>& gx) {
  SEGREF_DISPATCH(softmax_lastdim_bwd, y, gy, gx);
}
template <typename S>
inline void layernorm_lastdim(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                              S eps, Tensor<S>& y) {
  SEGREF_DISPATCH(layernorm_lastdim, x, gamma, beta, eps, y);
}
template <typename S>
inline void layernorm_lastdim_bwd(const Tensor<S>& x, const Tensor<S>& gamma, S eps,
                                  const Tensor<S>& gy, Tensor<S>& gx, Tensor<S>& ggamma,
                                  Tensor<S>& gbeta) {
  SEGREF_DISPATCH(layernorm_lastdim_bwd, x, gamma, eps, gy, gx, ggamma, gbeta);
}
template <typename S>
inline void layernorm_channels(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                               S eps, Tensor<S>& y) {
  SEGREF_DISPATCH(layernorm_channels, x, gamma, beta, eps, y);
}
template <typename S>
inline void layernorm_channels_bwd(const Tensor<S>& x, const Tensor<S>& gamma, S eps,
                                   const Tensor<S>& gy, Tensor<S>& gx, Tensor<S>& ggamma,
                                   Tensor<S>& gbeta) {
  SEGREF_DISPATCH(layernorm_channels_bwd, x, gamma, eps, gy, gx, ggamma, gbeta);
}
template <typename S>
inline void gelu(const Tensor<S>& x, Tensor<S>& y) {
  SEGREF_DISPATCH(gelu, x, y);
}
template <typename S>
inline void gelu_bwd(const Tensor<S>& x, const Tensor<S>& gy, Tensor<S>& gx) {
  SEGREF_DISPATCH(gelu_bwd, x, gy, gx);
}
template <typename S>
inline void sigmoid(const Tensor<S>& x, Tensor<S>& y) {
  SEGREF_DISPATCH(sigmoid, x, y);
}
template <typename S>
inline void sigmoid_bwd(const Tensor<S>& y, const Tensor<S>& gy, Tensor<S>& gx) {
  SEGREF_DISPATCH(sigmoid_bwd, y, gy, gx);
}
template <typename S>
inline void add(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y) {
  SEGREF_DISPATCH(add, a, b, y);
}
template <typename S>
inline void sub(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y) {
  SEGREF_DISPATCH(sub, a, b, y);
}
template <typename S>
inline void mul(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y) {
  SEGREF_DISPATCH(mul, a, b, y);
}
template <typename S>
inline void scale(const Tensor<S>& x, S c, Tensor<S>& y) {
  SEGREF_DISPATCH(scale, x, c, y);
}
template <typename S>
inline void axpy(S alpha, const Tensor<S>& x, Tensor<S>& y) {
  SEGREF_DISPATCH(axpy, alpha, x, y);
}
template <typename S>
inline void fma_accum(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& y) {
  SEGREF_DISPATCH(fma_accum, a, b, y);
}

#undef SEGREF_DISPATCH

// ---- data movement (single implementation) --------------------------------

namespace data {

template <typename S>
void concat(const std::vector<const Tensor<S>*>& parts, int axis, Tensor<S>& y);
/// Accumulates the slice of gy corresponding to part `index` into gpart.
template <typename S>
void concat_bwd(const Tensor<S>& gy, int axis, const std::vector<std::vector<int>>& part_shapes,
                int index, Tensor<S>& gpart);
template <typename S>
void slice(const Tensor<S>& x, int axis, int start, int len, Tensor<S>& y);
template <typename S>
void slice_bwd(const Tensor<S>& gy, int axis, int start, Tensor<S>& gx);

/// [B,C,H,W] -> crop [B,C,h,w] at (y0,x0).
template <typename S>
void spatial_crop(const Tensor<S>& x, int y0, int x0, Tensor<S>& y);
template <typename S>
void spatial_crop_bwd(const Tensor<S>& gy, int y0, int x0, Tensor<S>& gx);

/// [B,C,H,W] -> [B,H*W,C], row-major over (H,W).
template <typename S>
void tokenize(const Tensor<S>& x, Tensor<S>& y);
template <typename S>
void tokenize_bwd(const Tensor<S>& gy, Tensor<S>& gx);
/// [B,T,C] -> [B,C,H,W] with T == H*W.
template <typename S>
void detokenize(const Tensor<S>& x, int h, int w, Tensor<S>& y);
template <typename S>
void detokenize_bwd(const Tensor<S>& gy, Tensor<S>& gx);

/// [B,T,C] -> [B*h,T,C/h]
template <typename S>
void split_heads(const Tensor<S>& x, int heads, Tensor<S>& y);
template <typename S>
void split_heads_bwd(const Tensor<S>& gy, int heads, Tensor<S>& gx);
template <typename S>
void merge_heads(const Tensor<S>& x, int heads, Tensor<S>& y);
template <typename S>
void merge_heads_bwd(const Tensor<S>& gy, int heads, Tensor<S>& gx);

/// Four [B,C,h,w] tiles -> [B,C,2h,2w]; argument order (t00,t01,t10,t11).
template <typename S>
void mosaic2x2(const Tensor<S>& t00, const Tensor<S>& t01, const Tensor<S>& t10,
               const Tensor<S>& t11, Tensor<S>& y);
template <typename S>
void mosaic2x2_bwd(const Tensor<S>& gy, int quadrant, Tensor<S>& gt);

/// v[C] broadcast to [B,C,H,W].
template <typename S>
void broadcast_vec_map(const Tensor<S>& v, int b, int h, int w, Tensor<S>& y);
template <typename S>
void broadcast_vec_map_bwd(const Tensor<S>& gy, Tensor<S>& gv);

/// x[B,T,C] + pe[1,T,C].
template <typename S>
void add_rows(const Tensor<S>& x, const Tensor<S>& pe, Tensor<S>& y);

template <typename S>
S sum_all(const Tensor<S>& x);

/// Numerically stable mean binary cross-entropy over logits.
template <typename S>
S bce_with_logits_mean(const Tensor<S>& logits, const Tensor<S>& target);
template <typename S>
void bce_with_logits_mean_bwd(const Tensor<S>& logits, const Tensor<S>& target, S gout,
                              Tensor<S>& gx);

}  // namespace data

}  // namespace segref::kernels
