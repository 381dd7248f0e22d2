#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "segref/autograd.hpp"
#include "segref/kernels.hpp"

// Differentiable tensor ops. Forward values come from the kernels layer;
// backward closures accumulate into parent grads.

namespace segref::ops {

template <typename S>
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

// ---- convolution -----------------------------------------------------------

template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int sy, int sx, int py, int px) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  require<S>(xs.size() == 4 && ws.size() == 4, "conv2d: rank");
  require<S>(xs[1] == ws[1], "conv2d: channel mismatch");
  const int ho = (xs[2] + 2 * py - ws[2]) / sy + 1;
  const int wo = (xs[3] + 2 * px - ws[3]) / sx + 1;
  require<S>(ho > 0 && wo > 0, "conv2d: empty output");
  Tensor<S> y({xs[0], ws[0], ho, wo});
  kernels::conv2d(x->value, w->value, b ? &b->value : nullptr, sy, sx, py, px, y);
  return make_op<S>(std::move(y), {x, w, b}, [x, w, b, sy, sx, py, px](Node<S>& self) {
    if (x->requires_grad) kernels::conv2d_bwd_input(self.grad, w->value, sy, sx, py, px, x->grad_ref());
    if (w->requires_grad) kernels::conv2d_bwd_weight(self.grad, x->value, sy, sx, py, px, w->grad_ref());
    if (b && b->requires_grad) kernels::conv2d_bwd_bias(self.grad, b->grad_ref());
  });
}

template <typename S>
Var<S> conv_transpose2d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int stride) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  require<S>(xs.size() == 4 && ws.size() == 4, "conv_transpose2d: rank");
  require<S>(xs[1] == ws[0], "conv_transpose2d: channel mismatch");
  const int k = ws[2];
  Tensor<S> y({xs[0], ws[1], (xs[2] - 1) * stride + k, (xs[3] - 1) * stride + k});
  kernels::convt2d(x->value, w->value, b ? &b->value : nullptr, stride, y);
  return make_op<S>(std::move(y), {x, w, b}, [x, w, b, stride](Node<S>& self) {
    if (x->requires_grad) kernels::convt2d_bwd_input(self.grad, w->value, stride, x->grad_ref());
    if (w->requires_grad) kernels::convt2d_bwd_weight(self.grad, x->value, stride, w->grad_ref());
    if (b && b->requires_grad) kernels::conv2d_bwd_bias(self.grad, b->grad_ref());
  });
}

// ---- pooling / resampling --------------------------------------------------

template <typename S>
Var<S> avg_pool2d(const Var<S>& x, int k) {
  const auto& xs = x->value.shape();
  require<S>(xs.size() == 4, "avg_pool2d: rank");
  require<S>(k >= 1 && xs[2] % k == 0 && xs[3] % k == 0, "avg_pool2d: kernel must divide side");
  Tensor<S> y({xs[0], xs[1], xs[2] / k, xs[3] / k});
  kernels::avgpool2d(x->value, k, y);
  return make_op<S>(std::move(y), {x}, [x, k](Node<S>& self) {
    if (x->requires_grad) kernels::avgpool2d_bwd(self.grad, k, x->grad_ref());
  });
}

template <typename S>
Var<S> bilinear_resize(const Var<S>& x, int ho, int wo) {
  const auto& xs = x->value.shape();
  require<S>(xs.size() == 4, "bilinear_resize: rank");
  Tensor<S> y({xs[0], xs[1], ho, wo});
  kernels::bilinear(x->value, ho, wo, y);
  const int hi = xs[2], wi = xs[3];
  return make_op<S>(std::move(y), {x}, [x, hi, wi](Node<S>& self) {
    if (x->requires_grad) kernels::bilinear_bwd(self.grad, hi, wi, x->grad_ref());
  });
}

// ---- linear / matmul -------------------------------------------------------

/// x [..., C] times w [C, N] plus optional bias [N].
template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  const int C = xs.back();
  require<S>(ws.size() == 2 && ws[0] == C, "linear: dim mismatch");
  const int64_t m64 = x->value.numel() / C;
  const int M = static_cast<int>(m64);
  Tensor<S> x2 = x->value.reshaped({M, C});
  std::vector<int> yshape(xs);
  yshape.back() = ws[1];
  Tensor<S> y(yshape);
  Tensor<S> y2 = y.reshaped({M, ws[1]});
  kernels::matmul(x2, w->value, b ? &b->value : nullptr, y2);
  return make_op<S>(std::move(y), {x, w, b}, [x, w, b, M, C](Node<S>& self) {
    const int N = w->value.dim(1);
    Tensor<S> g2 = self.grad.reshaped({M, N});
    if (x->requires_grad) {
      Tensor<S> gx2 = x->grad_ref().reshaped({M, C});
      kernels::matmul_bwd_x(g2, w->value, gx2);
    }
    if (w->requires_grad) {
      Tensor<S> x2b = x->value.reshaped({M, C});
      kernels::matmul_bwd_w(g2, x2b, w->grad_ref());
    }
    if (b && b->requires_grad) kernels::matmul_bwd_bias(g2, b->grad_ref());
  });
}

template <typename S>
Var<S> bmm_nn(const Var<S>& a, const Var<S>& b) {
  const auto& as = a->value.shape();
  const auto& bs = b->value.shape();
  require<S>(as.size() == 3 && bs.size() == 3 && as[0] == bs[0] && as[2] == bs[1], "bmm_nn: dims");
  Tensor<S> y({as[0], as[1], bs[2]});
  kernels::bmm_nn(a->value, b->value, y, false);
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    if (a->requires_grad) kernels::bmm_nt(self.grad, b->value, a->grad_ref(), true);
    if (b->requires_grad) kernels::bmm_tn(a->value, self.grad, b->grad_ref(), true);
  });
}

/// y = a · b^T with a [N,P,Q], b [N,R,Q].
template <typename S>
Var<S> bmm_nt(const Var<S>& a, const Var<S>& b) {
  const auto& as = a->value.shape();
  const auto& bs = b->value.shape();
  require<S>(as.size() == 3 && bs.size() == 3 && as[0] == bs[0] && as[2] == bs[2], "bmm_nt: dims");
  Tensor<S> y({as[0], as[1], bs[1]});
  kernels::bmm_nt(a->value, b->value, y, false);
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    if (a->requires_grad) kernels::bmm_nn(self.grad, b->value, a->grad_ref(), true);
    if (b->requires_grad) kernels::bmm_tn(self.grad, a->value, b->grad_ref(), true);
  });
}

// ---- normalization / activations ------------------------------------------

template <typename S>
Var<S> softmax_lastdim(const Var<S>& x) {
  Tensor<S> y(x->value.shape());
  kernels::softmax_lastdim(x->value, y);
  Tensor<S> ycopy = y;  // shares storage; value tensors are write-once
  return make_op<S>(std::move(y), {x}, [x, ycopy](Node<S>& self) {
    if (x->requires_grad) kernels::softmax_lastdim_bwd(ycopy, self.grad, x->grad_ref());
  });
}

template <typename S>
Var<S> layernorm_lastdim(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps) {
  const int C = x->value.shape().back();
  require<S>(gamma->value.numel() == C && beta->value.numel() == C, "layernorm: param size");
  Tensor<S> y(x->value.shape());
  kernels::layernorm_lastdim(x->value, gamma->value, beta->value, eps, y);
  return make_op<S>(std::move(y), {x, gamma, beta}, [x, gamma, beta, eps](Node<S>& self) {
    if (!x->requires_grad && !gamma->requires_grad && !beta->requires_grad) return;
    kernels::layernorm_lastdim_bwd(x->value, gamma->value, eps, self.grad, x->grad_ref(),
                                   gamma->grad_ref(), beta->grad_ref());
  });
}

template <typename S>
Var<S> layernorm_channels(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps) {
  require<S>(x->value.rank() == 4, "layernorm_channels: rank");
  const int C = x->value.dim(1);
  require<S>(gamma->value.numel() == C && beta->value.numel() == C, "layernorm_channels: params");
  Tensor<S> y(x->value.shape());
  kernels::layernorm_channels(x->value, gamma->value, beta->value, eps, y);
  return make_op<S>(std::move(y), {x, gamma, beta}, [x, gamma, beta, eps](Node<S>& self) {
    if (!x->requires_grad && !gamma->requires_grad && !beta->requires_grad) return;
    kernels::layernorm_channels_bwd(x->value, gamma->value, eps, self.grad, x->grad_ref(),
                                    gamma->grad_ref(), beta->grad_ref());
  });
}

template <typename S>
Var<S> gelu(const Var<S>& x) {
  Tensor<S> y(x->value.shape());
  kernels::gelu(x->value, y);
  return make_op<S>(std::move(y), {x}, [x](Node<S>& self) {
    if (x->requires_grad) kernels::gelu_bwd(x->value, self.grad, x->grad_ref());
  });
}

template <typename S>
Var<S> sigmoid(const Var<S>& x) {
  Tensor<S> y(x->value.shape());
  kernels::sigmoid(x->value, y);
  Tensor<S> ycopy = y;
  return make_op<S>(std::move(y), {x}, [x, ycopy](Node<S>& self) {
    if (x->requires_grad) kernels::sigmoid_bwd(ycopy, self.grad, x->grad_ref());
  });
}

// ---- elementwise -----------------------------------------------------------

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  require<S>(a->value.same_shape(b->value), "add: shape mismatch " + a->value.shape_str() + " vs " +
                                                b->value.shape_str());
  Tensor<S> y(a->value.shape());
  kernels::add(a->value, b->value, y);
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    if (a->requires_grad) kernels::axpy(S(1), self.grad, a->grad_ref());
    if (b->requires_grad) kernels::axpy(S(1), self.grad, b->grad_ref());
  });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  require<S>(a->value.same_shape(b->value), "sub: shape mismatch");
  Tensor<S> y(a->value.shape());
  kernels::sub(a->value, b->value, y);
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    if (a->requires_grad) kernels::axpy(S(1), self.grad, a->grad_ref());
    if (b->requires_grad) kernels::axpy(S(-1), self.grad, b->grad_ref());
  });
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  require<S>(a->value.same_shape(b->value), "mul: shape mismatch");
  Tensor<S> y(a->value.shape());
  kernels::mul(a->value, b->value, y);
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    if (a->requires_grad) kernels::fma_accum(self.grad, b->value, a->grad_ref());
    if (b->requires_grad) kernels::fma_accum(self.grad, a->value, b->grad_ref());
  });
}

template <typename S>
Var<S> scale(const Var<S>& x, S c) {
  Tensor<S> y(x->value.shape());
  kernels::scale(x->value, c, y);
  return make_op<S>(std::move(y), {x}, [x, c](Node<S>& self) {
    if (x->requires_grad) kernels::axpy(c, self.grad, x->grad_ref());
  });
}

// ---- shape / movement ------------------------------------------------------

template <typename S>
Var<S> reshape(const Var<S>& x, std::vector<int> shape) {
  Tensor<S> y = x->value.reshaped(shape);
  return make_op<S>(std::move(y), {x}, [x](Node<S>& self) {
    if (x->requires_grad) {
      Tensor<S> g = self.grad.reshaped(x->value.shape());
      kernels::axpy(S(1), g, x->grad_ref());
    }
  });
}

template <typename S>
Var<S> concat(const std::vector<Var<S>>& parts, int axis) {
  require<S>(!parts.empty(), "concat: empty");
  std::vector<int> shape = parts[0]->value.shape();
  std::vector<std::vector<int>> part_shapes;
  int total = 0;
  for (const auto& p : parts) {
    part_shapes.push_back(p->value.shape());
    total += p->value.dim(axis);
  }
  shape[static_cast<size_t>(axis)] = total;
  Tensor<S> y(shape);
  std::vector<const Tensor<S>*> raw;
  for (const auto& p : parts) raw.push_back(&p->value);
  kernels::data::concat(raw, axis, y);
  std::vector<Var<S>> parents(parts.begin(), parts.end());
  return make_op<S>(std::move(y), parents, [parts, axis, part_shapes](Node<S>& self) {
    for (size_t i = 0; i < parts.size(); ++i)
      if (parts[i]->requires_grad)
        kernels::data::concat_bwd(self.grad, axis, part_shapes, static_cast<int>(i),
                                  parts[i]->grad_ref());
  });
}

template <typename S>
Var<S> slice(const Var<S>& x, int axis, int start, int len) {
  require<S>(start >= 0 && start + len <= x->value.dim(axis), "slice: out of range");
  std::vector<int> shape = x->value.shape();
  shape[static_cast<size_t>(axis)] = len;
  Tensor<S> y(shape);
  kernels::data::slice(x->value, axis, start, len, y);
  return make_op<S>(std::move(y), {x}, [x, axis, start](Node<S>& self) {
    if (x->requires_grad) kernels::data::slice_bwd(self.grad, axis, start, x->grad_ref());
  });
}

template <typename S>
Var<S> spatial_crop(const Var<S>& x, int y0, int x0, int h, int w) {
  const auto& xs = x->value.shape();
  require<S>(y0 >= 0 && x0 >= 0 && y0 + h <= xs[2] && x0 + w <= xs[3], "spatial_crop: bounds");
  Tensor<S> y({xs[0], xs[1], h, w});
  kernels::data::spatial_crop(x->value, y0, x0, y);
  return make_op<S>(std::move(y), {x}, [x, y0, x0](Node<S>& self) {
    if (x->requires_grad) kernels::data::spatial_crop_bwd(self.grad, y0, x0, x->grad_ref());
  });
}

/// [B,C,H,W] -> [B,H*W,C] in row-major (y,x) order.
template <typename S>
Var<S> tokenize_grid(const Var<S>& x) {
  const auto& xs = x->value.shape();
  require<S>(xs.size() == 4, "tokenize_grid: rank");
  Tensor<S> y({xs[0], xs[2] * xs[3], xs[1]});
  kernels::data::tokenize(x->value, y);
  return make_op<S>(std::move(y), {x}, [x](Node<S>& self) {
    if (x->requires_grad) kernels::data::tokenize_bwd(self.grad, x->grad_ref());
  });
}

template <typename S>
Var<S> detokenize_grid(const Var<S>& x, int h, int w) {
  const auto& xs = x->value.shape();
  require<S>(xs.size() == 3 && xs[1] == h * w, "detokenize_grid: token count");
  Tensor<S> y({xs[0], xs[2], h, w});
  kernels::data::detokenize(x->value, h, w, y);
  return make_op<S>(std::move(y), {x}, [x](Node<S>& self) {
    if (x->requires_grad) kernels::data::detokenize_bwd(self.grad, x->grad_ref());
  });
}

template <typename S>
Var<S> split_heads(const Var<S>& x, int heads) {
  const auto& xs = x->value.shape();
  require<S>(xs.size() == 3 && xs[2] % heads == 0, "split_heads: dims");
  Tensor<S> y({xs[0] * heads, xs[1], xs[2] / heads});
  kernels::data::split_heads(x->value, heads, y);
  return make_op<S>(std::move(y), {x}, [x, heads](Node<S>& self) {
    if (x->requires_grad) kernels::data::split_heads_bwd(self.grad, heads, x->grad_ref());
  });
}

template <typename S>
Var<S> merge_heads(const Var<S>& x, int heads) {
  const auto& xs = x->value.shape();
  require<S>(xs.size() == 3 && xs[0] % heads == 0, "merge_heads: dims");
  Tensor<S> y({xs[0] / heads, xs[1], xs[2] * heads});
  kernels::data::merge_heads(x->value, heads, y);
  return make_op<S>(std::move(y), {x}, [x, heads](Node<S>& self) {
    if (x->requires_grad) kernels::data::merge_heads_bwd(self.grad, heads, x->grad_ref());
  });
}

/// Assemble four equally-shaped tiles into a 2x2 spatial mosaic
/// (argument order: top-left, top-right, bottom-left, bottom-right).
template <typename S>
Var<S> mosaic2x2(const Var<S>& t00, const Var<S>& t01, const Var<S>& t10, const Var<S>& t11) {
  const auto& ts = t00->value.shape();
  for (const Var<S>* t : {&t01, &t10, &t11})
    require<S>((*t)->value.shape() == ts, "mosaic2x2: tile shape mismatch");
  Tensor<S> y({ts[0], ts[1], ts[2] * 2, ts[3] * 2});
  kernels::data::mosaic2x2(t00->value, t01->value, t10->value, t11->value, y);
  std::vector<Var<S>> tiles = {t00, t01, t10, t11};
  return make_op<S>(std::move(y), tiles, [tiles](Node<S>& self) {
    for (int q = 0; q < 4; ++q)
      if (tiles[static_cast<size_t>(q)]->requires_grad)
        kernels::data::mosaic2x2_bwd(self.grad, q, tiles[static_cast<size_t>(q)]->grad_ref());
  });
}

template <typename S>
Var<S> broadcast_vec_map(const Var<S>& v, int b, int h, int w) {
  require<S>(v->value.rank() == 1, "broadcast_vec_map: rank");
  Tensor<S> y({b, v->value.dim(0), h, w});
  kernels::data::broadcast_vec_map(v->value, b, h, w, y);
  return make_op<S>(std::move(y), {v}, [v](Node<S>& self) {
    if (v->requires_grad) kernels::data::broadcast_vec_map_bwd(self.grad, v->grad_ref());
  });
}

/// x [B,T,C] + pe [1,T,C]; pe must not require gradients.
template <typename S>
Var<S> add_rows_const(const Var<S>& x, const Var<S>& pe) {
  require<S>(!pe->requires_grad, "add_rows_const: pe must be constant");
  require<S>(x->value.dim(1) == pe->value.dim(1) && x->value.dim(2) == pe->value.dim(2),
             "add_rows_const: shape");
  Tensor<S> y(x->value.shape());
  kernels::data::add_rows(x->value, pe->value, y);
  return make_op<S>(std::move(y), {x}, [x](Node<S>& self) {
    if (x->requires_grad) kernels::axpy(S(1), self.grad, x->grad_ref());
  });
}

// ---- reductions / scalars --------------------------------------------------

template <typename S>
Var<S> sum_all(const Var<S>& x) {
  Tensor<S> y({1});
  y[0] = kernels::data::sum_all(x->value);
  return make_op<S>(std::move(y), {x}, [x](Node<S>& self) {
    if (!x->requires_grad) return;
    Tensor<S>& gx = x->grad_ref();
    const S g = self.grad[0];
    const int64_t n = gx.numel();
    for (int64_t i = 0; i < n; ++i) gx[i] += g;
  });
}

template <typename S>
Var<S> mean_all(const Var<S>& x) {
  const S invn = S(1) / static_cast<S>(x->value.numel());
  Tensor<S> y({1});
  y[0] = kernels::data::sum_all(x->value) * invn;
  return make_op<S>(std::move(y), {x}, [x, invn](Node<S>& self) {
    if (!x->requires_grad) return;
    Tensor<S>& gx = x->grad_ref();
    const S g = self.grad[0] * invn;
    const int64_t n = gx.numel();
    for (int64_t i = 0; i < n; ++i) gx[i] += g;
  });
}

// Scalar ([1]-tensor) arithmetic.
template <typename S>
Var<S> s_add(const Var<S>& a, const Var<S>& b) {
  Tensor<S> y({1});
  y[0] = a->value[0] + b->value[0];
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    if (a->requires_grad) a->grad_ref()[0] += self.grad[0];
    if (b->requires_grad) b->grad_ref()[0] += self.grad[0];
  });
}

template <typename S>
Var<S> s_sub(const Var<S>& a, const Var<S>& b) {
  Tensor<S> y({1});
  y[0] = a->value[0] - b->value[0];
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    if (a->requires_grad) a->grad_ref()[0] += self.grad[0];
    if (b->requires_grad) b->grad_ref()[0] -= self.grad[0];
  });
}

template <typename S>
Var<S> s_mul(const Var<S>& a, const Var<S>& b) {
  Tensor<S> y({1});
  y[0] = a->value[0] * b->value[0];
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    if (a->requires_grad) a->grad_ref()[0] += self.grad[0] * b->value[0];
    if (b->requires_grad) b->grad_ref()[0] += self.grad[0] * a->value[0];
  });
}

template <typename S>
Var<S> s_div(const Var<S>& a, const Var<S>& b) {
  Tensor<S> y({1});
  y[0] = a->value[0] / b->value[0];
  return make_op<S>(std::move(y), {a, b}, [a, b](Node<S>& self) {
    const S bv = b->value[0];
    if (a->requires_grad) a->grad_ref()[0] += self.grad[0] / bv;
    if (b->requires_grad) b->grad_ref()[0] -= self.grad[0] * a->value[0] / (bv * bv);
  });
}

template <typename S>
Var<S> s_const(S v) {
  return make_const(Tensor<S>::from({1}, {v}));
}

template <typename S>
Var<S> s_scale(const Var<S>& a, S c) {
  Tensor<S> y({1});
  y[0] = a->value[0] * c;
  return make_op<S>(std::move(y), {a}, [a, c](Node<S>& self) {
    if (a->requires_grad) a->grad_ref()[0] += self.grad[0] * c;
  });
}

/// Numerically stable mean BCE over logits against a constant target.
template <typename S>
Var<S> bce_with_logits_mean(const Var<S>& logits, const Tensor<S>& target) {
  require<S>(logits->value.same_shape(target), "bce: shape mismatch");
  Tensor<S> y({1});
  y[0] = kernels::data::bce_with_logits_mean(logits->value, target);
  Tensor<S> tcopy = target;
  return make_op<S>(std::move(y), {logits}, [logits, tcopy](Node<S>& self) {
    if (logits->requires_grad)
      kernels::data::bce_with_logits_mean_bwd(logits->value, tcopy, self.grad[0],
                                              logits->grad_ref());
  });
}

}  // namespace segref::ops
