// The OpenMP kernels must agree bit-for-bit with the serial reference: work
// is only ever split across output elements and each element's reduction
// order is fixed.

#include <cstring>

#include "doctest.h"
#include "segref/kernels.hpp"
#include "segref/rng.hpp"

using namespace segref;

namespace {

template <typename S>
Tensor<S> rnd(std::vector<int> shape, Rng& rng) {
  Tensor<S> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(rng.normal());
  return t;
}

template <typename S>
bool bit_equal(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data(), b.data(), sizeof(S) * static_cast<size_t>(a.numel())) == 0;
}

}  // namespace

TEST_CASE_TEMPLATE("serial and omp kernels are bit-identical", S, float, double) {
  Rng rng(2024);

  SUBCASE("conv2d fwd/bwd") {
    auto x = rnd<S>({2, 3, 9, 9}, rng);
    auto w = rnd<S>({5, 3, 3, 3}, rng);
    auto b = rnd<S>({5}, rng);
    Tensor<S> y1({2, 5, 5, 5}), y2({2, 5, 5, 5});
    kernels::serial::conv2d(x, w, &b, 2, 2, 1, 1, y1);
    kernels::omp::conv2d(x, w, &b, 2, 2, 1, 1, y2);
    CHECK(bit_equal(y1, y2));

    auto gy = rnd<S>({2, 5, 5, 5}, rng);
    Tensor<S> gx1({2, 3, 9, 9}), gx2({2, 3, 9, 9});
    kernels::serial::conv2d_bwd_input(gy, w, 2, 2, 1, 1, gx1);
    kernels::omp::conv2d_bwd_input(gy, w, 2, 2, 1, 1, gx2);
    CHECK(bit_equal(gx1, gx2));

    Tensor<S> gw1({5, 3, 3, 3}), gw2({5, 3, 3, 3});
    kernels::serial::conv2d_bwd_weight(gy, x, 2, 2, 1, 1, gw1);
    kernels::omp::conv2d_bwd_weight(gy, x, 2, 2, 1, 1, gw2);
    CHECK(bit_equal(gw1, gw2));

    Tensor<S> gb1({5}), gb2({5});
    kernels::serial::conv2d_bwd_bias(gy, gb1);
    kernels::omp::conv2d_bwd_bias(gy, gb2);
    CHECK(bit_equal(gb1, gb2));
  }

  SUBCASE("conv_transpose fwd/bwd") {
    auto x = rnd<S>({2, 4, 5, 5}, rng);
    auto w = rnd<S>({4, 3, 2, 2}, rng);
    Tensor<S> y1({2, 3, 10, 10}), y2({2, 3, 10, 10});
    kernels::serial::convt2d(x, w, nullptr, 2, y1);
    kernels::omp::convt2d(x, w, nullptr, 2, y2);
    CHECK(bit_equal(y1, y2));

    auto gy = rnd<S>({2, 3, 10, 10}, rng);
    Tensor<S> gx1({2, 4, 5, 5}), gx2({2, 4, 5, 5});
    kernels::serial::convt2d_bwd_input(gy, w, 2, gx1);
    kernels::omp::convt2d_bwd_input(gy, w, 2, gx2);
    CHECK(bit_equal(gx1, gx2));

    Tensor<S> gw1({4, 3, 2, 2}), gw2({4, 3, 2, 2});
    kernels::serial::convt2d_bwd_weight(gy, x, 2, gw1);
    kernels::omp::convt2d_bwd_weight(gy, x, 2, gw2);
    CHECK(bit_equal(gw1, gw2));
  }

  SUBCASE("pool and bilinear") {
    auto x = rnd<S>({3, 4, 12, 12}, rng);
    Tensor<S> y1({3, 4, 3, 3}), y2({3, 4, 3, 3});
    kernels::serial::avgpool2d(x, 4, y1);
    kernels::omp::avgpool2d(x, 4, y2);
    CHECK(bit_equal(y1, y2));

    Tensor<S> u1({3, 4, 17, 9}), u2({3, 4, 17, 9});
    kernels::serial::bilinear(x, 17, 9, u1);
    kernels::omp::bilinear(x, 17, 9, u2);
    CHECK(bit_equal(u1, u2));

    auto gy = rnd<S>({3, 4, 17, 9}, rng);
    Tensor<S> gx1({3, 4, 12, 12}), gx2({3, 4, 12, 12});
    kernels::serial::bilinear_bwd(gy, 12, 12, gx1);
    kernels::omp::bilinear_bwd(gy, 12, 12, gx2);
    CHECK(bit_equal(gx1, gx2));
  }

  SUBCASE("matmul family") {
    auto x = rnd<S>({7, 5}, rng);
    auto w = rnd<S>({5, 9}, rng);
    auto b = rnd<S>({9}, rng);
    Tensor<S> y1({7, 9}), y2({7, 9});
    kernels::serial::matmul(x, w, &b, y1);
    kernels::omp::matmul(x, w, &b, y2);
    CHECK(bit_equal(y1, y2));

    auto gy = rnd<S>({7, 9}, rng);
    Tensor<S> gx1({7, 5}), gx2({7, 5}), gw1({5, 9}), gw2({5, 9});
    kernels::serial::matmul_bwd_x(gy, w, gx1);
    kernels::omp::matmul_bwd_x(gy, w, gx2);
    kernels::serial::matmul_bwd_w(gy, x, gw1);
    kernels::omp::matmul_bwd_w(gy, x, gw2);
    CHECK(bit_equal(gx1, gx2));
    CHECK(bit_equal(gw1, gw2));

    auto a3 = rnd<S>({4, 6, 5}, rng);
    auto b3 = rnd<S>({4, 5, 7}, rng);
    Tensor<S> nn1({4, 6, 7}), nn2({4, 6, 7});
    kernels::serial::bmm_nn(a3, b3, nn1, false);
    kernels::omp::bmm_nn(a3, b3, nn2, false);
    CHECK(bit_equal(nn1, nn2));

    auto c3 = rnd<S>({4, 7, 5}, rng);
    Tensor<S> nt1({4, 6, 7}), nt2({4, 6, 7});
    kernels::serial::bmm_nt(a3, c3, nt1, false);
    kernels::omp::bmm_nt(a3, c3, nt2, false);
    CHECK(bit_equal(nt1, nt2));

    auto d3 = rnd<S>({4, 6, 7}, rng);
    Tensor<S> tn1({4, 5, 7}), tn2({4, 5, 7});
    kernels::serial::bmm_tn(a3, d3, tn1, false);
    kernels::omp::bmm_tn(a3, d3, tn2, false);
    CHECK(bit_equal(tn1, tn2));
  }

  SUBCASE("softmax + layernorm") {
    auto x = rnd<S>({5, 4, 11}, rng);
    Tensor<S> y1(x.shape()), y2(x.shape());
    kernels::serial::softmax_lastdim(x, y1);
    kernels::omp::softmax_lastdim(x, y2);
    CHECK(bit_equal(y1, y2));

    auto gy = rnd<S>({5, 4, 11}, rng);
    Tensor<S> gx1(x.shape()), gx2(x.shape());
    kernels::serial::softmax_lastdim_bwd(y1, gy, gx1);
    kernels::omp::softmax_lastdim_bwd(y2, gy, gx2);
    CHECK(bit_equal(gx1, gx2));

    auto g = rnd<S>({11}, rng);
    auto be = rnd<S>({11}, rng);
    Tensor<S> l1(x.shape()), l2(x.shape());
    kernels::serial::layernorm_lastdim(x, g, be, S(1e-5), l1);
    kernels::omp::layernorm_lastdim(x, g, be, S(1e-5), l2);
    CHECK(bit_equal(l1, l2));

    Tensor<S> lgx1(x.shape()), lgx2(x.shape()), gg1({11}), gg2({11}), gb1({11}), gb2({11});
    kernels::serial::layernorm_lastdim_bwd(x, g, S(1e-5), gy, lgx1, gg1, gb1);
    kernels::omp::layernorm_lastdim_bwd(x, g, S(1e-5), gy, lgx2, gg2, gb2);
    CHECK(bit_equal(lgx1, lgx2));
    CHECK(bit_equal(gg1, gg2));
    CHECK(bit_equal(gb1, gb2));

    auto xc = rnd<S>({2, 11, 5, 3}, rng);
    Tensor<S> c1(xc.shape()), c2(xc.shape());
    kernels::serial::layernorm_channels(xc, g, be, S(1e-5), c1);
    kernels::omp::layernorm_channels(xc, g, be, S(1e-5), c2);
    CHECK(bit_equal(c1, c2));

    auto gyc = rnd<S>({2, 11, 5, 3}, rng);
    Tensor<S> cgx1(xc.shape()), cgx2(xc.shape()), cg1({11}), cg2({11}), cb1({11}), cb2({11});
    kernels::serial::layernorm_channels_bwd(xc, g, S(1e-5), gyc, cgx1, cg1, cb1);
    kernels::omp::layernorm_channels_bwd(xc, g, S(1e-5), gyc, cgx2, cg2, cb2);
    CHECK(bit_equal(cgx1, cgx2));
    CHECK(bit_equal(cg1, cg2));
    CHECK(bit_equal(cb1, cb2));
  }

  SUBCASE("elementwise") {
    auto x = rnd<S>({3, 7, 5}, rng);
    auto y = rnd<S>({3, 7, 5}, rng);
    Tensor<S> a1(x.shape()), a2(x.shape());
    kernels::serial::gelu(x, a1);
    kernels::omp::gelu(x, a2);
    CHECK(bit_equal(a1, a2));
    kernels::serial::sigmoid(x, a1);
    kernels::omp::sigmoid(x, a2);
    CHECK(bit_equal(a1, a2));
    kernels::serial::add(x, y, a1);
    kernels::omp::add(x, y, a2);
    CHECK(bit_equal(a1, a2));
    kernels::serial::mul(x, y, a1);
    kernels::omp::mul(x, y, a2);
    CHECK(bit_equal(a1, a2));
  }
}

TEST_CASE("dispatch honors the parallel switch") {
  CHECK(kernels::parallel_enabled());
  kernels::set_parallel(false);
  CHECK_FALSE(kernels::parallel_enabled());
  kernels::set_parallel(true);
}
