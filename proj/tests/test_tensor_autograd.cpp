#include <cmath>

#include "doctest.h"
#include "gradcheck_util.hpp"
#include "segref/nn.hpp"
#include "segref/ops.hpp"
#include "segref/posenc.hpp"
#include "segref/rng.hpp"

using namespace segref;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double scl = 1.0) {
  Tensor<double> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * scl;
  return t;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor<float> t({2, 3});
  CHECK(t.numel() == 6);
  t.at(1, 2) = 5.f;
  CHECK(t[5] == 5.f);
  Tensor<float> r = t.reshaped({3, 2});
  CHECK(r.at(2, 1) == 5.f);  // aliases the same storage
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  Tensor<float> c = t.clone();
  c.at(1, 2) = 7.f;
  CHECK(t.at(1, 2) == 5.f);
}

TEST_CASE("autograd chain rule on scalars") {
  auto x = make_leaf(Tensor<double>::from({1}, {3.0}), true);
  auto y = ops::s_mul(x, x);            // x^2
  auto z = ops::s_add(y, ops::s_scale(x, 2.0));  // x^2 + 2x
  backward(z);
  CHECK(x->grad[0] == doctest::Approx(2.0 * 3.0 + 2.0));
}

TEST_CASE("conv2d matches a hand example") {
  // 1x1x3x3 input, 1x1x2x2 kernel of ones, stride 1, no pad -> sliding sums.
  auto x = make_leaf(Tensor<double>::from({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}), true);
  auto w = make_leaf(Tensor<double>::from({1, 1, 2, 2}, {1, 1, 1, 1}), true);
  auto b = make_leaf(Tensor<double>::zeros({1}), true);
  auto y = ops::conv2d(x, w, b, 1, 1, 0, 0);
  CHECK(y->value.at(0, 0, 0, 0) == doctest::Approx(12.0));
  CHECK(y->value.at(0, 0, 1, 1) == doctest::Approx(28.0));
}

TEST_CASE("avg_pool2d preserves the mean and constants") {
  Rng rng(7);
  auto x = make_leaf(random_tensor({1, 2, 8, 8}, rng), false);
  auto p = ops::avg_pool2d(x, 4);
  double m0 = kernels::data::sum_all(x->value) / x->value.numel();
  double m1 = kernels::data::sum_all(p->value) / p->value.numel();
  CHECK(m0 == doctest::Approx(m1).epsilon(1e-12));

  auto cst = make_leaf(Tensor<double>::full({1, 1, 6, 6}, 2.5), false);
  auto pc = ops::avg_pool2d(cst, 3);
  for (int64_t i = 0; i < pc->value.numel(); ++i) CHECK(pc->value[i] == doctest::Approx(2.5));
  CHECK_THROWS_AS(ops::avg_pool2d(cst, 4), ShapeError);
}

TEST_CASE("bilinear resize preserves constant images") {
  auto cst = make_leaf(Tensor<double>::full({1, 3, 5, 5}, 1.25), false);
  auto up = ops::bilinear_resize(cst, 10, 10);
  for (int64_t i = 0; i < up->value.numel(); ++i) CHECK(up->value[i] == doctest::Approx(1.25));
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(3);
  auto x = make_leaf(random_tensor({4, 6, 9}, rng, 3.0), false);
  auto y = ops::softmax_lastdim(x);
  for (int r = 0; r < 24; ++r) {
    double s = 0;
    for (int i = 0; i < 9; ++i) s += y->value[r * 9 + i];
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("core op gradients match finite differences") {
  Rng rng(11);

  SUBCASE("conv2d") {
    auto x = make_leaf(random_tensor({2, 3, 5, 5}, rng), true);
    auto w = make_leaf(random_tensor({4, 3, 3, 3}, rng, 0.5), true);
    auto b = make_leaf(random_tensor({4}, rng, 0.1), true);
    auto loss = [&] { return ops::mean_all(ops::gelu(ops::conv2d(x, w, b, 2, 2, 1, 1))); };
    for (auto& v : {x, w, b}) {
      auto r = testing::gradcheck(v, loss, {x, w, b});
      CHECK(r.max_rel_err < 1e-5);
    }
  }

  SUBCASE("conv_transpose2d") {
    auto x = make_leaf(random_tensor({1, 4, 3, 3}, rng), true);
    auto w = make_leaf(random_tensor({4, 2, 2, 2}, rng, 0.5), true);
    auto b = make_leaf(random_tensor({2}, rng, 0.1), true);
    auto loss = [&] { return ops::mean_all(ops::sigmoid(ops::conv_transpose2d(x, w, b, 2))); };
    for (auto& v : {x, w, b}) {
      auto r = testing::gradcheck(v, loss, {x, w, b});
      CHECK(r.max_rel_err < 1e-5);
    }
  }

  SUBCASE("pool+bilinear") {
    auto x = make_leaf(random_tensor({1, 2, 8, 8}, rng), true);
    auto loss = [&] {
      return ops::mean_all(ops::bilinear_resize(ops::avg_pool2d(x, 2), 7, 5));
    };
    auto r = testing::gradcheck(x, loss, {x});
    CHECK(r.max_rel_err < 1e-5);
  }

  SUBCASE("linear + layernorm tokens") {
    auto x = make_leaf(random_tensor({2, 5, 8}, rng), true);
    auto w = make_leaf(random_tensor({8, 6}, rng, 0.4), true);
    auto b = make_leaf(random_tensor({6}, rng, 0.1), true);
    auto g = make_leaf(random_tensor({6}, rng, 0.3), true);
    auto be = make_leaf(random_tensor({6}, rng, 0.1), true);
    auto loss = [&] {
      return ops::mean_all(ops::layernorm_lastdim(ops::linear(x, w, b), g, be, 1e-5));
    };
    for (auto& v : {x, w, b, g, be}) {
      auto r = testing::gradcheck(v, loss, {x, w, b, g, be});
      CHECK(r.max_rel_err < 1e-4);
    }
  }

  SUBCASE("layernorm channels") {
    auto x = make_leaf(random_tensor({2, 6, 3, 3}, rng), true);
    auto g = make_leaf(random_tensor({6}, rng, 0.5), true);
    auto be = make_leaf(random_tensor({6}, rng, 0.2), true);
    auto loss = [&] { return ops::mean_all(ops::layernorm_channels(x, g, be, 1e-5)); };
    for (auto& v : {x, g, be}) {
      auto r = testing::gradcheck(v, loss, {x, g, be});
      CHECK(r.max_rel_err < 1e-4);
    }
  }

  SUBCASE("bmm + softmax") {
    auto a = make_leaf(random_tensor({3, 4, 5}, rng), true);
    auto b = make_leaf(random_tensor({3, 6, 5}, rng), true);
    auto loss = [&] {
      auto attn = ops::softmax_lastdim(ops::bmm_nt(a, b));
      return ops::mean_all(ops::bmm_nn(attn, b));
    };
    for (auto& v : {a, b}) {
      auto r = testing::gradcheck(v, loss, {a, b});
      CHECK(r.max_rel_err < 1e-4);
    }
  }

  SUBCASE("movement ops") {
    auto x = make_leaf(random_tensor({2, 3, 4, 4}, rng), true);
    auto loss = [&] {
      auto t00 = ops::spatial_crop(x, 0, 0, 2, 2);
      auto t01 = ops::spatial_crop(x, 0, 2, 2, 2);
      auto t10 = ops::spatial_crop(x, 2, 0, 2, 2);
      auto t11 = ops::spatial_crop(x, 2, 2, 2, 2);
      auto m = ops::mosaic2x2(t00, t01, t10, t11);
      auto tok = ops::tokenize_grid(m);
      auto back = ops::detokenize_grid(tok, 4, 4);
      auto sl = ops::slice(back, 1, 1, 2);
      return ops::mean_all(ops::mul(sl, sl));
    };
    auto r = testing::gradcheck(x, loss, {x});
    CHECK(r.max_rel_err < 1e-5);
  }

  SUBCASE("bce with logits") {
    auto x = make_leaf(random_tensor({2, 1, 4, 4}, rng, 2.0), true);
    Tensor<double> tgt({2, 1, 4, 4});
    Rng r2(5);
    for (int64_t i = 0; i < tgt.numel(); ++i) tgt[i] = r2.uniform() < 0.5 ? 0.0 : 1.0;
    auto loss = [&] { return ops::bce_with_logits_mean(x, tgt); };
    auto r = testing::gradcheck(x, loss, {x});
    CHECK(r.max_rel_err < 1e-6);
  }
}

TEST_CASE("mosaic detokenize round trip is exact") {
  Rng rng(13);
  auto x = make_leaf(random_tensor({2, 3, 6, 6}, rng), false);
  auto tok = ops::tokenize_grid(x);
  auto back = ops::detokenize_grid(tok, 6, 6);
  for (int64_t i = 0; i < x->value.numel(); ++i) CHECK(back->value[i] == x->value[i]);
}

TEST_CASE("attention layer basics") {
  nn::ParamStore<double> st;
  nn::MultiheadAttention<double> attn;
  attn.build(st, "attn", 8, 8, 8, 2);
  st.init_all(42);
  Rng rng(17);
  auto q = make_leaf(random_tensor({1, 4, 8}, rng), false);
  auto kv = make_leaf(random_tensor({1, 6, 8}, rng), false);

  SUBCASE("attention rows sum to 1") {
    nn::AttnProbe<double> probe;
    attn.forward(q, kv, nullptr, nullptr, &probe);
    REQUIRE(probe.probs.size() == 1);
    const Tensor<double>& p = probe.probs[0];
    // [heads, Tq, Tk]
    for (int r = 0; r < p.dim(0) * p.dim(1); ++r) {
      double s = 0;
      for (int i = 0; i < p.dim(2); ++i) s += p[r * p.dim(2) + i];
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }

  SUBCASE("single key token: output equals value projection for every query") {
    auto kv1 = make_leaf(random_tensor({1, 1, 8}, rng), false);
    auto out = attn.forward(q, kv1, nullptr, nullptr);
    // With one key, softmax weight is 1, so pre-projection mixture is v for
    // every query; compare output rows pairwise.
    for (int t = 1; t < 4; ++t)
      for (int c = 0; c < 8; ++c)
        CHECK(out->value.at(0, t, c) == doctest::Approx(out->value.at(0, 0, c)).epsilon(1e-12));
  }

  SUBCASE("permutation of keys leaves output unchanged without pe") {
    auto out1 = attn.forward(q, kv, nullptr, nullptr);
    // Rotate the 6 kv tokens.
    Tensor<double> rot({1, 6, 8});
    for (int t = 0; t < 6; ++t)
      for (int c = 0; c < 8; ++c) rot.at(0, t, c) = kv->value.at(0, (t + 2) % 6, c);
    auto out2 = attn.forward(make_leaf(rot, false), kv, nullptr, nullptr);
    // Same key/value set (values come from the same permuted tensor).
    auto out3 = attn.forward(make_leaf(rot, false), make_leaf(rot, false), nullptr, nullptr);
    (void)out2;
    for (int64_t i = 0; i < out1->value.numel(); ++i)
      CHECK(out1->value[i] == doctest::Approx(out3->value[i]).epsilon(1e-5));
  }
}

TEST_CASE("param store init is order independent and deterministic") {
  nn::ParamStore<float> a, b;
  auto w1 = a.add("m.w1", {4, 4}, nn::InitSpec::normal(0.1));
  auto w2 = a.add("m.w2", {4}, nn::InitSpec::normal(0.1));
  auto v2 = b.add("m.w2", {4}, nn::InitSpec::normal(0.1));
  auto v1 = b.add("m.w1", {4, 4}, nn::InitSpec::normal(0.1));
  a.init_all(99);
  b.init_all(99);
  for (int64_t i = 0; i < 16; ++i) CHECK(w1->value[i] == v1->value[i]);
  for (int64_t i = 0; i < 4; ++i) CHECK(w2->value[i] == v2->value[i]);
  CHECK_THROWS_AS(a.add("m.w1", {1}, nn::InitSpec::zero()), ConfigError);
}

TEST_CASE("positional encodings are finite and shaped") {
  auto pe = posenc::sinusoid2d_tokens<float>(16, 4, 4);
  CHECK(pe.shape() == std::vector<int>{1, 16, 16});
  CHECK(pe.all_finite());
  auto p1 = posenc::sinusoid1d<float>(8, 3);
  CHECK(p1.shape() == std::vector<int>{8});
}
