#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "segref/ops.hpp"
#include "segref/rng.hpp"

namespace segref::nn {

struct InitSpec {
  enum class Kind { Zero, One, Normal } kind = Kind::Zero;
  double std = 0.0;
  static InitSpec zero() { return {Kind::Zero, 0.0}; }
  static InitSpec one() { return {Kind::One, 0.0}; }
  static InitSpec normal(double std) { return {Kind::Normal, std}; }
};

/// Registry of named parameters and buffers. Initialization derives one RNG
/// stream per path, so values do not depend on registration order. std::map
/// keeps paths in lexicographic order for the checkpoint manifest.
template <typename S>
class ParamStore {
 public:
  struct Entry {
    Var<S> var;
    InitSpec init;
    bool trainable;
  };

  Var<S> add(const std::string& path, std::vector<int> shape, InitSpec init,
             bool trainable = true) {
    if (entries_.count(path)) throw ConfigError("duplicate parameter path: " + path);
    Var<S> v = make_leaf(Tensor<S>(std::move(shape)), trainable);
    entries_.emplace(path, Entry{v, init, trainable});
    return v;
  }

  void init_all(uint64_t seed) {
    for (auto& [path, e] : entries_) {
      Rng rng(Rng::mix(seed, hash_name(path)));
      Tensor<S>& t = e.var->value;
      switch (e.init.kind) {
        case InitSpec::Kind::Zero:
          t.fill(S(0));
          break;
        case InitSpec::Kind::One:
          t.fill(S(1));
          break;
        case InitSpec::Kind::Normal:
          for (int64_t i = 0; i < t.numel(); ++i)
            t[i] = static_cast<S>(rng.normal() * e.init.std);
          break;
      }
    }
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  Var<S> at(const std::string& path) const {
    auto it = entries_.find(path);
    if (it == entries_.end()) throw ConfigError("unknown parameter path: " + path);
    return it->second.var;
  }

  bool has(const std::string& path) const { return entries_.count(path) != 0; }

  /// Trainable vars whose path starts with any of the prefixes.
  std::vector<Var<S>> trainable_with_prefix(const std::vector<std::string>& prefixes) const {
    std::vector<Var<S>> out;
    for (const auto& [path, e] : entries_) {
      if (!e.trainable) continue;
      for (const auto& pre : prefixes)
        if (path.rfind(pre, 0) == 0) {
          out.push_back(e.var);
          break;
        }
    }
    return out;
  }

  void set_requires_grad_prefix(const std::vector<std::string>& prefixes, bool on) const {
    for (const auto& [path, e] : entries_) {
      if (!e.trainable) continue;
      for (const auto& pre : prefixes)
        if (path.rfind(pre, 0) == 0) {
          e.var->requires_grad = on;
          break;
        }
    }
  }

  std::map<std::string, Tensor<S>> snapshot_with_prefix(
      const std::vector<std::string>& prefixes) const {
    std::map<std::string, Tensor<S>> out;
    for (const auto& [path, e] : entries_)
      for (const auto& pre : prefixes)
        if (path.rfind(pre, 0) == 0) {
          out.emplace(path, e.var->value.clone());
          break;
        }
    return out;
  }

 private:
  std::map<std::string, Entry> entries_;
};

// ---- layers ----------------------------------------------------------------

template <typename S>
struct Conv2d {
  Var<S> w, b;
  int sy = 1, sx = 1, py = 0, px = 0;

  void build(ParamStore<S>& st, const std::string& path, int cin, int cout, int kh, int kw,
             int stride_y, int stride_x, int pad_y, int pad_x, bool zero_init = false) {
    sy = stride_y;
    sx = stride_x;
    py = pad_y;
    px = pad_x;
    double std = 1.0 / std::sqrt(static_cast<double>(cin) * kh * kw);
    w = st.add(path + ".w", {cout, cin, kh, kw},
               zero_init ? InitSpec::zero() : InitSpec::normal(std));
    b = st.add(path + ".b", {cout}, InitSpec::zero());
  }

  Var<S> forward(const Var<S>& x) const { return ops::conv2d(x, w, b, sy, sx, py, px); }
};

template <typename S>
struct ConvTranspose2d {
  Var<S> w, b;
  int stride = 2;

  void build(ParamStore<S>& st, const std::string& path, int cin, int cout, int k, int s) {
    stride = s;
    double std = 1.0 / std::sqrt(static_cast<double>(cin) * k * k);
    w = st.add(path + ".w", {cin, cout, k, k}, InitSpec::normal(std));
    b = st.add(path + ".b", {cout}, InitSpec::zero());
  }

  Var<S> forward(const Var<S>& x) const { return ops::conv_transpose2d(x, w, b, stride); }
};

template <typename S>
struct Linear {
  Var<S> w, b;

  void build(ParamStore<S>& st, const std::string& path, int cin, int cout,
             bool zero_init = false, bool bias = true) {
    double std = 1.0 / std::sqrt(static_cast<double>(cin));
    w = st.add(path + ".w", {cin, cout}, zero_init ? InitSpec::zero() : InitSpec::normal(std));
    b = bias ? st.add(path + ".b", {cout}, InitSpec::zero()) : nullptr;
  }

  Var<S> forward(const Var<S>& x) const { return ops::linear(x, w, b); }
};

/// Layer norm over the trailing (channel) axis of token tensors.
template <typename S>
struct LayerNorm {
  Var<S> g, b;
  S eps = S(1e-5);

  void build(ParamStore<S>& st, const std::string& path, int c) {
    g = st.add(path + ".g", {c}, InitSpec::one());
    b = st.add(path + ".b", {c}, InitSpec::zero());
  }

  Var<S> forward(const Var<S>& x) const { return ops::layernorm_lastdim(x, g, b, eps); }
};

/// Layer norm over the channel axis of [B,C,H,W] maps.
template <typename S>
struct LayerNorm2d {
  Var<S> g, b;
  S eps = S(1e-5);

  void build(ParamStore<S>& st, const std::string& path, int c) {
    g = st.add(path + ".g", {c}, InitSpec::one());
    b = st.add(path + ".b", {c}, InitSpec::zero());
  }

  Var<S> forward(const Var<S>& x) const { return ops::layernorm_channels(x, g, b, eps); }
};

template <typename S>
struct Mlp {
  Linear<S> fc1, fc2;

  void build(ParamStore<S>& st, const std::string& path, int cin, int hidden, int cout) {
    fc1.build(st, path + ".fc1", cin, hidden);
    fc2.build(st, path + ".fc2", hidden, cout);
  }

  Var<S> forward(const Var<S>& x) const { return fc2.forward(ops::gelu(fc1.forward(x))); }
};

/// Three-layer MLP used for the decoder's hypernetwork and score heads.
template <typename S>
struct Mlp3 {
  Linear<S> fc1, fc2, fc3;

  void build(ParamStore<S>& st, const std::string& path, int cin, int hidden, int cout) {
    fc1.build(st, path + ".fc1", cin, hidden);
    fc2.build(st, path + ".fc2", hidden, hidden);
    fc3.build(st, path + ".fc3", hidden, cout);
  }

  Var<S> forward(const Var<S>& x) const {
    return fc3.forward(ops::gelu(fc2.forward(ops::gelu(fc1.forward(x)))));
  }
};

/// Copies of the attention probabilities for tests (row-sum checks etc).
template <typename S>
struct AttnProbe {
  std::vector<Tensor<S>> probs;
};

/// Multi-head attention. Query/key/value inputs may have different channel
/// widths; positional encodings are added to the query/key inputs before
/// projection. Softmax rows are over the key axis.
template <typename S>
struct MultiheadAttention {
  Linear<S> wq, wk, wv, wo;
  int heads = 1;
  int model_dim = 0;

  void build(ParamStore<S>& st, const std::string& path, int q_dim, int kv_dim, int mdim, int h,
             bool zero_out_proj = false) {
    heads = h;
    model_dim = mdim;
    if (mdim % h != 0) throw ConfigError("attention: heads must divide model dim");
    wq.build(st, path + ".wq", q_dim, mdim);
    wk.build(st, path + ".wk", kv_dim, mdim);
    wv.build(st, path + ".wv", kv_dim, mdim);
    wo.build(st, path + ".wo", mdim, mdim, zero_out_proj);
  }

  Var<S> forward(const Var<S>& q_tokens, const Var<S>& kv_tokens, const Var<S>& q_pe,
                 const Var<S>& k_pe, AttnProbe<S>* probe = nullptr) const {
    Var<S> qin = q_pe ? ops::add_rows_const(q_tokens, q_pe) : q_tokens;
    Var<S> kin = k_pe ? ops::add_rows_const(kv_tokens, k_pe) : kv_tokens;
    Var<S> q = ops::split_heads(wq.forward(qin), heads);
    Var<S> k = ops::split_heads(wk.forward(kin), heads);
    Var<S> v = ops::split_heads(wv.forward(kv_tokens), heads);
    const S inv_sqrt_d = S(1) / std::sqrt(static_cast<S>(model_dim / heads));
    Var<S> attn = ops::softmax_lastdim(ops::scale(ops::bmm_nt(q, k), inv_sqrt_d));
    if (probe) probe->probs.push_back(attn->value.clone());
    Var<S> out = ops::merge_heads(ops::bmm_nn(attn, v), heads);
    return wo.forward(out);
  }
};

}  // namespace segref::nn
