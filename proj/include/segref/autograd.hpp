#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "segref/errors.hpp"
#include "segref/tensor.hpp"

namespace segref {

// Define-by-run reverse-mode autodiff. Each op produces a Node capturing its
// parents and a closure that accumulates gradients into them. Graphs are
// pruned at construction: a node only keeps parents/backward when gradients
// are enabled and some parent requires them.

template <typename S>
struct Node {
  Tensor<S> value;
  Tensor<S> grad;  // lazily allocated
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<S>>> parents;
  std::function<void(Node<S>&)> backward_fn;

  Tensor<S>& grad_ref() {
    if (!grad.defined()) grad = Tensor<S>::zeros(value.shape());
    return grad;
  }
};

template <typename S>
using Var = std::shared_ptr<Node<S>>;

namespace autograd_detail {
inline thread_local int grad_mode = 1;
}

inline bool grad_enabled() { return autograd_detail::grad_mode != 0; }

/// RAII scope that disables graph construction (inference mode).
struct NoGradGuard {
  NoGradGuard() : prev_(autograd_detail::grad_mode) { autograd_detail::grad_mode = 0; }
  ~NoGradGuard() { autograd_detail::grad_mode = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  int prev_;
};

template <typename S>
Var<S> make_leaf(Tensor<S> value, bool requires_grad) {
  auto n = std::make_shared<Node<S>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

template <typename S>
Var<S> make_const(Tensor<S> value) {
  return make_leaf(std::move(value), false);
}

template <typename S>
Var<S> make_op(Tensor<S> value, std::vector<Var<S>> parents,
               std::function<void(Node<S>&)> backward_fn) {
  auto n = std::make_shared<Node<S>>();
  n->value = std::move(value);
  if (grad_enabled()) {
    bool rg = false;
    for (const auto& p : parents)
      if (p && p->requires_grad) rg = true;
    if (rg) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backward_fn = std::move(backward_fn);
    }
  }
  return n;
}

/// Reverse-mode sweep from `root`. Seeds with ones unless `seed` is given.
template <typename S>
void backward(const Var<S>& root, const Tensor<S>* seed = nullptr) {
  if (!root || !root->requires_grad)
    throw ValueError("backward: root does not require gradients");
  // Iterative DFS postorder; reversed it is a topological order with every
  // consumer ahead of its parents.
  struct Frame {
    Node<S>* n;
    size_t i;
  };
  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> visited;
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.i < f.n->parents.size()) {
      Node<S>* p = f.n->parents[f.i++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  if (seed) {
    if (seed->shape() != root->value.shape())
      throw ShapeError("backward: seed shape mismatch");
    root->grad = seed->clone();
  } else {
    root->grad = Tensor<S>::full(root->value.shape(), S(1));
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    if (!n->backward_fn) continue;
    if (!n->grad.defined()) continue;  // unreachable from root's differentiable cone
    n->backward_fn(*n);
  }
}

template <typename S>
void zero_grad(const Var<S>& v) {
  v->grad = Tensor<S>{};
}

}  // namespace segref
