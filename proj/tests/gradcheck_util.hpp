#pragma once

// Central finite-difference gradient checks, 64-bit. The closure rebuilds the
// whole forward graph from the current leaf values, so perturbing a leaf and
// re-running gives an independent numeric derivative.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "segref/autograd.hpp"

namespace segref::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
};

/// Relative error with a floor so near-zero pairs compare absolutely.
inline double rel_err(double a, double b, double floor = 1e-6) {
  double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

/// Checks d(loss)/d(leaf) against central differences on up to `max_coords`
/// evenly spaced coordinates. `make_loss` must return a scalar Var built from
/// the current value of `leaf`.
inline GradCheckResult gradcheck(const Var<double>& leaf,
                                 const std::function<Var<double>()>& make_loss,
                                 const std::vector<Var<double>>& all_leaves, double h = 1e-5,
                                 int max_coords = 64) {
  for (const auto& l : all_leaves) zero_grad(l);
  Var<double> loss = make_loss();
  backward(loss);
  Tensor<double> analytic = leaf->grad.defined() ? leaf->grad.clone()
                                                 : Tensor<double>::zeros(leaf->value.shape());

  GradCheckResult res;
  const int64_t n = leaf->value.numel();
  const int64_t stride = std::max<int64_t>(1, n / max_coords);
  for (int64_t i = 0; i < n; i += stride) {
    double orig = leaf->value[i];
    double step = h * std::max(1.0, std::abs(orig));
    leaf->value[i] = orig + step;
    double lp = make_loss()->value[0];
    leaf->value[i] = orig - step;
    double lm = make_loss()->value[0];
    leaf->value[i] = orig;
    double fd = (lp - lm) / (2.0 * step);
    res.max_rel_err = std::max(res.max_rel_err, rel_err(fd, analytic[i]));
    ++res.checked;
  }
  return res;
}

}  // namespace segref::testing
