#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "segref/errors.hpp"

namespace segref {

/// Dense row-major tensor with shared storage. Copies are shallow; use
/// clone() for a deep copy. Storage is always contiguous.
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    storage_ = std::make_shared<std::vector<S>>(numel_of(shape_), S(0));
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, S v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<S> values) {
    if (static_cast<int64_t>(values.size()) != numel_of(shape))
      throw ShapeError("Tensor::from: value count does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.storage_ = std::make_shared<std::vector<S>>(std::move(values));
    return t;
  }

  bool defined() const { return storage_ != nullptr; }
  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return defined() ? static_cast<int64_t>(storage_->size()) : 0; }

  S* data() { return storage_->data(); }
  const S* data() const { return storage_->data(); }

  S& operator[](int64_t i) { return (*storage_)[static_cast<size_t>(i)]; }
  const S& operator[](int64_t i) const { return (*storage_)[static_cast<size_t>(i)]; }

  // Convenience accessors for the common ranks.
  S& at(int a, int b) { return (*storage_)[idx2(a, b)]; }
  const S& at(int a, int b) const { return (*storage_)[idx2(a, b)]; }
  S& at(int a, int b, int c) { return (*storage_)[idx3(a, b, c)]; }
  const S& at(int a, int b, int c) const { return (*storage_)[idx3(a, b, c)]; }
  S& at(int a, int b, int c, int d) { return (*storage_)[idx4(a, b, c, d)]; }
  const S& at(int a, int b, int c, int d) const { return (*storage_)[idx4(a, b, c, d)]; }

  void fill(S v) { std::fill(storage_->begin(), storage_->end(), v); }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    if (storage_) t.storage_ = std::make_shared<std::vector<S>>(*storage_);
    return t;
  }

  /// Aliasing reshape; element count must match.
  Tensor reshaped(std::vector<int> shape) const {
    if (numel_of(shape) != numel()) throw ShapeError("reshape: element count mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.storage_ = storage_;
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (const S& v : *storage_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << "]";
    return os.str();
  }

  static int64_t numel_of(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
      if (d < 0) throw ShapeError("negative dimension");
      n *= d;
    }
    return n;
  }

 private:
  int64_t idx2(int a, int b) const { return static_cast<int64_t>(a) * shape_[1] + b; }
  int64_t idx3(int a, int b, int c) const {
    return (static_cast<int64_t>(a) * shape_[1] + b) * shape_[2] + c;
  }
  int64_t idx4(int a, int b, int c, int d) const {
    return ((static_cast<int64_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
  }

  std::vector<int> shape_;
  std::shared_ptr<std::vector<S>> storage_;
};

template <typename S>
void check_shape(const Tensor<S>& t, const std::vector<int>& want, const char* where) {
  if (t.shape() != want) {
    std::ostringstream os;
    os << where << ": expected shape [";
    for (size_t i = 0; i < want.size(); ++i) os << (i ? "," : "") << want[i];
    os << "], got " << t.shape_str();
    throw ShapeError(os.str());
  }
}

}  // namespace segref
