#ifndef WAVESCORE_TENSOR_HPP
#define WAVESCORE_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wavescore/errors.hpp"

namespace wavescore {

/// Dense row-major tensor. Shapes follow the (batch, channel, height, width)
/// convention where four axes are present; lower-rank tensors drop leading
/// axes (images are C x H x W, per-channel vectors are plain 1-D).
template <typename T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(compute_numel(shape_)), T(0));
  }
  TensorT(std::vector<int> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != compute_numel(shape_))
      throw DimensionError("tensor data length does not match shape");
  }

  static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }
  static TensorT full(std::vector<int> shape, T v) {
    TensorT t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // 3-D (C,H,W) and 4-D (B,C,H,W) accessors; rank is the caller's contract.
  T& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  const T& at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  T& at(int b, int c, int y, int x) {
    return data_[((static_cast<size_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  const T& at(int b, int c, int y, int x) const {
    return data_[((static_cast<size_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  double sum_squares() const {
    double s = 0;
    for (const T& v : data_) s += static_cast<double>(v) * static_cast<double>(v);
    return s;
  }
  double max_abs() const {
    double m = 0;
    for (const T& v : data_) m = std::max(m, std::abs(static_cast<double>(v)));
    return m;
  }
  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  static int64_t compute_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
      if (d < 0) throw DimensionError("negative tensor dimension");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

using TensorF = TensorT<float>;
using TensorD = TensorT<double>;

inline TensorD widen(const TensorF& a) {
  TensorD out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = static_cast<double>(a[i]);
  return out;
}
inline TensorF narrow(const TensorD& a) {
  TensorF out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = static_cast<float>(a[i]);
  return out;
}

inline std::string shape_string(const std::vector<int>& s) {
  std::string r = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += ",";
    r += std::to_string(s[i]);
  }
  return r + ")";
}

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

template <typename T>
void require_finite(const TensorT<T>& a, const char* what) {
  if (!a.all_finite()) throw NumericError(std::string(what) + ": non-finite values");
}

}  // namespace wavescore

#endif  // WAVESCORE_TENSOR_HPP
