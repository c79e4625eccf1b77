#ifndef WAVESCORE_AUTODIFF_HPP
#define WAVESCORE_AUTODIFF_HPP

#include <functional>
#include <vector>

#include "wavescore/nn_ops.hpp"
#include "wavescore/tensor.hpp"

namespace wavescore {

/// Append-only reverse-mode tape over the bias-free op set. Node ids are
/// indices into the tape; an op may only consume ids already on the tape,
/// which makes cycles unconstructible (violations raise GraphError).
template <typename T>
class Tape {
 public:
  using Id = int;

  Id leaf(TensorT<T> value, bool requires_grad = false);

  Id conv2d(Id input, Id kernel);
  Id relu(Id x);
  /// Train mode normalizes by the batch second moment (differentiated
  /// through); eval mode uses the frozen running value. The batch moment is
  /// retrievable via bn_batch_ms for running-average updates.
  Id batchnorm(Id x, Id scale, const TensorT<T>& running_ms, NormMode mode, T eps);

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale_by(Id a, T s);
  Id concat_channels(Id a, Id b);

  /// Scalar-valued reductions / picks (shape {1} nodes).
  Id sum_squares(Id a);
  Id mean_squared_error(Id a, Id b);
  Id select(Id a, const std::vector<int>& coord);

  const TensorT<T>& value(Id id) const;
  /// Gradient of the last backward() root w.r.t. this node; zeros when the
  /// node required a gradient but is not reachable from the root.
  const TensorT<T>& grad(Id id) const;
  bool requires_grad(Id id) const;
  const std::vector<T>& bn_batch_ms(Id id) const;

  /// Reverse pass from a scalar root (numel == 1).
  void backward(Id root);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    TensorT<T> value;
    TensorT<T> grad;
    bool requires_grad = false;
    std::function<void(Tape&)> back;
    std::vector<T> bn_ms;
  };

  Id check(Id id) const;
  Id push(TensorT<T> value, bool requires_grad, std::function<void(Tape&)> back);
  void accumulate(Id id, const TensorT<T>& g);

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace wavescore

#endif  // WAVESCORE_AUTODIFF_HPP
