#ifndef WAVESCORE_NN_OPS_HPP
#define WAVESCORE_NN_OPS_HPP

#include <cstdint>
#include <vector>

#include "wavescore/tensor.hpp"

namespace wavescore {

enum class LayerKind { kConv, kRelu, kBatchNorm };

/// One layer of the bias-free family. Convolutions carry no additive bias;
/// batch normalization divides by the running/batch RMS and applies a
/// per-channel scale, with no mean subtraction and no shift.
struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  // conv
  int in_channels = 0;
  int out_channels = 0;
  int kernel_size = 0;  // odd; zero padding (kernel_size-1)/2 keeps spatial size
  // batchnorm
  int channels = 0;
  double epsilon = 1e-5;

  static LayerSpec conv(int in_ch, int out_ch, int k);
  static LayerSpec relu();
  static LayerSpec batchnorm(int ch, double eps = 1e-5);

  void validate() const;
};

inline constexpr double kBatchNormMomentum = 0.1;

enum class NormMode { kTrain, kEval };

/// Cross-correlation with zero padding (k-1)/2, no bias.
/// input B x C x H x W, kernel O x C x k x k -> B x O x H x W.
template <typename T>
TensorT<T> conv2d_biasfree(const TensorT<T>& input, const TensorT<T>& kernel);

/// d loss / d input given d loss / d output.
template <typename T>
TensorT<T> conv2d_input_grad(const TensorT<T>& grad_out, const TensorT<T>& kernel);

/// d loss / d kernel given d loss / d output and the forward input.
template <typename T>
TensorT<T> conv2d_kernel_grad(const TensorT<T>& grad_out, const TensorT<T>& input,
                              int kernel_size);

template <typename T>
TensorT<T> relu(const TensorT<T>& x);

/// Gradient uses the subgradient 0 at x = 0.
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& x);

template <typename T>
struct BatchNormForward {
  TensorT<T> y;
  std::vector<T> inv_std;   // per channel, 1/sqrt(ms + eps)
  std::vector<T> batch_ms;  // per channel, train mode only (for running update)
};

/// Per channel: y = scale * x / sqrt(ms + eps), ms the second moment over
/// batch x spatial (train) or the stored running value (eval). No mean
/// subtraction, no additive shift, so positive homogeneity is preserved in
/// eval mode.
template <typename T>
BatchNormForward<T> batchnorm_biasfree(const TensorT<T>& x, const TensorT<T>& scale,
                                       const TensorT<T>& running_ms, NormMode mode,
                                       T eps);

template <typename T>
struct BatchNormGrads {
  TensorT<T> grad_x;
  TensorT<T> grad_scale;
};

template <typename T>
BatchNormGrads<T> batchnorm_biasfree_backward(const TensorT<T>& grad_out,
                                              const TensorT<T>& x,
                                              const TensorT<T>& scale,
                                              const std::vector<T>& inv_std,
                                              NormMode mode);

template <typename T>
struct AdamState {
  std::vector<TensorT<T>> m;
  std::vector<TensorT<T>> v;
  int64_t steps = 0;

  void init_like(const std::vector<TensorT<T>>& params);
  bool empty() const { return m.empty() && v.empty(); }
};

/// Bias-corrected Adam update, in place on params.
template <typename T>
void adam_step(std::vector<TensorT<T>>& params, const std::vector<TensorT<T>>& grads,
               AdamState<T>& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace wavescore

#endif  // WAVESCORE_NN_OPS_HPP
