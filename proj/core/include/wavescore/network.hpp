#ifndef WAVESCORE_NETWORK_HPP
#define WAVESCORE_NETWORK_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wavescore/autodiff.hpp"
#include "wavescore/nn_ops.hpp"
#include "wavescore/tensor.hpp"

namespace wavescore {

/// Layer-by-layer description of a bias-free denoiser. Invariants: the first
/// and last layers are convolutions, every other convolution is followed by
/// relu then batchnorm, and all kernels are odd-sized.
struct NetworkSpec {
  std::string name;
  int in_channels = 1;
  int out_channels = 1;
  std::vector<LayerSpec> layers;

  void validate() const;
  std::string to_text() const;
  static NetworkSpec from_text(const std::string& text);
};

/// 1 + sum over conv layers of (kernel_size - 1); the side of the square
/// input window a single output element depends on.
int receptive_field(const NetworkSpec& spec);

/// Total trainable parameters (conv weights + batchnorm scales).
int64_t parameter_count(const NetworkSpec& spec);

template <typename T>
struct ModelT {
  NetworkSpec spec;
  /// Aligned with spec.layers: conv -> kernel OxCxkxk, batchnorm -> scale {C},
  /// relu -> empty tensor.
  std::vector<TensorT<T>> params;
  /// Aligned with spec.layers: batchnorm -> running second moment {C}.
  std::vector<TensorT<T>> running_ms;
  double noise_min = 0.0;
  double noise_max = 1.0;

  /// Inference pass over raw kernels (no tape). Train mode normalizes by the
  /// batch statistics but does not update the running values.
  TensorT<T> forward(const TensorT<T>& input, NormMode mode = NormMode::kEval) const;

  std::vector<TensorT<T>*> trainable_params();
  int64_t parameter_count() const;
};

using ModelF = ModelT<float>;
using ModelD = ModelT<double>;

/// Builds the network graph on a tape. Parameter leaves are created in layer
/// order with `params_require_grad`; their ids are appended to `param_ids`
/// aligned with spec.layers (-1 for layers without parameters). Ids of
/// batchnorm output nodes land in `bn_node_ids` (aligned, -1 elsewhere) so a
/// training loop can fetch batch moments for running updates.
template <typename T>
typename Tape<T>::Id forward_on_tape(Tape<T>& tape, const ModelT<T>& model,
                                     typename Tape<T>::Id input, NormMode mode,
                                     bool params_require_grad,
                                     std::vector<typename Tape<T>::Id>* param_ids = nullptr,
                                     std::vector<typename Tape<T>::Id>* bn_node_ids = nullptr);

struct LowpassConfig {
  int conv_layers = 20;  // reproduces the published 665,856 parameter count
  int width = 64;
  int in_channels = 1;
  int out_channels = 1;
};

/// All-3x3 bias-free CNN for the terminal low-pass band.
NetworkSpec make_lowpass_spec(const LowpassConfig& cfg = {});

struct ConditionalConfig {
  int conv_layers = 21;
  int width = 64;
};

/// Conditional denoiser: 4 input channels (3 noisy details + clean low-pass),
/// 3 output channels. 3x3 kernels are placed evenly across the stack
/// (including first and last layers), 1x1 elsewhere, so the receptive field
/// equals `rf`.
NetworkSpec make_conditional_spec(int rf, const ConditionalConfig& cfg = {});

/// Pixel-domain CNN (1 -> 1 channels) with the same even kernel placement,
/// used as the receptive-field-matched baseline.
NetworkSpec make_pixel_spec(int rf, const ConditionalConfig& cfg = {});

template <typename T>
ModelT<T> init_model(const NetworkSpec& spec, uint64_t seed);

ModelF build_lowpass_denoiser(const LowpassConfig& cfg = {}, uint64_t seed = 0);
ModelF build_conditional_denoiser(int rf, const ConditionalConfig& cfg = {},
                                  uint64_t seed = 0);

/// Exact gradient of output element (channel,row,col) w.r.t. every input
/// element, evaluated in eval mode: the adaptive filter used for that output.
/// `input` is C x H x W; the result has the same shape.
template <typename T>
TensorT<T> jacobian_row(const ModelT<T>& model, const TensorT<T>& input, int channel,
                        int row, int col);

/// Adapters for the samplers and pipelines (double-precision boundary around
/// the single-precision networks).
std::function<TensorD(const TensorD&)> denoiser_from_model(const ModelF& model);
std::function<TensorD(const TensorD&, const TensorD&)> conditional_denoiser_from_model(
    const ModelF& model);

extern template struct ModelT<float>;
extern template struct ModelT<double>;

}  // namespace wavescore

#endif  // WAVESCORE_NETWORK_HPP
