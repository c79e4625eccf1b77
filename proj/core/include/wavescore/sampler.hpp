#ifndef WAVESCORE_SAMPLER_HPP
#define WAVESCORE_SAMPLER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wavescore/tensor.hpp"

namespace wavescore {

using DenoiserFn = std::function<TensorD(const TensorD&)>;
using ConditionalDenoiserFn = std::function<TensorD(const TensorD&, const TensorD&)>;

struct SamplerConfig {
  double h = 0.01;        // step size in (0, 1]
  double beta = 0.1;      // stochasticity in (0, 1]; beta = 1 injects no noise
  double sigma0 = 1.0;    // initial noise level
  double sigma_inf = 0.01;  // final noise level (stopping threshold)
  int max_iters = 10000;
  uint64_t seed = 0;

  void validate() const;
};

struct TraceRow {
  int t = 0;
  double sigma = 0.0;
  double gamma = 0.0;
  double norm_d = 0.0;
};

struct SampleTrace {
  std::vector<TraceRow> rows;
  bool converged = false;

  std::string to_csv() const;  // header t,sigma_t,gamma_t,norm_d_t
};

/// Raised when the chain hits max_iters before reaching sigma_inf; carries
/// the partial trace for inspection.
struct NonConvergenceError : Error {
  SampleTrace trace;
  explicit NonConvergenceError(const std::string& msg, SampleTrace t)
      : Error(msg), trace(std::move(t)) {}
};

/// Stochastic ascent of the log density via the denoiser residual:
///   x_0 ~ N(0, sigma0^2 Id)
///   d_t = f(x_{t-1}) - x_{t-1}
///   sigma_t^2 = ||d_t||^2 / N
///   gamma_t^2 = ((1 - beta h)^2 - (1 - h)^2) sigma_t^2
///   x_t = x_{t-1} + h d_t + gamma_t z_t,   stop once sigma_t < sigma_inf.
std::pair<TensorD, SampleTrace> sample_score_ascent(const DenoiserFn& f,
                                                    const std::vector<int>& shape,
                                                    const SamplerConfig& cfg);

/// Conditional sampling of a 3-channel detail band: runs the ascent on the
/// detail shape with the conditioning low-pass band held fixed.
std::pair<TensorD, SampleTrace> sample_conditional(const ConditionalDenoiserFn& f,
                                                   const TensorD& lowpass,
                                                   const SamplerConfig& cfg);

/// Coarse-to-fine synthesis: for j = J..1 draw details conditioned on the
/// current low-pass band and invert one wavelet step. models[j-1] is the
/// scale-j conditional denoiser. Returns the full-resolution sample.
TensorD synthesize_cascade(const std::vector<ConditionalDenoiserFn>& models,
                           const TensorD& terminal_lowpass, const SamplerConfig& cfg);

/// Pixel-domain super-resolution: ascent over full-resolution images with a
/// projection after every iteration that pins the depth-J low-pass band to
/// the measurement. The returned image satisfies it exactly.
std::pair<TensorD, SampleTrace> superres_pixel_constrained(const DenoiserFn& f,
                                                           const TensorD& lowpass,
                                                           int depth,
                                                           const SamplerConfig& cfg);

}  // namespace wavescore

#endif  // WAVESCORE_SAMPLER_HPP
