#ifndef WAVESCORE_PIPELINE_HPP
#define WAVESCORE_PIPELINE_HPP

#include <string>
#include <vector>

#include "wavescore/dataset.hpp"
#include "wavescore/sampler.hpp"
#include "wavescore/tensor.hpp"

namespace wavescore {

/// The multi-scale denoiser: one global-receptive-field denoiser for the
/// terminal low-pass band plus one conditional denoiser per scale
/// (scales[j-1] handles scale j).
struct MultiscaleDenoiser {
  DenoiserFn lowpass;
  std::vector<ConditionalDenoiserFn> scales;

  int depth() const { return static_cast<int>(scales.size()); }
};

/// Decompose y to depth J, denoise the low-pass band, then walk back up:
/// each scale's details are denoised conditioned on the *estimated* coarse
/// band, and one synthesis step recovers the next finer estimate.
TensorD multiscale_denoise(const TensorD& y, const MultiscaleDenoiser& den);

/// 10 log10(peak^2 / MSE), capped at 200 dB (the documented value for MSE 0).
double psnr(const TensorD& x, const TensorD& xhat, double peak = 1.0);

struct MseDecomposition {
  double lhs = 0.0;  // ||x - xhat||^2
  double rhs = 0.0;  // sum of band MSEs through depth-J pyramids
  double gap = 0.0;
};

/// Orthonormality check: the global squared error equals the sum of the
/// per-band squared errors of the two pyramids.
MseDecomposition mse_decomposition_check(const TensorD& x, const TensorD& xhat,
                                         int depth);

struct PsnrCurveRow {
  double sigma = 0.0;
  double psnr_in_mean = 0.0;
  double psnr_out_mean = 0.0;
  double psnr_out_std = 0.0;
  int n_images = 0;
};

/// Corrupt every held-out image at each sigma of the grid, denoise, and
/// aggregate. The denoiser maps a noisy image to an estimate. Rows come back
/// in grid order; evaluation parallelizes across images with per-image seeds,
/// so fixed seeds give identical output for any worker count. When a depth is
/// given (> 0), the MSE decomposition identity is verified on every run and
/// its worst gap reported.
std::vector<PsnrCurveRow> psnr_curve(const DenoiserFn& denoiser, const Dataset& data,
                                     const std::vector<double>& noise_grid,
                                     uint64_t seed, int check_depth = 0,
                                     double* worst_gap = nullptr);

std::string psnr_curve_csv(const std::vector<PsnrCurveRow>& rows);

}  // namespace wavescore

#endif  // WAVESCORE_PIPELINE_HPP
