#ifndef WAVESCORE_GAUSSIAN_HPP
#define WAVESCORE_GAUSSIAN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wavescore/tensor.hpp"
#include "wavescore/wavelet.hpp"

namespace wavescore {

enum class OracleBasis { kPixelDiagonal, kFourierDiagonal, kHaarDiagonal };

OracleBasis oracle_basis_from_string(const std::string& s);
std::string to_string(OracleBasis b);

/// Gaussian image prior with a covariance that is diagonal in an orthonormal
/// basis: pixel, frequency (orthonormal DCT-II), or Haar pyramid. Every
/// estimator, score, and sampler for this family is closed-form, which makes
/// it the ground truth for validating the learned pipeline.
///
/// `variances` holds one value per coefficient. Pixel and frequency bases use
/// row-major order; the Haar basis uses the flattened pyramid order (lowpass
/// block first, then detail bands coarse to fine, each [h, v, d]).
struct GaussianModel {
  OracleBasis basis = OracleBasis::kPixelDiagonal;
  int side = 0;
  int depth = 0;  // haar basis only
  std::vector<double> variances;

  static GaussianModel white(OracleBasis basis, int side, double c, int depth = 0);
  /// Frequency basis: c(k) = (1 + |k|)^(-alpha). Haar basis: coefficients at
  /// octave o (lowpass 0, coarsest detail 1, finest detail = depth) get
  /// 2^(-alpha * o).
  static GaussianModel powerlaw(OracleBasis basis, int side, double alpha,
                                int depth = 0);
  static GaussianModel from_spectrum(OracleBasis basis, int side,
                                     std::vector<double> variances, int depth = 0);
  /// Spectrum strings: "white:<c>", "powerlaw:<alpha>", "csv:<path>".
  static GaussianModel parse(const std::string& basis, const std::string& spectrum,
                             int side, int depth = 0);

  void validate() const;
  double mean_variance() const;
  /// Variances of the three detail channels at a scale (haar basis, in
  /// flattened band order).
  std::vector<double> band_variances(int scale) const;
  /// Model of the depth-1 low-pass band (haar basis): drop the finest scale.
  GaussianModel restrict_to_lowpass() const;
  /// Pixel-diagonal model over the terminal low-pass band coefficients.
  GaussianModel lowpass_band_model() const;
};

/// Analysis/synthesis between image domain and the model's coefficient basis.
std::vector<double> to_basis(const TensorD& image, const GaussianModel& m);
TensorD from_basis(const std::vector<double>& coeffs, const GaussianModel& m);

/// Exact MMSE estimate under the model: in-basis shrinkage c/(c + sigma^2).
TensorD wiener_denoise(const TensorD& y, const GaussianModel& m, double sigma);

/// Exact gradient of log p_sigma(y), the density of x + noise(sigma):
/// in-basis -y_i / (c_i + sigma^2).
TensorD analytic_score(const TensorD& y, const GaussianModel& m, double sigma);

/// Exact prior draw: independent N(0, c_i) coefficients.
TensorD sample_exact(const GaussianModel& m, uint64_t seed);

/// log p(x) up to the normalization constant: -(1/2) sum coeff_i^2 / c_i.
/// Requires a strictly positive spectrum.
double log_density_quadratic_form(const TensorD& x, const GaussianModel& m);

/// Moment-matching noise estimate used by the blind oracle denoisers:
/// sigma^2 = max(0, ||y||^2 / N - mean(c)).
double blind_sigma_estimate(const TensorD& y, double mean_variance);

/// Exact conditional MMSE of the detail channels at one scale given sigma.
/// For this diagonal family the conditional law is independent of the
/// conditioning low-pass band.
TensorD conditional_wiener_details(const TensorD& noisy_details, const GaussianModel& m,
                                   int scale, double sigma);

/// Denoiser callables for the samplers and pipelines. The "blind" variants
/// estimate sigma from the observation by moment matching; the explicit
/// variants receive it (oracles are not blind by themselves).
std::function<TensorD(const TensorD&)> oracle_blind_denoiser(const GaussianModel& m);
std::function<TensorD(const TensorD&)> oracle_lowpass_denoiser(const GaussianModel& m,
                                                               double sigma);
std::function<TensorD(const TensorD&, const TensorD&)> conditional_detail_denoiser(
    const GaussianModel& m, int scale);
std::function<TensorD(const TensorD&, const TensorD&)> conditional_detail_denoiser(
    const GaussianModel& m, int scale, double sigma);

}  // namespace wavescore

#endif  // WAVESCORE_GAUSSIAN_HPP
