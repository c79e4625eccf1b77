#include "wavescore/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "wavescore/parallel.hpp"
#include "wavescore/rng.hpp"
#include "wavescore/training.hpp"
#include "wavescore/wavelet.hpp"

namespace wavescore {

TensorD multiscale_denoise(const TensorD& y, const MultiscaleDenoiser& den) {
  const int depth = den.depth();
  if (depth < 1) throw ConfigError("multiscale_denoise: need at least one scale");
  if (!den.lowpass) throw ConfigError("multiscale_denoise: missing low-pass denoiser");
  for (int j = 1; j <= depth; ++j)
    if (!den.scales[static_cast<size_t>(j - 1)])
      throw ConfigError("multiscale_denoise: missing conditional denoiser for scale " +
                        std::to_string(j));

  WaveletPyramid p = build_pyramid(y, depth);
  TensorD xhat = den.lowpass(p.lowpass);
  require_same_shape(xhat, p.lowpass, "multiscale_denoise low-pass output");
  for (int j = depth; j >= 1; --j) {
    TensorD details = den.scales[static_cast<size_t>(j - 1)](p.detail(j), xhat);
    require_same_shape(details, p.detail(j), "multiscale_denoise detail output");
    xhat = haar_synthesis_step(details, xhat);
  }
  return xhat;
}

double psnr(const TensorD& x, const TensorD& xhat, double peak) {
  require_same_shape(x, xhat, "psnr");
  if (!(peak > 0)) throw ConfigError("psnr: peak must be > 0");
  double mse = 0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    double d = x[i] - xhat[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.numel());
  if (mse == 0.0) return 200.0;
  return std::min(200.0, 10.0 * std::log10(peak * peak / mse));
}

MseDecomposition mse_decomposition_check(const TensorD& x, const TensorD& xhat,
                                         int depth) {
  require_same_shape(x, xhat, "mse_decomposition_check");
  MseDecomposition r;
  for (int64_t i = 0; i < x.numel(); ++i) {
    double d = x[i] - xhat[i];
    r.lhs += d * d;
  }
  WaveletPyramid px = build_pyramid(x, depth);
  WaveletPyramid ph = build_pyramid(xhat, depth);
  for (int j = 1; j <= depth; ++j) {
    const TensorD& a = px.detail(j);
    const TensorD& b = ph.detail(j);
    for (int64_t i = 0; i < a.numel(); ++i) {
      double d = a[i] - b[i];
      r.rhs += d * d;
    }
  }
  for (int64_t i = 0; i < px.lowpass.numel(); ++i) {
    double d = px.lowpass[i] - ph.lowpass[i];
    r.rhs += d * d;
  }
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

std::vector<PsnrCurveRow> psnr_curve(const DenoiserFn& denoiser, const Dataset& data,
                                     const std::vector<double>& noise_grid,
                                     uint64_t seed, int check_depth, double* worst_gap) {
  if (data.test_size() < 1) throw ConfigError("psnr_curve: empty test split");
  if (noise_grid.empty()) throw ConfigError("psnr_curve: empty noise grid");
  for (double s : noise_grid)
    if (s < 0) throw ConfigError("psnr_curve: noise levels must be >= 0");

  std::vector<PsnrCurveRow> rows;
  double gap_max = 0.0;
  for (size_t gi = 0; gi < noise_grid.size(); ++gi) {
    const double sigma = noise_grid[gi];
    const int n = data.test_size();
    std::vector<double> in_db(static_cast<size_t>(n)), out_db(static_cast<size_t>(n)),
        gaps(static_cast<size_t>(n), 0.0);
    parallel_for(n, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        const TensorD& clean = data.test_image(static_cast<int>(i));
        // Per-(sigma, image) seed: identical results for any worker count.
        uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (gi + 1)) ^
                     (0xbf58476d1ce4e5b9ull * (static_cast<uint64_t>(i) + 1));
        TensorD noisy = corrupt(clean, sigma, s);
        TensorD est = denoiser(noisy);
        in_db[static_cast<size_t>(i)] = psnr(clean, noisy);
        out_db[static_cast<size_t>(i)] = psnr(clean, est);
        if (check_depth > 0)
          gaps[static_cast<size_t>(i)] =
              mse_decomposition_check(clean, est, check_depth).gap;
      }
    });
    PsnrCurveRow row;
    row.sigma = sigma;
    row.n_images = n;
    double sum_in = 0, sum_out = 0, sum_out2 = 0;
    for (int i = 0; i < n; ++i) {
      sum_in += in_db[static_cast<size_t>(i)];
      sum_out += out_db[static_cast<size_t>(i)];
      sum_out2 += out_db[static_cast<size_t>(i)] * out_db[static_cast<size_t>(i)];
      gap_max = std::max(gap_max, gaps[static_cast<size_t>(i)]);
    }
    row.psnr_in_mean = sum_in / n;
    row.psnr_out_mean = sum_out / n;
    double var = sum_out2 / n - row.psnr_out_mean * row.psnr_out_mean;
    row.psnr_out_std = var > 0 ? std::sqrt(var) : 0.0;
    rows.push_back(row);
  }
  if (worst_gap) *worst_gap = gap_max;
  return rows;
}

std::string psnr_curve_csv(const std::vector<PsnrCurveRow>& rows) {
  std::ostringstream os;
  os << "sigma,psnr_in_mean,psnr_out_mean,psnr_out_std,n_images\n";
  char line[160];
  for (const PsnrCurveRow& r : rows) {
    std::snprintf(line, sizeof(line), "%.6g,%.6f,%.6f,%.6f,%d\n", r.sigma, r.psnr_in_mean,
                  r.psnr_out_mean, r.psnr_out_std, r.n_images);
    os << line;
  }
  return os.str();
}

}  // namespace wavescore
