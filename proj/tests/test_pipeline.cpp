#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wavescore/gaussian.hpp"
#include "wavescore/pipeline.hpp"
#include "wavescore/rng.hpp"
#include "wavescore/training.hpp"
#include "wavescore/wavelet.hpp"

using namespace wavescore;

namespace {

TensorD randn(std::vector<int> shape, uint64_t seed) {
  TensorD t(std::move(shape));
  Rng rng(seed);
  rng.fill_normal(t);
  return t;
}

double sup_diff(const TensorD& a, const TensorD& b) {
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

MultiscaleDenoiser oracle_pipeline(const GaussianModel& m, double sigma) {
  MultiscaleDenoiser den;
  den.lowpass = oracle_lowpass_denoiser(m, sigma);
  for (int j = 1; j <= m.depth; ++j)
    den.scales.push_back(conditional_detail_denoiser(m, j, sigma));
  return den;
}

}  // namespace

TEST_CASE("psnr values and cap") {
  TensorD x({1, 10, 10});
  TensorD y({1, 10, 10});
  for (int64_t i = 0; i < 100; ++i) y[i] = 0.1;  // MSE = 0.01
  CHECK(psnr(x, y) == doctest::Approx(20.0));
  for (int64_t i = 0; i < 100; ++i) y[i] = 1.0;  // MSE = 1
  CHECK(psnr(x, y) == doctest::Approx(0.0));
  CHECK(psnr(x, x) == 200.0);
  CHECK_THROWS_AS(psnr(x, TensorD({1, 4, 4})), DimensionError);
}

TEST_CASE("mse decomposition identity") {
  TensorD x = randn({1, 16, 16}, 1);
  TensorD xhat = randn({1, 16, 16}, 2);
  MseDecomposition d = mse_decomposition_check(x, xhat, 3);
  CHECK(d.gap < 1e-10);
  CHECK(d.lhs > 0);

  MseDecomposition zero = mse_decomposition_check(x, x, 3);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);

  TensorD bump = x;
  bump[37] += 0.25;  // single basis vector: both sides equal eps^2
  MseDecomposition one = mse_decomposition_check(x, bump, 2);
  CHECK(one.lhs == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(one.rhs == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("oracle multiscale pipeline equals the global Wiener solution") {
  const int side = 32, depth = 2;
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kHaarDiagonal, side, 1.2, depth);
  const double sigma = 0.4;
  MultiscaleDenoiser den = oracle_pipeline(m, sigma);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    TensorD x = sample_exact(m, 100 + seed);
    TensorD y = corrupt(x, sigma, 200 + seed);
    TensorD via_pipeline = multiscale_denoise(y, den);
    TensorD global = wiener_denoise(y, m, sigma);
    CHECK(sup_diff(via_pipeline, global) < 1e-10);
  }
}

TEST_CASE("oracle pipeline with sigma 0 is the identity") {
  const int side = 16, depth = 2;
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kHaarDiagonal, side, 1.0, depth);
  MultiscaleDenoiser den = oracle_pipeline(m, 0.0);
  TensorD y = randn({1, side, side}, 9);
  CHECK(sup_diff(multiscale_denoise(y, den), y) < 1e-12);
}

TEST_CASE("multiscale denoiser validates its configuration") {
  MultiscaleDenoiser den;
  CHECK_THROWS_AS(multiscale_denoise(TensorD({1, 8, 8}), den), ConfigError);
  den.lowpass = [](const TensorD& y) { return y; };
  den.scales.push_back(nullptr);
  CHECK_THROWS_AS(multiscale_denoise(TensorD({1, 8, 8}), den), ConfigError);
}

TEST_CASE("psnr curve: shape, determinism, and monotone oracle quality") {
  DatasetSpec dspec;
  dspec.source = "gaussfield";
  dspec.image_side = 16;
  dspec.train_count = 1;
  dspec.test_count = 10;
  dspec.seed = 5;
  Dataset data = Dataset::load(dspec);

  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kFourierDiagonal, 16, 1.5);
  DenoiserFn wiener_blind = oracle_blind_denoiser(m);

  auto rows1 = psnr_curve(wiener_blind, data, {0.1}, 42);
  REQUIRE(rows1.size() == 1);
  CHECK(rows1[0].n_images == 10);
  std::string csv1 = psnr_curve_csv(rows1);
  std::string csv2 = psnr_curve_csv(psnr_curve(wiener_blind, data, {0.1}, 42));
  CHECK(csv1 == csv2);
  CHECK(csv1.rfind("sigma,psnr_in_mean,psnr_out_mean,psnr_out_std,n_images\n", 0) == 0);

  auto rows = psnr_curve(wiener_blind, data, {0.05, 0.1, 0.2, 0.4}, 43);
  for (size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].psnr_out_mean <= rows[i - 1].psnr_out_mean + 1e-9);

  DatasetSpec empty = dspec;
  empty.test_count = 0;
  empty.train_count = 1;
  Dataset no_test = Dataset::load(empty);
  CHECK_THROWS_AS(psnr_curve(wiener_blind, no_test, {0.1}, 1), ConfigError);
}

TEST_CASE("psnr curve reports the decomposition gap when asked") {
  DatasetSpec dspec;
  dspec.source = "toyfaces";
  dspec.image_side = 16;
  dspec.train_count = 1;
  dspec.test_count = 6;
  dspec.seed = 8;
  Dataset data = Dataset::load(dspec);
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kHaarDiagonal, 16, 1.0, 2);
  DenoiserFn f = oracle_blind_denoiser(m);
  double worst = -1;
  psnr_curve(f, data, {0.2, 0.5}, 7, /*check_depth=*/2, &worst);
  CHECK(worst >= 0);
  CHECK(worst < 1e-10);
}
