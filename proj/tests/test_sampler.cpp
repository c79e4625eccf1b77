#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wavescore/gaussian.hpp"
#include "wavescore/rng.hpp"
#include "wavescore/sampler.hpp"
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

}  // namespace

TEST_CASE("beta = 1 injects no noise and contracts monotonically") {
  GaussianModel m = GaussianModel::white(OracleBasis::kPixelDiagonal, 8, 0.25);
  SamplerConfig cfg;
  cfg.beta = 1.0;
  cfg.seed = 5;
  auto [x, trace] = sample_score_ascent(oracle_blind_denoiser(m), {1, 8, 8}, cfg);
  CHECK(trace.converged);
  for (const auto& r : trace.rows) CHECK(r.gamma == 0.0);
  for (size_t i = 1; i < trace.rows.size(); ++i)
    CHECK(trace.rows[i].sigma <= trace.rows[i - 1].sigma + 1e-15);
}

TEST_CASE("gamma/sigma ratio matches the step-size algebra") {
  GaussianModel m = GaussianModel::white(OracleBasis::kPixelDiagonal, 8, 0.25);
  SamplerConfig cfg;  // h = 0.01, beta = 0.1
  cfg.seed = 6;
  auto [x, trace] = sample_score_ascent(oracle_blind_denoiser(m), {1, 8, 8}, cfg);
  REQUIRE(!trace.rows.empty());
  for (const auto& r : trace.rows) {
    if (r.sigma == 0.0) continue;
    double ratio2 = (r.gamma * r.gamma) / (r.sigma * r.sigma);
    CHECK(ratio2 == doctest::Approx(0.017901).epsilon(1e-9));
  }
}

TEST_CASE("sampling the unit white prior reproduces its statistics") {
  GaussianModel m = GaussianModel::white(OracleBasis::kPixelDiagonal, 16, 1.0);
  DenoiserFn f = oracle_blind_denoiser(m);
  const int chains = 200;
  const int64_t n = 256;
  std::vector<double> sum(static_cast<size_t>(n), 0.0), sumsq(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < chains; ++c) {
    SamplerConfig cfg;
    cfg.seed = 900 + static_cast<uint64_t>(c);
    auto [x, trace] = sample_score_ascent(f, {1, 16, 16}, cfg);
    CHECK(trace.converged);
    for (int64_t i = 0; i < n; ++i) {
      sum[static_cast<size_t>(i)] += x[i];
      sumsq[static_cast<size_t>(i)] += x[i] * x[i];
    }
  }
  double mean_all = 0, var_all = 0;
  for (int64_t i = 0; i < n; ++i) {
    double mu = sum[static_cast<size_t>(i)] / chains;
    mean_all += mu;
    var_all += sumsq[static_cast<size_t>(i)] / chains - mu * mu;
  }
  mean_all /= static_cast<double>(n);
  var_all /= static_cast<double>(n);
  CHECK(std::abs(mean_all) < 0.1);
  CHECK(var_all > 0.85);
  CHECK(var_all < 1.15);
}

TEST_CASE("chains are deterministic under a fixed seed") {
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kHaarDiagonal, 8, 1.0, 2);
  DenoiserFn f = oracle_blind_denoiser(m);
  SamplerConfig cfg;
  cfg.seed = 77;
  auto [xa, ta] = sample_score_ascent(f, {1, 8, 8}, cfg);
  auto [xb, tb] = sample_score_ascent(f, {1, 8, 8}, cfg);
  CHECK(sup_diff(xa, xb) == 0.0);
  CHECK(ta.rows.size() == tb.rows.size());
}

TEST_CASE("conditional sampling reproduces the per-band prior variance") {
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kHaarDiagonal, 8, 1.5, 2);
  auto f = conditional_detail_denoiser(m, 1);
  TensorD low = randn({1, 4, 4}, 13);
  const int chains = 200;
  const int band_elems = 16;  // 4x4 per channel
  std::vector<double> sumsq(3, 0.0);
  for (int c = 0; c < chains; ++c) {
    SamplerConfig cfg;
    cfg.seed = 4000 + static_cast<uint64_t>(c);
    auto [details, trace] = sample_conditional(f, low, cfg);
    CHECK(trace.converged);
    for (int band = 0; band < 3; ++band)
      for (int i = 0; i < band_elems; ++i)
        sumsq[static_cast<size_t>(band)] +=
            details[band * band_elems + i] * details[band * band_elems + i];
  }
  std::vector<double> prior = m.band_variances(1);
  const double c0 = prior[0];  // uniform within the scale for this spectrum
  for (int band = 0; band < 3; ++band) {
    double var = sumsq[static_cast<size_t>(band)] / (chains * band_elems);
    CHECK(std::abs(var - c0) < 0.15 * c0);
  }
}

TEST_CASE("conditional sampling ignores the conditioning band for diagonal oracles") {
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kHaarDiagonal, 8, 1.0, 1);
  auto f = conditional_detail_denoiser(m, 1);
  SamplerConfig cfg;
  cfg.seed = 99;
  auto [da, ta] = sample_conditional(f, randn({1, 4, 4}, 1), cfg);
  auto [db, tb] = sample_conditional(f, randn({1, 4, 4}, 2), cfg);
  CHECK(sup_diff(da, db) == 0.0);
}

TEST_CASE("zero-variance prior collapses the details to the noise floor") {
  GaussianModel m = GaussianModel::white(OracleBasis::kHaarDiagonal, 4, 0.0, 1);
  auto f = conditional_detail_denoiser(m, 1);
  TensorD low({1, 2, 2});
  SamplerConfig cfg;
  cfg.seed = 2;
  auto [details, trace] = sample_conditional(f, low, cfg);
  CHECK(trace.converged);
  CHECK(details.max_abs() < 3.0 * cfg.sigma_inf);
}

TEST_CASE("cascade output shape and low-pass consistency") {
  const int out_side = 32, depth = 2;
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kHaarDiagonal, out_side, 1.0, depth);
  std::vector<ConditionalDenoiserFn> models;
  for (int j = 1; j <= depth; ++j) models.push_back(conditional_detail_denoiser(m, j));

  TensorD low = randn({1, 8, 8}, 21);
  SamplerConfig cfg;
  cfg.seed = 22;
  TensorD x0 = synthesize_cascade(models, low, cfg);
  CHECK(x0.shape() == std::vector<int>{1, out_side, out_side});
  // Orthonormal Haar preserves the conditioning band exactly.
  WaveletPyramid p = build_pyramid(x0, depth);
  CHECK(sup_diff(p.lowpass, low) < 1e-10);
}

TEST_CASE("cascade band variances follow the prior spectrum") {
  const int out_side = 32, depth = 2;
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kHaarDiagonal, out_side, 1.0, depth);
  std::vector<ConditionalDenoiserFn> models;
  for (int j = 1; j <= depth; ++j) models.push_back(conditional_detail_denoiser(m, j));
  TensorD low = randn({1, 8, 8}, 31);

  const int samples = 60;
  std::vector<double> sumsq(static_cast<size_t>(depth), 0.0);
  std::vector<int64_t> count(static_cast<size_t>(depth), 0);
  for (int s = 0; s < samples; ++s) {
    SamplerConfig cfg;
    cfg.seed = 6000 + static_cast<uint64_t>(s);
    TensorD x0 = synthesize_cascade(models, low, cfg);
    WaveletPyramid p = build_pyramid(x0, depth);
    for (int j = 1; j <= depth; ++j) {
      const TensorD& d = p.detail(j);
      sumsq[static_cast<size_t>(j - 1)] += d.sum_squares();
      count[static_cast<size_t>(j - 1)] += d.numel();
    }
  }
  for (int j = 1; j <= depth; ++j) {
    double var = sumsq[static_cast<size_t>(j - 1)] / static_cast<double>(count[static_cast<size_t>(j - 1)]);
    double prior = m.band_variances(j)[0];
    CHECK(std::abs(var - prior) < 0.2 * prior);
  }
}

TEST_CASE("projected super-resolution pins the measurement exactly") {
  const int depth = 1;
  GaussianModel m = GaussianModel::white(OracleBasis::kPixelDiagonal, 16, 0.25);
  TensorD low = randn({1, 8, 8}, 41);
  SamplerConfig cfg;
  cfg.seed = 42;
  auto [x, trace] = superres_pixel_constrained(oracle_blind_denoiser(m), low, depth, cfg);
  CHECK(trace.converged);
  CHECK(sup_diff(build_pyramid(x, depth).lowpass, low) < 1e-10);
}

TEST_CASE("identity denoiser terminates immediately under projection") {
  TensorD low = randn({1, 4, 4}, 51);
  SamplerConfig cfg;
  cfg.seed = 52;
  DenoiserFn identity = [](const TensorD& y) { return y; };
  auto [x, trace] = superres_pixel_constrained(identity, low, 1, cfg);
  CHECK(trace.converged);
  CHECK(trace.rows.size() == 1);
  CHECK(trace.rows[0].sigma == 0.0);
  CHECK(sup_diff(build_pyramid(x, 1).lowpass, low) < 1e-10);
}

TEST_CASE("projected sampling recovers the conditional detail variance") {
  // White pixel prior: details are independent of the low-pass band, so the
  // conditional law per detail coefficient equals the marginal N(0, c).
  const double c = 0.25;
  const int depth = 1, side = 16;
  GaussianModel m = GaussianModel::white(OracleBasis::kPixelDiagonal, side, c);
  TensorD clean = sample_exact(m, 61);
  TensorD low = build_pyramid(clean, depth).lowpass;
  DenoiserFn f = oracle_blind_denoiser(m);
  const int samples = 120;
  double sumsq = 0;
  int64_t count = 0;
  for (int s = 0; s < samples; ++s) {
    SamplerConfig cfg;
    cfg.seed = 7000 + static_cast<uint64_t>(s);
    auto [x, trace] = superres_pixel_constrained(f, low, depth, cfg);
    const TensorD& d = build_pyramid(x, depth).detail(1);
    sumsq += d.sum_squares();
    count += d.numel();
  }
  double var = sumsq / static_cast<double>(count);
  CHECK(std::abs(var - c) < 0.15 * c);
}

TEST_CASE("non-convergence carries the partial trace") {
  GaussianModel m = GaussianModel::white(OracleBasis::kHaarDiagonal, 4, 0.0, 1);
  auto f = conditional_detail_denoiser(m, 1);
  SamplerConfig cfg;
  cfg.seed = 3;
  cfg.max_iters = 50;
  TensorD low({1, 2, 2});
  try {
    sample_conditional(f, low, cfg);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.trace.rows.size() == 50);
    CHECK_FALSE(e.trace.converged);
  }
}

TEST_CASE("trace CSV format") {
  GaussianModel m = GaussianModel::white(OracleBasis::kPixelDiagonal, 4, 0.25);
  SamplerConfig cfg;
  cfg.seed = 8;
  auto [x, trace] = sample_score_ascent(oracle_blind_denoiser(m), {1, 4, 4}, cfg);
  std::string csv = trace.to_csv();
  CHECK(csv.rfind("t,sigma_t,gamma_t,norm_d_t\n", 0) == 0);
  size_t lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == trace.rows.size() + 1);
}

TEST_CASE("sampler configuration validation") {
  SamplerConfig cfg;
  cfg.h = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.beta = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.sigma_inf = 2.0;  // >= sigma0
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
