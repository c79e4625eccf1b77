#include "wavescore/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "wavescore/rng.hpp"
#include "wavescore/wavelet.hpp"

namespace wavescore {

void SamplerConfig::validate() const {
  if (!(h > 0.0 && h <= 1.0)) throw ConfigError("sampler: h must be in (0, 1]");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("sampler: beta must be in (0, 1]");
  if (!(sigma_inf > 0.0) || !(sigma0 > sigma_inf))
    throw ConfigError("sampler: need 0 < sigma_inf < sigma0");
  if (max_iters < 1) throw ConfigError("sampler: max_iters must be >= 1");
}

std::string SampleTrace::to_csv() const {
  std::ostringstream os;
  os << "t,sigma_t,gamma_t,norm_d_t\n";
  char line[128];
  for (const TraceRow& r : rows) {
    std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.12g\n", r.t, r.sigma, r.gamma,
                  r.norm_d);
    os << line;
  }
  return os.str();
}

namespace {

struct AscentHooks {
  // Applied to the fresh iterate before the loop and to x_t after every
  // update; used for the measurement projection of the super-resolution
  // variant. Null means no constraint.
  std::function<void(TensorD&)> project;
};

std::pair<TensorD, SampleTrace> run_score_ascent(const DenoiserFn& f,
                                                 const std::vector<int>& shape,
                                                 const SamplerConfig& cfg,
                                                 const AscentHooks& hooks) {
  cfg.validate();
  Rng rng(cfg.seed);
  TensorD x(shape);
  rng.fill_normal(x, cfg.sigma0);
  if (hooks.project) hooks.project(x);
  const double n = static_cast<double>(x.numel());
  // gamma_t^2 / sigma_t^2 = (1 - beta h)^2 - (1 - h)^2, kept in factored form
  // so it is exactly zero at beta = 1 and nonnegative for beta <= 1.
  const double gamma_ratio2 =
      cfg.h * (1.0 - cfg.beta) * (2.0 - cfg.h * (1.0 + cfg.beta));

  SampleTrace trace;
  TensorD z(shape);
  for (int t = 1; t <= cfg.max_iters; ++t) {
    TensorD d = f(x);
    require_same_shape(d, x, "sample_score_ascent denoiser output");
    for (int64_t i = 0; i < d.numel(); ++i) d[i] -= x[i];
    const double sigma2 = d.sum_squares() / n;
    const double sigma = std::sqrt(sigma2);
    const double gamma2 = gamma_ratio2 * sigma2;
    if (gamma2 < -1e-30 * sigma2)
      throw Error("sample_score_ascent: negative gamma^2, invariant violated");
    const double gamma = std::sqrt(gamma2 > 0 ? gamma2 : 0.0);

    rng.fill_normal(z);
    for (int64_t i = 0; i < x.numel(); ++i) x[i] += cfg.h * d[i] + gamma * z[i];
    if (hooks.project) hooks.project(x);

    trace.rows.push_back({t, sigma, gamma, std::sqrt(d.sum_squares())});
    if (sigma < cfg.sigma_inf) {
      trace.converged = true;
      return {std::move(x), std::move(trace)};
    }
  }
  throw NonConvergenceError(
      "sample_score_ascent: sigma_t did not reach sigma_inf within " +
          std::to_string(cfg.max_iters) + " iterations",
      std::move(trace));
}

}  // namespace

std::pair<TensorD, SampleTrace> sample_score_ascent(const DenoiserFn& f,
                                                    const std::vector<int>& shape,
                                                    const SamplerConfig& cfg) {
  return run_score_ascent(f, shape, cfg, {});
}

std::pair<TensorD, SampleTrace> sample_conditional(const ConditionalDenoiserFn& f,
                                                   const TensorD& lowpass,
                                                   const SamplerConfig& cfg) {
  if (lowpass.rank() != 3 || lowpass.dim(0) != 1)
    throw DimensionError("sample_conditional: conditioning band must be 1xMxM");
  const int m = lowpass.dim(1), w = lowpass.dim(2);
  DenoiserFn fixed = [&f, &lowpass](const TensorD& details) {
    return f(details, lowpass);
  };
  return run_score_ascent(fixed, {3, m, w}, cfg, {});
}

TensorD synthesize_cascade(const std::vector<ConditionalDenoiserFn>& models,
                           const TensorD& terminal_lowpass, const SamplerConfig& cfg) {
  if (terminal_lowpass.rank() != 3 || terminal_lowpass.dim(0) != 1)
    throw DimensionError("synthesize_cascade: low-pass band must be 1xMxM");
  const int depth = static_cast<int>(models.size());
  if (depth < 1) throw ConfigError("synthesize_cascade: need at least one scale model");

  Rng seeder(cfg.seed);
  TensorD x = terminal_lowpass;
  for (int j = depth; j >= 1; --j) {
    if (!models[static_cast<size_t>(j - 1)])
      throw ConfigError("synthesize_cascade: missing conditional model for scale " +
                        std::to_string(j));
    SamplerConfig scale_cfg = cfg;
    scale_cfg.seed = seeder.next_u64();
    auto [details, trace] =
        sample_conditional(models[static_cast<size_t>(j - 1)], x, scale_cfg);
    x = haar_synthesis_step(details, x);
  }
  return x;
}

std::pair<TensorD, SampleTrace> superres_pixel_constrained(const DenoiserFn& f,
                                                           const TensorD& lowpass,
                                                           int depth,
                                                           const SamplerConfig& cfg) {
  if (lowpass.rank() != 3 || lowpass.dim(0) != 1)
    throw DimensionError("superres_pixel_constrained: low-pass band must be 1xMxM");
  if (depth < 1) throw ConfigError("superres_pixel_constrained: depth must be >= 1");
  const int side = lowpass.dim(1) << depth;

  AscentHooks hooks;
  hooks.project = [&lowpass, depth](TensorD& x) {
    WaveletPyramid p = build_pyramid(x, depth);
    p.lowpass = lowpass;
    x = collapse_pyramid(p);
  };
  return run_score_ascent(f, {1, side, side}, cfg, hooks);
}

}  // namespace wavescore
