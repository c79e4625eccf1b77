#include "wavescore/gaussian.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "wavescore/rng.hpp"

namespace wavescore {

OracleBasis oracle_basis_from_string(const std::string& s) {
  if (s == "pixel-diagonal") return OracleBasis::kPixelDiagonal;
  if (s == "fourier-diagonal") return OracleBasis::kFourierDiagonal;
  if (s == "haar-diagonal") return OracleBasis::kHaarDiagonal;
  throw ConfigError("unknown oracle basis '" + s + "'");
}

std::string to_string(OracleBasis b) {
  switch (b) {
    case OracleBasis::kPixelDiagonal: return "pixel-diagonal";
    case OracleBasis::kFourierDiagonal: return "fourier-diagonal";
    case OracleBasis::kHaarDiagonal: return "haar-diagonal";
  }
  return "?";
}

void GaussianModel::validate() const {
  if (side < 1) throw ConfigError("gaussian model: side must be positive");
  if (basis == OracleBasis::kHaarDiagonal) {
    if (depth < 1) throw ConfigError("gaussian model: haar basis needs depth >= 1");
    if (side % (1 << depth) != 0)
      throw DimensionError("gaussian model: side not divisible by 2^depth");
  }
  if (static_cast<int64_t>(variances.size()) != static_cast<int64_t>(side) * side)
    throw DimensionError("gaussian model: spectrum size must be side^2");
  for (double v : variances)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("gaussian model: variances must be finite and >= 0");
}

GaussianModel GaussianModel::white(OracleBasis basis, int side, double c, int depth) {
  GaussianModel m;
  m.basis = basis;
  m.side = side;
  m.depth = depth;
  m.variances.assign(static_cast<size_t>(side) * side, c);
  m.validate();
  return m;
}

GaussianModel GaussianModel::powerlaw(OracleBasis basis, int side, double alpha,
                                      int depth) {
  GaussianModel m;
  m.basis = basis;
  m.side = side;
  m.depth = depth;
  m.variances.resize(static_cast<size_t>(side) * side);
  if (basis == OracleBasis::kFourierDiagonal) {
    for (int ky = 0; ky < side; ++ky)
      for (int kx = 0; kx < side; ++kx) {
        double rho = std::sqrt(static_cast<double>(ky) * ky + static_cast<double>(kx) * kx);
        m.variances[static_cast<size_t>(ky) * side + kx] = std::pow(1.0 + rho, -alpha);
      }
  } else if (basis == OracleBasis::kHaarDiagonal) {
    auto map = pyramid_index_map(side, depth);
    for (size_t i = 0; i < map.size(); ++i) {
      int octave = map[i].band < 0 ? 0 : depth - map[i].scale + 1;
      m.variances[i] = std::pow(2.0, -alpha * octave);
    }
  } else {
    throw ConfigError("powerlaw spectrum requires a frequency or wavelet basis");
  }
  m.validate();
  return m;
}

GaussianModel GaussianModel::from_spectrum(OracleBasis basis, int side,
                                           std::vector<double> variances, int depth) {
  GaussianModel m;
  m.basis = basis;
  m.side = side;
  m.depth = depth;
  m.variances = std::move(variances);
  m.validate();
  return m;
}

GaussianModel GaussianModel::parse(const std::string& basis, const std::string& spectrum,
                                   int side, int depth) {
  OracleBasis b = oracle_basis_from_string(basis);
  auto colon = spectrum.find(':');
  if (colon == std::string::npos)
    throw ConfigError("oracle spectrum must look like white:<c>, powerlaw:<alpha>, "
                      "or csv:<path>, got '" + spectrum + "'");
  std::string kind = spectrum.substr(0, colon);
  std::string arg = spectrum.substr(colon + 1);
  if (kind == "white") return white(b, side, std::stod(arg), depth);
  if (kind == "powerlaw") return powerlaw(b, side, std::stod(arg), depth);
  if (kind == "csv") {
    std::ifstream in(arg);
    if (!in) throw IoError("cannot open spectrum file " + arg);
    std::vector<double> v;
    std::string cell;
    while (std::getline(in, cell, ',')) v.push_back(std::stod(cell));
    return from_spectrum(b, side, std::move(v), depth);
  }
  throw ConfigError("unknown spectrum generator '" + kind + "'");
}

double GaussianModel::mean_variance() const {
  double s = 0;
  for (double v : variances) s += v;
  return s / static_cast<double>(variances.size());
}

std::vector<double> GaussianModel::band_variances(int scale) const {
  if (basis != OracleBasis::kHaarDiagonal)
    throw ModelError("band variances require a haar-diagonal model");
  if (scale < 1 || scale > depth)
    throw IndexError("band scale out of range");
  auto map = pyramid_index_map(side, depth);
  std::vector<double> out;
  for (size_t i = 0; i < map.size(); ++i)
    if (map[i].scale == scale && map[i].band >= 0) out.push_back(variances[i]);
  return out;
}

GaussianModel GaussianModel::restrict_to_lowpass() const {
  if (basis != OracleBasis::kHaarDiagonal)
    throw ModelError("restrict_to_lowpass requires a haar-diagonal model");
  if (depth < 2) return lowpass_band_model();
  GaussianModel m;
  m.basis = OracleBasis::kHaarDiagonal;
  m.side = side / 2;
  m.depth = depth - 1;
  // Flattened order is [lowpass, scale J .. scale 1]; the low-pass image of a
  // one-step analysis carries exactly the leading (side/2)^2 coefficients.
  m.variances.assign(variances.begin(),
                     variances.begin() + static_cast<int64_t>(side / 2) * (side / 2));
  m.validate();
  return m;
}

GaussianModel GaussianModel::lowpass_band_model() const {
  if (basis != OracleBasis::kHaarDiagonal)
    throw ModelError("lowpass_band_model requires a haar-diagonal model");
  int low = side >> depth;
  GaussianModel m;
  m.basis = OracleBasis::kPixelDiagonal;
  m.side = low;
  m.variances.assign(variances.begin(),
                     variances.begin() + static_cast<int64_t>(low) * low);
  m.validate();
  return m;
}

namespace {

void require_image_for(const GaussianModel& m, const TensorD& img, const char* what) {
  if (img.rank() != 3 || img.dim(0) != 1 || img.dim(1) != m.side || img.dim(2) != m.side)
    throw DimensionError(std::string(what) + ": expected a 1x" + std::to_string(m.side) +
                         "x" + std::to_string(m.side) + " image, got " +
                         shape_string(img.shape()));
}

// Orthonormal DCT-II matrix, rows indexed by frequency.
std::vector<double> dct_matrix(int n) {
  std::vector<double> mat(static_cast<size_t>(n) * n);
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < n; ++k) {
    double s = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int i = 0; i < n; ++i)
      mat[static_cast<size_t>(k) * n + i] =
          s * std::cos(pi * (2.0 * i + 1.0) * k / (2.0 * n));
  }
  return mat;
}

// Separable 2-D transform: M X M^T (forward) or M^T X M (inverse).
std::vector<double> dct2(const std::vector<double>& x, int n, bool forward) {
  std::vector<double> mat = dct_matrix(n);
  auto a = [&](int r, int t) {
    return forward ? mat[static_cast<size_t>(r) * n + t]
                   : mat[static_cast<size_t>(t) * n + r];
  };
  std::vector<double> tmp(static_cast<size_t>(n) * n, 0.0);
  std::vector<double> out(static_cast<size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double acc = 0;
      for (int t = 0; t < n; ++t) acc += a(r, t) * x[static_cast<size_t>(t) * n + c];
      tmp[static_cast<size_t>(r) * n + c] = acc;
    }
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double acc = 0;
      for (int t = 0; t < n; ++t) acc += tmp[static_cast<size_t>(r) * n + t] * a(c, t);
      out[static_cast<size_t>(r) * n + c] = acc;
    }
  return out;
}

}  // namespace

std::vector<double> to_basis(const TensorD& image, const GaussianModel& m) {
  require_image_for(m, image, "to_basis");
  switch (m.basis) {
    case OracleBasis::kPixelDiagonal:
      return image.raw();
    case OracleBasis::kFourierDiagonal:
      return dct2(image.raw(), m.side, /*forward=*/true);
    case OracleBasis::kHaarDiagonal:
      return flatten_pyramid(build_pyramid(image, m.depth));
  }
  throw ModelError("unreachable basis");
}

TensorD from_basis(const std::vector<double>& coeffs, const GaussianModel& m) {
  if (static_cast<int64_t>(coeffs.size()) != static_cast<int64_t>(m.side) * m.side)
    throw DimensionError("from_basis: coefficient count mismatch");
  switch (m.basis) {
    case OracleBasis::kPixelDiagonal:
      return TensorD({1, m.side, m.side}, coeffs);
    case OracleBasis::kFourierDiagonal:
      return TensorD({1, m.side, m.side}, dct2(coeffs, m.side, /*forward=*/false));
    case OracleBasis::kHaarDiagonal:
      return collapse_pyramid(unflatten_pyramid(coeffs, m.side, m.depth));
  }
  throw ModelError("unreachable basis");
}

TensorD wiener_denoise(const TensorD& y, const GaussianModel& m, double sigma) {
  m.validate();
  require_image_for(m, y, "wiener_denoise");
  if (sigma < 0) throw ConfigError("wiener_denoise: sigma must be >= 0");
  if (sigma == 0.0) return y;
  std::vector<double> c = to_basis(y, m);
  const double s2 = sigma * sigma;
  for (size_t i = 0; i < c.size(); ++i) c[i] *= m.variances[i] / (m.variances[i] + s2);
  return from_basis(c, m);
}

TensorD analytic_score(const TensorD& y, const GaussianModel& m, double sigma) {
  m.validate();
  require_image_for(m, y, "analytic_score");
  if (sigma < 0) throw ConfigError("analytic_score: sigma must be >= 0");
  if (sigma == 0.0) {
    for (double v : m.variances)
      if (v == 0.0)
        throw ModelError(
            "analytic_score: singular model (sigma = 0 with a zero-variance "
            "coefficient)");
  }
  std::vector<double> c = to_basis(y, m);
  const double s2 = sigma * sigma;
  for (size_t i = 0; i < c.size(); ++i) c[i] = -c[i] / (m.variances[i] + s2);
  return from_basis(c, m);
}

TensorD sample_exact(const GaussianModel& m, uint64_t seed) {
  m.validate();
  Rng rng(seed);
  std::vector<double> c(m.variances.size());
  for (size_t i = 0; i < c.size(); ++i) c[i] = std::sqrt(m.variances[i]) * rng.normal();
  return from_basis(c, m);
}

double log_density_quadratic_form(const TensorD& x, const GaussianModel& m) {
  m.validate();
  require_image_for(m, x, "log_density_quadratic_form");
  std::vector<double> c = to_basis(x, m);
  double q = 0;
  for (size_t i = 0; i < c.size(); ++i) {
    if (m.variances[i] <= 0.0)
      throw ModelError("log_density_quadratic_form: singular model");
    q += c[i] * c[i] / m.variances[i];
  }
  return -0.5 * q;
}

double blind_sigma_estimate(const TensorD& y, double mean_variance) {
  double m2 = y.sum_squares() / static_cast<double>(y.numel());
  double s2 = m2 - mean_variance;
  return s2 > 0 ? std::sqrt(s2) : 0.0;
}

TensorD conditional_wiener_details(const TensorD& noisy_details, const GaussianModel& m,
                                   int scale, double sigma) {
  if (m.basis != OracleBasis::kHaarDiagonal)
    throw ModelError("conditional_wiener_details requires a haar-diagonal model");
  if (scale < 1 || scale > m.depth) throw IndexError("conditional scale out of range");
  const int band_side = m.side >> scale;
  if (noisy_details.rank() != 3 || noisy_details.dim(0) != 3 ||
      noisy_details.dim(1) != band_side || noisy_details.dim(2) != band_side)
    throw DimensionError("conditional_wiener_details: expected 3x" +
                         std::to_string(band_side) + "x" + std::to_string(band_side) +
                         " details, got " + shape_string(noisy_details.shape()));
  if (sigma < 0) throw ConfigError("conditional_wiener_details: sigma must be >= 0");
  std::vector<double> cv = m.band_variances(scale);
  TensorD out(noisy_details.shape());
  const double s2 = sigma * sigma;
  for (int64_t i = 0; i < out.numel(); ++i) {
    double c = cv[static_cast<size_t>(i)];
    out[i] = s2 == 0.0 ? noisy_details[i] : c / (c + s2) * noisy_details[i];
  }
  return out;
}

std::function<TensorD(const TensorD&)> oracle_blind_denoiser(const GaussianModel& m) {
  m.validate();
  const double cbar = m.mean_variance();
  return [m, cbar](const TensorD& y) {
    return wiener_denoise(y, m, blind_sigma_estimate(y, cbar));
  };
}

std::function<TensorD(const TensorD&)> oracle_lowpass_denoiser(const GaussianModel& m,
                                                               double sigma) {
  GaussianModel band = m.lowpass_band_model();
  return [band, sigma](const TensorD& y) { return wiener_denoise(y, band, sigma); };
}

std::function<TensorD(const TensorD&, const TensorD&)> conditional_detail_denoiser(
    const GaussianModel& m, int scale) {
  if (m.basis != OracleBasis::kHaarDiagonal)
    throw ModelError("conditional_detail_denoiser requires a haar-diagonal model");
  if (scale < 1 || scale > m.depth) throw IndexError("conditional scale out of range");
  std::vector<double> cv = m.band_variances(scale);
  double cbar = 0;
  for (double v : cv) cbar += v;
  cbar /= static_cast<double>(cv.size());
  return [m, scale, cbar](const TensorD& details, const TensorD& lowpass) {
    (void)lowpass;  // diagonal model: the conditional law ignores the coarse band
    return conditional_wiener_details(details, m, scale,
                                      blind_sigma_estimate(details, cbar));
  };
}

std::function<TensorD(const TensorD&, const TensorD&)> conditional_detail_denoiser(
    const GaussianModel& m, int scale, double sigma) {
  if (m.basis != OracleBasis::kHaarDiagonal)
    throw ModelError("conditional_detail_denoiser requires a haar-diagonal model");
  return [m, scale, sigma](const TensorD& details, const TensorD& lowpass) {
    (void)lowpass;
    return conditional_wiener_details(details, m, scale, sigma);
  };
}

}  // namespace wavescore
