#include "wavescore/wavelet.hpp"

#include <string>

namespace wavescore {

namespace {

void require_square_image(const TensorD& image, const char* what) {
  if (image.rank() != 3 || image.dim(0) != 1)
    throw DimensionError(std::string(what) + ": expected a 1xHxW tensor, got " +
                         shape_string(image.shape()));
  if (image.dim(1) != image.dim(2))
    throw DimensionError(std::string(what) + ": image must be square, got " +
                         shape_string(image.shape()));
}

}  // namespace

double WaveletPyramid::energy() const {
  double e = lowpass.sum_squares();
  for (const auto& d : details) e += d.sum_squares();
  return e;
}

std::pair<TensorD, TensorD> haar_analysis_step(const TensorD& image) {
  require_square_image(image, "haar_analysis_step");
  int side = image.dim(1);
  if (side % 2 != 0)
    throw DimensionError("haar_analysis_step: odd side length " + std::to_string(side));
  require_finite(image, "haar_analysis_step");

  int m = side / 2;
  TensorD details({3, m, m});
  TensorD low({1, m, m});
  for (int y = 0; y < m; ++y) {
    for (int x = 0; x < m; ++x) {
      double a = image.at(0, 2 * y, 2 * x);
      double b = image.at(0, 2 * y, 2 * x + 1);
      double c = image.at(0, 2 * y + 1, 2 * x);
      double d = image.at(0, 2 * y + 1, 2 * x + 1);
      low.at(0, y, x) = 0.5 * (a + b + c + d);
      details.at(0, y, x) = 0.5 * (a + b - c - d);
      details.at(1, y, x) = 0.5 * (a - b + c - d);
      details.at(2, y, x) = 0.5 * (a - b - c + d);
    }
  }
  return {std::move(details), std::move(low)};
}

TensorD haar_synthesis_step(const TensorD& details, const TensorD& low) {
  if (details.rank() != 3 || details.dim(0) != 3)
    throw DimensionError("haar_synthesis_step: details must be 3xMxM, got " +
                         shape_string(details.shape()));
  if (low.rank() != 3 || low.dim(0) != 1)
    throw DimensionError("haar_synthesis_step: low band must be 1xMxM, got " +
                         shape_string(low.shape()));
  if (details.dim(1) != low.dim(1) || details.dim(2) != low.dim(2))
    throw DimensionError("haar_synthesis_step: band size mismatch " +
                         shape_string(details.shape()) + " vs " + shape_string(low.shape()));
  int m = low.dim(1);
  if (m != low.dim(2))
    throw DimensionError("haar_synthesis_step: bands must be square");

  TensorD image({1, 2 * m, 2 * m});
  for (int y = 0; y < m; ++y) {
    for (int x = 0; x < m; ++x) {
      double l = low.at(0, y, x);
      double h = details.at(0, y, x);
      double v = details.at(1, y, x);
      double d = details.at(2, y, x);
      image.at(0, 2 * y, 2 * x) = 0.5 * (l + h + v + d);
      image.at(0, 2 * y, 2 * x + 1) = 0.5 * (l + h - v - d);
      image.at(0, 2 * y + 1, 2 * x) = 0.5 * (l - h + v - d);
      image.at(0, 2 * y + 1, 2 * x + 1) = 0.5 * (l - h - v + d);
    }
  }
  return image;
}

WaveletPyramid build_pyramid(const TensorD& image, int depth) {
  require_square_image(image, "build_pyramid");
  if (depth < 1) throw DimensionError("build_pyramid: depth must be >= 1");
  int side = image.dim(1);
  if (side % (1 << depth) != 0)
    throw DimensionError("build_pyramid: side " + std::to_string(side) +
                         " not divisible by 2^" + std::to_string(depth));

  WaveletPyramid p;
  p.depth = depth;
  p.base_size = side;
  p.details.resize(static_cast<size_t>(depth));
  TensorD low = image;
  for (int j = 1; j <= depth; ++j) {
    auto [det, next] = haar_analysis_step(low);
    p.details[static_cast<size_t>(j - 1)] = std::move(det);
    low = std::move(next);
  }
  p.lowpass = std::move(low);
  return p;
}

TensorD collapse_pyramid(const WaveletPyramid& p) {
  if (p.depth < 1 || p.details.size() != static_cast<size_t>(p.depth))
    throw DimensionError("collapse_pyramid: malformed pyramid");
  TensorD image = p.lowpass;
  for (int j = p.depth; j >= 1; --j) image = haar_synthesis_step(p.detail(j), image);
  if (image.dim(1) != p.base_size)
    throw DimensionError("collapse_pyramid: band sizes inconsistent with base size");
  return image;
}

int64_t pyramid_numel(int side, int depth) {
  (void)depth;
  return static_cast<int64_t>(side) * side;
}

std::vector<double> flatten_pyramid(const WaveletPyramid& p) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(pyramid_numel(p.base_size, p.depth)));
  out.insert(out.end(), p.lowpass.raw().begin(), p.lowpass.raw().end());
  for (int j = p.depth; j >= 1; --j) {
    const auto& d = p.detail(j).raw();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

WaveletPyramid unflatten_pyramid(const std::vector<double>& coeffs, int side, int depth) {
  if (static_cast<int64_t>(coeffs.size()) != pyramid_numel(side, depth))
    throw DimensionError("unflatten_pyramid: coefficient count mismatch");
  WaveletPyramid p;
  p.depth = depth;
  p.base_size = side;
  p.details.resize(static_cast<size_t>(depth));
  size_t pos = 0;
  int low_side = side >> depth;
  p.lowpass = TensorD({1, low_side, low_side});
  for (int64_t i = 0; i < p.lowpass.numel(); ++i) p.lowpass[i] = coeffs[pos++];
  for (int j = depth; j >= 1; --j) {
    int m = side >> j;
    TensorD d({3, m, m});
    for (int64_t i = 0; i < d.numel(); ++i) d[i] = coeffs[pos++];
    p.detail(j) = std::move(d);
  }
  return p;
}

std::vector<PyramidIndex> pyramid_index_map(int side, int depth) {
  std::vector<PyramidIndex> map;
  map.reserve(static_cast<size_t>(pyramid_numel(side, depth)));
  int low_side = side >> depth;
  for (int i = 0; i < low_side * low_side; ++i) map.push_back({depth, -1});
  for (int j = depth; j >= 1; --j) {
    int m = side >> j;
    for (int band = 0; band < 3; ++band)
      for (int i = 0; i < m * m; ++i) map.push_back({j, band});
  }
  return map;
}

}  // namespace wavescore
