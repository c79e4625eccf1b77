#ifndef WAVESCORE_WAVELET_HPP
#define WAVESCORE_WAVELET_HPP

#include <utility>
#include <vector>

#include "wavescore/tensor.hpp"

namespace wavescore {

/// Multi-level orthonormal Haar decomposition of a square image.
///
/// `details[j-1]` holds the three detail channels at scale j (j = 1 is the
/// finest), ordered [horizontal, vertical, diagonal], each 3 x N/2^j x N/2^j.
/// `lowpass` is the terminal coarse band, 1 x N/2^J x N/2^J.
struct WaveletPyramid {
  TensorD lowpass;
  std::vector<TensorD> details;
  int depth = 0;
  int base_size = 0;

  const TensorD& detail(int j) const { return details[static_cast<size_t>(j - 1)]; }
  TensorD& detail(int j) { return details[static_cast<size_t>(j - 1)]; }

  /// Sum of squared coefficients over all bands (equals the image energy).
  double energy() const;
};

/// One orthonormal Haar analysis step. Each 2x2 block [[a,b],[c,d]] maps to
///   low = (a+b+c+d)/2, h = (a+b-c-d)/2, v = (a-b+c-d)/2, d = (a-b-c+d)/2,
/// which is an orthogonal map with unit row norms. Input is 1 x 2M x 2M,
/// outputs are (3 x M x M, 1 x M x M).
std::pair<TensorD, TensorD> haar_analysis_step(const TensorD& image);

/// Exact inverse (= adjoint) of haar_analysis_step.
TensorD haar_synthesis_step(const TensorD& details, const TensorD& low);

/// Recursive analysis of the low band, J times. Side must divide by 2^J.
WaveletPyramid build_pyramid(const TensorD& image, int depth);

/// Exact left inverse of build_pyramid.
TensorD collapse_pyramid(const WaveletPyramid& p);

/// Coefficient count of a pyramid over an N x N image (always N*N).
int64_t pyramid_numel(int side, int depth);

/// Flatten to a canonical coefficient vector: lowpass block first, then
/// detail bands from coarsest (j = J) to finest (j = 1), each band [h, v, d].
std::vector<double> flatten_pyramid(const WaveletPyramid& p);
WaveletPyramid unflatten_pyramid(const std::vector<double>& coeffs, int side, int depth);

/// Scale (1..depth) and band (0=h,1=v,2=d; band=-1 for lowpass) of each
/// position in the flattened order; used to build per-band spectra.
struct PyramidIndex {
  int scale;
  int band;
};
std::vector<PyramidIndex> pyramid_index_map(int side, int depth);

}  // namespace wavescore

#endif  // WAVESCORE_WAVELET_HPP
