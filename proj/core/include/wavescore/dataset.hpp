#ifndef WAVESCORE_DATASET_HPP
#define WAVESCORE_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wavescore/tensor.hpp"

namespace wavescore {

/// Image source for training/evaluation. `source` is one of
///   "toyfaces"   - synthetic face-like images with global geometry
///   "gaussfield" - stationary Gaussian field squashed into [0, 1]
///   "dir:<path>" - grayscale PGM/PNG files (sorted by name, equal sizes)
struct DatasetSpec {
  std::string source = "toyfaces";
  int image_side = 64;
  int train_count = 0;
  int test_count = 0;
  uint64_t seed = 0;

  void validate() const;
};

class Dataset {
 public:
  static Dataset load(const DatasetSpec& spec);

  int train_size() const { return static_cast<int>(train_.size()); }
  int test_size() const { return static_cast<int>(test_.size()); }
  const TensorD& train_image(int i) const { return train_[static_cast<size_t>(i)]; }
  const TensorD& test_image(int i) const { return test_[static_cast<size_t>(i)]; }
  int side() const { return side_; }

 private:
  std::vector<TensorD> train_, test_;
  int side_ = 0;
};

/// One synthetic face: elliptical head, two eye blobs and a mouth bar at
/// randomized positions and contrasts over a smooth background. Deterministic
/// in (side, seed); intensities in [0, 1].
TensorD toy_face(int side, uint64_t seed);

/// Stationary field: power-law frequency spectrum, rescaled around mid-gray.
TensorD gauss_field(int side, uint64_t seed);

}  // namespace wavescore

#endif  // WAVESCORE_DATASET_HPP
