#ifndef WAVESCORE_TRAINING_HPP
#define WAVESCORE_TRAINING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wavescore/dataset.hpp"
#include "wavescore/network.hpp"
#include "wavescore/tensor.hpp"

namespace wavescore {

/// y = x + sigma * z with z drawn i.i.d. standard normal from the seed.
TensorD corrupt(const TensorD& x, double sigma, uint64_t seed);

struct TrainConfig {
  int batch_size = 8;
  double sigma_min = 0.0;
  double sigma_max = 1.0;  // noise std range, relative to intensities in [0, 1]
  double lr = 1e-3;
  int epochs = 1;
  uint64_t seed = 0;
  bool augment_hflip = false;
  // Plateau schedule: halve the learning rate when the smoothed loss has not
  // improved for `patience` steps; floor at lr_min.
  int patience = 200;
  double lr_min = 1e-5;

  void validate() const;
};

/// What the denoiser sees. Low-pass mode trains on the depth-d low-pass band
/// (d = 0 trains in the pixel domain); conditional mode trains on the scale-j
/// detail bands with the clean low-pass band as the conditioning channel.
struct TrainMode {
  enum class Kind { kLowpass, kConditional };
  Kind kind = Kind::kLowpass;
  int depth = 0;  // low-pass mode
  int scale = 1;  // conditional mode

  static TrainMode lowpass(int depth);
  static TrainMode conditional(int scale);
  std::string to_string() const;
  static TrainMode parse(const std::string& s);
};

struct LossRecord {
  int epoch = 0;
  int step = 0;  // global step
  double loss = 0.0;
};

std::string loss_history_csv(const std::vector<LossRecord>& history);

struct TrainingSample {
  TensorD input;   // band(s) fed to the network, noise already applied
  TensorD target;  // clean band(s)
};

/// Builds the (input, target) pair the mode dictates. Low-pass mode corrupts
/// the depth-d low-pass band; conditional mode corrupts only the three detail
/// channels and passes the clean low-pass band as the fourth channel.
TrainingSample make_training_sample(const TensorD& image, const TrainMode& mode,
                                    double sigma, uint64_t noise_seed);

struct Checkpoint {
  uint32_t version = 1;
  NetworkSpec spec;
  std::vector<TensorF> params;
  std::vector<TensorF> running_ms;
  AdamState<float> adam;
  int epochs_trained = 0;
  uint64_t seed = 0;
  double sigma_min = 0.0;
  double sigma_max = 1.0;
  std::string mode;  // TrainMode::to_string form
  std::vector<LossRecord> loss_history;

  ModelF to_model() const;
  static Checkpoint from_model(const ModelF& model);
};

/// Denoising-score training: per sample, sigma ~ U[sigma_min, sigma_max],
/// Gaussian corruption of the band the mode dictates (the conditioning
/// channel is never corrupted), squared-error loss, Adam. The model receives
/// no noise-level input.
Checkpoint train_denoiser(ModelF model, const Dataset& data, const TrainConfig& cfg,
                          const TrainMode& mode);

/// Binary checkpoint file: little-endian, magic + version header, network
/// spec and metadata as UTF-8 blocks, raw tensors in declaration order, and a
/// trailing 64-bit FNV-1a checksum. save(load(p)) is byte-identical.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace wavescore

#endif  // WAVESCORE_TRAINING_HPP
