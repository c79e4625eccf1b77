#ifndef WAVESCORE_CONFIG_HPP
#define WAVESCORE_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "wavescore/dataset.hpp"
#include "wavescore/sampler.hpp"

namespace wavescore {

/// Plain-text configuration: `key = value` lines, `#` comments, and
/// `[section]` headers. Keys outside a section or in unknown sections are
/// errors, as are unknown keys (validated by ExperimentConfig).
struct ConfigFile {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;

  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin);
};

struct ExperimentConfig {
  // [model]
  std::string lowpass_ckpt;
  std::vector<std::string> conditional_ckpts;  // conditional1..conditionalJ
  std::string pixel_ckpt;
  std::string oracle_basis;
  std::string oracle_spectrum;
  double oracle_sigma = -1.0;  // < 0 means "not supplied" (blind estimate)
  std::string arch;            // for `train`: lowpass | conditional | pixel
  int rf = 13;
  int layers = 0;  // 0 = architecture default
  int width = 64;

  // [data]
  DatasetSpec data;

  // [sampler]
  SamplerConfig sampler;

  // [experiment]
  uint64_t seed = 0;
  std::string output_dir = ".";
  std::vector<double> noise_grid = {0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
  int depth = 2;
  int batch = 8;
  int epochs = 1;
  double lr = 1e-3;
  double sigma_min = 0.0;
  double sigma_max = 1.0;
  int scale = 1;
  int threads = 0;  // 0 = environment/hardware default

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_config(const ConfigFile& file);
};

}  // namespace wavescore

#endif  // WAVESCORE_CONFIG_HPP
