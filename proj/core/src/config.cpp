#include "wavescore/config.hpp"

#include <fstream>
#include <sstream>

namespace wavescore {

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cf;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = strip(line.substr(1, line.size() - 2));
      cf.sections.try_emplace(section);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": key outside of any [section]");
    cf.sections[section].emplace_back(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
  return cf;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

namespace {

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  std::istringstream is(s);
  std::string cell;
  while (std::getline(is, cell, ',')) grid.push_back(std::stod(strip(cell)));
  if (grid.empty()) throw ConfigError("empty noise grid");
  return grid;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& file) {
  ExperimentConfig cfg;
  for (const auto& [section, entries] : file.sections) {
    if (section == "model") {
      for (const auto& [key, val] : entries) {
        if (key == "lowpass") cfg.lowpass_ckpt = val;
        else if (key == "pixel") cfg.pixel_ckpt = val;
        else if (key.rfind("conditional", 0) == 0 && key.size() > 11) {
          size_t j = std::stoul(key.substr(11));
          if (j < 1 || j > 16) throw ConfigError("[model] " + key + ": scale out of range");
          if (cfg.conditional_ckpts.size() < j) cfg.conditional_ckpts.resize(j);
          cfg.conditional_ckpts[j - 1] = val;
        } else if (key == "oracle_basis") cfg.oracle_basis = val;
        else if (key == "oracle_spectrum") cfg.oracle_spectrum = val;
        else if (key == "oracle_sigma") cfg.oracle_sigma = std::stod(val);
        else if (key == "arch") cfg.arch = val;
        else if (key == "rf") cfg.rf = std::stoi(val);
        else if (key == "layers") cfg.layers = std::stoi(val);
        else if (key == "width") cfg.width = std::stoi(val);
        else throw ConfigError("unknown key '" + key + "' in [model]");
      }
    } else if (section == "data") {
      for (const auto& [key, val] : entries) {
        if (key == "source") cfg.data.source = val;
        else if (key == "image_side") cfg.data.image_side = std::stoi(val);
        else if (key == "train_count") cfg.data.train_count = std::stoi(val);
        else if (key == "test_count") cfg.data.test_count = std::stoi(val);
        else if (key == "seed") cfg.data.seed = std::stoull(val);
        else throw ConfigError("unknown key '" + key + "' in [data]");
      }
    } else if (section == "sampler") {
      for (const auto& [key, val] : entries) {
        if (key == "h") cfg.sampler.h = std::stod(val);
        else if (key == "beta") cfg.sampler.beta = std::stod(val);
        else if (key == "sigma0") cfg.sampler.sigma0 = std::stod(val);
        else if (key == "sigma_inf") cfg.sampler.sigma_inf = std::stod(val);
        else if (key == "max_iters") cfg.sampler.max_iters = std::stoi(val);
        else throw ConfigError("unknown key '" + key + "' in [sampler]");
      }
    } else if (section == "experiment") {
      for (const auto& [key, val] : entries) {
        if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "output_dir") cfg.output_dir = val;
        else if (key == "noise_grid") cfg.noise_grid = parse_grid(val);
        else if (key == "depth") cfg.depth = std::stoi(val);
        else if (key == "batch") cfg.batch = std::stoi(val);
        else if (key == "epochs") cfg.epochs = std::stoi(val);
        else if (key == "lr") cfg.lr = std::stod(val);
        else if (key == "sigma_min") cfg.sigma_min = std::stod(val);
        else if (key == "sigma_max") cfg.sigma_max = std::stod(val);
        else if (key == "scale") cfg.scale = std::stoi(val);
        else if (key == "threads") cfg.threads = std::stoi(val);
        else throw ConfigError("unknown key '" + key + "' in [experiment]");
      }
    } else {
      throw ConfigError("unknown config section [" + section + "]");
    }
  }
  cfg.sampler.seed = cfg.seed;
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_config(ConfigFile::parse_file(path));
}

}  // namespace wavescore
