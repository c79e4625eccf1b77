#include "wavescore/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "wavescore/rng.hpp"
#include "wavescore/wavelet.hpp"

namespace wavescore {

TensorD corrupt(const TensorD& x, double sigma, uint64_t seed) {
  if (sigma < 0) throw ConfigError("corrupt: sigma must be >= 0");
  TensorD y = x;
  if (sigma == 0.0) return y;
  Rng rng(seed);
  for (int64_t i = 0; i < y.numel(); ++i) y[i] += sigma * rng.normal();
  return y;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (!(sigma_min >= 0.0) || !(sigma_min < sigma_max))
    throw ConfigError("train: need 0 <= sigma_min < sigma_max");
  if (!(lr > 0.0)) throw ConfigError("train: learning rate must be > 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
}

TrainMode TrainMode::lowpass(int depth) {
  if (depth < 0) throw ConfigError("train mode: depth must be >= 0");
  TrainMode m;
  m.kind = Kind::kLowpass;
  m.depth = depth;
  return m;
}

TrainMode TrainMode::conditional(int scale) {
  if (scale < 1) throw ConfigError("train mode: scale must be >= 1");
  TrainMode m;
  m.kind = Kind::kConditional;
  m.scale = scale;
  return m;
}

std::string TrainMode::to_string() const {
  if (kind == Kind::kLowpass) return "lowpass:" + std::to_string(depth);
  return "conditional:" + std::to_string(scale);
}

TrainMode TrainMode::parse(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("bad train mode '" + s + "'");
  std::string kind = s.substr(0, colon);
  int arg = std::stoi(s.substr(colon + 1));
  if (kind == "lowpass") return lowpass(arg);
  if (kind == "conditional") return conditional(arg);
  throw ConfigError("bad train mode '" + s + "'");
}

std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::ostringstream os;
  os << "epoch,step,loss\n";
  char line[96];
  for (const LossRecord& r : history) {
    std::snprintf(line, sizeof(line), "%d,%d,%.9g\n", r.epoch, r.step, r.loss);
    os << line;
  }
  return os.str();
}

ModelF Checkpoint::to_model() const {
  ModelF m;
  m.spec = spec;
  m.params = params;
  m.running_ms = running_ms;
  m.noise_min = sigma_min;
  m.noise_max = sigma_max;
  return m;
}

Checkpoint Checkpoint::from_model(const ModelF& model) {
  Checkpoint c;
  c.spec = model.spec;
  c.params = model.params;
  c.running_ms = model.running_ms;
  c.sigma_min = model.noise_min;
  c.sigma_max = model.noise_max;
  return c;
}

TrainingSample make_training_sample(const TensorD& image, const TrainMode& mode,
                                    double sigma, uint64_t noise_seed) {
  TrainingSample s;
  if (mode.kind == TrainMode::Kind::kLowpass) {
    TensorD band = image;
    if (mode.depth > 0) band = build_pyramid(image, mode.depth).lowpass;
    s.target = band;
    s.input = corrupt(band, sigma, noise_seed);
  } else {
    WaveletPyramid p = build_pyramid(image, mode.scale);
    const TensorD& details = p.detail(mode.scale);
    TensorD noisy = corrupt(details, sigma, noise_seed);
    const int m = details.dim(1), w = details.dim(2);
    TensorD input({4, m, w});
    std::copy_n(noisy.data(), noisy.numel(), input.data());
    std::copy_n(p.lowpass.data(), p.lowpass.numel(), input.data() + noisy.numel());
    s.input = std::move(input);
    s.target = details;
  }
  return s;
}

namespace {

TensorD hflip(const TensorD& image) {
  TensorD out(image.shape());
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ci, y, x) = image.at(ci, y, w - 1 - x);
  return out;
}

}  // namespace

Checkpoint train_denoiser(ModelF model, const Dataset& data, const TrainConfig& cfg,
                          const TrainMode& mode) {
  cfg.validate();
  if (data.train_size() < 1) throw ConfigError("train: empty training split");

  const int expected_in = mode.kind == TrainMode::Kind::kLowpass ? 1 : 4;
  const int expected_out = mode.kind == TrainMode::Kind::kLowpass ? 1 : 3;
  if (model.spec.in_channels != expected_in || model.spec.out_channels != expected_out)
    throw ConfigError("train: model is " + std::to_string(model.spec.in_channels) + "->" +
                      std::to_string(model.spec.out_channels) + " channels but mode " +
                      mode.to_string() + " needs " + std::to_string(expected_in) + "->" +
                      std::to_string(expected_out));

  Rng rng(cfg.seed);
  AdamState<float> adam;
  std::vector<LossRecord> history;

  double lr = cfg.lr;
  double best_smoothed = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<double> window;  // trailing losses for the plateau detector
  const size_t window_len = 50;

  std::vector<int> order(static_cast<size_t>(data.train_size()));
  std::iota(order.begin(), order.end(), 0);

  int step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Seeded Fisher-Yates reshuffle per epoch.
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(rng.next_u64() % i)]);

    for (int start = 0; start < data.train_size(); start += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, data.train_size() - start);
      std::vector<TrainingSample> samples;
      samples.reserve(static_cast<size_t>(bs));
      for (int b = 0; b < bs; ++b) {
        const TensorD& img = data.train_image(order[static_cast<size_t>(start + b)]);
        double sigma = rng.uniform(cfg.sigma_min, cfg.sigma_max);
        uint64_t noise_seed = rng.next_u64();
        bool flip = cfg.augment_hflip && rng.uniform() < 0.5;
        samples.push_back(make_training_sample(flip ? hflip(img) : img, mode, sigma, noise_seed));
      }

      const auto& in0 = samples[0].input;
      TensorF input({bs, in0.dim(0), in0.dim(1), in0.dim(2)});
      TensorF target({bs, samples[0].target.dim(0), samples[0].target.dim(1),
                      samples[0].target.dim(2)});
      for (int b = 0; b < bs; ++b) {
        const auto& s = samples[static_cast<size_t>(b)];
        for (int64_t i = 0; i < s.input.numel(); ++i)
          input[b * s.input.numel() + i] = static_cast<float>(s.input[i]);
        for (int64_t i = 0; i < s.target.numel(); ++i)
          target[b * s.target.numel() + i] = static_cast<float>(s.target[i]);
      }

      Tape<float> tape;
      auto in_id = tape.leaf(std::move(input), false);
      std::vector<Tape<float>::Id> pids, bn_ids;
      auto out_id =
          forward_on_tape(tape, model, in_id, NormMode::kTrain, true, &pids, &bn_ids);
      auto loss_id = tape.mean_squared_error(out_id, tape.leaf(std::move(target), false));
      const double loss = tape.value(loss_id)[0];
      if (!std::isfinite(loss))
        throw NumericError("train: non-finite loss at step " + std::to_string(step));
      tape.backward(loss_id);

      // Gather gradients and parameters for the layers that own them.
      std::vector<TensorF> grads;
      std::vector<TensorF> trainable;
      for (size_t li = 0; li < model.spec.layers.size(); ++li) {
        if (pids[li] < 0) continue;
        grads.push_back(tape.grad(pids[li]));
        trainable.push_back(model.params[li]);
      }
      adam_step(trainable, grads, adam, lr);
      size_t k = 0;
      for (size_t li = 0; li < model.spec.layers.size(); ++li)
        if (pids[li] >= 0) model.params[li] = std::move(trainable[k++]);

      // Running second-moment update for the batchnorm layers.
      for (size_t li = 0; li < model.spec.layers.size(); ++li) {
        if (bn_ids[li] < 0) continue;
        const auto& ms = tape.bn_batch_ms(bn_ids[li]);
        auto& run = model.running_ms[li];
        for (int64_t c = 0; c < run.numel(); ++c)
          run[c] = static_cast<float>((1.0 - kBatchNormMomentum) * run[c] +
                                      kBatchNormMomentum * ms[static_cast<size_t>(c)]);
      }

      ++step;
      history.push_back({epoch, step, loss});

      // Plateau decay on the smoothed loss.
      window.push_back(loss);
      if (window.size() > window_len) window.erase(window.begin());
      double smoothed =
          std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
      if (smoothed < best_smoothed * (1.0 - 1e-4)) {
        best_smoothed = smoothed;
        since_best = 0;
      } else if (++since_best >= cfg.patience && lr > cfg.lr_min) {
        lr = std::max(cfg.lr_min, lr * 0.5);
        since_best = 0;
      }
    }
  }

  Checkpoint ckpt = Checkpoint::from_model(model);
  ckpt.adam = std::move(adam);
  ckpt.epochs_trained = cfg.epochs;
  ckpt.seed = cfg.seed;
  ckpt.sigma_min = cfg.sigma_min;
  ckpt.sigma_max = cfg.sigma_max;
  ckpt.mode = mode.to_string();
  ckpt.loss_history = std::move(history);
  return ckpt;
}

}  // namespace wavescore
