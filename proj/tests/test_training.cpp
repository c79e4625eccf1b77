#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wavescore/autodiff.hpp"
#include "wavescore/dataset.hpp"
#include "wavescore/pipeline.hpp"
#include "wavescore/rng.hpp"
#include "wavescore/training.hpp"
#include "wavescore/wavelet.hpp"

using namespace wavescore;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Checkpoint tiny_checkpoint() {
  ModelF model = init_model<float>(
      make_lowpass_spec({.conv_layers = 3, .width = 4}), 7);
  Checkpoint c = Checkpoint::from_model(model);
  c.mode = TrainMode::lowpass(2).to_string();
  c.loss_history = {{1, 1, 0.5}, {1, 2, 0.25}};
  c.adam.init_like(std::vector<TensorF>{model.params[0]});
  c.adam.steps = 2;
  return c;
}

}  // namespace

TEST_CASE("corrupt with sigma 0 is exact, and seeds are reproducible") {
  TensorD x({1, 8, 8});
  Rng rng(1);
  rng.fill_normal(x);
  TensorD y0 = corrupt(x, 0.0, 5);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y0[i] == x[i]);
  TensorD ya = corrupt(x, 0.3, 6);
  TensorD yb = corrupt(x, 0.3, 6);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(ya[i] == yb[i]);
  CHECK_THROWS_AS(corrupt(x, -0.1, 0), ConfigError);
}

TEST_CASE("corruption noise has the configured variance") {
  // Monte-Carlo oracle: 10^6 samples, sigma^2 = 0.25 within 1%.
  TensorD x({1, 1000, 1000});
  TensorD y = corrupt(x, 0.5, 99);
  double var = y.sum_squares() / static_cast<double>(y.numel());
  CHECK(std::abs(var - 0.25) < 0.0025);
}

TEST_CASE("training samples keep the conditioning channel clean") {
  TensorD img = toy_face(32, 4);
  TrainMode mode = TrainMode::conditional(2);
  TrainingSample s = make_training_sample(img, mode, 0.5, 11);
  WaveletPyramid p = build_pyramid(img, 2);
  REQUIRE(s.input.shape() == std::vector<int>{4, 8, 8});
  // Channel 3 is the clean low-pass band, bit for bit.
  for (int64_t i = 0; i < p.lowpass.numel(); ++i)
    CHECK(s.input[3 * 64 + i] == p.lowpass[i]);
  // The detail channels are corrupted.
  double diff = 0;
  for (int64_t i = 0; i < s.target.numel(); ++i)
    diff = std::max(diff, std::abs(s.input[i] - s.target[i]));
  CHECK(diff > 0.05);
}

TEST_CASE("low-pass sample at depth 0 trains in the pixel domain") {
  TensorD img = toy_face(16, 5);
  TrainingSample s = make_training_sample(img, TrainMode::lowpass(0), 0.0, 0);
  CHECK(s.input.shape() == img.shape());
  for (int64_t i = 0; i < img.numel(); ++i) CHECK(s.target[i] == img[i]);
}

TEST_CASE("one-pair overfit drives the loss below 1e-4 within 2000 steps") {
  TensorD clean = toy_face(16, 21);
  TensorD noisy = corrupt(clean, 0.1, 22);
  TensorF input({1, 1, 16, 16}), target({1, 1, 16, 16});
  for (int64_t i = 0; i < clean.numel(); ++i) {
    input[i] = static_cast<float>(noisy[i]);
    target[i] = static_cast<float>(clean[i]);
  }
  ModelF model = init_model<float>(
      make_lowpass_spec({.conv_layers = 5, .width = 16}), 23);
  AdamState<float> adam;
  double loss = 1.0;
  for (int step = 0; step < 2000 && loss >= 1e-4; ++step) {
    Tape<float> tape;
    auto in = tape.leaf(input, false);
    std::vector<Tape<float>::Id> pids;
    auto out = forward_on_tape(tape, model, in, NormMode::kTrain, true, &pids);
    auto loss_id = tape.mean_squared_error(out, tape.leaf(target, false));
    loss = tape.value(loss_id)[0];
    tape.backward(loss_id);
    std::vector<TensorF> grads, params;
    for (size_t li = 0; li < model.spec.layers.size(); ++li) {
      if (pids[li] < 0) continue;
      grads.push_back(tape.grad(pids[li]));
      params.push_back(model.params[li]);
    }
    adam_step(params, grads, adam, 3e-3);
    size_t k = 0;
    for (size_t li = 0; li < model.spec.layers.size(); ++li)
      if (pids[li] >= 0) model.params[li] = std::move(params[k++]);
  }
  CHECK(loss < 1e-4);
}

TEST_CASE("short training run: smoothed loss non-increasing, beats the identity") {
  DatasetSpec dspec;
  dspec.source = "toyfaces";
  dspec.image_side = 16;
  dspec.train_count = 96;
  dspec.test_count = 16;
  dspec.seed = 31;
  Dataset data = Dataset::load(dspec);

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 16;
  cfg.lr = 2e-3;
  cfg.seed = 32;
  ModelF model = init_model<float>(
      make_lowpass_spec({.conv_layers = 4, .width = 12}), 33);
  Checkpoint ckpt = train_denoiser(model, data, cfg, TrainMode::lowpass(0));

  // Per-epoch means, then a window-10 moving average; the smoothed curve
  // must be non-increasing.
  std::vector<double> per_epoch(static_cast<size_t>(cfg.epochs), 0.0);
  std::vector<int> counts(static_cast<size_t>(cfg.epochs), 0);
  for (const auto& r : ckpt.loss_history) {
    per_epoch[static_cast<size_t>(r.epoch - 1)] += r.loss;
    counts[static_cast<size_t>(r.epoch - 1)] += 1;
  }
  for (size_t e = 0; e < per_epoch.size(); ++e) per_epoch[e] /= counts[e];
  std::vector<double> smoothed;
  const int win = 10;
  for (size_t e = 0; e + win <= per_epoch.size(); ++e) {
    double s = 0;
    for (int k = 0; k < win; ++k) s += per_epoch[e + static_cast<size_t>(k)];
    smoothed.push_back(s / win);
  }
  REQUIRE(smoothed.size() >= 2);
  for (size_t i = 1; i < smoothed.size(); ++i) CHECK(smoothed[i] <= smoothed[i - 1]);

  // Held-out comparison against the identity map at sigma = 0.2.
  ModelF trained = ckpt.to_model();
  double mse_f = 0, mse_id = 0;
  for (int i = 0; i < data.test_size(); ++i) {
    const TensorD& x = data.test_image(i);
    TensorD y = corrupt(x, 0.2, 4000 + static_cast<uint64_t>(i));
    TensorD xhat = denoiser_from_model(trained)(y);
    for (int64_t k = 0; k < x.numel(); ++k) {
      mse_f += (xhat[k] - x[k]) * (xhat[k] - x[k]);
      mse_id += (y[k] - x[k]) * (y[k] - x[k]);
    }
  }
  CHECK(mse_f < mse_id);
}

TEST_CASE("channel mismatch between model and mode is rejected") {
  DatasetSpec dspec;
  dspec.source = "gaussfield";
  dspec.image_side = 16;
  dspec.train_count = 4;
  dspec.test_count = 1;
  Dataset data = Dataset::load(dspec);
  ModelF model = init_model<float>(make_lowpass_spec({.conv_layers = 3, .width = 4}), 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train_denoiser(model, data, cfg, TrainMode::conditional(1)),
                  ConfigError);
}

TEST_CASE("train mode strings round trip") {
  CHECK(TrainMode::parse("lowpass:2").to_string() == "lowpass:2");
  CHECK(TrainMode::parse("conditional:1").to_string() == "conditional:1");
  CHECK_THROWS_AS(TrainMode::parse("bogus"), ConfigError);
}

TEST_CASE("loss history CSV format") {
  std::string csv = loss_history_csv({{1, 1, 0.5}, {2, 7, 0.125}});
  CHECK(csv == "epoch,step,loss\n1,1,0.5\n2,7,0.125\n");
}

TEST_CASE("checkpoint round trip is byte-identical") {
  Checkpoint c = tiny_checkpoint();
  std::string p1 = temp_path("ws_ckpt_a.bin");
  std::string p2 = temp_path("ws_ckpt_b.bin");
  save_checkpoint(c, p1);
  Checkpoint back = load_checkpoint(p1);
  save_checkpoint(back, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(back.mode == c.mode);
  CHECK(back.loss_history.size() == c.loss_history.size());
  CHECK(back.adam.steps == 2);
  REQUIRE(back.params.size() == c.params.size());
  for (size_t i = 0; i < c.params.size(); ++i) {
    REQUIRE(back.params[i].numel() == c.params[i].numel());
    for (int64_t j = 0; j < c.params[i].numel(); ++j)
      CHECK(back.params[i][j] == c.params[i][j]);
  }
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("checkpoint corruption and truncation are detected") {
  Checkpoint c = tiny_checkpoint();
  std::string p = temp_path("ws_ckpt_corrupt.bin");
  save_checkpoint(c, p);
  std::string bytes = slurp(p);

  // Flip one byte in the middle.
  std::string corrupted = bytes;
  corrupted[corrupted.size() / 2] = static_cast<char>(corrupted[corrupted.size() / 2] ^ 0x40);
  std::ofstream(p, std::ios::binary).write(corrupted.data(), static_cast<std::streamsize>(corrupted.size()));
  CHECK_THROWS_AS(load_checkpoint(p), IntegrityError);

  // Truncate.
  std::ofstream(p, std::ios::binary)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(p), IntegrityError);
  std::filesystem::remove(p);
}

TEST_CASE("newer checkpoint versions are refused with both versions named") {
  Checkpoint c = tiny_checkpoint();
  c.version = 2;
  std::string p = temp_path("ws_ckpt_v2.bin");
  save_checkpoint(c, p);
  try {
    load_checkpoint(p);
    FAIL("expected VersionError");
  } catch (const VersionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("2") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
  std::filesystem::remove(p);
}

TEST_CASE("missing checkpoint file raises IoError") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path/model.ckpt"), IoError);
}
