#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "wavescore/config.hpp"
#include "wavescore/dataset.hpp"
#include "wavescore/image_io.hpp"
#include "wavescore/rng.hpp"

using namespace wavescore;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("pgm round trip within 8-bit quantization") {
  TensorD img({1, 12, 9});
  Rng rng(1);
  for (int64_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform();
  std::string p = temp_path("ws_io.pgm");
  write_pgm(img, p);
  TensorD back = read_image(p);
  REQUIRE(back.shape() == img.shape());
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(std::abs(back[i] - img[i]) <= 0.5 / 255.0 + 1e-12);
  std::filesystem::remove(p);
}

TEST_CASE("png gray round trip within 8-bit quantization") {
  TensorD img({1, 7, 11});
  Rng rng(2);
  for (int64_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform();
  std::string p = temp_path("ws_io.png");
  write_png_gray(img, p);
  TensorD back = read_image(p);
  REQUIRE(back.shape() == img.shape());
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(std::abs(back[i] - img[i]) <= 0.5 / 255.0 + 1e-12);
  std::filesystem::remove(p);
}

TEST_CASE("reading a missing or bogus file fails cleanly") {
  CHECK_THROWS_AS(read_image("/nonexistent/img.pgm"), IoError);
  std::string p = temp_path("ws_io_bogus.bin");
  std::ofstream(p, std::ios::binary) << "not an image at all";
  CHECK_THROWS_AS(read_image(p), IoError);
  std::filesystem::remove(p);
}

TEST_CASE("heatmap ramp endpoints and constant input") {
  auto red = heatmap_color(0.0);
  CHECK(red[0] == 255);
  CHECK(red[1] == 0);
  CHECK(red[2] == 0);
  auto black = heatmap_color(1.0);
  CHECK(black[0] == 0);

  TensorD flat({1, 4, 4});
  std::string p = temp_path("ws_heat_flat.png");
  export_heatmap(flat, p);
  int w = 0, h = 0;
  auto rgb = read_png_rgb(p, &w, &h);
  REQUIRE(w == 4);
  REQUIRE(h == 4);
  for (int i = 0; i < w * h; ++i) {
    CHECK(static_cast<int>(rgb[static_cast<size_t>(i) * 3]) == 128);  // midpoint
    CHECK(rgb[static_cast<size_t>(i) * 3 + 1] == 0);
  }
  std::filesystem::remove(p);
}

TEST_CASE("heatmap round trip recovers values to 8-bit accuracy") {
  TensorD filt({1, 6, 6});
  Rng rng(3);
  for (int64_t i = 0; i < filt.numel(); ++i) filt[i] = rng.uniform(-0.4, 0.9);
  double lo = filt[0], hi = filt[0];
  for (int64_t i = 0; i < filt.numel(); ++i) {
    lo = std::min(lo, filt[i]);
    hi = std::max(hi, filt[i]);
  }
  std::string p = temp_path("ws_heat.png");
  export_heatmap(filt, p);
  int w = 0, h = 0;
  auto rgb = read_png_rgb(p, &w, &h);
  // Invert the ramp: t = 1 - r/255, value = lo + t (hi - lo).
  for (int64_t i = 0; i < filt.numel(); ++i) {
    double t = 1.0 - rgb[static_cast<size_t>(i) * 3] / 255.0;
    double v = lo + t * (hi - lo);
    CHECK(std::abs(v - filt[i]) <= (hi - lo) / 255.0 * 0.5 + 1e-9);
  }
  // Extremes map to pure red and pure black.
  for (int64_t i = 0; i < filt.numel(); ++i) {
    if (filt[i] == lo) CHECK(rgb[static_cast<size_t>(i) * 3] == 255);
    if (filt[i] == hi) CHECK(rgb[static_cast<size_t>(i) * 3] == 0);
  }
  std::filesystem::remove(p);
}

TEST_CASE("config parser: sections, comments, unknown keys") {
  std::string text =
      "# experiment configuration\n"
      "[model]\n"
      "lowpass = lp.ckpt\n"
      "conditional1 = c1.ckpt   # finest scale\n"
      "conditional2 = c2.ckpt\n"
      "oracle_basis = haar-diagonal\n"
      "oracle_spectrum = powerlaw:1.0\n"
      "[data]\n"
      "source = toyfaces\n"
      "image_side = 64\n"
      "train_count = 100\n"
      "test_count = 10\n"
      "seed = 3\n"
      "[sampler]\n"
      "h = 0.02\n"
      "beta = 0.5\n"
      "[experiment]\n"
      "seed = 11\n"
      "noise_grid = 0.1, 0.2,0.4\n"
      "depth = 2\n";
  ExperimentConfig cfg =
      ExperimentConfig::from_config(ConfigFile::parse_string(text, "test"));
  CHECK(cfg.lowpass_ckpt == "lp.ckpt");
  REQUIRE(cfg.conditional_ckpts.size() == 2);
  CHECK(cfg.conditional_ckpts[0] == "c1.ckpt");
  CHECK(cfg.conditional_ckpts[1] == "c2.ckpt");
  CHECK(cfg.oracle_basis == "haar-diagonal");
  CHECK(cfg.data.image_side == 64);
  CHECK(cfg.sampler.h == 0.02);
  CHECK(cfg.sampler.seed == 11);
  REQUIRE(cfg.noise_grid.size() == 3);
  CHECK(cfg.noise_grid[1] == 0.2);

  CHECK_THROWS_WITH_AS(
      ExperimentConfig::from_config(ConfigFile::parse_string("[model]\nwat = 1\n", "t")),
      "unknown key 'wat' in [model]", ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_config(ConfigFile::parse_string("[nope]\na = 1\n", "t")),
      ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("key = 1\n", "t"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[model\n", "t"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_file("/nonexistent.cfg"), IoError);
}

TEST_CASE("toy faces are deterministic, bounded, and geometrically varied") {
  TensorD a = toy_face(64, 9);
  TensorD b = toy_face(64, 9);
  TensorD c = toy_face(64, 10);
  double same = 0, diff = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    same = std::max(same, std::abs(a[i] - b[i]));
    diff = std::max(diff, std::abs(a[i] - c[i]));
    CHECK(a[i] >= 0.0);
    CHECK(a[i] <= 1.0);
  }
  CHECK(same == 0.0);
  CHECK(diff > 0.05);
}

TEST_CASE("gauss field is deterministic and bounded") {
  TensorD a = gauss_field(32, 4);
  TensorD b = gauss_field(32, 4);
  for (int64_t i = 0; i < a.numel(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i] >= 0.0);
    CHECK(a[i] <= 1.0);
  }
}

TEST_CASE("directory datasets load sorted and validated") {
  auto dir = std::filesystem::temp_directory_path() / "ws_ds";
  std::filesystem::create_directories(dir);
  for (int i = 0; i < 4; ++i) {
    TensorD img = toy_face(16, static_cast<uint64_t>(i));
    write_pgm(img, (dir / ("img" + std::to_string(i) + ".pgm")).string());
  }
  DatasetSpec spec;
  spec.source = "dir:" + dir.string();
  spec.image_side = 16;
  spec.train_count = 3;
  spec.test_count = 1;
  Dataset ds = Dataset::load(spec);
  CHECK(ds.train_size() == 3);
  CHECK(ds.test_size() == 1);

  spec.train_count = 10;
  CHECK_THROWS_AS(Dataset::load(spec), ConfigError);
  spec.train_count = 3;
  spec.image_side = 32;
  CHECK_THROWS_AS(Dataset::load(spec), DimensionError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset spec validation") {
  DatasetSpec spec;
  spec.source = "warp";
  spec.train_count = 1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.source = "toyfaces";
  spec.train_count = 0;
  spec.test_count = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}
