#include "wavescore/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "wavescore/gaussian.hpp"
#include "wavescore/image_io.hpp"
#include "wavescore/rng.hpp"

namespace wavescore {

void DatasetSpec::validate() const {
  if (image_side < 8) throw ConfigError("dataset: image side must be >= 8");
  if (train_count < 0 || test_count < 0)
    throw ConfigError("dataset: split sizes must be >= 0");
  if (train_count + test_count == 0) throw ConfigError("dataset: empty dataset");
  if (source != "toyfaces" && source != "gaussfield" && source.rfind("dir:", 0) != 0)
    throw ConfigError("dataset: unknown source '" + source + "'");
}

namespace {

double smoothstep(double edge, double x) {
  // 0 -> 1 transition of width ~edge around x = 0.
  double t = std::clamp(0.5 + x / (2.0 * edge), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

TensorD toy_face(int side, uint64_t seed) {
  Rng rng(seed);
  const double s = static_cast<double>(side);

  // Smooth background: gentle plane plus one low-frequency wave.
  const double base = rng.uniform(0.35, 0.55);
  const double gx = rng.uniform(-0.1, 0.1), gy = rng.uniform(-0.1, 0.1);
  const double wamp = rng.uniform(0.0, 0.05);
  const double wfx = rng.uniform(0.5, 2.0), wfy = rng.uniform(0.5, 2.0);
  const double wph = rng.uniform(0.0, 6.283185307179586);

  // Head ellipse.
  const double cx = s * 0.5 + rng.uniform(-s / 16.0, s / 16.0);
  const double cy = s * 0.5 + rng.uniform(-s / 16.0, s / 16.0);
  const double ax = s * rng.uniform(0.24, 0.32);
  const double ay = s * rng.uniform(0.32, 0.40);
  const double head_sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double head_contrast = head_sign * rng.uniform(0.25, 0.45);
  const double edge = rng.uniform(0.02, 0.05);

  // Eyes and mouth, placed relative to the head.
  const double eye_dx = ax * rng.uniform(0.36, 0.48);
  const double eye_dy = ay * rng.uniform(0.25, 0.35);
  const double eye_r = s * rng.uniform(0.035, 0.055);
  const double eye_depth = rng.uniform(0.25, 0.5);
  const double mouth_dy = ay * rng.uniform(0.40, 0.52);
  const double mouth_hw = ax * rng.uniform(0.30, 0.45);
  const double mouth_hh = s * rng.uniform(0.018, 0.035);
  const double mouth_depth = rng.uniform(0.2, 0.4);

  TensorD img({1, side, side});
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double u = x / s, v = y / s;
      double val = base + gx * (u - 0.5) + gy * (v - 0.5) +
                   wamp * std::cos(6.283185307179586 * (wfx * u + wfy * v) + wph);

      const double rx = (x - cx) / ax, ry = (y - cy) / ay;
      const double r = std::sqrt(rx * rx + ry * ry);
      const double head = smoothstep(edge, 1.0 - r);
      val += head_contrast * head;

      auto blob = [&](double bx, double by, double radius) {
        const double dx = (x - bx) / radius, dy = (y - by) / radius;
        return std::exp(-0.5 * (dx * dx + dy * dy));
      };
      const double face_tone = base + head_contrast;
      const double feature_sign = face_tone > 0.5 ? -1.0 : 1.0;
      val += feature_sign * eye_depth * head *
             (blob(cx - eye_dx, cy - eye_dy, eye_r) + blob(cx + eye_dx, cy - eye_dy, eye_r));

      const double mx = std::abs(x - cx) / mouth_hw, my = std::abs(y - (cy + mouth_dy)) / mouth_hh;
      const double mouth = smoothstep(0.2, 1.0 - std::max(mx, my));
      val += feature_sign * mouth_depth * head * mouth;

      img.at(0, y, x) = std::clamp(val, 0.0, 1.0);
    }
  }
  return img;
}

TensorD gauss_field(int side, uint64_t seed) {
  GaussianModel m = GaussianModel::powerlaw(OracleBasis::kFourierDiagonal, side, 2.0);
  m.variances[0] = 0.0;  // zero the DC component; the mid-gray offset replaces it
  TensorD g = sample_exact(m, seed);
  double rms = std::sqrt(g.sum_squares() / static_cast<double>(g.numel()));
  double gain = rms > 0 ? 0.15 / rms : 0.0;
  TensorD img(g.shape());
  for (int64_t i = 0; i < g.numel(); ++i)
    img[i] = std::clamp(0.5 + gain * g[i], 0.0, 1.0);
  return img;
}

Dataset Dataset::load(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.side_ = spec.image_side;
  if (spec.source == "toyfaces" || spec.source == "gaussfield") {
    auto gen = spec.source == "toyfaces" ? toy_face : gauss_field;
    ds.train_.reserve(static_cast<size_t>(spec.train_count));
    for (int i = 0; i < spec.train_count; ++i)
      ds.train_.push_back(gen(spec.image_side, spec.seed + static_cast<uint64_t>(i)));
    ds.test_.reserve(static_cast<size_t>(spec.test_count));
    // Disjoint seed stream for the held-out split.
    for (int i = 0; i < spec.test_count; ++i)
      ds.test_.push_back(
          gen(spec.image_side, spec.seed + 0x100000ull + static_cast<uint64_t>(i)));
    return ds;
  }

  std::string dir = spec.source.substr(4);
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    if (ext == ".pgm" || ext == ".png") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (static_cast<int>(files.size()) < spec.train_count + spec.test_count)
    throw ConfigError("dataset: directory " + dir + " holds " +
                      std::to_string(files.size()) + " images, need " +
                      std::to_string(spec.train_count + spec.test_count));
  for (int i = 0; i < spec.train_count + spec.test_count; ++i) {
    TensorD img = read_image(files[static_cast<size_t>(i)]);
    if (img.dim(1) != spec.image_side || img.dim(2) != spec.image_side)
      throw DimensionError("dataset: " + files[static_cast<size_t>(i)] + " is " +
                           shape_string(img.shape()) + ", expected side " +
                           std::to_string(spec.image_side));
    if (i < spec.train_count)
      ds.train_.push_back(std::move(img));
    else
      ds.test_.push_back(std::move(img));
  }
  return ds;
}

}  // namespace wavescore
