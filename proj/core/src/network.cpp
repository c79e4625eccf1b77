#include "wavescore/network.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "wavescore/rng.hpp"

namespace wavescore {

void NetworkSpec::validate() const {
  if (layers.empty()) throw ConfigError("network spec has no layers");
  for (const LayerSpec& l : layers) l.validate();
  if (layers.front().kind != LayerKind::kConv || layers.back().kind != LayerKind::kConv)
    throw ConfigError("network spec: first and last layers must be convolutions");
  if (layers.front().in_channels != in_channels)
    throw ConfigError("network spec: first conv in_channels disagrees with spec");
  if (layers.back().out_channels != out_channels)
    throw ConfigError("network spec: last conv out_channels disagrees with spec");

  int width = in_channels;
  size_t last_conv = layers.size() - 1;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::kConv:
        if (l.in_channels != width)
          throw ConfigError("network spec: conv at layer " + std::to_string(i) +
                            " expects " + std::to_string(l.in_channels) +
                            " channels, gets " + std::to_string(width));
        width = l.out_channels;
        if (i != 0 && i != last_conv) {
          if (i + 2 >= layers.size() || layers[i + 1].kind != LayerKind::kRelu ||
              layers[i + 2].kind != LayerKind::kBatchNorm)
            throw ConfigError("network spec: intermediate conv at layer " +
                              std::to_string(i) + " must be followed by relu+batchnorm");
        }
        break;
      case LayerKind::kRelu:
        if (i == 0 || layers[i - 1].kind != LayerKind::kConv)
          throw ConfigError("network spec: relu at layer " + std::to_string(i) +
                            " must follow a conv");
        break;
      case LayerKind::kBatchNorm:
        if (i == 0 || layers[i - 1].kind != LayerKind::kRelu)
          throw ConfigError("network spec: batchnorm at layer " + std::to_string(i) +
                            " must follow a relu");
        if (l.channels != width)
          throw ConfigError("network spec: batchnorm channel count mismatch at layer " +
                            std::to_string(i));
        break;
    }
  }
}

int receptive_field(const NetworkSpec& spec) {
  int rf = 1;
  for (const LayerSpec& l : spec.layers)
    if (l.kind == LayerKind::kConv) rf += l.kernel_size - 1;
  return rf;
}

int64_t parameter_count(const NetworkSpec& spec) {
  int64_t n = 0;
  for (const LayerSpec& l : spec.layers) {
    if (l.kind == LayerKind::kConv)
      n += static_cast<int64_t>(l.out_channels) * l.in_channels * l.kernel_size *
           l.kernel_size;
    else if (l.kind == LayerKind::kBatchNorm)
      n += l.channels;
  }
  return n;
}

std::string NetworkSpec::to_text() const {
  std::ostringstream os;
  os << "name = " << name << "\n";
  os << "in_channels = " << in_channels << "\n";
  os << "out_channels = " << out_channels << "\n";
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    os << "layer" << i << " = ";
    switch (l.kind) {
      case LayerKind::kConv:
        os << "conv " << l.in_channels << " " << l.out_channels << " " << l.kernel_size;
        break;
      case LayerKind::kRelu:
        os << "relu";
        break;
      case LayerKind::kBatchNorm: {
        char eps[64];
        std::snprintf(eps, sizeof(eps), "%.17g", l.epsilon);
        os << "batchnorm " << l.channels << " " << eps;
        break;
      }
    }
    os << "\n";
  }
  return os.str();
}

NetworkSpec NetworkSpec::from_text(const std::string& text) {
  NetworkSpec spec;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("network spec text: missing '=' in line: " + line);
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "name") {
      spec.name = val;
    } else if (key == "in_channels") {
      spec.in_channels = std::stoi(val);
    } else if (key == "out_channels") {
      spec.out_channels = std::stoi(val);
    } else if (key.rfind("layer", 0) == 0) {
      size_t idx = std::stoul(key.substr(5));
      if (idx != spec.layers.size())
        throw ConfigError("network spec text: layer keys out of order at " + key);
      std::istringstream ls(val);
      std::string kind;
      ls >> kind;
      if (kind == "conv") {
        int ic, oc, k;
        if (!(ls >> ic >> oc >> k))
          throw ConfigError("network spec text: malformed conv layer: " + val);
        spec.layers.push_back(LayerSpec::conv(ic, oc, k));
      } else if (kind == "relu") {
        spec.layers.push_back(LayerSpec::relu());
      } else if (kind == "batchnorm") {
        int ch;
        double eps;
        if (!(ls >> ch >> eps))
          throw ConfigError("network spec text: malformed batchnorm layer: " + val);
        spec.layers.push_back(LayerSpec::batchnorm(ch, eps));
      } else {
        throw ConfigError("network spec text: unknown layer kind '" + kind + "'");
      }
    } else {
      throw ConfigError("network spec text: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

template <typename T>
TensorT<T> ModelT<T>::forward(const TensorT<T>& input, NormMode mode) const {
  if (input.rank() != 4) throw DimensionError("model forward: input must be BxCxHxW");
  if (input.dim(1) != spec.in_channels)
    throw DimensionError("model forward: expected " + std::to_string(spec.in_channels) +
                         " channels, got " + std::to_string(input.dim(1)));
  TensorT<T> x = input;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::kConv:
        x = conv2d_biasfree(x, params[i]);
        break;
      case LayerKind::kRelu:
        x = relu(x);
        break;
      case LayerKind::kBatchNorm:
        x = batchnorm_biasfree(x, params[i], running_ms[i], mode,
                               static_cast<T>(l.epsilon))
                .y;
        break;
    }
  }
  return x;
}

template <typename T>
std::vector<TensorT<T>*> ModelT<T>::trainable_params() {
  std::vector<TensorT<T>*> out;
  for (auto& p : params)
    if (!p.empty()) out.push_back(&p);
  return out;
}

template <typename T>
int64_t ModelT<T>::parameter_count() const {
  int64_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

template <typename T>
typename Tape<T>::Id forward_on_tape(Tape<T>& tape, const ModelT<T>& model,
                                     typename Tape<T>::Id input, NormMode mode,
                                     bool params_require_grad,
                                     std::vector<typename Tape<T>::Id>* param_ids,
                                     std::vector<typename Tape<T>::Id>* bn_node_ids) {
  using Id = typename Tape<T>::Id;
  Id x = input;
  for (size_t i = 0; i < model.spec.layers.size(); ++i) {
    const LayerSpec& l = model.spec.layers[i];
    Id pid = -1, bnid = -1;
    switch (l.kind) {
      case LayerKind::kConv:
        pid = tape.leaf(model.params[i], params_require_grad);
        x = tape.conv2d(x, pid);
        break;
      case LayerKind::kRelu:
        x = tape.relu(x);
        break;
      case LayerKind::kBatchNorm:
        pid = tape.leaf(model.params[i], params_require_grad);
        x = tape.batchnorm(x, pid, model.running_ms[i], mode,
                           static_cast<T>(l.epsilon));
        bnid = x;
        break;
    }
    if (param_ids) param_ids->push_back(pid);
    if (bn_node_ids) bn_node_ids->push_back(bnid);
  }
  return x;
}

namespace {

// Evenly spaced positions (1-based, first and last included) for m 3x3
// kernels among n conv layers.
std::vector<int> kernel_positions(int m, int n) {
  std::vector<int> pos;
  if (m <= 0) return pos;
  if (m == 1) {
    pos.push_back(1);
    return pos;
  }
  for (int i = 0; i < m; ++i) {
    double p = 1.0 + static_cast<double>(i) * (n - 1) / (m - 1);
    pos.push_back(static_cast<int>(std::llround(p)));
  }
  return pos;
}

NetworkSpec make_mixed_spec(const std::string& name, int in_ch, int out_ch, int rf,
                            int conv_layers, int width) {
  if (conv_layers < 2) throw ConfigError("need at least 2 conv layers");
  if (width < 1) throw ConfigError("channel width must be positive");
  if (rf < 1 || rf % 2 == 0)
    throw ConfigError("receptive field must be odd and positive, got " +
                      std::to_string(rf));
  int m = (rf - 1) / 2;
  if (m > conv_layers)
    throw ConfigError("receptive field " + std::to_string(rf) +
                      " not achievable with " + std::to_string(conv_layers) +
                      " conv layers");
  std::vector<int> pos = kernel_positions(m, conv_layers);
  std::vector<bool> is3(static_cast<size_t>(conv_layers + 1), false);
  for (int p : pos) is3[static_cast<size_t>(p)] = true;

  NetworkSpec spec;
  spec.name = name;
  spec.in_channels = in_ch;
  spec.out_channels = out_ch;
  for (int i = 1; i <= conv_layers; ++i) {
    int k = is3[static_cast<size_t>(i)] ? 3 : 1;
    int ic = (i == 1) ? in_ch : width;
    int oc = (i == conv_layers) ? out_ch : width;
    spec.layers.push_back(LayerSpec::conv(ic, oc, k));
    if (i != 1 && i != conv_layers) {
      spec.layers.push_back(LayerSpec::relu());
      spec.layers.push_back(LayerSpec::batchnorm(width));
    }
  }
  spec.validate();
  return spec;
}

}  // namespace

NetworkSpec make_lowpass_spec(const LowpassConfig& cfg) {
  if (cfg.conv_layers < 2) throw ConfigError("lowpass CNN needs at least 2 conv layers");
  if (cfg.width < 1) throw ConfigError("lowpass CNN width must be positive");
  NetworkSpec spec;
  spec.name = "lowpass-l" + std::to_string(cfg.conv_layers) + "-w" +
              std::to_string(cfg.width);
  spec.in_channels = cfg.in_channels;
  spec.out_channels = cfg.out_channels;
  for (int i = 1; i <= cfg.conv_layers; ++i) {
    int ic = (i == 1) ? cfg.in_channels : cfg.width;
    int oc = (i == cfg.conv_layers) ? cfg.out_channels : cfg.width;
    spec.layers.push_back(LayerSpec::conv(ic, oc, 3));
    if (i != 1 && i != cfg.conv_layers) {
      spec.layers.push_back(LayerSpec::relu());
      spec.layers.push_back(LayerSpec::batchnorm(cfg.width));
    }
  }
  spec.validate();
  return spec;
}

NetworkSpec make_conditional_spec(int rf, const ConditionalConfig& cfg) {
  return make_mixed_spec("ccnn-rf" + std::to_string(rf) + "-l" +
                             std::to_string(cfg.conv_layers) + "-w" +
                             std::to_string(cfg.width),
                         4, 3, rf, cfg.conv_layers, cfg.width);
}

NetworkSpec make_pixel_spec(int rf, const ConditionalConfig& cfg) {
  return make_mixed_spec("pixel-rf" + std::to_string(rf) + "-l" +
                             std::to_string(cfg.conv_layers) + "-w" +
                             std::to_string(cfg.width),
                         1, 1, rf, cfg.conv_layers, cfg.width);
}

template <typename T>
ModelT<T> init_model(const NetworkSpec& spec, uint64_t seed) {
  spec.validate();
  ModelT<T> model;
  model.spec = spec;
  model.params.resize(spec.layers.size());
  model.running_ms.resize(spec.layers.size());
  Rng rng(seed);
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (l.kind == LayerKind::kConv) {
      TensorT<T> w({l.out_channels, l.in_channels, l.kernel_size, l.kernel_size});
      // Kaiming fan-in scaling for ReLU stacks.
      double stddev = std::sqrt(2.0 / (static_cast<double>(l.in_channels) *
                                       l.kernel_size * l.kernel_size));
      rng.fill_normal(w, stddev);
      model.params[i] = std::move(w);
    } else if (l.kind == LayerKind::kBatchNorm) {
      model.params[i] = TensorT<T>::full({l.channels}, T(1));
      model.running_ms[i] = TensorT<T>::full({l.channels}, T(1));
    }
  }
  return model;
}

ModelF build_lowpass_denoiser(const LowpassConfig& cfg, uint64_t seed) {
  return init_model<float>(make_lowpass_spec(cfg), seed);
}

ModelF build_conditional_denoiser(int rf, const ConditionalConfig& cfg, uint64_t seed) {
  return init_model<float>(make_conditional_spec(rf, cfg), seed);
}

template <typename T>
TensorT<T> jacobian_row(const ModelT<T>& model, const TensorT<T>& input, int channel,
                        int row, int col) {
  if (input.rank() != 3) throw DimensionError("jacobian_row: input must be CxHxW");
  TensorT<T> batched({1, input.dim(0), input.dim(1), input.dim(2)});
  std::copy_n(input.data(), input.numel(), batched.data());

  Tape<T> tape;
  auto in_id = tape.leaf(std::move(batched), /*requires_grad=*/true);
  auto out_id = forward_on_tape(tape, model, in_id, NormMode::kEval,
                                /*params_require_grad=*/false);
  const TensorT<T>& out = tape.value(out_id);
  if (channel < 0 || channel >= out.dim(1) || row < 0 || row >= out.dim(2) || col < 0 ||
      col >= out.dim(3))
    throw IndexError("jacobian_row: coordinate out of range");
  auto pick = tape.select(out_id, {0, channel, row, col});
  tape.backward(pick);

  const TensorT<T>& g = tape.grad(in_id);
  TensorT<T> out_row(input.shape());
  std::copy_n(g.data(), g.numel(), out_row.data());
  return out_row;
}

std::function<TensorD(const TensorD&)> denoiser_from_model(const ModelF& model) {
  return [model](const TensorD& y) {
    if (y.rank() != 3) throw DimensionError("model denoiser: input must be CxHxW");
    TensorF batched({1, y.dim(0), y.dim(1), y.dim(2)});
    for (int64_t i = 0; i < y.numel(); ++i) batched[i] = static_cast<float>(y[i]);
    TensorF out = model.forward(batched, NormMode::kEval);
    TensorD result({out.dim(1), out.dim(2), out.dim(3)});
    for (int64_t i = 0; i < result.numel(); ++i) result[i] = static_cast<double>(out[i]);
    return result;
  };
}

std::function<TensorD(const TensorD&, const TensorD&)> conditional_denoiser_from_model(
    const ModelF& model) {
  return [model](const TensorD& details, const TensorD& lowpass) {
    if (details.rank() != 3 || details.dim(0) != 3)
      throw DimensionError("conditional denoiser: details must be 3xMxM");
    if (lowpass.rank() != 3 || lowpass.dim(0) != 1 ||
        lowpass.dim(1) != details.dim(1) || lowpass.dim(2) != details.dim(2))
      throw DimensionError("conditional denoiser: conditioning band size mismatch");
    const int m = details.dim(1), w = details.dim(2);
    TensorF batched({1, 4, m, w});
    for (int64_t i = 0; i < details.numel(); ++i)
      batched[i] = static_cast<float>(details[i]);
    for (int64_t i = 0; i < lowpass.numel(); ++i)
      batched[details.numel() + i] = static_cast<float>(lowpass[i]);
    TensorF out = model.forward(batched, NormMode::kEval);
    TensorD result({3, m, w});
    for (int64_t i = 0; i < result.numel(); ++i) result[i] = static_cast<double>(out[i]);
    return result;
  };
}

template struct ModelT<float>;
template struct ModelT<double>;
template ModelT<float> init_model<float>(const NetworkSpec&, uint64_t);
template ModelT<double> init_model<double>(const NetworkSpec&, uint64_t);
template Tape<float>::Id forward_on_tape<float>(Tape<float>&, const ModelT<float>&,
                                                Tape<float>::Id, NormMode, bool,
                                                std::vector<Tape<float>::Id>*,
                                                std::vector<Tape<float>::Id>*);
template Tape<double>::Id forward_on_tape<double>(Tape<double>&, const ModelT<double>&,
                                                  Tape<double>::Id, NormMode, bool,
                                                  std::vector<Tape<double>::Id>*,
                                                  std::vector<Tape<double>::Id>*);
template TensorT<float> jacobian_row<float>(const ModelT<float>&, const TensorT<float>&,
                                            int, int, int);
template TensorT<double> jacobian_row<double>(const ModelT<double>&,
                                              const TensorT<double>&, int, int, int);

}  // namespace wavescore
