#include "wavescore/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavescore/parallel.hpp"

namespace wavescore {

LayerSpec LayerSpec::conv(int in_ch, int out_ch, int k) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  s.kernel_size = k;
  s.validate();
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  return s;
}

LayerSpec LayerSpec::batchnorm(int ch, double eps) {
  LayerSpec s;
  s.kind = LayerKind::kBatchNorm;
  s.channels = ch;
  s.epsilon = eps;
  s.validate();
  return s;
}

void LayerSpec::validate() const {
  switch (kind) {
    case LayerKind::kConv:
      if (in_channels < 1 || out_channels < 1)
        throw DimensionError("conv layer needs positive channel counts");
      if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ConfigError("conv kernel size must be odd and positive, got " +
                          std::to_string(kernel_size));
      break;
    case LayerKind::kRelu:
      break;
    case LayerKind::kBatchNorm:
      if (channels < 1) throw DimensionError("batchnorm needs at least one channel");
      if (!(epsilon > 0)) throw ConfigError("batchnorm epsilon must be > 0");
      break;
  }
}

namespace {

template <typename T>
void check_conv_shapes(const TensorT<T>& input, const TensorT<T>& kernel) {
  if (input.rank() != 4) throw DimensionError("conv2d: input must be BxCxHxW");
  if (kernel.rank() != 4) throw DimensionError("conv2d: kernel must be OxCxkxk");
  if (kernel.dim(1) != input.dim(1))
    throw DimensionError("conv2d: channel mismatch, input has " +
                         std::to_string(input.dim(1)) + " kernel expects " +
                         std::to_string(kernel.dim(1)));
  if (kernel.dim(2) != kernel.dim(3) || kernel.dim(2) % 2 == 0)
    throw DimensionError("conv2d: kernel must be square with odd size");
}

}  // namespace

template <typename T>
TensorT<T> conv2d_biasfree(const TensorT<T>& input, const TensorT<T>& kernel) {
  check_conv_shapes(input, kernel);
  const int bs = input.dim(0), ci = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int co = kernel.dim(0), k = kernel.dim(2), p = (k - 1) / 2;
  TensorT<T> out({bs, co, h, w});
  const T* in = input.data();
  const T* kw = kernel.data();
  T* op = out.data();
  const int64_t plane = static_cast<int64_t>(h) * w;

  parallel_for(static_cast<int64_t>(bs) * co, [&](int64_t lo, int64_t hi) {
    for (int64_t bo = lo; bo < hi; ++bo) {
      const int b = static_cast<int>(bo / co), o = static_cast<int>(bo % co);
      T* dst = op + (static_cast<int64_t>(b) * co + o) * plane;
      std::fill(dst, dst + plane, T(0));
      for (int c = 0; c < ci; ++c) {
        const T* src = in + (static_cast<int64_t>(b) * ci + c) * plane;
        const T* kc = kw + (static_cast<int64_t>(o) * ci + c) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          const int dy = ky - p;
          const int y0 = dy < 0 ? -dy : 0;
          const int y1 = dy > 0 ? h - dy : h;
          for (int kx = 0; kx < k; ++kx) {
            const int dx = kx - p;
            const int x0 = dx < 0 ? -dx : 0;
            const int x1 = dx > 0 ? w - dx : w;
            const T wv = kc[ky * k + kx];
            if (wv == T(0)) continue;
            for (int y = y0; y < y1; ++y) {
              const T* irow = src + static_cast<int64_t>(y + dy) * w + dx;
              T* orow = dst + static_cast<int64_t>(y) * w;
              for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
            }
          }
        }
      }
    }
  });
  return out;
}

template <typename T>
TensorT<T> conv2d_input_grad(const TensorT<T>& grad_out, const TensorT<T>& kernel) {
  if (grad_out.rank() != 4 || kernel.rank() != 4)
    throw DimensionError("conv2d_input_grad: rank mismatch");
  if (grad_out.dim(1) != kernel.dim(0))
    throw DimensionError("conv2d_input_grad: output channel mismatch");
  const int bs = grad_out.dim(0), co = grad_out.dim(1);
  const int h = grad_out.dim(2), w = grad_out.dim(3);
  const int ci = kernel.dim(1), k = kernel.dim(2), p = (k - 1) / 2;
  TensorT<T> gin({bs, ci, h, w});
  const T* go = grad_out.data();
  const T* kw = kernel.data();
  T* gi = gin.data();
  const int64_t plane = static_cast<int64_t>(h) * w;

  parallel_for(static_cast<int64_t>(bs) * ci, [&](int64_t lo, int64_t hi) {
    for (int64_t bc = lo; bc < hi; ++bc) {
      const int b = static_cast<int>(bc / ci), c = static_cast<int>(bc % ci);
      T* dst = gi + (static_cast<int64_t>(b) * ci + c) * plane;
      for (int o = 0; o < co; ++o) {
        const T* src = go + (static_cast<int64_t>(b) * co + o) * plane;
        const T* kc = kw + (static_cast<int64_t>(o) * ci + c) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          const int dy = ky - p;
          const int y0 = dy > 0 ? dy : 0;       // input rows receiving this tap
          const int y1 = dy < 0 ? h + dy : h;
          for (int kx = 0; kx < k; ++kx) {
            const int dx = kx - p;
            const int x0 = dx > 0 ? dx : 0;
            const int x1 = dx < 0 ? w + dx : w;
            const T wv = kc[ky * k + kx];
            if (wv == T(0)) continue;
            for (int y = y0; y < y1; ++y) {
              const T* grow = src + static_cast<int64_t>(y - dy) * w - dx;
              T* drow = dst + static_cast<int64_t>(y) * w;
              for (int x = x0; x < x1; ++x) drow[x] += wv * grow[x];
            }
          }
        }
      }
    }
  });
  return gin;
}

template <typename T>
TensorT<T> conv2d_kernel_grad(const TensorT<T>& grad_out, const TensorT<T>& input,
                              int kernel_size) {
  if (grad_out.rank() != 4 || input.rank() != 4)
    throw DimensionError("conv2d_kernel_grad: rank mismatch");
  if (grad_out.dim(0) != input.dim(0) || grad_out.dim(2) != input.dim(2) ||
      grad_out.dim(3) != input.dim(3))
    throw DimensionError("conv2d_kernel_grad: spatial/batch mismatch");
  const int bs = input.dim(0), ci = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int co = grad_out.dim(1), k = kernel_size, p = (k - 1) / 2;
  TensorT<T> gk({co, ci, k, k});
  const T* go = grad_out.data();
  const T* in = input.data();
  T* gw = gk.data();
  const int64_t plane = static_cast<int64_t>(h) * w;

  parallel_for(co, [&](int64_t lo, int64_t hi) {
    for (int64_t o = lo; o < hi; ++o) {
      for (int c = 0; c < ci; ++c) {
        T* kc = gw + (o * ci + c) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          const int dy = ky - p;
          const int y0 = dy < 0 ? -dy : 0;
          const int y1 = dy > 0 ? h - dy : h;
          for (int kx = 0; kx < k; ++kx) {
            const int dx = kx - p;
            const int x0 = dx < 0 ? -dx : 0;
            const int x1 = dx > 0 ? w - dx : w;
            double acc = 0;  // fixed-order reduction over batch then space
            for (int b = 0; b < bs; ++b) {
              const T* grow_base = go + (static_cast<int64_t>(b) * co + o) * plane;
              const T* irow_base = in + (static_cast<int64_t>(b) * ci + c) * plane;
              for (int y = y0; y < y1; ++y) {
                const T* grow = grow_base + static_cast<int64_t>(y) * w;
                const T* irow = irow_base + static_cast<int64_t>(y + dy) * w + dx;
                T s = T(0);
                for (int x = x0; x < x1; ++x) s += grow[x] * irow[x];
                acc += static_cast<double>(s);
              }
            }
            kc[ky * k + kx] = static_cast<T>(acc);
          }
        }
      }
    }
  });
  return gk;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& x) {
  require_same_shape(grad_out, x, "relu_backward");
  TensorT<T> g(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) g[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return g;
}

template <typename T>
BatchNormForward<T> batchnorm_biasfree(const TensorT<T>& x, const TensorT<T>& scale,
                                       const TensorT<T>& running_ms, NormMode mode,
                                       T eps) {
  if (x.rank() != 4) throw DimensionError("batchnorm: input must be BxCxHxW");
  const int bs = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (ch < 1) throw DimensionError("batchnorm: zero channels");
  if (scale.numel() != ch || running_ms.numel() != ch)
    throw DimensionError("batchnorm: per-channel parameter size mismatch");
  if (!(eps > T(0))) throw ConfigError("batchnorm: epsilon must be > 0");
  const int64_t plane = static_cast<int64_t>(h) * w;
  const int64_t count = static_cast<int64_t>(bs) * plane;
  if (count == 0) throw DimensionError("batchnorm: empty input");

  BatchNormForward<T> r;
  r.y = TensorT<T>(x.shape());
  r.inv_std.resize(static_cast<size_t>(ch));
  if (mode == NormMode::kTrain) r.batch_ms.resize(static_cast<size_t>(ch));

  parallel_for(ch, [&](int64_t lo, int64_t hi) {
    for (int64_t c = lo; c < hi; ++c) {
      T ms;
      if (mode == NormMode::kTrain) {
        double acc = 0;
        for (int b = 0; b < bs; ++b) {
          const T* src = x.data() + (static_cast<int64_t>(b) * ch + c) * plane;
          for (int64_t i = 0; i < plane; ++i)
            acc += static_cast<double>(src[i]) * static_cast<double>(src[i]);
        }
        ms = static_cast<T>(acc / static_cast<double>(count));
        r.batch_ms[static_cast<size_t>(c)] = ms;
      } else {
        ms = running_ms[c];
      }
      const T s = T(1) / std::sqrt(ms + eps);
      r.inv_std[static_cast<size_t>(c)] = s;
      const T g = scale[c] * s;
      for (int b = 0; b < bs; ++b) {
        const T* src = x.data() + (static_cast<int64_t>(b) * ch + c) * plane;
        T* dst = r.y.data() + (static_cast<int64_t>(b) * ch + c) * plane;
        for (int64_t i = 0; i < plane; ++i) dst[i] = g * src[i];
      }
    }
  });
  return r;
}

template <typename T>
BatchNormGrads<T> batchnorm_biasfree_backward(const TensorT<T>& grad_out,
                                              const TensorT<T>& x,
                                              const TensorT<T>& scale,
                                              const std::vector<T>& inv_std,
                                              NormMode mode) {
  require_same_shape(grad_out, x, "batchnorm_backward");
  const int bs = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t plane = static_cast<int64_t>(h) * w;
  const int64_t count = static_cast<int64_t>(bs) * plane;

  BatchNormGrads<T> r;
  r.grad_x = TensorT<T>(x.shape());
  r.grad_scale = TensorT<T>({ch});

  parallel_for(ch, [&](int64_t lo, int64_t hi) {
    for (int64_t c = lo; c < hi; ++c) {
      const T s = inv_std[static_cast<size_t>(c)];
      // grad wrt scale and the <g, x> reduction, fixed order over batch.
      double dot_gx = 0;
      for (int b = 0; b < bs; ++b) {
        const T* gp = grad_out.data() + (static_cast<int64_t>(b) * ch + c) * plane;
        const T* xp = x.data() + (static_cast<int64_t>(b) * ch + c) * plane;
        for (int64_t i = 0; i < plane; ++i)
          dot_gx += static_cast<double>(gp[i]) * static_cast<double>(xp[i]);
      }
      r.grad_scale[c] = static_cast<T>(dot_gx * static_cast<double>(s));

      const T gs = scale[c] * s;
      if (mode == NormMode::kEval) {
        // y = scale * s * x with s a constant: diagonal Jacobian.
        for (int b = 0; b < bs; ++b) {
          const T* gp = grad_out.data() + (static_cast<int64_t>(b) * ch + c) * plane;
          T* dp = r.grad_x.data() + (static_cast<int64_t>(b) * ch + c) * plane;
          for (int64_t i = 0; i < plane; ++i) dp[i] = gs * gp[i];
        }
      } else {
        // s depends on x through ms = mean(x^2):
        // dL/dx_j = scale * s * g_j - scale * s^3 * x_j * <g, x> / count.
        const T corr =
            static_cast<T>(static_cast<double>(scale[c]) * std::pow(static_cast<double>(s), 3) *
                           dot_gx / static_cast<double>(count));
        for (int b = 0; b < bs; ++b) {
          const T* gp = grad_out.data() + (static_cast<int64_t>(b) * ch + c) * plane;
          const T* xp = x.data() + (static_cast<int64_t>(b) * ch + c) * plane;
          T* dp = r.grad_x.data() + (static_cast<int64_t>(b) * ch + c) * plane;
          for (int64_t i = 0; i < plane; ++i) dp[i] = gs * gp[i] - corr * xp[i];
        }
      }
    }
  });
  return r;
}

template <typename T>
void AdamState<T>::init_like(const std::vector<TensorT<T>>& params) {
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.emplace_back(p.shape());
    v.emplace_back(p.shape());
  }
  steps = 0;
}

template <typename T>
void adam_step(std::vector<TensorT<T>>& params, const std::vector<TensorT<T>>& grads,
               AdamState<T>& state, double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size())
    throw DimensionError("adam_step: parameter/gradient count mismatch");
  if (state.empty()) state.init_like(params);
  if (state.m.size() != params.size())
    throw DimensionError("adam_step: state does not match parameters");
  state.steps += 1;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.steps));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& g = grads[i];
    require_same_shape(p, g, "adam_step");
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (int64_t j = 0; j < p.numel(); ++j) {
      const double gj = static_cast<double>(g[j]);
      const double mj = beta1 * static_cast<double>(m[j]) + (1.0 - beta1) * gj;
      const double vj = beta2 * static_cast<double>(v[j]) + (1.0 - beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double mhat = mj / c1;
      const double vhat = vj / c2;
      p[j] = static_cast<T>(static_cast<double>(p[j]) - lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

#define WAVESCORE_INSTANTIATE(T)                                                          \
  template TensorT<T> conv2d_biasfree<T>(const TensorT<T>&, const TensorT<T>&);           \
  template TensorT<T> conv2d_input_grad<T>(const TensorT<T>&, const TensorT<T>&);         \
  template TensorT<T> conv2d_kernel_grad<T>(const TensorT<T>&, const TensorT<T>&, int);   \
  template TensorT<T> relu<T>(const TensorT<T>&);                                         \
  template TensorT<T> relu_backward<T>(const TensorT<T>&, const TensorT<T>&);             \
  template BatchNormForward<T> batchnorm_biasfree<T>(const TensorT<T>&, const TensorT<T>&, \
                                                     const TensorT<T>&, NormMode, T);     \
  template BatchNormGrads<T> batchnorm_biasfree_backward<T>(                              \
      const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, const std::vector<T>&,     \
      NormMode);                                                                          \
  template struct AdamState<T>;                                                           \
  template void adam_step<T>(std::vector<TensorT<T>>&, const std::vector<TensorT<T>>&,    \
                             AdamState<T>&, double, double, double, double);

WAVESCORE_INSTANTIATE(float)
WAVESCORE_INSTANTIATE(double)
#undef WAVESCORE_INSTANTIATE

}  // namespace wavescore
