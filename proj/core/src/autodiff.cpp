#include "wavescore/autodiff.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace wavescore {

template <typename T>
typename Tape<T>::Id Tape<T>::check(Id id) const {
  if (id < 0 || id >= static_cast<Id>(nodes_.size()))
    throw GraphError("tape node " + std::to_string(id) +
                     " is not on this tape (future node or foreign tape)");
  return id;
}

template <typename T>
typename Tape<T>::Id Tape<T>::push(TensorT<T> value, bool requires_grad,
                                   std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size()) - 1;
}

template <typename T>
void Tape<T>::accumulate(Id id, const TensorT<T>& g) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.requires_grad) return;
  for (int64_t i = 0; i < g.numel(); ++i) n.grad[i] += g[i];
}

template <typename T>
typename Tape<T>::Id Tape<T>::leaf(TensorT<T> value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

template <typename T>
typename Tape<T>::Id Tape<T>::conv2d(Id input, Id kernel) {
  check(input);
  check(kernel);
  TensorT<T> out = conv2d_biasfree(nodes_[input].value, nodes_[kernel].value);
  const bool rg = nodes_[input].requires_grad || nodes_[kernel].requires_grad;
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), rg, [self, input, kernel](Tape& t) {
    const TensorT<T>& g = t.nodes_[self].grad;
    if (t.nodes_[input].requires_grad)
      t.accumulate(input, conv2d_input_grad(g, t.nodes_[kernel].value));
    if (t.nodes_[kernel].requires_grad)
      t.accumulate(kernel, conv2d_kernel_grad(g, t.nodes_[input].value,
                                              t.nodes_[kernel].value.dim(2)));
  });
}

template <typename T>
typename Tape<T>::Id Tape<T>::relu(Id x) {
  check(x);
  TensorT<T> out = wavescore::relu(nodes_[x].value);
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), nodes_[x].requires_grad, [self, x](Tape& t) {
    t.accumulate(x, relu_backward(t.nodes_[self].grad, t.nodes_[x].value));
  });
}

template <typename T>
typename Tape<T>::Id Tape<T>::batchnorm(Id x, Id scale, const TensorT<T>& running_ms,
                                        NormMode mode, T eps) {
  check(x);
  check(scale);
  BatchNormForward<T> f =
      batchnorm_biasfree(nodes_[x].value, nodes_[scale].value, running_ms, mode, eps);
  const bool rg = nodes_[x].requires_grad || nodes_[scale].requires_grad;
  const Id self = static_cast<Id>(nodes_.size());
  std::vector<T> inv_std = f.inv_std;
  Id id = push(std::move(f.y), rg, [self, x, scale, inv_std, mode](Tape& t) {
    BatchNormGrads<T> b = batchnorm_biasfree_backward(
        t.nodes_[self].grad, t.nodes_[x].value, t.nodes_[scale].value, inv_std, mode);
    if (t.nodes_[x].requires_grad) t.accumulate(x, b.grad_x);
    if (t.nodes_[scale].requires_grad) t.accumulate(scale, b.grad_scale);
  });
  nodes_[static_cast<size_t>(id)].bn_ms = std::move(f.batch_ms);
  return id;
}

template <typename T>
typename Tape<T>::Id Tape<T>::add(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(nodes_[a].value, nodes_[b].value, "tape add");
  TensorT<T> out(nodes_[a].value.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = nodes_[a].value[i] + nodes_[b].value[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), rg, [self, a, b](Tape& t) {
    t.accumulate(a, t.nodes_[self].grad);
    t.accumulate(b, t.nodes_[self].grad);
  });
}

template <typename T>
typename Tape<T>::Id Tape<T>::sub(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(nodes_[a].value, nodes_[b].value, "tape sub");
  TensorT<T> out(nodes_[a].value.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = nodes_[a].value[i] - nodes_[b].value[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), rg, [self, a, b](Tape& t) {
    const TensorT<T>& g = t.nodes_[self].grad;
    t.accumulate(a, g);
    if (t.nodes_[b].requires_grad) {
      TensorT<T> neg(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) neg[i] = -g[i];
      t.accumulate(b, neg);
    }
  });
}

template <typename T>
typename Tape<T>::Id Tape<T>::mul(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(nodes_[a].value, nodes_[b].value, "tape mul");
  TensorT<T> out(nodes_[a].value.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = nodes_[a].value[i] * nodes_[b].value[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), rg, [self, a, b](Tape& t) {
    const TensorT<T>& g = t.nodes_[self].grad;
    if (t.nodes_[a].requires_grad) {
      TensorT<T> ga(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * t.nodes_[b].value[i];
      t.accumulate(a, ga);
    }
    if (t.nodes_[b].requires_grad) {
      TensorT<T> gb(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) gb[i] = g[i] * t.nodes_[a].value[i];
      t.accumulate(b, gb);
    }
  });
}

template <typename T>
typename Tape<T>::Id Tape<T>::scale_by(Id a, T s) {
  check(a);
  TensorT<T> out(nodes_[a].value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = s * nodes_[a].value[i];
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), nodes_[a].requires_grad, [self, a, s](Tape& t) {
    const TensorT<T>& g = t.nodes_[self].grad;
    TensorT<T> ga(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] = s * g[i];
    t.accumulate(a, ga);
  });
}

template <typename T>
typename Tape<T>::Id Tape<T>::concat_channels(Id a, Id b) {
  check(a);
  check(b);
  const TensorT<T>& va = nodes_[a].value;
  const TensorT<T>& vb = nodes_[b].value;
  if (va.rank() != 4 || vb.rank() != 4 || va.dim(0) != vb.dim(0) ||
      va.dim(2) != vb.dim(2) || va.dim(3) != vb.dim(3))
    throw DimensionError("concat_channels: incompatible shapes " +
                         shape_string(va.shape()) + " vs " + shape_string(vb.shape()));
  const int bs = va.dim(0), ca = va.dim(1), cb = vb.dim(1);
  const int h = va.dim(2), w = va.dim(3);
  const int64_t plane = static_cast<int64_t>(h) * w;
  TensorT<T> out({bs, ca + cb, h, w});
  for (int bi = 0; bi < bs; ++bi) {
    for (int c = 0; c < ca; ++c)
      std::copy_n(va.data() + (static_cast<int64_t>(bi) * ca + c) * plane, plane,
                  out.data() + (static_cast<int64_t>(bi) * (ca + cb) + c) * plane);
    for (int c = 0; c < cb; ++c)
      std::copy_n(vb.data() + (static_cast<int64_t>(bi) * cb + c) * plane, plane,
                  out.data() + (static_cast<int64_t>(bi) * (ca + cb) + ca + c) * plane);
  }
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), rg, [self, a, b, ca, cb, plane, bs](Tape& t) {
    const TensorT<T>& g = t.nodes_[self].grad;
    if (t.nodes_[a].requires_grad) {
      TensorT<T> ga(t.nodes_[a].value.shape());
      for (int bi = 0; bi < bs; ++bi)
        for (int c = 0; c < ca; ++c)
          std::copy_n(g.data() + (static_cast<int64_t>(bi) * (ca + cb) + c) * plane, plane,
                      ga.data() + (static_cast<int64_t>(bi) * ca + c) * plane);
      t.accumulate(a, ga);
    }
    if (t.nodes_[b].requires_grad) {
      TensorT<T> gb(t.nodes_[b].value.shape());
      for (int bi = 0; bi < bs; ++bi)
        for (int c = 0; c < cb; ++c)
          std::copy_n(g.data() + (static_cast<int64_t>(bi) * (ca + cb) + ca + c) * plane,
                      plane, gb.data() + (static_cast<int64_t>(bi) * cb + c) * plane);
      t.accumulate(b, gb);
    }
  });
}

template <typename T>
typename Tape<T>::Id Tape<T>::sum_squares(Id a) {
  check(a);
  const TensorT<T>& v = nodes_[a].value;
  double acc = 0;
  for (int64_t i = 0; i < v.numel(); ++i)
    acc += static_cast<double>(v[i]) * static_cast<double>(v[i]);
  TensorT<T> out({1});
  out[0] = static_cast<T>(acc);
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), nodes_[a].requires_grad, [self, a](Tape& t) {
    const T g = t.nodes_[self].grad[0];
    const TensorT<T>& v = t.nodes_[a].value;
    TensorT<T> ga(v.shape());
    for (int64_t i = 0; i < v.numel(); ++i) ga[i] = T(2) * g * v[i];
    t.accumulate(a, ga);
  });
}

template <typename T>
typename Tape<T>::Id Tape<T>::mean_squared_error(Id a, Id b) {
  Id d = sub(a, b);
  Id ss = sum_squares(d);
  return scale_by(ss, static_cast<T>(1.0 / static_cast<double>(nodes_[d].value.numel())));
}

template <typename T>
typename Tape<T>::Id Tape<T>::select(Id a, const std::vector<int>& coord) {
  check(a);
  const TensorT<T>& v = nodes_[a].value;
  if (static_cast<int>(coord.size()) != v.rank())
    throw IndexError("select: coordinate rank mismatch");
  int64_t off = 0;
  for (int i = 0; i < v.rank(); ++i) {
    if (coord[static_cast<size_t>(i)] < 0 || coord[static_cast<size_t>(i)] >= v.dim(i))
      throw IndexError("select: coordinate out of range at axis " + std::to_string(i));
    off = off * v.dim(i) + coord[static_cast<size_t>(i)];
  }
  TensorT<T> out({1});
  out[0] = v[off];
  const Id self = static_cast<Id>(nodes_.size());
  return push(std::move(out), nodes_[a].requires_grad, [self, a, off](Tape& t) {
    TensorT<T> ga(t.nodes_[a].value.shape());
    ga[off] = t.nodes_[self].grad[0];
    t.accumulate(a, ga);
  });
}

template <typename T>
const TensorT<T>& Tape<T>::value(Id id) const {
  return nodes_[static_cast<size_t>(check(id))].value;
}

template <typename T>
const TensorT<T>& Tape<T>::grad(Id id) const {
  const Node& n = nodes_[static_cast<size_t>(check(id))];
  if (!n.requires_grad)
    throw GraphError("gradient requested for a node that does not require it");
  return n.grad;
}

template <typename T>
bool Tape<T>::requires_grad(Id id) const {
  return nodes_[static_cast<size_t>(check(id))].requires_grad;
}

template <typename T>
const std::vector<T>& Tape<T>::bn_batch_ms(Id id) const {
  return nodes_[static_cast<size_t>(check(id))].bn_ms;
}

template <typename T>
void Tape<T>::backward(Id root) {
  check(root);
  Node& r = nodes_[static_cast<size_t>(root)];
  if (r.value.numel() != 1) throw GraphError("backward root must be a scalar node");
  if (!r.requires_grad)
    throw GraphError("backward root does not depend on any gradient leaf");
  for (Node& n : nodes_) {
    if (n.requires_grad)
      n.grad = TensorT<T>(n.value.shape());
    else
      n.grad = TensorT<T>();
  }
  r.grad[0] = T(1);
  for (Id i = root; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.requires_grad && n.back) n.back(*this);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace wavescore
