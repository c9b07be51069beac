#include "dina/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

namespace dina {

namespace {

template <typename T>
using NodeT = detail::Node<T>;
template <typename T>
using NodePtr = std::shared_ptr<NodeT<T>>;
template <typename T>
using Map = Eigen::Map<MatrixR<T>>;
template <typename T>
using CMap = Eigen::Map<const MatrixR<T>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using CVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

template <typename T>
NodePtr<T> make_node(Shape shape, std::initializer_list<const BasicTensor<T>*> inputs) {
  auto node = std::make_shared<NodeT<T>>();
  node->value.assign(numel(shape), T(0));
  node->shape = std::move(shape);
  if (grad_enabled()) {
    for (const auto* t : inputs) node->requires_grad = node->requires_grad || t->requires_grad();
  }
  if (node->requires_grad) {
    for (const auto* t : inputs) node->parents.push_back(t->node());
  }
  return node;
}

template <typename T>
NodePtr<T> make_node(Shape shape, const std::vector<BasicTensor<T>>& inputs) {
  auto node = std::make_shared<NodeT<T>>();
  node->value.assign(numel(shape), T(0));
  node->shape = std::move(shape);
  if (grad_enabled()) {
    for (const auto& t : inputs) node->requires_grad = node->requires_grad || t.requires_grad();
  }
  if (node->requires_grad) {
    for (const auto& t : inputs) node->parents.push_back(t.node());
  }
  return node;
}

template <typename T>
BasicTensor<T> finish(NodePtr<T> node, const char* op) {
  if constexpr (kCheckFiniteAfterOps) {
    for (T v : node->value) {
      if (!std::isfinite(v)) throw NumericError(std::string("non-finite output from ") + op);
    }
  }
  return BasicTensor<T>::from_node(std::move(node));
}

// Gradient buffer of a parent, or nullptr when the parent is a constant.
template <typename T>
T* grad_of(NodeT<T>* parent) {
  if (!parent->requires_grad) return nullptr;
  parent->ensure_grad();
  return parent->grad.data();
}

Eigen::Index rows_of(const Shape& s) { return s.empty() ? 1 : s[0]; }
Eigen::Index cols_of(const Shape& s) {
  Eigen::Index c = 1;
  for (std::size_t i = 1; i < s.size(); ++i) c *= s[i];
  return c;
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

template <typename T>
void require_rank(const BasicTensor<T>& a, int rank, const char* op) {
  if (a.ndim() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(a.shape()));
  }
}

}  // namespace

// ---- linear algebra -------------------------------------------------------

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_rank(a, 2, "matmul");
  const Eigen::Index m = a.dim(0), k = a.dim(1);
  if (b.ndim() < 1 || b.dim(0) != k) {
    throw DimensionError("matmul: inner extents disagree, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const Eigen::Index n = cols_of(b.shape());
  Shape out_shape{static_cast<int>(m)};
  for (int i = 1; i < b.ndim(); ++i) out_shape.push_back(b.dim(i));
  auto node = make_node<T>(out_shape, {&a, &b});
  Map<T>(node->value.data(), m, n).noalias() = CMap<T>(a.ptr(), m, k) * CMap<T>(b.ptr(), k, n);
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), pb = b.node().get(), m, k, n](NodeT<T>& self) {
      CMap<T> g(self.grad.data(), m, n);
      if (T* ga = grad_of(pa)) Map<T>(ga, m, k).noalias() += g * CMap<T>(pb->value.data(), k, n).transpose();
      if (T* gb = grad_of(pb)) Map<T>(gb, k, n).noalias() += CMap<T>(pa->value.data(), m, k).transpose() * g;
    };
  }
  return finish(node, "matmul");
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  require_rank(a, 2, "transpose");
  const Eigen::Index r = a.dim(0), c = a.dim(1);
  auto node = make_node<T>({static_cast<int>(c), static_cast<int>(r)}, {&a});
  Map<T>(node->value.data(), c, r) = CMap<T>(a.ptr(), r, c).transpose();
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), r, c](NodeT<T>& self) {
      if (T* ga = grad_of(pa)) Map<T>(ga, r, c) += CMap<T>(self.grad.data(), c, r).transpose();
    };
  }
  return finish(node, "transpose");
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  auto node = make_node<T>(std::move(shape), {&a});
  std::copy(a.data().begin(), a.data().end(), node->value.begin());
  if (node->requires_grad) {
    node->backward = [pa = a.node().get()](NodeT<T>& self) {
      if (T* ga = grad_of(pa)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
      }
    };
  }
  return finish(node, "reshape");
}

// ---- elementwise ----------------------------------------------------------

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "add");
  auto node = make_node<T>(a.shape(), {&a, &b});
  const std::size_t n = a.size();
  VecMap<T>(node->value.data(), n) = CVecMap<T>(a.ptr(), n) + CVecMap<T>(b.ptr(), n);
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), pb = b.node().get(), n](NodeT<T>& self) {
      CVecMap<T> g(self.grad.data(), n);
      if (T* ga = grad_of(pa)) VecMap<T>(ga, n) += g;
      if (T* gb = grad_of(pb)) VecMap<T>(gb, n) += g;
    };
  }
  return finish(node, "add");
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "sub");
  auto node = make_node<T>(a.shape(), {&a, &b});
  const std::size_t n = a.size();
  VecMap<T>(node->value.data(), n) = CVecMap<T>(a.ptr(), n) - CVecMap<T>(b.ptr(), n);
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), pb = b.node().get(), n](NodeT<T>& self) {
      CVecMap<T> g(self.grad.data(), n);
      if (T* ga = grad_of(pa)) VecMap<T>(ga, n) += g;
      if (T* gb = grad_of(pb)) VecMap<T>(gb, n) -= g;
    };
  }
  return finish(node, "sub");
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mul");
  auto node = make_node<T>(a.shape(), {&a, &b});
  const std::size_t n = a.size();
  VecMap<T>(node->value.data(), n) = CVecMap<T>(a.ptr(), n).cwiseProduct(CVecMap<T>(b.ptr(), n));
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), pb = b.node().get(), n](NodeT<T>& self) {
      CVecMap<T> g(self.grad.data(), n);
      if (T* ga = grad_of(pa)) VecMap<T>(ga, n) += g.cwiseProduct(CVecMap<T>(pb->value.data(), n));
      if (T* gb = grad_of(pb)) VecMap<T>(gb, n) += g.cwiseProduct(CVecMap<T>(pa->value.data(), n));
    };
  }
  return finish(node, "mul");
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  auto node = make_node<T>(a.shape(), {&a});
  const std::size_t n = a.size();
  VecMap<T>(node->value.data(), n) = CVecMap<T>(a.ptr(), n) * factor;
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), n, factor](NodeT<T>& self) {
      if (T* ga = grad_of(pa)) VecMap<T>(ga, n) += CVecMap<T>(self.grad.data(), n) * factor;
    };
  }
  return finish(node, "scale");
}

template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& a) {
  // tanh approximation
  constexpr T kC = T(0.7978845608028654);
  constexpr T kA = T(0.044715);
  auto node = make_node<T>(a.shape(), {&a});
  const Eigen::Index n = static_cast<Eigen::Index>(a.size());
  Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> x(a.ptr(), n);
  Eigen::Array<T, Eigen::Dynamic, 1> t = (kC * (x + kA * x.cube())).tanh();
  Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(node->value.data(), n) = T(0.5) * x * (T(1) + t);
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), n, t = std::move(t), kC, kA](NodeT<T>& self) {
      T* ga = grad_of(pa);
      if (!ga) return;
      Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> x(pa->value.data(), n);
      Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> g(self.grad.data(), n);
      Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(ga, n) +=
          g * (T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t.square()) * kC * (T(1) + T(3) * kA * x.square()));
    };
  }
  return finish(node, "gelu");
}

template <typename T>
BasicTensor<T> add_row_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  const Eigen::Index c = static_cast<Eigen::Index>(bias.size());
  if (x.ndim() < 1 || x.shape().back() != c) {
    throw DimensionError("add_row_bias: " + shape_string(x.shape()) + " + " + shape_string(bias.shape()));
  }
  const Eigen::Index r = static_cast<Eigen::Index>(x.size()) / c;
  auto node = make_node<T>(x.shape(), {&x, &bias});
  Map<T>(node->value.data(), r, c) = CMap<T>(x.ptr(), r, c).rowwise() + CMap<T>(bias.ptr(), 1, c).row(0);
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), pb = bias.node().get(), r, c](NodeT<T>& self) {
      CMap<T> g(self.grad.data(), r, c);
      if (T* gx = grad_of(px)) Map<T>(gx, r, c) += g;
      if (T* gb = grad_of(pb)) Map<T>(gb, 1, c) += g.colwise().sum();
    };
  }
  return finish(node, "add_row_bias");
}

template <typename T>
BasicTensor<T> add_channel_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  const Eigen::Index c = static_cast<Eigen::Index>(bias.size());
  if (x.ndim() < 1 || x.dim(0) != c) {
    throw DimensionError("add_channel_bias: " + shape_string(x.shape()) + " + " + shape_string(bias.shape()));
  }
  const Eigen::Index p = cols_of(x.shape());
  auto node = make_node<T>(x.shape(), {&x, &bias});
  Map<T>(node->value.data(), c, p) = CMap<T>(x.ptr(), c, p).colwise() + CVecMap<T>(bias.ptr(), c);
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), pb = bias.node().get(), c, p](NodeT<T>& self) {
      CMap<T> g(self.grad.data(), c, p);
      if (T* gx = grad_of(px)) Map<T>(gx, c, p) += g;
      if (T* gb = grad_of(pb)) VecMap<T>(gb, c) += g.rowwise().sum();
    };
  }
  return finish(node, "add_channel_bias");
}

template <typename T>
BasicTensor<T> scale_rows(const BasicTensor<T>& x, const BasicTensor<T>& r) {
  require_rank(x, 2, "scale_rows");
  const Eigen::Index n = x.dim(0), d = x.dim(1);
  if (static_cast<Eigen::Index>(r.size()) != n) {
    throw DimensionError("scale_rows: " + shape_string(x.shape()) + " rows vs " + shape_string(r.shape()));
  }
  auto node = make_node<T>(x.shape(), {&x, &r});
  Map<T>(node->value.data(), n, d) = CVecMap<T>(r.ptr(), n).asDiagonal() * CMap<T>(x.ptr(), n, d);
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), pr = r.node().get(), n, d](NodeT<T>& self) {
      CMap<T> g(self.grad.data(), n, d);
      if (T* gx = grad_of(px)) Map<T>(gx, n, d) += CVecMap<T>(pr->value.data(), n).asDiagonal() * g;
      if (T* gr = grad_of(pr)) VecMap<T>(gr, n) += g.cwiseProduct(CMap<T>(px->value.data(), n, d)).rowwise().sum();
    };
  }
  return finish(node, "scale_rows");
}

template <typename T>
BasicTensor<T> rowwise_dot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_rank(a, 2, "rowwise_dot");
  require_same_shape(a, b, "rowwise_dot");
  const Eigen::Index n = a.dim(0), d = a.dim(1);
  auto node = make_node<T>({static_cast<int>(n)}, {&a, &b});
  VecMap<T>(node->value.data(), n) = CMap<T>(a.ptr(), n, d).cwiseProduct(CMap<T>(b.ptr(), n, d)).rowwise().sum();
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), pb = b.node().get(), n, d](NodeT<T>& self) {
      CVecMap<T> g(self.grad.data(), n);
      if (T* ga = grad_of(pa)) Map<T>(ga, n, d) += g.asDiagonal() * CMap<T>(pb->value.data(), n, d);
      if (T* gb = grad_of(pb)) Map<T>(gb, n, d) += g.asDiagonal() * CMap<T>(pa->value.data(), n, d);
    };
  }
  return finish(node, "rowwise_dot");
}

// ---- reductions -----------------------------------------------------------

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  auto node = make_node<T>({1}, {&a});
  double acc = 0.0;
  for (T v : a.data()) acc += static_cast<double>(v);
  node->value[0] = static_cast<T>(acc);
  if (node->requires_grad) {
    node->backward = [pa = a.node().get()](NodeT<T>& self) {
      if (T* ga = grad_of(pa)) {
        const T g = self.grad[0];
        for (std::size_t i = 0; i < pa->value.size(); ++i) ga[i] += g;
      }
    };
  }
  return finish(node, "sum");
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
BasicTensor<T> dot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.size() != b.size()) throw DimensionError("dot: sizes differ");
  auto node = make_node<T>({1}, {&a, &b});
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a.ptr()[i]) * b.ptr()[i];
  node->value[0] = static_cast<T>(acc);
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), pb = b.node().get()](NodeT<T>& self) {
      const T g = self.grad[0];
      const std::size_t n = pa->value.size();
      if (T* ga = grad_of(pa)) VecMap<T>(ga, n) += g * CVecMap<T>(pb->value.data(), n);
      if (T* gb = grad_of(pb)) VecMap<T>(gb, n) += g * CVecMap<T>(pa->value.data(), n);
    };
  }
  return finish(node, "dot");
}

// ---- slicing --------------------------------------------------------------

template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, int begin, int end) {
  if (a.ndim() < 1 || begin < 0 || end > a.dim(0) || begin >= end) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                         shape_string(a.shape()));
  }
  Shape shape = a.shape();
  shape[0] = end - begin;
  const std::size_t stride = cols_of(a.shape());
  auto node = make_node<T>(shape, {&a});
  std::copy(a.ptr() + begin * stride, a.ptr() + end * stride, node->value.begin());
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), offset = begin * stride](NodeT<T>& self) {
      if (T* ga = grad_of(pa)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[offset + i] += self.grad[i];
      }
    };
  }
  return finish(node, "slice_rows");
}

template <typename T>
BasicTensor<T> concat_rows(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.ndim() != b.ndim() || a.ndim() < 1 ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1)) {
    throw DimensionError("concat_rows: " + shape_string(a.shape()) + " with " + shape_string(b.shape()));
  }
  Shape shape = a.shape();
  shape[0] += b.dim(0);
  auto node = make_node<T>(shape, {&a, &b});
  std::copy(a.data().begin(), a.data().end(), node->value.begin());
  std::copy(b.data().begin(), b.data().end(), node->value.begin() + static_cast<std::ptrdiff_t>(a.size()));
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), pb = b.node().get()](NodeT<T>& self) {
      const std::size_t na = pa->value.size();
      if (T* ga = grad_of(pa)) {
        for (std::size_t i = 0; i < na; ++i) ga[i] += self.grad[i];
      }
      if (T* gb = grad_of(pb)) {
        for (std::size_t i = 0; i < pb->value.size(); ++i) gb[i] += self.grad[na + i];
      }
    };
  }
  return finish(node, "concat_rows");
}

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& a, int begin, int end) {
  require_rank(a, 2, "slice_cols");
  if (begin < 0 || end > a.dim(1) || begin >= end) throw DimensionError("slice_cols: bad range");
  const Eigen::Index r = a.dim(0), c = a.dim(1), w = end - begin;
  auto node = make_node<T>({static_cast<int>(r), static_cast<int>(w)}, {&a});
  Map<T>(node->value.data(), r, w) = CMap<T>(a.ptr(), r, c).middleCols(begin, w);
  if (node->requires_grad) {
    node->backward = [pa = a.node().get(), r, c, w, begin](NodeT<T>& self) {
      if (T* ga = grad_of(pa)) Map<T>(ga, r, c).middleCols(begin, w) += CMap<T>(self.grad.data(), r, w);
    };
  }
  return finish(node, "slice_cols");
}

template <typename T>
BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const Eigen::Index r = parts[0].dim(0);
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != r) throw DimensionError("concat_cols: row counts differ");
    total += p.dim(1);
  }
  auto node = make_node<T>({static_cast<int>(r), static_cast<int>(total)}, parts);
  Map<T> out(node->value.data(), r, total);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.dim(1)) = CMap<T>(p.ptr(), r, p.dim(1));
    offset += p.dim(1);
  }
  if (node->requires_grad) {
    node->backward = [r, total](NodeT<T>& self) {
      CMap<T> g(self.grad.data(), r, total);
      Eigen::Index offset = 0;
      for (const auto& parent : self.parents) {
        const Eigen::Index w = parent->shape[1];
        if (T* gp = grad_of(parent.get())) Map<T>(gp, r, w) += g.middleCols(offset, w);
        offset += w;
      }
    };
  }
  return finish(node, "concat_cols");
}

template <typename T>
BasicTensor<T> stack_rows(const std::vector<BasicTensor<T>>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  const std::size_t d = rows[0].size();
  for (const auto& r : rows) {
    if (r.size() != d) throw DimensionError("stack_rows: element sizes differ");
  }
  auto node = make_node<T>({static_cast<int>(rows.size()), static_cast<int>(d)}, rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].data().begin(), rows[i].data().end(), node->value.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  if (node->requires_grad) {
    node->backward = [d](NodeT<T>& self) {
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        if (T* gp = grad_of(self.parents[i].get())) {
          for (std::size_t j = 0; j < d; ++j) gp[j] += self.grad[i * d + j];
        }
      }
    };
  }
  return finish(node, "stack_rows");
}

// ---- normalization and attention -----------------------------------------

template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& logits) {
  require_rank(logits, 2, "softmax_rows");
  const Eigen::Index r = logits.dim(0), c = logits.dim(1);
  if (c == 0) throw DimensionError("softmax_rows: zero columns");
  auto node = make_node<T>(logits.shape(), {&logits});
  CMap<T> x(logits.ptr(), r, c);
  Map<T> y(node->value.data(), r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const T mx = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - mx).exp();
    y.row(i) /= y.row(i).sum();
  }
  if (node->requires_grad) {
    node->backward = [px = logits.node().get(), r, c](NodeT<T>& self) {
      T* gx = grad_of(px);
      if (!gx) return;
      CMap<T> y(self.value.data(), r, c);
      CMap<T> g(self.grad.data(), r, c);
      Eigen::Matrix<T, Eigen::Dynamic, 1> inner = y.cwiseProduct(g).rowwise().sum();
      Map<T>(gx, r, c).array() += y.array() * (g.colwise() - inner).array();
    };
  }
  return finish(node, "softmax_rows");
}

template <typename T>
BasicTensor<T> layer_norm_rows(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                               T eps) {
  require_rank(x, 2, "layer_norm_rows");
  const Eigen::Index r = x.dim(0), c = x.dim(1);
  if (static_cast<Eigen::Index>(gamma.size()) != c || static_cast<Eigen::Index>(beta.size()) != c) {
    throw DimensionError("layer_norm_rows: affine size mismatch");
  }
  auto node = make_node<T>(x.shape(), {&x, &gamma, &beta});
  // Cache normalized values and inverse std for the backward pass.
  auto xhat = std::make_shared<MatrixR<T>>(r, c);
  auto inv_std = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, 1>>(r);
  CMap<T> xm(x.ptr(), r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const T mu = xm.row(i).mean();
    const T var = (xm.row(i).array() - mu).square().mean();
    (*inv_std)(i) = T(1) / std::sqrt(var + eps);
    xhat->row(i) = (xm.row(i).array() - mu) * (*inv_std)(i);
  }
  Map<T>(node->value.data(), r, c) =
      (xhat->array().rowwise() * CMap<T>(gamma.ptr(), 1, c).row(0).array()).rowwise() +
      CMap<T>(beta.ptr(), 1, c).row(0).array();
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), pg = gamma.node().get(), pb = beta.node().get(), xhat, inv_std, r,
                      c](NodeT<T>& self) {
      CMap<T> g(self.grad.data(), r, c);
      if (T* gg = grad_of(pg)) Map<T>(gg, 1, c) += g.cwiseProduct(*xhat).colwise().sum();
      if (T* gb = grad_of(pb)) Map<T>(gb, 1, c) += g.colwise().sum();
      if (T* gx = grad_of(px)) {
        MatrixR<T> dxhat = g.array().rowwise() * CMap<T>(pg->value.data(), 1, c).row(0).array();
        Map<T> gxm(gx, r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
          const T m1 = dxhat.row(i).mean();
          const T m2 = dxhat.row(i).cwiseProduct(xhat->row(i)).mean();
          gxm.row(i).array() += (*inv_std)(i) * (dxhat.row(i).array() - m1 - xhat->row(i).array() * m2);
        }
      }
    };
  }
  return finish(node, "layer_norm_rows");
}

template <typename T>
BasicTensor<T> layer_norm_channels(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                                   T eps) {
  const Eigen::Index c = rows_of(x.shape()), p = cols_of(x.shape());
  if (static_cast<Eigen::Index>(gamma.size()) != c || static_cast<Eigen::Index>(beta.size()) != c) {
    throw DimensionError("layer_norm_channels: affine size mismatch");
  }
  auto node = make_node<T>(x.shape(), {&x, &gamma, &beta});
  using Row = Eigen::Array<T, 1, Eigen::Dynamic>;
  auto xhat = std::make_shared<MatrixR<T>>(c, p);
  auto inv_std = std::make_shared<Row>(p);
  CMap<T> xm(x.ptr(), c, p);
  const Row mu = xm.colwise().mean().array();
  xhat->array() = xm.array().rowwise() - mu;
  const Row var = xhat->array().square().colwise().mean();
  *inv_std = (var + eps).rsqrt();
  xhat->array().rowwise() *= *inv_std;
  Map<T>(node->value.data(), c, p).array() =
      (xhat->array().colwise() * CVecMap<T>(gamma.ptr(), c).array()).colwise() + CVecMap<T>(beta.ptr(), c).array();
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), pg = gamma.node().get(), pb = beta.node().get(), xhat, inv_std, c,
                      p](NodeT<T>& self) {
      CMap<T> g(self.grad.data(), c, p);
      if (T* gg = grad_of(pg)) VecMap<T>(gg, c) += g.cwiseProduct(*xhat).rowwise().sum();
      if (T* gb = grad_of(pb)) VecMap<T>(gb, c) += g.rowwise().sum();
      if (T* gx = grad_of(px)) {
        MatrixR<T> dxhat = g.array().colwise() * CVecMap<T>(pg->value.data(), c).array();
        const Row m1 = dxhat.colwise().mean().array();
        const Row m2 = dxhat.cwiseProduct(*xhat).colwise().mean().array();
        Map<T>(gx, c, p).array() +=
            ((dxhat.array().rowwise() - m1) - xhat->array().rowwise() * m2).rowwise() * (*inv_std);
      }
    };
  }
  return finish(node, "layer_norm_channels");
}

template <typename T>
BasicTensor<T> l2_normalize_rows(const BasicTensor<T>& x, T min_norm) {
  const Eigen::Index r = rows_of(x.shape()), c = cols_of(x.shape());
  auto node = make_node<T>(x.shape(), {&x});
  CMap<T> xm(x.ptr(), r, c);
  auto norms = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, 1>>(xm.rowwise().norm());
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!((*norms)(i) > min_norm)) {
      throw NumericError("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
    }
  }
  Map<T>(node->value.data(), r, c) = norms->cwiseInverse().asDiagonal() * xm;
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), norms, r, c](NodeT<T>& self) {
      T* gx = grad_of(px);
      if (!gx) return;
      CMap<T> y(self.value.data(), r, c);
      CMap<T> g(self.grad.data(), r, c);
      Eigen::Matrix<T, Eigen::Dynamic, 1> proj = y.cwiseProduct(g).rowwise().sum();
      Map<T>(gx, r, c) += norms->cwiseInverse().asDiagonal() * (g - proj.asDiagonal() * y);
    };
  }
  return finish(node, "l2_normalize_rows");
}

template <typename T>
BasicTensor<T> diag_cross_entropy(const BasicTensor<T>& logits) {
  require_rank(logits, 2, "diag_cross_entropy");
  const Eigen::Index b = logits.dim(0);
  if (logits.dim(1) != b) throw DimensionError("diag_cross_entropy: logits must be square");
  auto node = make_node<T>({1}, {&logits});
  CMap<T> x(logits.ptr(), b, b);
  auto probs = std::make_shared<MatrixR<T>>(b, b);
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const T mx = x.row(i).maxCoeff();
    probs->row(i) = (x.row(i).array() - mx).exp();
    const T z = probs->row(i).sum();
    probs->row(i) /= z;
    total += static_cast<double>(mx + std::log(z) - x(i, i));
  }
  node->value[0] = static_cast<T>(total / static_cast<double>(b));
  if (node->requires_grad) {
    node->backward = [px = logits.node().get(), probs, b](NodeT<T>& self) {
      T* gx = grad_of(px);
      if (!gx) return;
      const T g = self.grad[0] / static_cast<T>(b);
      Map<T> gm(gx, b, b);
      gm += g * *probs;
      gm.diagonal().array() -= g;
    };
  }
  return finish(node, "diag_cross_entropy");
}

namespace {

template <typename T>
void check_attention_inputs(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                            const char* op) {
  require_rank(q, 2, op);
  require_rank(k, 2, op);
  require_rank(v, 2, op);
  if (q.dim(1) == 0 || k.dim(1) == 0) throw DimensionError(std::string(op) + ": zero model dimension");
  if (q.dim(0) < 1 || k.dim(0) < 1) throw DimensionError(std::string(op) + ": need at least one token");
  if (q.dim(1) != k.dim(1)) throw DimensionError(std::string(op) + ": query/key widths differ");
  if (k.dim(0) != v.dim(0)) throw DimensionError(std::string(op) + ": key/value token counts differ");
}

// Fused scaled dot-product attention over `heads` column slices. The
// per-head weight matrices are kept for the backward pass.
template <typename T>
BasicTensor<T> fused_attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v, int heads,
                               T scale_factor, MatrixR<T>* weights_out) {
  const Eigen::Index tq = q.dim(0), tk = k.dim(0), d = q.dim(1), dv = v.dim(1);
  const Eigen::Index hd = d / heads, hv = dv / heads;
  const T s = scale_factor > T(0) ? scale_factor : T(1) / std::sqrt(static_cast<T>(hd));
  auto node = make_node<T>({static_cast<int>(tq), static_cast<int>(dv)}, {&q, &k, &v});
  CMap<T> Q(q.ptr(), tq, d), K(k.ptr(), tk, d), V(v.ptr(), tk, dv);
  Map<T> out(node->value.data(), tq, dv);
  auto weights = std::make_shared<std::vector<MatrixR<T>>>(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    MatrixR<T>& w = (*weights)[static_cast<std::size_t>(h)];
    w.noalias() = s * (Q.middleCols(h * hd, hd) * K.middleCols(h * hd, hd).transpose());
    for (Eigen::Index i = 0; i < tq; ++i) {
      const T mx = w.row(i).maxCoeff();
      w.row(i) = (w.row(i).array() - mx).exp();
      w.row(i) /= w.row(i).sum();
    }
    out.middleCols(h * hv, hv).noalias() = w * V.middleCols(h * hv, hv);
  }
  if (weights_out) *weights_out = weights->front();
  if (node->requires_grad) {
    node->backward = [pq = q.node().get(), pk = k.node().get(), pv = v.node().get(), weights, heads, tq, tk, d, dv,
                      hd, hv, s](NodeT<T>& self) {
      T* gq = grad_of(pq);
      T* gk = grad_of(pk);
      T* gv = grad_of(pv);
      CMap<T> G(self.grad.data(), tq, dv);
      CMap<T> Q(pq->value.data(), tq, d), K(pk->value.data(), tk, d), V(pv->value.data(), tk, dv);
      MatrixR<T> dw, dl;
      for (int h = 0; h < heads; ++h) {
        const MatrixR<T>& w = (*weights)[static_cast<std::size_t>(h)];
        auto g = G.middleCols(h * hv, hv);
        if (gv) Map<T>(gv, tk, dv).middleCols(h * hv, hv).noalias() += w.transpose() * g;
        if (!gq && !gk) continue;
        dw.noalias() = g * V.middleCols(h * hv, hv).transpose();
        Eigen::Matrix<T, Eigen::Dynamic, 1> inner = w.cwiseProduct(dw).rowwise().sum();
        dl = s * (w.array() * (dw.colwise() - inner).array()).matrix();
        if (gq) Map<T>(gq, tq, d).middleCols(h * hd, hd).noalias() += dl * K.middleCols(h * hd, hd);
        if (gk) Map<T>(gk, tk, d).middleCols(h * hd, hd).noalias() += dl.transpose() * Q.middleCols(h * hd, hd);
      }
    };
  }
  return finish(node, "attention");
}

}  // namespace

template <typename T>
AttentionResult<T> softmax_attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                                     T scale_factor) {
  check_attention_inputs(q, k, v, "softmax_attention");
  MatrixR<T> w;
  auto out = fused_attention(q, k, v, 1, scale_factor, &w);
  return {out, BasicTensor<T>::from_matrix(w)};
}

template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                                    int heads) {
  check_attention_inputs(q, k, v, "multi_head_attention");
  const int d = q.dim(1);
  if (heads < 1 || d % heads != 0 || v.dim(1) % heads != 0) {
    throw DimensionError("multi_head_attention: width " + std::to_string(d) + " not divisible into " +
                         std::to_string(heads) + " heads");
  }
  return fused_attention(q, k, v, heads, T(0), static_cast<MatrixR<T>*>(nullptr));
}

// ---- spatial --------------------------------------------------------------

template <typename T>
BasicTensor<T> depthwise_conv3x3(const BasicTensor<T>& x, const BasicTensor<T>& kernels) {
  require_rank(x, 3, "depthwise_conv3x3");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (kernels.size() != static_cast<std::size_t>(c) * 9) {
    throw DimensionError("depthwise_conv3x3: kernels " + shape_string(kernels.shape()) + " for " +
                         std::to_string(c) + " channels");
  }
  auto node = make_node<T>(x.shape(), {&x, &kernels});
  const T* xp = x.ptr();
  const T* kp = kernels.ptr();
  T* yp = node->value.data();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = xp + ch * plane;
    T* yc = yp + ch * plane;
    for (int m = -1; m <= 1; ++m) {
      for (int n = -1; n <= 1; ++n) {
        const T wt = kp[ch * 9 + (m + 1) * 3 + (n + 1)];
        const int i0 = std::max(0, -m), i1 = std::min(h, h - m);
        const int j0 = std::max(0, -n), j1 = std::min(w, w - n);
        for (int i = i0; i < i1; ++i) {
          const T* src = xc + (i + m) * w + n;
          T* dst = yc + i * w;
          for (int j = j0; j < j1; ++j) dst[j] += wt * src[j];
        }
      }
    }
  }
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), pk = kernels.node().get(), c, h, w, plane](NodeT<T>& self) {
      T* gx = grad_of(px);
      T* gk = grad_of(pk);
      const T* xp = px->value.data();
      const T* kp = pk->value.data();
      for (int ch = 0; ch < c; ++ch) {
        const T* gc = self.grad.data() + ch * plane;
        const T* xc = xp + ch * plane;
        for (int m = -1; m <= 1; ++m) {
          for (int n = -1; n <= 1; ++n) {
            const int tap = ch * 9 + (m + 1) * 3 + (n + 1);
            const T wt = kp[tap];
            const int i0 = std::max(0, -m), i1 = std::min(h, h - m);
            const int j0 = std::max(0, -n), j1 = std::min(w, w - n);
            T acc = T(0);
            for (int i = i0; i < i1; ++i) {
              const T* g = gc + i * w;
              const T* src = xc + (i + m) * w + n;
              if (gk) {
                for (int j = j0; j < j1; ++j) acc += g[j] * src[j];
              }
              if (gx) {
                T* dst = gx + ch * plane + (i + m) * w + n;
                for (int j = j0; j < j1; ++j) dst[j] += wt * g[j];
              }
            }
            if (gk) gk[tap] += acc;
          }
        }
      }
    };
  }
  return finish(node, "depthwise_conv3x3");
}

template <typename T>
BasicTensor<T> conv3x3(const BasicTensor<T>& x, const BasicTensor<T>& weights, int stride) {
  require_rank(x, 3, "conv3x3");
  require_rank(weights, 4, "conv3x3");
  const int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int cout = weights.dim(0);
  if (weights.dim(1) != cin || weights.dim(2) != 3 || weights.dim(3) != 3) {
    throw DimensionError("conv3x3: weights " + shape_string(weights.shape()) + " for input " +
                         shape_string(x.shape()));
  }
  if (stride < 1) throw DimensionError("conv3x3: stride must be positive");
  const int ho = (h - 1) / stride + 1, wo = (w - 1) / stride + 1;
  auto node = make_node<T>({cout, ho, wo}, {&x, &weights});
  const Eigen::Index taps = static_cast<Eigen::Index>(cin) * 9, positions = static_cast<Eigen::Index>(ho) * wo;
  // im2col: row (ci, m, n), column (io, jo)
  auto for_taps = [=](auto&& body) {
    for (int ci = 0; ci < cin; ++ci)
      for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
          const Eigen::Index row = (static_cast<Eigen::Index>(ci) * 3 + m) * 3 + n;
          for (int io = 0; io < ho; ++io) {
            const int i = io * stride + m - 1;
            if (i < 0 || i >= h) continue;
            for (int jo = 0; jo < wo; ++jo) {
              const int j = jo * stride + n - 1;
              if (j < 0 || j >= w) continue;
              body(row * positions + static_cast<Eigen::Index>(io) * wo + jo,
                   (static_cast<std::size_t>(ci) * h + i) * w + j);
            }
          }
        }
  };
  auto cols = std::make_shared<MatrixR<T>>(MatrixR<T>::Zero(taps, positions));
  const T* xp = x.ptr();
  T* cp = cols->data();
  for_taps([&](Eigen::Index c, std::size_t xi) { cp[c] = xp[xi]; });
  Map<T>(node->value.data(), cout, positions).noalias() = CMap<T>(weights.ptr(), cout, taps) * *cols;
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), pw = weights.node().get(), for_taps, cols, cout, taps,
                      positions](NodeT<T>& self) {
      CMap<T> g(self.grad.data(), cout, positions);
      if (T* gw = grad_of(pw)) Map<T>(gw, cout, taps).noalias() += g * cols->transpose();
      if (T* gx = grad_of(px)) {
        MatrixR<T> gcols = CMap<T>(pw->value.data(), cout, taps).transpose() * g;
        const T* gc = gcols.data();
        for_taps([&](Eigen::Index c, std::size_t xi) { gx[xi] += gc[c]; });
      }
    };
  }
  return finish(node, "conv3x3");
}

template <typename T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& x, int factor) {
  require_rank(x, 3, "avg_pool2d");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (factor < 1 || h % factor != 0 || w % factor != 0) {
    throw DimensionError("avg_pool2d: factor " + std::to_string(factor) + " does not divide " +
                         shape_string(x.shape()));
  }
  if (factor == 1) return reshape(x, x.shape());
  const int ho = h / factor, wo = w / factor;
  auto node = make_node<T>({c, ho, wo}, {&x});
  const T inv = T(1) / static_cast<T>(factor * factor);
  const T* xp = x.ptr();
  T* yp = node->value.data();
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        yp[(static_cast<std::size_t>(ch) * ho + i / factor) * wo + j / factor] +=
            inv * xp[(static_cast<std::size_t>(ch) * h + i) * w + j];
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), c, h, w, ho, wo, factor, inv](NodeT<T>& self) {
      T* gx = grad_of(px);
      if (!gx) return;
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j)
            gx[(static_cast<std::size_t>(ch) * h + i) * w + j] +=
                inv * self.grad[(static_cast<std::size_t>(ch) * ho + i / factor) * wo + j / factor];
    };
  }
  return finish(node, "avg_pool2d");
}

namespace {

struct BilinearTap {
  int lo, hi;
  double frac;
};

std::vector<BilinearTap> bilinear_taps(int in, int out) {
  std::vector<BilinearTap> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(o)] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

template <typename T>
BasicTensor<T> resize_bilinear(const BasicTensor<T>& x, int out_h, int out_w) {
  require_rank(x, 3, "resize_bilinear");
  if (out_h < 1 || out_w < 1) throw DimensionError("resize_bilinear: empty output");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  auto rows = std::make_shared<std::vector<BilinearTap>>(bilinear_taps(h, out_h));
  auto cols = std::make_shared<std::vector<BilinearTap>>(bilinear_taps(w, out_w));
  auto node = make_node<T>({c, out_h, out_w}, {&x});
  const T* xp = x.ptr();
  T* yp = node->value.data();
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = xp + static_cast<std::size_t>(ch) * h * w;
    T* yc = yp + static_cast<std::size_t>(ch) * out_h * out_w;
    for (int i = 0; i < out_h; ++i) {
      const auto& r = (*rows)[static_cast<std::size_t>(i)];
      const T fy = static_cast<T>(r.frac);
      for (int j = 0; j < out_w; ++j) {
        const auto& cc = (*cols)[static_cast<std::size_t>(j)];
        const T fx = static_cast<T>(cc.frac);
        const T top = (T(1) - fx) * xc[r.lo * w + cc.lo] + fx * xc[r.lo * w + cc.hi];
        const T bot = (T(1) - fx) * xc[r.hi * w + cc.lo] + fx * xc[r.hi * w + cc.hi];
        yc[i * out_w + j] = (T(1) - fy) * top + fy * bot;
      }
    }
  }
  if (node->requires_grad) {
    node->backward = [px = x.node().get(), rows, cols, c, h, w, out_h, out_w](NodeT<T>& self) {
      T* gx = grad_of(px);
      if (!gx) return;
      for (int ch = 0; ch < c; ++ch) {
        T* gc = gx + static_cast<std::size_t>(ch) * h * w;
        const T* g = self.grad.data() + static_cast<std::size_t>(ch) * out_h * out_w;
        for (int i = 0; i < out_h; ++i) {
          const auto& r = (*rows)[static_cast<std::size_t>(i)];
          const T fy = static_cast<T>(r.frac);
          for (int j = 0; j < out_w; ++j) {
            const auto& cc = (*cols)[static_cast<std::size_t>(j)];
            const T fx = static_cast<T>(cc.frac);
            const T gv = g[i * out_w + j];
            gc[r.lo * w + cc.lo] += (T(1) - fy) * (T(1) - fx) * gv;
            gc[r.lo * w + cc.hi] += (T(1) - fy) * fx * gv;
            gc[r.hi * w + cc.lo] += fy * (T(1) - fx) * gv;
            gc[r.hi * w + cc.hi] += fy * fx * gv;
          }
        }
      }
    };
  }
  return finish(node, "resize_bilinear");
}

#define DINA_INSTANTIATE_OPS(T)                                                                                    \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                                   \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                                                       \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                                  \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                                      \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                                      \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                                      \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                                        \
  template BasicTensor<T> gelu(const BasicTensor<T>&);                                                            \
  template BasicTensor<T> add_row_bias(const BasicTensor<T>&, const BasicTensor<T>&);                             \
  template BasicTensor<T> add_channel_bias(const BasicTensor<T>&, const BasicTensor<T>&);                         \
  template BasicTensor<T> scale_rows(const BasicTensor<T>&, const BasicTensor<T>&);                               \
  template BasicTensor<T> rowwise_dot(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                                             \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                                            \
  template BasicTensor<T> dot(const BasicTensor<T>&, const BasicTensor<T>&);                                      \
  template BasicTensor<T> slice_rows(const BasicTensor<T>&, int, int);                                            \
  template BasicTensor<T> concat_rows(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template BasicTensor<T> slice_cols(const BasicTensor<T>&, int, int);                                            \
  template BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>&);                                        \
  template BasicTensor<T> stack_rows(const std::vector<BasicTensor<T>>&);                                         \
  template BasicTensor<T> softmax_rows(const BasicTensor<T>&);                                                    \
  template BasicTensor<T> layer_norm_rows(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, T); \
  template BasicTensor<T> layer_norm_channels(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                              T);                                                                  \
  template BasicTensor<T> l2_normalize_rows(const BasicTensor<T>&, T);                                            \
  template BasicTensor<T> diag_cross_entropy(const BasicTensor<T>&);                                              \
  template AttentionResult<T> softmax_attention(const BasicTensor<T>&, const BasicTensor<T>&,                      \
                                                const BasicTensor<T>&, T);                                         \
  template BasicTensor<T> multi_head_attention(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                               int);                                                               \
  template BasicTensor<T> depthwise_conv3x3(const BasicTensor<T>&, const BasicTensor<T>&);                        \
  template BasicTensor<T> conv3x3(const BasicTensor<T>&, const BasicTensor<T>&, int);                             \
  template BasicTensor<T> avg_pool2d(const BasicTensor<T>&, int);                                                 \
  template BasicTensor<T> resize_bilinear(const BasicTensor<T>&, int, int);

DINA_INSTANTIATE_OPS(float)
DINA_INSTANTIATE_OPS(double)

#undef DINA_INSTANTIATE_OPS

}  // namespace dina
