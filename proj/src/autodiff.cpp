/*
 * Copyright 2026 The sasr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sasr/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace sasr::ad {

const Matrix& Var::value() const { return tape->node(*this).value; }
Image Var::image() const { return Image(height(), width(), value()); }
double Var::scalar() const {
  const auto& v = value();
  if (v.size() != 1) throw DimensionError("Var::scalar on a non-scalar node");
  return v(0, 0);
}
Index Var::channels() const { return value().rows(); }
Index Var::height() const { return tape->node(*this).height; }
Index Var::width() const { return tape->node(*this).width; }

Tape::Node& Tape::node(Var v) {
  if (v.tape != this || v.id >= nodes_.size()) throw std::out_of_range("Var does not belong to this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw std::out_of_range("Var does not belong to this tape");
  return nodes_[v.id];
}

void Tape::check_open() const {
  if (consumed_) throw LifecycleError("tape already consumed by backward()");
}

Var Tape::push(Matrix value, Index height, Index width, bool needs_grad) {
  check_open();
  if (!value.allFinite()) throw NumericError("non-finite value recorded on tape");
  Node n;
  n.value = std::move(value);
  n.height = height;
  n.width = width;
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Matrix& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(const Image& img) { return push(img.data(), img.height(), img.width(), false); }

Var Tape::constant(Matrix value) {
  const Index cols = value.cols();
  return push(std::move(value), 1, cols, false);
}

Var Tape::parameter(const Matrix& value, Matrix* grad) {
  if (grad == nullptr || grad->rows() != value.rows() || grad->cols() != value.cols())
    throw DimensionError("parameter gradient slot must mirror the value shape");
  Var v = push(value, 1, value.cols(), true);
  nodes_[v.id].sink = grad;
  return v;
}

Var Tape::variable(const Image& img) { return push(img.data(), img.height(), img.width(), true); }

namespace {

Index kernel_extent(Index weight_cols, Index in_channels) {
  if (in_channels <= 0 || weight_cols % in_channels != 0) throw DimensionError("conv2d: weight/input channel mismatch");
  const Index taps = weight_cols / in_channels;
  const auto k = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(taps))));
  if (k * k != taps || k % 2 == 0) throw DimensionError("conv2d: kernel must be square with odd extent");
  return k;
}

// Output columns [lo, hi) whose tap offset `off` lands inside [0, n).
std::pair<Index, Index> valid_range(Index off, Index n, Index stride, Index out) {
  const Index lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  const Index hi = n - off <= 0 ? 0 : std::min(out, (n - off - 1) / stride + 1);
  return {lo, std::max(lo, hi)};
}

// Zero-padded ("same" for stride 1) patch matrix: (C*k*k) x (Ho*Wo).
Matrix im2col(const Matrix& x, Index h, Index w, Index k, Index stride, Index ho, Index wo) {
  const Index c_in = x.rows();
  const Index pad = k / 2;
  Matrix cols = Matrix::Zero(c_in * k * k, ho * wo);
  for (Index c = 0; c < c_in; ++c)
    for (Index ki = 0; ki < k; ++ki) {
      const auto [oi_lo, oi_hi] = valid_range(ki - pad, h, stride, ho);
      for (Index kj = 0; kj < k; ++kj) {
        const auto [oj_lo, oj_hi] = valid_range(kj - pad, w, stride, wo);
        double* row = cols.row((c * k + ki) * k + kj).data();
        const double* src = x.row(c).data();
        for (Index oi = oi_lo; oi < oi_hi; ++oi) {
          const double* s = src + (oi * stride + ki - pad) * w + kj - pad;
          double* d = row + oi * wo;
          for (Index oj = oj_lo; oj < oj_hi; ++oj) d[oj] = s[oj * stride];
        }
      }
    }
  return cols;
}

void col2im_add(const Matrix& cols, Matrix& dx, Index h, Index w, Index k, Index stride, Index ho, Index wo) {
  const Index c_in = dx.rows();
  const Index pad = k / 2;
  for (Index c = 0; c < c_in; ++c)
    for (Index ki = 0; ki < k; ++ki) {
      const auto [oi_lo, oi_hi] = valid_range(ki - pad, h, stride, ho);
      for (Index kj = 0; kj < k; ++kj) {
        const auto [oj_lo, oj_hi] = valid_range(kj - pad, w, stride, wo);
        const double* row = cols.row((c * k + ki) * k + kj).data();
        double* dst = dx.row(c).data();
        for (Index oi = oi_lo; oi < oi_hi; ++oi) {
          double* d = dst + (oi * stride + ki - pad) * w + kj - pad;
          const double* s = row + oi * wo;
          for (Index oj = oj_lo; oj < oj_hi; ++oj) d[oj * stride] += s[oj];
        }
      }
    }
}

double clamp_p(double p, double p_min) { return std::clamp(p, p_min, 1.0 - p_min); }

}  // namespace

Var Tape::conv2d(Var x, Var weight, Var bias, Index stride) {
  check_open();
  if (stride < 1) throw PreconditionError("conv2d: stride must be >= 1");
  const Node& xn = node(x);
  const Node& wn = node(weight);
  const Node& bn = node(bias);
  const Index k = kernel_extent(wn.value.cols(), xn.value.rows());
  if (bn.value.rows() != wn.value.rows() || bn.value.cols() != 1) throw DimensionError("conv2d: bias shape");
  const Index h = xn.height, w = xn.width;
  const Index ho = (h - 1) / stride + 1, wo = (w - 1) / stride + 1;
  Matrix cols = im2col(xn.value, h, w, k, stride, ho, wo);
  Matrix out = wn.value * cols;
  out.colwise() += bn.value.col(0);
  const bool needs = xn.needs_grad || wn.needs_grad || bn.needs_grad;
  Var y = push(std::move(out), ho, wo, needs);
  if (needs) {
    nodes_[y.id].backward = [x, weight, bias, cols = std::move(cols), h, w, k, stride, ho, wo](Tape& t,
                                                                                              std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      if (t.nodes_[weight.id].needs_grad) t.grad_slot(weight.id).noalias() += g * cols.transpose();
      if (t.nodes_[bias.id].needs_grad) t.grad_slot(bias.id).col(0) += g.rowwise().sum();
      if (t.nodes_[x.id].needs_grad) {
        const Matrix dcols = t.nodes_[weight.id].value.transpose() * g;
        col2im_add(dcols, t.grad_slot(x.id), h, w, k, stride, ho, wo);
      }
    };
  }
  return y;
}

Var Tape::add(Var a, Var b) {
  check_open();
  const Node& an = node(a);
  const Node& bn = node(b);
  if (an.value.rows() != bn.value.rows() || an.value.cols() != bn.value.cols()) throw DimensionError("add: shape mismatch");
  const bool needs = an.needs_grad || bn.needs_grad;
  Var y = push(an.value + bn.value, an.height, an.width, needs);
  if (needs) {
    nodes_[y.id].backward = [a, b](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      if (t.nodes_[a.id].needs_grad) t.grad_slot(a.id) += g;
      if (t.nodes_[b.id].needs_grad) t.grad_slot(b.id) += g;
    };
  }
  return y;
}

Var Tape::concat_channels(const std::vector<Var>& parts) {
  check_open();
  if (parts.empty()) throw PreconditionError("concat_channels: no inputs");
  const Node& first = node(parts.front());
  Index rows = 0;
  bool needs = false;
  for (Var p : parts) {
    const Node& n = node(p);
    if (n.height != first.height || n.width != first.width) throw DimensionError("concat_channels: spatial mismatch");
    rows += n.value.rows();
    needs = needs || n.needs_grad;
  }
  Matrix out(rows, first.value.cols());
  Index r = 0;
  for (Var p : parts) {
    const Matrix& v = node(p).value;
    out.middleRows(r, v.rows()) = v;
    r += v.rows();
  }
  Var y = push(std::move(out), first.height, first.width, needs);
  if (needs) {
    nodes_[y.id].backward = [parts](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      Index r0 = 0;
      for (Var p : parts) {
        const Index n = t.nodes_[p.id].value.rows();
        if (t.nodes_[p.id].needs_grad) t.grad_slot(p.id) += g.middleRows(r0, n);
        r0 += n;
      }
    };
  }
  return y;
}

Var Tape::relu(Var x) { return leaky_relu(x, 0.0); }

Var Tape::leaky_relu(Var x, double slope) {
  check_open();
  const Node& xn = node(x);
  if (!(slope >= 0.0 && slope < 1.0)) throw PreconditionError("leaky_relu: slope must lie in [0, 1)");
  Matrix out = xn.value.cwiseMax(slope * xn.value);
  const bool needs = xn.needs_grad;
  Var y = push(std::move(out), xn.height, xn.width, needs);
  if (needs) {
    nodes_[y.id].backward = [x, slope](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& xv = t.nodes_[x.id].value;
      t.grad_slot(x.id).array() += (xv.array() > 0.0).select(g.array(), slope * g.array());
    };
  }
  return y;
}

Var Tape::sigmoid(Var x) {
  check_open();
  const Node& xn = node(x);
  Matrix out = xn.value.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  const bool needs = xn.needs_grad;
  Var y = push(std::move(out), xn.height, xn.width, needs);
  if (needs) {
    nodes_[y.id].backward = [x](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      const auto s = t.nodes_[self].value.array();
      t.grad_slot(x.id).array() += g.array() * s * (1.0 - s);
    };
  }
  return y;
}

Var Tape::dense(Var x, Var weight, Var bias) {
  check_open();
  const Node& xn = node(x);
  const Node& wn = node(weight);
  const Node& bn = node(bias);
  const Index n = xn.value.size();
  if (wn.value.cols() != n) throw DimensionError("dense: weight columns must equal the flattened input size");
  if (bn.value.rows() != wn.value.rows() || bn.value.cols() != 1) throw DimensionError("dense: bias shape");
  const Eigen::Map<const Eigen::VectorXd> flat(xn.value.data(), n);
  Matrix out = wn.value * flat + bn.value;
  const bool needs = xn.needs_grad || wn.needs_grad || bn.needs_grad;
  Var y = push(std::move(out), 1, 1, needs);
  if (needs) {
    nodes_[y.id].backward = [x, weight, bias, n](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;  // out x 1
      const Eigen::Map<const Eigen::VectorXd> xf(t.nodes_[x.id].value.data(), n);
      if (t.nodes_[weight.id].needs_grad) t.grad_slot(weight.id).noalias() += g * xf.transpose();
      if (t.nodes_[bias.id].needs_grad) t.grad_slot(bias.id) += g;
      if (t.nodes_[x.id].needs_grad) {
        Matrix& dx = t.grad_slot(x.id);
        Eigen::Map<Eigen::VectorXd>(dx.data(), n).noalias() += t.nodes_[weight.id].value.transpose() * g;
      }
    };
  }
  return y;
}

Var Tape::resize(Var x, Index height, Index width) {
  check_open();
  const Node& xn = node(x);
  const Matrix rh = cubic_resample_matrix(xn.height, height);
  const Matrix rw = cubic_resample_matrix(xn.width, width);
  const Image in(xn.height, xn.width, xn.value);
  Matrix out = resize_bicubic(in, height, width).data();
  const bool needs = xn.needs_grad;
  Var y = push(std::move(out), height, width, needs);
  if (needs) {
    nodes_[y.id].backward = [x, rh, rw, height, width](Tape& t, std::size_t self) {
      const Matrix& g = t.nodes_[self].grad;
      Matrix& dx = t.grad_slot(x.id);
      const Index h = rh.cols(), w = rw.cols();
      for (Index c = 0; c < g.rows(); ++c) {
        Eigen::Map<const Matrix> gp(g.row(c).data(), height, width);
        Eigen::Map<Matrix> dp(dx.row(c).data(), h, w);
        dp.noalias() += rh.transpose() * gp * rw;
      }
    };
  }
  return y;
}

Var Tape::scale(Var x, double factor) {
  check_open();
  const Node& xn = node(x);
  const bool needs = xn.needs_grad;
  Var y = push(factor * xn.value, xn.height, xn.width, needs);
  if (needs) {
    nodes_[y.id].backward = [x, factor](Tape& t, std::size_t self) {
      t.grad_slot(x.id) += factor * t.nodes_[self].grad;
    };
  }
  return y;
}

Var Tape::dot(Var x, const Matrix& w) {
  check_open();
  const Node& xn = node(x);
  if (xn.value.rows() != w.rows() || xn.value.cols() != w.cols()) throw DimensionError("dot: shape mismatch");
  const bool needs = xn.needs_grad;
  Matrix weights = w;
  Var y = push(Matrix::Constant(1, 1, xn.value.cwiseProduct(weights).sum()), 1, 1, needs);
  if (needs) {
    nodes_[y.id].backward = [x, weights = std::move(weights)](Tape& t, std::size_t self) {
      t.grad_slot(x.id) += t.nodes_[self].grad(0, 0) * weights;
    };
  }
  return y;
}

Var Tape::sum(const std::vector<Var>& scalars) {
  check_open();
  double total = 0.0;
  bool needs = false;
  for (Var s : scalars) {
    const Node& n = node(s);
    if (n.value.size() != 1) throw DimensionError("sum: inputs must be scalars");
    total += n.value(0, 0);
    needs = needs || n.needs_grad;
  }
  Var y = push(Matrix::Constant(1, 1, total), 1, 1, needs);
  if (needs) {
    nodes_[y.id].backward = [scalars](Tape& t, std::size_t self) {
      const double g = t.nodes_[self].grad(0, 0);
      for (Var s : scalars)
        if (t.nodes_[s.id].needs_grad) t.grad_slot(s.id)(0, 0) += g;
    };
  }
  return y;
}

Var Tape::weighted_l1(Var x, const Image& target, const Image& h) {
  check_open();
  const Node& xn = node(x);
  if (xn.value.rows() != target.channels() || xn.height != target.height() || xn.width != target.width() ||
      !target.same_shape(h))
    throw DimensionError("weighted_l1: shape mismatch");
  const Eigen::ArrayXXd d = (target.data() - xn.value).array();
  const double value = (h.data().array() * d.abs()).sum();
  const bool needs = xn.needs_grad;
  Matrix dgrad;
  if (needs) dgrad = -(h.data().array() * d.sign()).matrix();
  Var y = push(Matrix::Constant(1, 1, value), 1, 1, needs);
  if (needs) {
    nodes_[y.id].backward = [x, dgrad = std::move(dgrad)](Tape& t, std::size_t self) {
      t.grad_slot(x.id) += t.nodes_[self].grad(0, 0) * dgrad;
    };
  }
  return y;
}

Var Tape::weighted_charbonnier(Var x, const Image& target, const Image& h, double eps) {
  check_open();
  if (!(eps > 0.0)) throw PreconditionError("weighted_charbonnier: epsilon must be positive");
  const Node& xn = node(x);
  if (xn.value.rows() != target.channels() || xn.height != target.height() || xn.width != target.width() ||
      !target.same_shape(h))
    throw DimensionError("weighted_charbonnier: shape mismatch");
  const Eigen::ArrayXXd d = (target.data() - xn.value).array();
  const Eigen::ArrayXXd root = (d.square() + eps * eps).sqrt();
  const double value = (h.data().array() * root).sum();
  const bool needs = xn.needs_grad;
  Matrix dgrad;
  if (needs) dgrad = -(h.data().array() * d / root).matrix();
  Var y = push(Matrix::Constant(1, 1, value), 1, 1, needs);
  if (needs) {
    nodes_[y.id].backward = [x, dgrad = std::move(dgrad)](Tape& t, std::size_t self) {
      t.grad_slot(x.id) += t.nodes_[self].grad(0, 0) * dgrad;
    };
  }
  return y;
}

Var Tape::clamp_probability(Var p, double p_min) {
  check_open();
  const Node& pn = node(p);
  if (pn.value.size() != 1) throw DimensionError("clamp_probability: expects a scalar");
  const double v = pn.value(0, 0);
  const double c = clamp_p(v, p_min);
  const bool pass = c == v;
  const bool needs = pn.needs_grad;
  Var y = push(Matrix::Constant(1, 1, c), 1, 1, needs);
  if (needs && pass) {
    nodes_[y.id].backward = [p](Tape& t, std::size_t self) { t.grad_slot(p.id)(0, 0) += t.nodes_[self].grad(0, 0); };
  }
  return y;
}

Var Tape::neg_log(Var p, double p_min) {
  check_open();
  Var c = clamp_probability(p, p_min);
  const double v = c.scalar();
  const bool needs = node(c).needs_grad;
  Var y = push(Matrix::Constant(1, 1, -std::log(v)), 1, 1, needs);
  if (needs) {
    nodes_[y.id].backward = [c, v](Tape& t, std::size_t self) { t.grad_slot(c.id)(0, 0) -= t.nodes_[self].grad(0, 0) / v; };
  }
  return y;
}

Var Tape::neg_log1m(Var p, double p_min) {
  check_open();
  Var c = clamp_probability(p, p_min);
  const double v = c.scalar();
  const bool needs = node(c).needs_grad;
  Var y = push(Matrix::Constant(1, 1, -std::log1p(-v)), 1, 1, needs);
  if (needs) {
    nodes_[y.id].backward = [c, v](Tape& t, std::size_t self) {
      t.grad_slot(c.id)(0, 0) += t.nodes_[self].grad(0, 0) / (1.0 - v);
    };
  }
  return y;
}

void Tape::backward(Var root) {
  check_open();
  Node& r = node(root);
  consumed_ = true;
  r.grad = Matrix::Ones(r.value.rows(), r.value.cols());
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.sink != nullptr) *n.sink += nodes_[i].grad;
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Image Tape::grad_image(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Image(n.value.rows(), n.height, n.width, 0.0);
  return Image(n.height, n.width, n.grad);
}

}  // namespace sasr::ad
