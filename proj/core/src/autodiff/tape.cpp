// Copyright 2026 The LayerLock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "layerlock/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "layerlock/numcore/linalg.hpp"

namespace layerlock::autodiff {
namespace {

std::string shape_error(const char* op, const Matrix& a, const Matrix& b) {
  return std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
         b.shape_string();
}

struct GemmShape {
  std::size_t m, k, n, rows_a, rows_b;
};

GemmShape matmul_shape(const Matrix& a, const Matrix& b, bool ta, bool tb, std::size_t groups) {
  if (groups == 0 || a.rows() % groups != 0 || b.rows() % groups != 0) {
    throw std::invalid_argument("matmul: rows of " + a.shape_string() + " and " +
                                b.shape_string() + " do not split into " +
                                std::to_string(groups) + " groups");
  }
  GemmShape s{};
  s.rows_a = a.rows() / groups;
  s.rows_b = b.rows() / groups;
  s.m = ta ? a.cols() : s.rows_a;
  const std::size_t ka = ta ? s.rows_a : a.cols();
  const std::size_t kb = tb ? b.cols() : s.rows_b;
  s.n = tb ? s.rows_b : b.cols();
  if (ka != kb) throw std::invalid_argument(shape_error("matmul", a, b));
  s.k = ka;
  return s;
}

// Row-wise log-sum-exp and softmax of z into q.
void softmax_into(const Matrix& z, Matrix& q, std::vector<double>* lse) {
  q = Matrix(z.rows(), z.cols());
  if (lse) lse->assign(z.rows(), 0.0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto zr = z.row(i);
    auto qr = q.row(i);
    const double mx = *std::max_element(zr.begin(), zr.end());
    double total = 0.0;
    for (std::size_t j = 0; j < zr.size(); ++j) {
      qr[j] = std::exp(zr[j] - mx);
      total += qr[j];
    }
    const double inv = 1.0 / total;
    for (double& v : qr) v *= inv;
    if (lse) (*lse)[i] = mx + std::log(total);
  }
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kScale: return "scale";
    case OpKind::kRowSoftmax: return "row_softmax";
    case OpKind::kRmsNorm: return "rms_norm";
    case OpKind::kRelu: return "relu";
    case OpKind::kGather: return "embedding_gather";
    case OpKind::kCausalMask: return "causal_mask";
    case OpKind::kCrossEntropy: return "cross_entropy";
    case OpKind::kSoftCrossEntropy: return "cross_entropy_soft";
    case OpKind::kMse: return "mse";
    case OpKind::kSum: return "sum";
  }
  return "unknown";
}

const Matrix& Var::value() const { return tape->value(*this); }
const Matrix& Var::grad() const { return tape->grad(*this); }

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::check(Var v, const char* op) const {
  if (v.tape != this || v.id >= nodes_.size()) {
    throw std::invalid_argument(std::string(op) + ": variable does not belong to this tape");
  }
}

Tape::Node& Tape::node(Var v) {
  check(v, "tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  check(v, "tape");
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

const Matrix& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!has_grads_) throw std::logic_error("grad: no backward pass has run");
  return n.grad;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad = Matrix();
  has_grads_ = false;
}

void Tape::clear() {
  nodes_.clear();
  has_grads_ = false;
}

void Tape::backward(Var loss) {
  const Node& l = node(loss);
  if (l.value.rows() != 1 || l.value.cols() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + l.value.shape_string());
  }
  if (has_grads_) {
    throw std::logic_error("backward: gradients already populated; call zero_grad() first");
  }
  for (Node& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
  has_grads_ = true;
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) backprop(id);
}

void Tape::backprop(std::size_t id) {
  Node& n = nodes_[id];
  const Matrix& g = n.grad;
  switch (n.op) {
    case OpKind::kLeaf:
      return;

    case OpKind::kMatmul: {
      const Matrix& a = nodes_[n.in0].value;
      const Matrix& b = nodes_[n.in1].value;
      Matrix& ga = nodes_[n.in0].grad;
      Matrix& gb = nodes_[n.in1].grad;
      const GemmShape s = matmul_shape(a, b, n.trans_a, n.trans_b, n.groups);
      for (std::size_t gi = 0; gi < n.groups; ++gi) {
        const double* ap = a.data().data() + gi * s.rows_a * a.cols();
        const double* bp = b.data().data() + gi * s.rows_b * b.cols();
        const double* dc = g.data().data() + gi * s.m * s.n;
        double* da = ga.data().data() + gi * s.rows_a * a.cols();
        double* db = gb.data().data() + gi * s.rows_b * b.cols();
        if (!n.trans_a) {
          kernel::gemm(dc, bp, da, s.m, s.n, s.k, false, !n.trans_b, true);
        } else {
          kernel::gemm(bp, dc, da, s.k, s.n, s.m, n.trans_b, true, true);
        }
        if (!n.trans_b) {
          kernel::gemm(ap, dc, db, s.k, s.m, s.n, !n.trans_a, false, true);
        } else {
          kernel::gemm(dc, ap, db, s.n, s.m, s.k, true, n.trans_a, true);
        }
      }
      return;
    }

    case OpKind::kAdd:
      nodes_[n.in0].grad += g;
      nodes_[n.in1].grad += g;
      return;

    case OpKind::kScale: {
      auto dst = nodes_[n.in0].grad.data();
      const auto src = g.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.scalar * src[i];
      return;
    }

    case OpKind::kRowSoftmax: {
      Matrix& gx = nodes_[n.in0].grad;
      for (std::size_t i = 0; i < n.value.rows(); ++i) {
        const auto y = n.value.row(i);
        const auto dy = g.row(i);
        double inner = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) inner += dy[j] * y[j];
        auto dx = gx.row(i);
        for (std::size_t j = 0; j < y.size(); ++j) dx[j] += y[j] * (dy[j] - inner);
      }
      return;
    }

    case OpKind::kRmsNorm: {
      const Matrix& x = nodes_[n.in0].value;
      const Matrix& gain = nodes_[n.in1].value;
      Matrix& gx = nodes_[n.in0].grad;
      Matrix& gg = nodes_[n.in1].grad;
      const std::size_t d = x.cols();
      for (std::size_t i = 0; i < x.rows(); ++i) {
        const double r = n.saved(i, 0);
        const auto xr = x.row(i);
        const auto dy = g.row(i);
        double inner = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          inner += dy[j] * gain(0, j) * xr[j];
          gg(0, j) += dy[j] * xr[j] * r;
        }
        const double coef = r * r * r * inner / static_cast<double>(d);
        auto dx = gx.row(i);
        for (std::size_t j = 0; j < d; ++j) dx[j] += dy[j] * gain(0, j) * r - coef * xr[j];
      }
      return;
    }

    case OpKind::kRelu: {
      const auto x = nodes_[n.in0].value.data();
      auto dx = nodes_[n.in0].grad.data();
      const auto dy = g.data();
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
      }
      return;
    }

    case OpKind::kGather: {
      Matrix& gt = nodes_[n.in0].grad;
      for (std::size_t r = 0; r < n.indices.size(); ++r) {
        auto dst = gt.row(static_cast<std::size_t>(n.indices[r]));
        const auto src = g.row(r);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
      return;
    }

    case OpKind::kCausalMask: {
      Matrix& gx = nodes_[n.in0].grad;
      const std::size_t period = n.value.cols();
      for (std::size_t i = 0; i < n.value.rows(); ++i) {
        const std::size_t visible = i % period + 1;
        const auto dy = g.row(i);
        auto dx = gx.row(i);
        for (std::size_t j = 0; j < visible; ++j) dx[j] += dy[j];
      }
      return;
    }

    case OpKind::kCrossEntropy: {
      const Matrix& z = nodes_[n.in0].value;
      Matrix q;
      softmax_into(z, q, nullptr);
      Matrix& gz = nodes_[n.in0].grad;
      const double coef = g(0, 0) * n.scalar;  // scalar = 1 / counted rows
      for (std::size_t i = 0; i < z.rows(); ++i) {
        const std::int64_t t = n.indices[i];
        if (t < 0) continue;
        auto dz = gz.row(i);
        const auto qr = q.row(i);
        for (std::size_t j = 0; j < qr.size(); ++j) dz[j] += coef * qr[j];
        dz[static_cast<std::size_t>(t)] -= coef;
      }
      return;
    }

    case OpKind::kSoftCrossEntropy: {
      const Matrix& z = nodes_[n.in0].value;
      Matrix q;
      softmax_into(z, q, nullptr);
      Matrix& gz = nodes_[n.in0].grad;
      const double coef = g(0, 0) / static_cast<double>(z.rows());
      for (std::size_t i = 0; i < z.rows(); ++i) {
        const auto p = n.saved.row(i);
        double mass = 0.0;
        for (double v : p) mass += v;
        const auto qr = q.row(i);
        auto dz = gz.row(i);
        for (std::size_t j = 0; j < qr.size(); ++j) dz[j] += coef * (qr[j] * mass - p[j]);
      }
      return;
    }

    case OpKind::kMse: {
      const auto a = nodes_[n.in0].value.data();
      const auto t = n.saved.data();
      auto da = nodes_[n.in0].grad.data();
      const double coef = 2.0 * g(0, 0) / static_cast<double>(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) da[i] += coef * (a[i] - t[i]);
      return;
    }

    case OpKind::kSum: {
      const double gv = g(0, 0);
      for (double& v : nodes_[n.in0].grad.data()) v += gv;
      return;
    }
  }
}

Var matmul(Var a, Var b, bool trans_a, bool trans_b, std::size_t groups) {
  Tape& t = *a.tape;
  t.check(a, "matmul");
  t.check(b, "matmul");
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  const GemmShape s = matmul_shape(av, bv, trans_a, trans_b, groups);
  Tape::Node n;
  n.op = OpKind::kMatmul;
  n.in0 = a.id;
  n.in1 = b.id;
  n.trans_a = trans_a;
  n.trans_b = trans_b;
  n.groups = groups;
  n.value = Matrix(groups * s.m, s.n);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    kernel::gemm(av.data().data() + gi * s.rows_a * av.cols(),
                 bv.data().data() + gi * s.rows_b * bv.cols(),
                 n.value.data().data() + gi * s.m * s.n, s.m, s.k, s.n, trans_a, trans_b, false);
  }
  return t.push(std::move(n));
}

Var add(Var a, Var b) {
  Tape& t = *a.tape;
  t.check(a, "add");
  t.check(b, "add");
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (!av.same_shape(bv)) throw std::invalid_argument(shape_error("add", av, bv));
  Tape::Node n;
  n.op = OpKind::kAdd;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = av + bv;
  return t.push(std::move(n));
}

Var scale(Var a, double c) {
  Tape& t = *a.tape;
  t.check(a, "scale");
  Tape::Node n;
  n.op = OpKind::kScale;
  n.in0 = a.id;
  n.scalar = c;
  n.value = t.value(a) * c;
  return t.push(std::move(n));
}

Var row_softmax(Var a) {
  Tape& t = *a.tape;
  t.check(a, "row_softmax");
  const Matrix& av = t.value(a);
  if (av.cols() == 0) throw std::invalid_argument("row_softmax: no columns");
  Tape::Node n;
  n.op = OpKind::kRowSoftmax;
  n.in0 = a.id;
  softmax_into(av, n.value, nullptr);
  return t.push(std::move(n));
}

Var rms_norm(Var x, Var gain, double eps) {
  Tape& t = *x.tape;
  t.check(x, "rms_norm");
  t.check(gain, "rms_norm");
  const Matrix& xv = t.value(x);
  const Matrix& gv = t.value(gain);
  if (gv.rows() != 1 || gv.cols() != xv.cols()) {
    throw std::invalid_argument(shape_error("rms_norm", xv, gv));
  }
  Tape::Node n;
  n.op = OpKind::kRmsNorm;
  n.in0 = x.id;
  n.in1 = gain.id;
  n.scalar = eps;
  n.saved = Matrix(xv.rows(), 1);
  n.value = Matrix(xv.rows(), xv.cols());
  const double d = static_cast<double>(xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    const auto xr = xv.row(i);
    double ms = 0.0;
    for (double v : xr) ms += v * v;
    const double r = 1.0 / std::sqrt(ms / d + eps);
    n.saved(i, 0) = r;
    auto yr = n.value.row(i);
    for (std::size_t j = 0; j < xr.size(); ++j) yr[j] = xr[j] * r * gv(0, j);
  }
  return t.push(std::move(n));
}

Var relu(Var a) {
  Tape& t = *a.tape;
  t.check(a, "relu");
  Tape::Node n;
  n.op = OpKind::kRelu;
  n.in0 = a.id;
  n.value = t.value(a);
  for (double& v : n.value.data()) v = v > 0.0 ? v : 0.0;
  return t.push(std::move(n));
}

Var embedding_gather(Var table, const std::vector<std::int64_t>& ids) {
  Tape& t = *table.tape;
  t.check(table, "embedding_gather");
  const Matrix& tv = t.value(table);
  Tape::Node n;
  n.op = OpKind::kGather;
  n.in0 = table.id;
  n.indices = ids;
  n.value = Matrix(ids.size(), tv.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= tv.rows()) {
      throw std::out_of_range("embedding_gather: id " + std::to_string(ids[r]) +
                              " outside table " + tv.shape_string());
    }
    const auto src = tv.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), n.value.row(r).begin());
  }
  return t.push(std::move(n));
}

Var causal_mask(Var scores) {
  Tape& t = *scores.tape;
  t.check(scores, "causal_mask");
  const Matrix& sv = t.value(scores);
  if (sv.cols() == 0 || sv.rows() % sv.cols() != 0) {
    throw std::invalid_argument("causal_mask: scores " + sv.shape_string() +
                                " are not stacked square blocks");
  }
  Tape::Node n;
  n.op = OpKind::kCausalMask;
  n.in0 = scores.id;
  n.value = sv;
  for (std::size_t i = 0; i < sv.rows(); ++i) {
    auto row = n.value.row(i);
    for (std::size_t j = i % sv.cols() + 1; j < sv.cols(); ++j) row[j] = kMaskValue;
  }
  return t.push(std::move(n));
}

Var cross_entropy(Var logits, const std::vector<std::int64_t>& targets) {
  Tape& t = *logits.tape;
  t.check(logits, "cross_entropy");
  const Matrix& z = t.value(logits);
  if (targets.size() != z.rows()) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                " targets for logits " + z.shape_string());
  }
  Matrix q;
  std::vector<double> lse;
  softmax_into(z, q, &lse);
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const std::int64_t tgt = targets[i];
    if (tgt == -1) continue;
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= z.cols()) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(tgt) + " outside " +
                              std::to_string(z.cols()) + " classes");
    }
    total += lse[i] - z(i, static_cast<std::size_t>(tgt));
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("cross_entropy: every target is ignored");
  Tape::Node n;
  n.op = OpKind::kCrossEntropy;
  n.in0 = logits.id;
  n.indices = targets;
  n.scalar = 1.0 / static_cast<double>(counted);
  n.value = Matrix(1, 1, total / static_cast<double>(counted));
  return t.push(std::move(n));
}

Var cross_entropy_soft(Var logits, const Matrix& probs) {
  Tape& t = *logits.tape;
  t.check(logits, "cross_entropy_soft");
  const Matrix& z = t.value(logits);
  if (!z.same_shape(probs)) throw std::invalid_argument(shape_error("cross_entropy_soft", z, probs));
  if (z.rows() == 0) throw std::invalid_argument("cross_entropy_soft: no rows");
  Matrix q;
  std::vector<double> lse;
  softmax_into(z, q, &lse);
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto p = probs.row(i);
    const auto zr = z.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) total -= p[j] * (zr[j] - lse[i]);
  }
  Tape::Node n;
  n.op = OpKind::kSoftCrossEntropy;
  n.in0 = logits.id;
  n.saved = probs;
  n.value = Matrix(1, 1, total / static_cast<double>(z.rows()));
  return t.push(std::move(n));
}

Var mse(Var a, const Matrix& target) {
  Tape& t = *a.tape;
  t.check(a, "mse");
  const Matrix& av = t.value(a);
  if (!av.same_shape(target)) throw std::invalid_argument(shape_error("mse", av, target));
  if (av.empty()) throw std::invalid_argument("mse: empty input");
  double total = 0.0;
  const auto x = av.data();
  const auto y = target.data();
  for (std::size_t i = 0; i < x.size(); ++i) total += (x[i] - y[i]) * (x[i] - y[i]);
  Tape::Node n;
  n.op = OpKind::kMse;
  n.in0 = a.id;
  n.saved = target;
  n.value = Matrix(1, 1, total / static_cast<double>(x.size()));
  return t.push(std::move(n));
}

Var sum(Var a) {
  Tape& t = *a.tape;
  t.check(a, "sum");
  Tape::Node n;
  n.op = OpKind::kSum;
  n.in0 = a.id;
  n.value = Matrix(1, 1, layerlock::sum(t.value(a)));
  return t.push(std::move(n));
}

}  // namespace layerlock::autodiff
