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

#ifndef LAYERLOCK_AUTODIFF_TAPE_HPP_
#define LAYERLOCK_AUTODIFF_TAPE_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "layerlock/numcore/matrix.hpp"

namespace layerlock::autodiff {

enum class OpKind : std::uint8_t {
  kLeaf,
  kMatmul,
  kAdd,
  kScale,
  kRowSoftmax,
  kRmsNorm,
  kRelu,
  kGather,
  kCausalMask,
  kCrossEntropy,
  kSoftCrossEntropy,
  kMse,
  kSum,
};

const char* op_name(OpKind op);

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid while the tape lives
// and has not been cleared.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
};

// Value used for masked attention scores; large enough that exp() underflows
// to exactly zero after max subtraction, small enough to stay finite.
inline constexpr double kMaskValue = -1e30;

// op(a) * op(b), optionally split into `groups` independent products: a and
// b are both stacked row-wise into `groups` equal blocks and the per-block
// products are stacked in the output.
Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false, std::size_t groups = 1);
Var add(Var a, Var b);
Var scale(Var a, double c);
Var row_softmax(Var a);
// x / sqrt(mean(x^2 over the row) + eps) * gain, gain is 1 x cols.
Var rms_norm(Var x, Var gain, double eps = 1e-5);
Var relu(Var a);
// Rows of `table` picked by `ids`.
Var embedding_gather(Var table, const std::vector<std::int64_t>& ids);
// Scores are stacked square blocks (rows = groups * cols). Row r may only see
// columns <= r mod cols; the rest are set to kMaskValue.
Var causal_mask(Var scores);
// Mean softmax cross-entropy over rows whose target is not -1.
Var cross_entropy(Var logits, const std::vector<std::int64_t>& targets);
// Mean over rows of -sum_j p_j log softmax(z)_j.
Var cross_entropy_soft(Var logits, const Matrix& probs);
// Mean of squared differences over all entries.
Var mse(Var a, const Matrix& target);
Var sum(Var a);

// Append-only record of a computation. Nodes are stored in creation order,
// which is a topological order, and backward walks them in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value);

  const Matrix& value(Var v) const;
  // Gradient of the last backward pass; zeros if the node was unreachable.
  const Matrix& grad(Var v) const;

  // Requires a 1x1 loss. A second call without zero_grad() throws.
  void backward(Var loss);
  void zero_grad();
  // Drops all nodes.
  void clear();

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op = OpKind::kLeaf;
    std::size_t in0 = 0;
    std::size_t in1 = 0;
    Matrix value;
    Matrix grad;
    // op-specific payload
    double scalar = 0.0;
    bool trans_a = false;
    bool trans_b = false;
    std::size_t groups = 1;
    std::vector<std::int64_t> indices;
    Matrix saved;
  };

  Var push(Node node);
  Node& node(Var v);
  const Node& node(Var v) const;
  void check(Var v, const char* op) const;
  void backprop(std::size_t id);

  std::vector<Node> nodes_;
  bool has_grads_ = false;

  friend Var matmul(Var, Var, bool, bool, std::size_t);
  friend Var add(Var, Var);
  friend Var scale(Var, double);
  friend Var row_softmax(Var);
  friend Var rms_norm(Var, Var, double);
  friend Var relu(Var);
  friend Var embedding_gather(Var, const std::vector<std::int64_t>&);
  friend Var causal_mask(Var);
  friend Var cross_entropy(Var, const std::vector<std::int64_t>&);
  friend Var cross_entropy_soft(Var, const Matrix&);
  friend Var mse(Var, const Matrix&);
  friend Var sum(Var);
};

}  // namespace layerlock::autodiff

#endif  // LAYERLOCK_AUTODIFF_TAPE_HPP_
