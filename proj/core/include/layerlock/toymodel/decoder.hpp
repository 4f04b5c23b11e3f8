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

#ifndef LAYERLOCK_TOYMODEL_DECODER_HPP_
#define LAYERLOCK_TOYMODEL_DECODER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "layerlock/autodiff/tape.hpp"
#include "layerlock/numcore/matrix.hpp"
#include "layerlock/numcore/rng.hpp"

namespace layerlock::toymodel {

struct DecoderConfig {
  std::size_t vocab = 16;
  std::size_t d_model = 32;
  std::size_t layers = 6;
  std::size_t seq_len = 32;
  std::size_t mlp_mult = 4;
  double norm_eps = 1e-5;

  void validate() const;
  bool operator==(const DecoderConfig&) const = default;
};

// Per-layer parameter blocks, in storage order.
enum class Block : std::uint8_t {
  kAttnNorm,
  kWq,
  kWk,
  kWv,
  kWo,
  kMlpNorm,
  kMlpUp,
  kMlpDown,
};

inline constexpr std::size_t kBlocksPerLayer = 8;

const char* block_name(Block b);
std::optional<Block> parse_block(const std::string& name);
bool is_norm_gain(Block b);

// Flat parameter list:
//   0 token embedding (V x d), 1 positional embedding (S x d),
//   2 + 8 (l - 1) + b   block b of layer l (1-based),
//   then final norm gain (1 x d) and output head (d x V).
struct DecoderParams {
  DecoderConfig config;
  std::vector<Matrix> tensors;

  static DecoderParams zeros(const DecoderConfig& config);
  // Xavier-uniform matrices and unit norm gains.
  static DecoderParams xavier(const DecoderConfig& config, Rng& rng);

  std::size_t count() const { return tensors.size(); }
  std::size_t scalar_count() const;
  std::string name(std::size_t index) const;

  static constexpr std::size_t kTokenEmbedding = 0;
  static constexpr std::size_t kPositionEmbedding = 1;
  std::size_t index_of(std::size_t layer, Block block) const;
  std::size_t final_norm_index() const;
  std::size_t head_index() const;
  // Layer (1-based) owning a parameter; 0 for embeddings, final norm and head.
  std::size_t layer_of(std::size_t index) const;
  bool is_gain(std::size_t index) const;

  Matrix& at(std::size_t layer, Block block) { return tensors[index_of(layer, block)]; }
  const Matrix& at(std::size_t layer, Block block) const {
    return tensors[index_of(layer, block)];
  }
};

bool bit_equal(const DecoderParams& a, const DecoderParams& b);

// Row-major (batch x seq) token ids.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<std::int64_t> tokens;
};

struct ForwardOptions {
  // Record hidden[l] for l = 0..L (0 is the embedding output).
  bool keep_hidden = false;
  // Stop after this layer and skip the head; logits are then unset.
  std::optional<std::size_t> stop_after_layer;
};

struct ForwardResult {
  std::vector<autodiff::Var> params;  // leaves, same order as tensors
  std::vector<autodiff::Var> hidden;  // (batch*seq) x d
  std::optional<autodiff::Var> logits;  // (batch*seq) x V
};

// Pre-norm single-head decoder with causal attention.
ForwardResult forward(autodiff::Tape& tape, const DecoderParams& params, const TokenBatch& batch,
                      const ForwardOptions& options = {});

// Logits without keeping a tape around.
Matrix logits(const DecoderParams& params, const TokenBatch& batch);

// Hidden state after layer `layer` (0 = embeddings).
Matrix hidden_at(const DecoderParams& params, const TokenBatch& batch, std::size_t layer);

}  // namespace layerlock::toymodel

#endif  // LAYERLOCK_TOYMODEL_DECODER_HPP_
