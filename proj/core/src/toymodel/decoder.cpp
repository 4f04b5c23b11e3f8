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

#include "layerlock/toymodel/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "layerlock/numcore/sampling.hpp"

namespace layerlock::toymodel {

using autodiff::Tape;
using autodiff::Var;

namespace {

constexpr const char* kBlockNames[kBlocksPerLayer] = {
    "attn_norm", "Wq", "Wk", "Wv", "Wo", "mlp_norm", "mlp_up", "mlp_down"};

struct Shape {
  std::size_t rows, cols;
};

Shape block_shape(const DecoderConfig& c, Block b) {
  const std::size_t d = c.d_model;
  switch (b) {
    case Block::kAttnNorm:
    case Block::kMlpNorm: return {1, d};
    case Block::kMlpUp: return {d, c.mlp_mult * d};
    case Block::kMlpDown: return {c.mlp_mult * d, d};
    default: return {d, d};
  }
}

std::vector<Shape> all_shapes(const DecoderConfig& c) {
  std::vector<Shape> shapes;
  shapes.push_back({c.vocab, c.d_model});
  shapes.push_back({c.seq_len, c.d_model});
  for (std::size_t l = 0; l < c.layers; ++l) {
    for (std::size_t b = 0; b < kBlocksPerLayer; ++b) {
      shapes.push_back(block_shape(c, static_cast<Block>(b)));
    }
  }
  shapes.push_back({1, c.d_model});
  shapes.push_back({c.d_model, c.vocab});
  return shapes;
}

}  // namespace

void DecoderConfig::validate() const {
  if (vocab < 2 || d_model == 0 || layers == 0 || seq_len == 0 || mlp_mult == 0) {
    throw std::invalid_argument("DecoderConfig: vocab >= 2 and positive d_model, layers, "
                                "seq_len, mlp_mult required");
  }
  if (!(norm_eps > 0.0)) throw std::invalid_argument("DecoderConfig: norm_eps must be positive");
}

const char* block_name(Block b) { return kBlockNames[static_cast<std::size_t>(b)]; }

std::optional<Block> parse_block(const std::string& name) {
  for (std::size_t b = 0; b < kBlocksPerLayer; ++b) {
    if (name == kBlockNames[b]) return static_cast<Block>(b);
  }
  return std::nullopt;
}

bool is_norm_gain(Block b) { return b == Block::kAttnNorm || b == Block::kMlpNorm; }

DecoderParams DecoderParams::zeros(const DecoderConfig& config) {
  config.validate();
  DecoderParams p;
  p.config = config;
  for (const Shape& s : all_shapes(config)) p.tensors.emplace_back(s.rows, s.cols);
  return p;
}

DecoderParams DecoderParams::xavier(const DecoderConfig& config, Rng& rng) {
  DecoderParams p = zeros(config);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    Matrix& t = p.tensors[i];
    if (p.is_gain(i)) {
      t.fill(1.0);
    } else {
      t = xavier_init(t.rows(), t.cols(), rng);
    }
  }
  return p;
}

std::size_t DecoderParams::scalar_count() const {
  std::size_t total = 0;
  for (const Matrix& t : tensors) total += t.size();
  return total;
}

std::size_t DecoderParams::index_of(std::size_t layer, Block block) const {
  if (layer == 0 || layer > config.layers) {
    throw std::out_of_range("DecoderParams: layer " + std::to_string(layer) + " outside 1.." +
                            std::to_string(config.layers));
  }
  return 2 + kBlocksPerLayer * (layer - 1) + static_cast<std::size_t>(block);
}

std::size_t DecoderParams::final_norm_index() const { return 2 + kBlocksPerLayer * config.layers; }
std::size_t DecoderParams::head_index() const { return final_norm_index() + 1; }

std::size_t DecoderParams::layer_of(std::size_t index) const {
  if (index < 2 || index >= final_norm_index()) return 0;
  return (index - 2) / kBlocksPerLayer + 1;
}

bool DecoderParams::is_gain(std::size_t index) const {
  if (index == final_norm_index()) return true;
  if (layer_of(index) == 0) return false;
  return is_norm_gain(static_cast<Block>((index - 2) % kBlocksPerLayer));
}

std::string DecoderParams::name(std::size_t index) const {
  if (index == kTokenEmbedding) return "tok_emb";
  if (index == kPositionEmbedding) return "pos_emb";
  if (index == final_norm_index()) return "final_norm";
  if (index == head_index()) return "head";
  if (index >= tensors.size()) throw std::out_of_range("DecoderParams: bad index");
  const std::size_t layer = layer_of(index);
  return "layer" + std::to_string(layer) + "." + kBlockNames[(index - 2) % kBlocksPerLayer];
}

bool bit_equal(const DecoderParams& a, const DecoderParams& b) {
  if (!(a.config == b.config) || a.tensors.size() != b.tensors.size()) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    if (!bit_equal(a.tensors[i], b.tensors[i])) return false;
  }
  return true;
}

ForwardResult forward(Tape& tape, const DecoderParams& params, const TokenBatch& batch,
                      const ForwardOptions& options) {
  const DecoderConfig& c = params.config;
  if (batch.batch == 0 || batch.seq == 0 || batch.tokens.size() != batch.batch * batch.seq) {
    throw std::invalid_argument("forward: token batch is " + std::to_string(batch.batch) + "x" +
                                std::to_string(batch.seq) + " with " +
                                std::to_string(batch.tokens.size()) + " ids");
  }
  if (batch.seq > c.seq_len) {
    throw std::invalid_argument("forward: sequence length " + std::to_string(batch.seq) +
                                " exceeds the model's " + std::to_string(c.seq_len));
  }
  for (std::int64_t t : batch.tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= c.vocab) {
      throw std::out_of_range("forward: token " + std::to_string(t) + " outside vocabulary of " +
                              std::to_string(c.vocab));
    }
  }
  const std::size_t last = options.stop_after_layer.value_or(c.layers);
  if (last > c.layers) throw std::out_of_range("forward: stop layer beyond the model");

  ForwardResult out;
  out.params.reserve(params.tensors.size());
  for (const Matrix& t : params.tensors) out.params.push_back(tape.leaf(t));
  auto p = [&](std::size_t layer, Block b) { return out.params[params.index_of(layer, b)]; };

  std::vector<std::int64_t> positions(batch.tokens.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    positions[i] = static_cast<std::int64_t>(i % batch.seq);
  }
  Var h = autodiff::add(
      autodiff::embedding_gather(out.params[DecoderParams::kTokenEmbedding], batch.tokens),
      autodiff::embedding_gather(out.params[DecoderParams::kPositionEmbedding], positions));
  if (options.keep_hidden) out.hidden.push_back(h);

  const double score_scale = 1.0 / std::sqrt(static_cast<double>(c.d_model));
  for (std::size_t l = 1; l <= last; ++l) {
    Var a = autodiff::rms_norm(h, p(l, Block::kAttnNorm), c.norm_eps);
    Var q = autodiff::matmul(a, p(l, Block::kWq));
    Var k = autodiff::matmul(a, p(l, Block::kWk));
    Var v = autodiff::matmul(a, p(l, Block::kWv));
    Var s = autodiff::matmul(q, k, false, true, batch.batch);
    s = autodiff::causal_mask(autodiff::scale(s, score_scale));
    Var o = autodiff::matmul(autodiff::row_softmax(s), v, false, false, batch.batch);
    h = autodiff::add(h, autodiff::matmul(o, p(l, Block::kWo)));

    Var m = autodiff::rms_norm(h, p(l, Block::kMlpNorm), c.norm_eps);
    Var u = autodiff::relu(autodiff::matmul(m, p(l, Block::kMlpUp)));
    h = autodiff::add(h, autodiff::matmul(u, p(l, Block::kMlpDown)));
    if (options.keep_hidden) out.hidden.push_back(h);
  }
  if (options.stop_after_layer) {
    if (!options.keep_hidden) out.hidden.push_back(h);
    return out;
  }

  Var f = autodiff::rms_norm(h, out.params[params.final_norm_index()], c.norm_eps);
  out.logits = autodiff::matmul(f, out.params[params.head_index()]);
  return out;
}

Matrix logits(const DecoderParams& params, const TokenBatch& batch) {
  Tape tape;
  return forward(tape, params, batch).logits->value();
}

Matrix hidden_at(const DecoderParams& params, const TokenBatch& batch, std::size_t layer) {
  Tape tape;
  ForwardOptions opt;
  opt.stop_after_layer = layer;
  return forward(tape, params, batch, opt).hidden.back().value();
}

}  // namespace layerlock::toymodel
