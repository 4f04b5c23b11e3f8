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

#include "layerlock/toymodel/secured_set.hpp"

#include <algorithm>
#include <stdexcept>

#include "layerlock/numcore/sampling.hpp"

namespace layerlock::toymodel {
namespace {

void check_layer(std::size_t layer, std::size_t num_layers) {
  if (layer == 0 || layer > num_layers) {
    throw std::out_of_range("SecuredSet: layer " + std::to_string(layer) + " outside 1.." +
                            std::to_string(num_layers));
  }
}

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

SecuredSet SecuredSet::none(std::size_t num_layers) { return of_layers({}, num_layers); }

SecuredSet SecuredSet::all(std::size_t num_layers) { return prefix(num_layers, num_layers); }

SecuredSet SecuredSet::prefix(std::size_t count, std::size_t num_layers) {
  if (count > num_layers) {
    throw std::out_of_range("SecuredSet: prefix of " + std::to_string(count) + " in " +
                            std::to_string(num_layers) + " layers");
  }
  std::vector<std::size_t> layers(count);
  for (std::size_t i = 0; i < count; ++i) layers[i] = i + 1;
  return of_layers(std::move(layers), num_layers);
}

SecuredSet SecuredSet::of_layers(std::vector<std::size_t> layers, std::size_t num_layers) {
  if (num_layers == 0) throw std::invalid_argument("SecuredSet: model has no layers");
  for (std::size_t l : layers) check_layer(l, num_layers);
  sort_unique(layers);
  SecuredSet s;
  s.granularity_ = Granularity::kLayer;
  s.num_layers_ = num_layers;
  s.layers_ = std::move(layers);
  return s;
}

SecuredSet SecuredSet::of_blocks(std::vector<BlockRef> blocks, std::size_t num_layers,
                                 bool include_embedding) {
  if (num_layers == 0) throw std::invalid_argument("SecuredSet: model has no layers");
  for (const BlockRef& b : blocks) {
    check_layer(b.layer, num_layers);
    if (is_norm_gain(b.block)) {
      throw std::invalid_argument(std::string("SecuredSet: ") + block_name(b.block) +
                                  " follows its matrices and cannot be listed");
    }
  }
  sort_unique(blocks);
  SecuredSet s;
  s.granularity_ = Granularity::kBlock;
  s.num_layers_ = num_layers;
  s.blocks_ = std::move(blocks);
  s.include_embedding_ = include_embedding;
  for (const BlockRef& b : s.blocks_) s.layers_.push_back(b.layer);
  sort_unique(s.layers_);
  return s;
}

bool SecuredSet::empty() const { return layers_.empty() && !include_embedding_; }

bool SecuredSet::is_full() const {
  if (granularity_ == Granularity::kLayer) return layers_.size() == num_layers_;
  return blocks_.size() == num_layers_ * 6;
}

bool SecuredSet::contains_layer(std::size_t layer) const {
  return std::binary_search(layers_.begin(), layers_.end(), layer);
}

std::optional<std::size_t> SecuredSet::tap_layer() const {
  if (!layers_.empty()) return layers_.back();
  if (include_embedding_) return 0;
  return std::nullopt;
}

bool SecuredSet::is_bottom_prefix() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i] != i + 1) return false;
  }
  return true;
}

std::vector<bool> SecuredSet::mask(const DecoderParams& params) const {
  if (params.config.layers != num_layers_) {
    throw std::invalid_argument("SecuredSet: built for " + std::to_string(num_layers_) +
                                " layers, model has " + std::to_string(params.config.layers));
  }
  std::vector<bool> out(params.count(), false);
  if (granularity_ == Granularity::kLayer) {
    for (std::size_t l : layers_) {
      for (std::size_t b = 0; b < kBlocksPerLayer; ++b) {
        out[params.index_of(l, static_cast<Block>(b))] = true;
      }
    }
    return out;
  }
  for (const BlockRef& b : blocks_) {
    out[params.index_of(b.layer, b.block)] = true;
    const bool attn = b.block == Block::kWq || b.block == Block::kWk || b.block == Block::kWv ||
                      b.block == Block::kWo;
    out[params.index_of(b.layer, attn ? Block::kAttnNorm : Block::kMlpNorm)] = true;
  }
  if (include_embedding_) {
    out[DecoderParams::kTokenEmbedding] = true;
    out[DecoderParams::kPositionEmbedding] = true;
  }
  return out;
}

std::string SecuredSet::describe() const {
  if (empty()) return "{}";
  std::string s = "{";
  if (granularity_ == Granularity::kLayer) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(layers_[i]);
    }
  } else {
    bool first = true;
    if (include_embedding_) {
      s += "emb";
      first = false;
    }
    for (const BlockRef& b : blocks_) {
      if (!first) s += ",";
      first = false;
      s += std::to_string(b.layer) + "." + block_name(b.block);
    }
  }
  return s + "}";
}

nlohmann::json SecuredSet::to_json() const {
  nlohmann::json j;
  j["granularity"] = granularity_ == Granularity::kLayer ? "layer" : "block";
  j["num_layers"] = num_layers_;
  if (granularity_ == Granularity::kLayer) {
    j["layers"] = layers_;
  } else {
    nlohmann::json blocks = nlohmann::json::array();
    for (const BlockRef& b : blocks_) {
      blocks.push_back({{"layer", b.layer}, {"block", block_name(b.block)}});
    }
    j["blocks"] = blocks;
    j["include_embedding"] = include_embedding_;
  }
  return j;
}

SecuredSet SecuredSet::from_json(const nlohmann::json& j) {
  const std::string g = j.at("granularity").get<std::string>();
  const auto num_layers = j.at("num_layers").get<std::size_t>();
  if (g == "layer") return of_layers(j.at("layers").get<std::vector<std::size_t>>(), num_layers);
  if (g != "block") throw std::invalid_argument("SecuredSet: unknown granularity '" + g + "'");
  std::vector<BlockRef> blocks;
  for (const auto& b : j.at("blocks")) {
    const auto name = b.at("block").get<std::string>();
    const auto block = parse_block(name);
    if (!block) throw std::invalid_argument("SecuredSet: unknown block '" + name + "'");
    blocks.push_back({b.at("layer").get<std::size_t>(), *block});
  }
  return of_blocks(std::move(blocks), num_layers, j.value("include_embedding", false));
}

std::vector<bool> Partition::freeze_unsecured() const {
  std::vector<bool> frozen(total(), false);
  for (std::size_t i : unsecured) frozen[i] = true;
  return frozen;
}

std::vector<bool> Partition::freeze_secured() const {
  std::vector<bool> frozen(total(), false);
  for (std::size_t i : secured) frozen[i] = true;
  return frozen;
}

Partition partition(const DecoderParams& params, const SecuredSet& secured) {
  const std::vector<bool> m = secured.mask(params);
  Partition p;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) {
      p.secured.push_back(i);
      p.secured_scalars += params.tensors[i].size();
    } else {
      p.unsecured.push_back(i);
      p.unsecured_scalars += params.tensors[i].size();
    }
  }
  return p;
}

void reinit_secured(DecoderParams& params, const SecuredSet& secured, const Rng& rng) {
  const std::vector<bool> m = secured.mask(params);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    Matrix& t = params.tensors[i];
    if (params.is_gain(i)) {
      t.fill(1.0);
      continue;
    }
    Rng child = rng.split(i);
    t = xavier_init(t.rows(), t.cols(), child);
  }
}

}  // namespace layerlock::toymodel
