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

#ifndef LAYERLOCK_TOYMODEL_SECURED_SET_HPP_
#define LAYERLOCK_TOYMODEL_SECURED_SET_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/numcore/rng.hpp"
#include "layerlock/toymodel/decoder.hpp"

namespace layerlock::toymodel {

enum class Granularity { kLayer, kBlock };

struct BlockRef {
  std::size_t layer = 1;  // 1-based
  Block block = Block::kWq;
  auto operator<=>(const BlockRef&) const = default;
};

// Which decoder parameters the deployer hides. Layer indices are 1-based.
class SecuredSet {
 public:
  static SecuredSet none(std::size_t num_layers);
  static SecuredSet all(std::size_t num_layers);
  static SecuredSet prefix(std::size_t count, std::size_t num_layers);
  static SecuredSet of_layers(std::vector<std::size_t> layers, std::size_t num_layers);
  // Matrix blocks only (norm gains follow their sub-block). The embedding
  // flag secures the token and positional embeddings.
  static SecuredSet of_blocks(std::vector<BlockRef> blocks, std::size_t num_layers,
                              bool include_embedding = false);

  Granularity granularity() const { return granularity_; }
  std::size_t num_layers() const { return num_layers_; }
  const std::vector<std::size_t>& layers() const { return layers_; }
  const std::vector<BlockRef>& blocks() const { return blocks_; }
  bool include_embedding() const { return include_embedding_; }

  bool empty() const;
  bool is_full() const;
  bool contains_layer(std::size_t layer) const;
  // Highest layer with anything secured; 0 if only embeddings; nullopt if empty.
  std::optional<std::size_t> tap_layer() const;
  // Layers appear in sorted order without gaps starting at 1.
  bool is_bottom_prefix() const;

  // Per flat parameter index: true when secured.
  std::vector<bool> mask(const DecoderParams& params) const;

  std::string describe() const;
  nlohmann::json to_json() const;
  static SecuredSet from_json(const nlohmann::json& j);

  bool operator==(const SecuredSet&) const = default;

 private:
  Granularity granularity_ = Granularity::kLayer;
  std::size_t num_layers_ = 0;
  std::vector<std::size_t> layers_;
  std::vector<BlockRef> blocks_;
  bool include_embedding_ = false;
};

struct Partition {
  std::vector<std::size_t> secured;
  std::vector<std::size_t> unsecured;
  std::size_t secured_scalars = 0;
  std::size_t unsecured_scalars = 0;
  // Frozen mask for training only the secured side.
  std::vector<bool> freeze_unsecured() const;
  // Frozen mask for training only the unsecured side.
  std::vector<bool> freeze_secured() const;
  std::size_t total() const { return secured.size() + unsecured.size(); }
};

Partition partition(const DecoderParams& params, const SecuredSet& secured);

// Secured tensors are Xavier-resampled (gains reset to 1) from child streams
// rng.split(index); everything else is left untouched.
void reinit_secured(DecoderParams& params, const SecuredSet& secured, const Rng& rng);

}  // namespace layerlock::toymodel

#endif  // LAYERLOCK_TOYMODEL_SECURED_SET_HPP_
