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

#ifndef LAYERLOCK_TOYMODEL_CHECKPOINT_HPP_
#define LAYERLOCK_TOYMODEL_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/toymodel/decoder.hpp"

namespace layerlock::toymodel {

// File layout: "SOLD", u32 LE version, u64 LE header length, UTF-8 JSON
// header, then every tensor as f64 LE in parameter order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kVersionMismatch, kTruncated, kHashMismatch, kDimsMismatch,
                    kMalformed };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Checkpoint {
  DecoderParams params;
  // Free-form securing metadata stored in the header.
  nlohmann::json metadata = nlohmann::json::object();
};

// Hash of dims plus the ordered parameter names and shapes.
std::uint64_t architecture_hash(const DecoderConfig& config);

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace layerlock::toymodel

#endif  // LAYERLOCK_TOYMODEL_CHECKPOINT_HPP_
