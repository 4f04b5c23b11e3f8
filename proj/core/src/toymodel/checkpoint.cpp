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

#include "layerlock/toymodel/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "layerlock/numcore/hash.hpp"

namespace layerlock::toymodel {
namespace {

constexpr unsigned char kMagic[4] = {'S', 'O', 'L', 'D'};
constexpr std::size_t kPrefix = 4 + 4 + 8;

void put_le(std::vector<unsigned char>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

nlohmann::json dims_json(const DecoderConfig& c) {
  return {{"vocab", c.vocab},     {"d_model", c.d_model},   {"layers", c.layers},
          {"seq_len", c.seq_len}, {"mlp_mult", c.mlp_mult}, {"norm_eps", c.norm_eps}};
}

nlohmann::json params_json(const DecoderParams& p) {
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < p.count(); ++i) {
    list.push_back({{"name", p.name(i)}, {"shape", {p.tensors[i].rows(), p.tensors[i].cols()}}});
  }
  return list;
}

using Kind = CheckpointError::Kind;

}  // namespace

std::uint64_t architecture_hash(const DecoderConfig& config) {
  const DecoderParams shape = DecoderParams::zeros(config);
  nlohmann::json j = {{"dims", dims_json(config)}, {"params", params_json(shape)}};
  return fnv1a64(j.dump());
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  const DecoderParams& p = ckpt.params;
  std::vector<unsigned char> payload;
  payload.reserve(p.scalar_count() * 8);
  for (const Matrix& t : p.tensors) {
    for (double v : t.data()) put_le(payload, std::bit_cast<std::uint64_t>(v), 8);
  }
  nlohmann::json header = {
      {"format", "layerlock-decoder"},
      {"dims", dims_json(p.config)},
      {"params", params_json(p)},
      {"arch_hash", hex64(architecture_hash(p.config))},
      {"metadata", ckpt.metadata},
      {"checksum", hex64(fnv1a64(payload))},
  };
  const std::string text = header.dump();
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, kCheckpointVersion, 4);
  put_le(out, text.size(), 8);
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError(Kind::kBadMagic, "checkpoint: bad magic");
  }
  if (bytes.size() < kPrefix) throw CheckpointError(Kind::kTruncated, "checkpoint: truncated prefix");
  const auto version = static_cast<std::uint32_t>(get_le(bytes.data() + 4, 4));
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::kVersionMismatch,
                          "checkpoint: version " + std::to_string(version) + ", expected " +
                              std::to_string(kCheckpointVersion));
  }
  const std::uint64_t header_len = get_le(bytes.data() + 8, 8);
  if (header_len > bytes.size() - kPrefix) {
    throw CheckpointError(Kind::kTruncated, "checkpoint: header runs past end of file");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPrefix,
                                   bytes.begin() + kPrefix + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::kMalformed, std::string("checkpoint: header: ") + e.what());
  }

  Checkpoint ckpt;
  DecoderConfig c;
  try {
    const auto& d = header.at("dims");
    c.vocab = d.at("vocab").get<std::size_t>();
    c.d_model = d.at("d_model").get<std::size_t>();
    c.layers = d.at("layers").get<std::size_t>();
    c.seq_len = d.at("seq_len").get<std::size_t>();
    c.mlp_mult = d.at("mlp_mult").get<std::size_t>();
    c.norm_eps = d.at("norm_eps").get<double>();
    c.validate();
    ckpt.metadata = header.value("metadata", nlohmann::json::object());
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::kMalformed, std::string("checkpoint: dims: ") + e.what());
  }
  ckpt.params = DecoderParams::zeros(c);
  if (header.value("arch_hash", std::string()) != hex64(architecture_hash(c)) ||
      header.value("params", nlohmann::json()) != params_json(ckpt.params)) {
    throw CheckpointError(Kind::kDimsMismatch,
                          "checkpoint: parameter list does not match the declared dims");
  }

  const std::size_t offset = kPrefix + header_len;
  const std::size_t payload_len = bytes.size() - offset;
  const std::size_t expected = ckpt.params.scalar_count() * 8;
  if (payload_len < expected) {
    throw CheckpointError(Kind::kTruncated, "checkpoint: payload holds " +
                                                std::to_string(payload_len) + " of " +
                                                std::to_string(expected) + " bytes");
  }
  if (payload_len != expected) {
    throw CheckpointError(Kind::kDimsMismatch,
                          "checkpoint: payload holds " + std::to_string(payload_len) +
                              " bytes, header dims need " + std::to_string(expected));
  }
  const std::uint64_t sum = fnv1a64(std::span(bytes.data() + offset, payload_len));
  if (header.value("checksum", std::string()) != hex64(sum)) {
    throw CheckpointError(Kind::kHashMismatch, "checkpoint: content checksum mismatch");
  }
  const unsigned char* p = bytes.data() + offset;
  for (Matrix& t : ckpt.params.tensors) {
    for (double& v : t.data()) {
      v = std::bit_cast<double>(get_le(p, 8));
      p += 8;
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(Kind::kIo, "checkpoint: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(Kind::kIo, "checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::kIo, "checkpoint: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace layerlock::toymodel
