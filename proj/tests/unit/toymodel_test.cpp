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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "layerlock/autodiff/tape.hpp"
#include "layerlock/toymodel/checkpoint.hpp"
#include "layerlock/toymodel/decoder.hpp"
#include "layerlock/toymodel/secured_set.hpp"

namespace {

using namespace layerlock;
using namespace layerlock::toymodel;

DecoderConfig small() { return {.vocab = 8, .d_model = 8, .layers = 3, .seq_len = 6}; }

TokenBatch batch_of(const DecoderConfig& c, std::size_t b, std::uint64_t seed) {
  Rng rng(seed);
  TokenBatch tb{b, c.seq_len, {}};
  for (std::size_t i = 0; i < b * c.seq_len; ++i) {
    tb.tokens.push_back(static_cast<std::int64_t>(rng.below(c.vocab)));
  }
  return tb;
}

TEST(Decoder, LayoutAndNames) {
  Rng rng(1);
  const auto p = DecoderParams::xavier(small(), rng);
  EXPECT_EQ(p.tensors.size(), 2u + 8u * 3u + 2u);
  EXPECT_EQ(p.name(0), "tok_emb");
  EXPECT_EQ(p.name(1), "pos_emb");
  EXPECT_EQ(p.index_of(2, Block::kWq), 2u + 8u + 1u);
  EXPECT_EQ(p.name(p.index_of(2, Block::kWq)), "layer2.Wq");
  EXPECT_EQ(p.layer_of(p.index_of(3, Block::kMlpDown)), 3u);
  EXPECT_TRUE(p.is_gain(p.index_of(1, Block::kAttnNorm)));
  EXPECT_TRUE(p.is_gain(p.final_norm_index()));
  EXPECT_FALSE(p.is_gain(p.head_index()));
}

TEST(Decoder, CausalPrefixInvariance) {
  // Changing a later token must not change earlier logits.
  Rng rng(2);
  const auto cfg = small();
  const auto p = DecoderParams::xavier(cfg, rng);
  auto tb = batch_of(cfg, 1, 3);
  const Matrix a = logits(p, tb);
  tb.tokens[5] = (tb.tokens[5] + 1) % 8;
  const Matrix b = logits(p, tb);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t v = 0; v < 8; ++v) EXPECT_EQ(a(t, v), b(t, v));
  }
}

TEST(Decoder, BatchRowsIndependent) {
  Rng rng(4);
  const auto cfg = small();
  const auto p = DecoderParams::xavier(cfg, rng);
  const auto tb = batch_of(cfg, 3, 5);
  const Matrix all = logits(p, tb);
  TokenBatch one{1, cfg.seq_len, {tb.tokens.begin() + 6, tb.tokens.begin() + 12}};
  const Matrix mid = logits(p, one);
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t v = 0; v < 8; ++v) EXPECT_EQ(all(6 + t, v), mid(t, v));
  }
}

TEST(Decoder, HiddenAtMatchesForward) {
  Rng rng(6);
  const auto cfg = small();
  const auto p = DecoderParams::xavier(cfg, rng);
  const auto tb = batch_of(cfg, 2, 7);
  autodiff::Tape t;
  const auto fwd = forward(t, p, tb, {.keep_hidden = true});
  ASSERT_EQ(fwd.hidden.size(), 4u);
  EXPECT_TRUE(bit_equal(hidden_at(p, tb, 2), fwd.hidden[2].value()));
}

TEST(Decoder, RejectsOutOfRangeTokens) {
  Rng rng(8);
  const auto cfg = small();
  const auto p = DecoderParams::xavier(cfg, rng);
  auto tb = batch_of(cfg, 1, 9);
  tb.tokens[0] = 8;
  EXPECT_THROW(logits(p, tb), std::out_of_range);
}

TEST(SecuredSet, PrefixAndDescribe) {
  const auto s = SecuredSet::prefix(2, 6);
  EXPECT_EQ(s.describe(), "{1,2}");
  EXPECT_TRUE(s.is_bottom_prefix());
  EXPECT_EQ(s.tap_layer(), 2u);
  EXPECT_EQ(SecuredSet::none(6).describe(), "{}");
  EXPECT_FALSE(SecuredSet::none(6).tap_layer());
  EXPECT_TRUE(SecuredSet::all(6).is_full());
  EXPECT_FALSE(SecuredSet::of_layers({2, 3}, 6).is_bottom_prefix());
  EXPECT_THROW(SecuredSet::prefix(7, 6), std::out_of_range);
}

TEST(SecuredSet, BlockMaskIncludesOwnGain) {
  Rng rng(10);
  const auto p = DecoderParams::xavier(small(), rng);
  const auto s = SecuredSet::of_blocks({{2, Block::kWq}, {2, Block::kMlpUp}}, 3);
  const auto m = s.mask(p);
  EXPECT_TRUE(m[p.index_of(2, Block::kWq)]);
  EXPECT_TRUE(m[p.index_of(2, Block::kAttnNorm)]);
  EXPECT_TRUE(m[p.index_of(2, Block::kMlpNorm)]);
  EXPECT_FALSE(m[p.index_of(2, Block::kWk)]);
  EXPECT_FALSE(m[0]);
  EXPECT_THROW(SecuredSet::of_blocks({{1, Block::kAttnNorm}}, 3), std::invalid_argument);
}

TEST(SecuredSet, JsonRoundTrip) {
  const auto s = SecuredSet::of_blocks({{1, Block::kWv}}, 4, true);
  EXPECT_EQ(SecuredSet::from_json(s.to_json()), s);
  const auto l = SecuredSet::of_layers({1, 3}, 4);
  EXPECT_EQ(SecuredSet::from_json(l.to_json()), l);
}

TEST(SecuredSet, ReinitTouchesOnlySecured) {
  Rng rng(11);
  const auto p = DecoderParams::xavier(small(), rng);
  auto q = p;
  const auto s = SecuredSet::prefix(1, 3);
  reinit_secured(q, s, Rng(99));
  const auto mask = s.mask(p);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    if (mask[i] && !p.is_gain(i)) {
      EXPECT_FALSE(bit_equal(p.tensors[i], q.tensors[i])) << p.name(i);
    } else if (!mask[i]) {
      EXPECT_TRUE(bit_equal(p.tensors[i], q.tensors[i])) << p.name(i);
    }
  }
  auto r = p;
  reinit_secured(r, s, Rng(99));
  EXPECT_TRUE(bit_equal(q, r));
}

TEST(SecuredSet, PartitionCountsScalars) {
  Rng rng(12);
  const auto p = DecoderParams::xavier(small(), rng);
  const auto part = partition(p, SecuredSet::prefix(2, 3));
  EXPECT_EQ(part.secured_scalars + part.unsecured_scalars, p.scalar_count());
  EXPECT_EQ(part.secured.size(), 16u);
  const auto frozen = part.freeze_unsecured();
  for (std::size_t i : part.unsecured) EXPECT_TRUE(frozen[i]);
  for (std::size_t i : part.secured) EXPECT_FALSE(frozen[i]);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(13);
    ck_.params = DecoderParams::xavier(small(), rng);
    ck_.metadata = {{"note", "x"}};
    bytes_ = encode_checkpoint(ck_);
  }
  Checkpoint ck_;
  std::vector<unsigned char> bytes_;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  const auto back = decode_checkpoint(bytes_);
  EXPECT_TRUE(bit_equal(back.params, ck_.params));
  EXPECT_EQ(back.metadata["note"], "x");
  const auto path = std::filesystem::temp_directory_path() / "layerlock_ckpt_test.sold";
  save_checkpoint(ck_, path);
  EXPECT_TRUE(bit_equal(load_checkpoint(path).params, ck_.params));
  std::filesystem::remove(path);
}

CheckpointError::Kind kind_of(const std::vector<unsigned char>& b) {
  try {
    decode_checkpoint(b);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return CheckpointError::Kind::kIo;
}

TEST_F(CheckpointTest, DetectsCorruption) {
  auto magic = bytes_;
  magic[0] = 'X';
  EXPECT_EQ(kind_of(magic), CheckpointError::Kind::kBadMagic);
  auto version = bytes_;
  version[4] = 9;
  EXPECT_EQ(kind_of(version), CheckpointError::Kind::kVersionMismatch);
  auto cut = bytes_;
  cut.resize(cut.size() - 3);
  EXPECT_EQ(kind_of(cut), CheckpointError::Kind::kTruncated);
  auto flip = bytes_;
  flip.back() ^= 0x01;
  EXPECT_EQ(kind_of(flip), CheckpointError::Kind::kHashMismatch);
}

TEST(Checkpoint, MissingFileIsIoError) {
  try {
    load_checkpoint("/nonexistent/dir/x.sold");
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::kIo);
  }
}

TEST(Checkpoint, ArchitectureHashTracksDims) {
  auto a = small();
  auto b = small();
  b.d_model = 16;
  EXPECT_NE(architecture_hash(a), architecture_hash(b));
  EXPECT_EQ(architecture_hash(a), architecture_hash(small()));
}

}  // namespace
