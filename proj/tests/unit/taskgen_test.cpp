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

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "layerlock/taskgen/tasks.hpp"

namespace {

using namespace layerlock;
using namespace layerlock::taskgen;

TaskSpec spec_of(TaskKind k, std::size_t seq = 16) {
  TaskSpec s;
  s.kind = k;
  s.seq_len = seq;
  s.transition_seed = 11;
  return s;
}

TEST(Tasks, NamesRoundTrip) {
  for (TaskKind k : {TaskKind::kModularAdd, TaskKind::kCopyReverse, TaskKind::kMarkov}) {
    EXPECT_EQ(parse_task(task_name(k)), k);
  }
  EXPECT_FALSE(parse_task("sorting"));
}

TEST(Tasks, VocabLayout) {
  Vocab v{16};
  EXPECT_EQ(v.data_tokens(), 12u);
  EXPECT_EQ(v.sep(), 12);
  EXPECT_EQ(v.marker(TaskKind::kModularAdd), 13);
  EXPECT_EQ(v.marker(TaskKind::kMarkov), 15);
}

TEST(Tasks, ModularAddLabels) {
  Rng rng(1);
  const auto d = generate(spec_of(TaskKind::kModularAdd), 50, rng);
  for (std::size_t i = 0; i < d.count(); ++i) {
    const auto* in = &d.inputs[i * 16];
    const auto* tg = &d.targets[i * 16];
    EXPECT_EQ(in[0], 13);
    EXPECT_EQ(tg[0], -1);
    EXPECT_EQ(tg[1], -1);
    for (std::size_t t = 2; t < 16; ++t) EXPECT_EQ(tg[t], (in[t - 1] + in[t]) % 10);
  }
}

TEST(Tasks, CopyReverseLabels) {
  Rng rng(2);
  const auto d = generate(spec_of(TaskKind::kCopyReverse), 50, rng);
  const std::size_t k = 7;
  for (std::size_t i = 0; i < d.count(); ++i) {
    const auto* in = &d.inputs[i * 16];
    const auto* tg = &d.targets[i * 16];
    EXPECT_EQ(in[k + 1], 12);
    for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(in[k + 2 + j], in[k - j]);
    for (std::size_t t = 0; t <= k; ++t) EXPECT_EQ(tg[t], -1);
    for (std::size_t t = k + 1; t < 2 * k + 1; ++t) EXPECT_EQ(tg[t], in[t + 1]);
  }
}

TEST(Tasks, MarkovRowsAreDistributions) {
  const Matrix p = markov_transitions(spec_of(TaskKind::kMarkov));
  ASSERT_EQ(p.rows(), 12u);
  std::vector<int> hits(12, 0);
  for (std::size_t i = 0; i < 12; ++i) {
    double s = 0.0;
    std::size_t argmax = 0;
    for (std::size_t j = 0; j < 12; ++j) {
      s += p(i, j);
      if (p(i, j) > p(i, argmax)) argmax = j;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(p(i, argmax), 0.95);
    ++hits[argmax];
  }
  for (int h : hits) EXPECT_EQ(h, 1);  // successor map is a permutation
}

TEST(Tasks, MarkovFrequenciesFollowTransitions) {
  const auto spec = spec_of(TaskKind::kMarkov, 32);
  const Matrix p = markov_transitions(spec);
  Rng rng(3);
  const auto d = generate(spec, 2000, rng);
  std::size_t peak = 0, total = 0;
  for (std::size_t i = 0; i < d.count(); ++i) {
    for (std::size_t t = 2; t < 32; ++t) {
      const auto a = d.inputs[i * 32 + t - 1];
      const auto b = d.inputs[i * 32 + t];
      peak += p(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) == 0.95;
      ++total;
    }
  }
  EXPECT_NEAR(static_cast<double>(peak) / static_cast<double>(total), 0.95, 0.005);
}

TEST(Tasks, GenerationIsSeeded) {
  Rng a(5), b(5);
  const auto x = generate(spec_of(TaskKind::kMarkov), 20, a);
  const auto y = generate(spec_of(TaskKind::kMarkov), 20, b);
  EXPECT_EQ(x.inputs, y.inputs);
  EXPECT_EQ(x.targets, y.targets);
}

TEST(Tasks, EvalSplitExcludedFromAttackData) {
  const auto spec = spec_of(TaskKind::kModularAdd, 4);  // tiny space forces collisions
  const auto eval = split_eval(spec, 2024, 200);
  const auto held = input_hashes(eval);
  Rng rng(6);
  const auto train = generate_excluding(spec, 500, rng, held);
  for (std::size_t i = 0; i < train.count(); ++i) {
    EXPECT_FALSE(held.contains(train.example_hash(i)));
  }
  Rng plain(6);
  const auto raw = generate(spec, 500, plain);
  std::size_t overlaps = 0;
  for (std::size_t i = 0; i < raw.count(); ++i) overlaps += held.contains(raw.example_hash(i));
  EXPECT_GT(overlaps, 0u);
}

TEST(Tasks, MixtureInterleavesKinds) {
  Rng rng(7);
  const auto d = generate_mixture(
      {spec_of(TaskKind::kModularAdd), spec_of(TaskKind::kCopyReverse), spec_of(TaskKind::kMarkov)},
      9, rng);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(static_cast<std::size_t>(d.kinds[i]), i % 3);
  EXPECT_THROW(generate_mixture({spec_of(TaskKind::kMarkov), spec_of(TaskKind::kMarkov, 8)}, 4,
                                rng),
               std::invalid_argument);
}

TEST(Tasks, SpecValidation) {
  auto s = spec_of(TaskKind::kModularAdd);
  s.modulus = 13;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  auto m = spec_of(TaskKind::kMarkov);
  m.markov_peak = 1.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

class QueryTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(8);
    victim_ = toymodel::DecoderParams::xavier({.vocab = 16, .d_model = 8, .layers = 2,
                                               .seq_len = 16},
                                              rng);
    Rng drng(9);
    inputs_ = generate(spec_of(TaskKind::kCopyReverse), 10, drng);
  }
  toymodel::DecoderParams victim_;
  Dataset inputs_;
};

TEST_F(QueryTest, ZeroNoiseReturnsLogits) {
  Rng rng(1);
  const auto q = query_victim(victim_, inputs_, 0.0, std::nullopt, rng, 3);
  EXPECT_TRUE(bit_equal(*q.soft_labels, toymodel::logits(victim_, inputs_.all())));
  EXPECT_FALSE(q.representations);
  Rng untouched(1);
  EXPECT_EQ(rng.next_u64(), untouched.next_u64());
}

TEST_F(QueryTest, TapReturnsHiddenState) {
  Rng rng(1);
  const auto q = query_victim(victim_, inputs_, 0.0, 1, rng);
  ASSERT_TRUE(q.representations);
  EXPECT_TRUE(bit_equal(*q.representations, toymodel::hidden_at(victim_, inputs_.all(), 1)));
  EXPECT_THROW(query_victim(victim_, inputs_, 0.0, 3, rng), std::out_of_range);
}

TEST_F(QueryTest, NoiseIsAdditiveLaplace) {
  Rng rng(2);
  const auto q = query_victim(victim_, inputs_, 0.5, std::nullopt, rng);
  const Matrix clean = toymodel::logits(victim_, inputs_.all());
  Rng replay(2);
  const auto cd = clean.data();
  const auto qd = q.soft_labels->data();
  for (std::size_t i = 0; i < cd.size(); ++i) EXPECT_EQ(qd[i], cd[i] + replay.laplace(0.5));
}

TEST(Tasks, JsonlRecords) {
  Rng rng(4);
  const auto d = generate(spec_of(TaskKind::kModularAdd, 5), 2, rng);
  std::ostringstream os;
  write_jsonl(d, os);
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["kind"], "modular-add");
    EXPECT_EQ(j["input"].size(), 5u);
    ++n;
  }
  EXPECT_EQ(n, 2);
}

}  // namespace
