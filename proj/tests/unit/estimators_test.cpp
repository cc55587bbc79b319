/* Copyright 2026 The gepkit Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "gepkit/estimators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gepkit/error.hpp"

namespace gepkit {
namespace {

std::vector<float> random_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

double direct_cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

struct Fixture {
  EmbeddingStore store;
  ImageGroup group;
  AttributeSpec attribute{"dress", "in a dress", "a dress", "an object"};
  std::vector<std::vector<float>> images;
};

Fixture random_fixture(std::uint64_t seed, int n_images = 8, int dim = 6) {
  std::mt19937_64 rng(seed);
  Fixture f;
  std::vector<EmbeddingRecord> r;
  std::vector<std::string> ids;
  for (int i = 0; i < n_images; ++i) {
    f.images.push_back(random_vector(rng, dim));
    ids.push_back("img" + std::to_string(i));
    r.push_back({ids.back(), RecordKind::kImage, {}, f.images.back()});
  }
  r.push_back({"a dress", RecordKind::kText, {}, random_vector(rng, dim)});
  r.push_back({"an object", RecordKind::kText, {}, random_vector(rng, dim)});
  f.store = EmbeddingStore(std::move(r));
  f.group = group_from_ids(f.store, ids);
  return f;
}

TEST(CosineTest, HandValues) {
  const std::vector<float> u = {1, 1}, e1 = {1, 0}, e2 = {0, 1};
  EXPECT_DOUBLE_EQ(cosine(u, u), 1.0);
  EXPECT_DOUBLE_EQ(cosine(e1, e2), 0.0);
  EXPECT_NEAR(cosine(u, e1), std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(CosineTest, ZeroNormAndLengthMismatchAreErrors) {
  const std::vector<float> z = {0, 0}, u = {1, 0}, w = {1, 0, 0};
  EXPECT_THROW(cosine(z, u), DataError);
  EXPECT_THROW(cosine(u, w), DataError);
}

TEST(CosineTest, ScaleInvariant) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto a = random_vector(rng, 9);
    const auto b = random_vector(rng, 9);
    const double before = cosine(a, b);
    for (auto& x : a) x *= 4.0f;  // exact in binary
    EXPECT_DOUBLE_EQ(cosine(a, b), before);
  }
}

TEST(SimilarityFreqTest, SelfMatchIsOne) {
  std::vector<EmbeddingRecord> r = {{"img", RecordKind::kImage, {}, {0.3f, -2.0f, 1.0f}},
                                    {"a dress", RecordKind::kText, {}, {0.3f, -2.0f, 1.0f}}};
  EmbeddingStore store(r);
  const AttributeSpec dress{"dress", "in a dress", "a dress", "an object"};
  EXPECT_NEAR(similarity_freq(group_from_ids(store, {"img"}), dress, store), 1.0, 1e-15);
}

TEST(SimilarityFreqTest, MatchesDirectAverage) {
  const auto f = random_fixture(11);
  const auto text = f.store.text_vector("a dress");
  const std::vector<float> t(text.begin(), text.end());
  double sum = 0;
  for (const auto& img : f.images) sum += direct_cosine(img, t);
  EXPECT_NEAR(similarity_freq(f.group, f.attribute, f.store), sum / 8.0, 1e-12);
}

TEST(SimilarityFreqTest, DuplicatingMembersKeepsMean) {
  const auto f = random_fixture(12);
  auto ids = f.group.ids;
  ids.insert(ids.end(), f.group.ids.begin(), f.group.ids.end());
  EXPECT_NEAR(similarity_freq(group_from_ids(f.store, ids), f.attribute, f.store),
              similarity_freq(f.group, f.attribute, f.store), 1e-15);
}

TEST(SimilarityFreqTest, MissingQueryEmbeddingIsError) {
  const auto f = random_fixture(13);
  const AttributeSpec hat{"hat", "in a hat", "a hat", "an object"};
  EXPECT_THROW(similarity_freq(f.group, hat, f.store), DataError);
}

TEST(CalibratedFreqTest, DecomposesIntoTwoSimilarities) {
  const auto f = random_fixture(14);
  const AttributeSpec reference_as_query{"object", "with an object", "an object", "an object"};
  EXPECT_NEAR(calibrated_freq(f.group, f.attribute, f.store),
              similarity_freq(f.group, f.attribute, f.store) -
                  similarity_freq(f.group, reference_as_query, f.store),
              1e-12);
}

TEST(CalibratedFreqTest, IdenticalReferenceCancelsExactly) {
  const auto f = random_fixture(15);
  AttributeSpec self = f.attribute;
  self.calibration_reference = self.query_phrase;
  EXPECT_EQ(calibrated_freq(f.group, self, f.store), 0.0);
}

TEST(CalibratedFreqTest, CloserToAttributeIsPositive) {
  std::vector<EmbeddingRecord> r = {{"i1", RecordKind::kImage, {}, {1.0f, 0.1f}},
                                    {"i2", RecordKind::kImage, {}, {1.0f, 0.3f}},
                                    {"a dress", RecordKind::kText, {}, {1.0f, 0.0f}},
                                    {"an object", RecordKind::kText, {}, {0.0f, 1.0f}}};
  EmbeddingStore store(r);
  const AttributeSpec dress{"dress", "in a dress", "a dress", "an object"};
  EXPECT_GT(calibrated_freq(group_from_ids(store, {"i1", "i2"}), dress, store), 0.0);
  for (double s : calibrated_scores(group_from_ids(store, {"i1", "i2"}), store.text_vector("a dress"),
                                    store.text_vector("an object"), store)) {
    EXPECT_LE(std::abs(s), 2.0);
  }
}

TEST(ClipScoreTest, ClampAndScale) {
  std::vector<EmbeddingRecord> r = {{"same", RecordKind::kImage, {}, {2.0f, 0.0f}},
                                    {"orth", RecordKind::kImage, {}, {0.0f, 1.0f}},
                                    {"opp", RecordKind::kImage, {}, {-1.0f, 0.0f}}};
  EmbeddingStore store(r);
  const std::vector<float> prompt = {1.0f, 0.0f};
  EXPECT_DOUBLE_EQ(clipscore(prompt, group_from_ids(store, {"same"}), store), 100.0);
  EXPECT_DOUBLE_EQ(clipscore(prompt, group_from_ids(store, {"orth", "opp"}), store), 0.0);
}

TEST(ClipScoreTest, MatchesDirectAverage) {
  const auto f = random_fixture(16, 4);
  const auto text = f.store.text_vector("a dress");
  const std::vector<float> t(text.begin(), text.end());
  double sum = 0;
  for (const auto& img : f.images) sum += std::max(0.0, direct_cosine(img, t));
  EXPECT_NEAR(clipscore(text, f.group, f.store), 100.0 * sum / 4.0, 1e-10);
}

TEST(SeparabilityRatioTest, HandComputedFourPoints) {
  const std::vector<LabeledScore> s = {
      {0.9, 1, true}, {0.7, 2, true}, {0.2, 1, false}, {0.4, 2, false}};
  // (0.9 - 0.7) / (0.8 - 0.3)
  EXPECT_NEAR(separability_ratio(s), 0.4, 1e-15);
}

TEST(SeparabilityRatioTest, IdenticalGendersGiveZero) {
  const std::vector<LabeledScore> s = {
      {0.8, 1, true}, {0.8, 2, true}, {0.1, 1, false}, {0.1, 2, false}};
  EXPECT_EQ(separability_ratio(s), 0.0);
}

TEST(SeparabilityRatioTest, ZeroDenominatorIsDegenerate) {
  const std::vector<LabeledScore> s = {
      {0.5, 1, true}, {0.5, 2, true}, {0.5, 1, false}, {0.5, 2, false}};
  EXPECT_THROW(separability_ratio(s), DegenerateError);
}

TEST(EstimateReportTest, TextRoundTrip) {
  EstimateReport r;
  r.estimator = Estimator::kCalibrated;
  r.rows = {{Setting::kNeutral, 1, "dress", 0.125, 80}, {Setting::kExplicit, 2, "tie", -0.0625, 80}};
  const auto back = parse_estimate_report(format_estimate_report(r, {"# seed=3"}));
  EXPECT_EQ(back.estimator, Estimator::kCalibrated);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[1].attribute_id, "tie");
  EXPECT_EQ(back.rows[1].value, -0.0625);
  EXPECT_EQ(back.rows[1].setting, Setting::kExplicit);
  EXPECT_EQ(back.rows[0].z, 80u);
}

TEST(EstimatorNameTest, ParseRoundTrip) {
  for (auto e : {Estimator::kSimilarity, Estimator::kCalibrated, Estimator::kClassifier}) {
    EXPECT_EQ(parse_estimator(to_string(e)), e);
  }
  EXPECT_THROW(parse_estimator("oracle"), ConfigError);
}

}  // namespace
}  // namespace gepkit
