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

#include "gepkit/embed_store.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>

#include "gepkit/error.hpp"
#include "gepkit/text_io.hpp"
#include "random_store.hpp"

namespace gepkit {
namespace {

namespace fs = std::filesystem;

class EmbedStoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gepkit_store_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  StoreErrorKind read_error(const fs::path& base) {
    try {
      read_store(base);
    } catch (const StoreError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "store was accepted";
    return StoreErrorKind::kIo;
  }

  fs::path dir_;
};

std::vector<EmbeddingRecord> three_records() {
  return {{"a", RecordKind::kImage, {}, {1, 2, 3, 4}},
          {"b", RecordKind::kText, {}, {0.5f, -0.0f, 1e-40f, 7}},
          {"c", RecordKind::kImage, {}, {-1, -2, -3, -4}}};
}

TEST_F(EmbedStoreTest, MatrixFileHasFourBytesPerValue) {
  write_store(three_records(), dir_ / "s");
  EXPECT_EQ(fs::file_size(matrix_path(dir_ / "s")), 48u);
}

TEST_F(EmbedStoreTest, RoundTripIsBitExact) {
  const auto records = three_records();
  write_store(records, dir_ / "s");
  const auto back = read_store(dir_ / "s").records();
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].id, records[i].id);
    EXPECT_EQ(back[i].kind, records[i].kind);
    EXPECT_TRUE(testing::bit_equal(back[i].vector, records[i].vector));
  }
}

TEST_F(EmbedStoreTest, RandomStoresRoundTrip) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto records = testing::random_records(rng, 1 + rng() % 20, 1 + rng() % 16);
    write_store(records, dir_ / "r");
    const auto back = read_store(dir_ / "r").records();
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      EXPECT_EQ(back[i].id, records[i].id);
      EXPECT_EQ(back[i].meta, records[i].meta);
      EXPECT_TRUE(testing::bit_equal(back[i].vector, records[i].vector));
    }
  }
}

TEST_F(EmbedStoreTest, DimensionMismatchIsRejected) {
  std::vector<EmbeddingRecord> r = {{"a", RecordKind::kImage, {}, std::vector<float>(768, 0.1f)},
                                    {"b", RecordKind::kImage, {}, std::vector<float>(512, 0.1f)}};
  try {
    write_store(r, dir_ / "s");
    FAIL();
  } catch (const StoreError& e) {
    EXPECT_EQ(e.kind(), StoreErrorKind::kDimensionMismatch);
  }
}

TEST_F(EmbedStoreTest, DuplicateIdIsRejected) {
  auto r = three_records();
  r[2].id = "a";
  try {
    EmbeddingStore store(r);
    FAIL();
  } catch (const StoreError& e) {
    EXPECT_EQ(e.kind(), StoreErrorKind::kDuplicateId);
  }
}

TEST_F(EmbedStoreTest, NonFiniteValueIsRejectedOnWrite) {
  auto r = three_records();
  r[1].vector[2] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(write_store(r, dir_ / "s"), StoreError);
}

TEST_F(EmbedStoreTest, TruncatedMatrixIsByteLengthError) {
  write_store(three_records(), dir_ / "s");
  std::string bytes = read_file(matrix_path(dir_ / "s"));
  bytes.pop_back();
  write_file_atomic(matrix_path(dir_ / "s"), bytes);
  EXPECT_EQ(read_error(dir_ / "s"), StoreErrorKind::kByteLength);
}

TEST_F(EmbedStoreTest, NaNInMatrixIsNonFiniteError) {
  write_store(three_records(), dir_ / "s");
  std::string bytes = read_file(matrix_path(dir_ / "s"));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  bytes.replace(8, 4, encode_f32le(std::span<const float>(&nan, 1)));
  write_file_atomic(matrix_path(dir_ / "s"), bytes);
  EXPECT_EQ(read_error(dir_ / "s"), StoreErrorKind::kNonFinite);
}

TEST_F(EmbedStoreTest, CorruptManifestsAreRejected) {
  write_store(three_records(), dir_ / "s");
  const std::string good = read_file(manifest_path(dir_ / "s"));
  auto lines = split_lines(good);

  write_file_atomic(manifest_path(dir_ / "s"), "not json\n");
  EXPECT_EQ(read_error(dir_ / "s"), StoreErrorKind::kCorruptManifest);

  write_file_atomic(manifest_path(dir_ / "s"), lines[0] + "\n" + lines[1] + "\n");
  EXPECT_EQ(read_error(dir_ / "s"), StoreErrorKind::kCorruptManifest);

  std::string wrong_format = good;
  wrong_format.replace(wrong_format.find("gepstore/1"), 10, "gepstore/9");
  write_file_atomic(manifest_path(dir_ / "s"), wrong_format);
  EXPECT_EQ(read_error(dir_ / "s"), StoreErrorKind::kCorruptManifest);

  std::string dup = good;
  dup.replace(dup.find("\"id\":\"c\""), 8, "\"id\":\"a\"");
  write_file_atomic(manifest_path(dir_ / "s"), dup);
  EXPECT_EQ(read_error(dir_ / "s"), StoreErrorKind::kDuplicateId);

  fs::remove(matrix_path(dir_ / "s"));
  write_file_atomic(manifest_path(dir_ / "s"), good);
  EXPECT_EQ(read_error(dir_ / "s"), StoreErrorKind::kIo);
}

TEST_F(EmbedStoreTest, EncodingIsLittleEndian) {
  const float one = 1.0f;
  EXPECT_EQ(encode_f32le(std::span<const float>(&one, 1)), std::string("\x00\x00\x80\x3f", 4));
  EXPECT_THROW(decode_f32le("abc"), StoreError);
}

EmbeddingStore grid_store(int images_per_prompt) {
  std::vector<EmbeddingRecord> r;
  int serial = 0;
  auto add = [&](int g, int c, Setting s, std::optional<std::string> a) {
    for (int k = 0; k < images_per_prompt; ++k) {
      RecordMeta m;
      m.gender_index = g;
      m.context_index = c;
      m.setting = s;
      m.attribute_id = a;
      r.push_back({"img" + std::to_string(serial++), RecordKind::kImage, m, {1.0f, 0.0f}});
    }
  };
  for (int g = 1; g <= 2; ++g) {
    for (int c = 1; c <= 16; ++c) {
      add(g, c, Setting::kNeutral, std::nullopt);
      for (const char* a : {"tie", "dress"}) add(g, c, Setting::kExplicit, std::string(a));
    }
  }
  r.push_back({"a tie", RecordKind::kText, {}, {0.0f, 1.0f}});
  return EmbeddingStore(std::move(r));
}

TEST(SelectGroupTest, NeutralGroupPoolsContexts) {
  const auto store = grid_store(5);
  EXPECT_EQ(select_group(store, {1, Setting::kNeutral, std::nullopt, std::nullopt, std::nullopt}).size(), 80u);
  EXPECT_EQ(select_group(store, {1, Setting::kNeutral, 3, std::nullopt, std::nullopt}).size(), 5u);
}

TEST(SelectGroupTest, ExplicitGroupNeedsAttribute) {
  const auto store = grid_store(5);
  EXPECT_EQ(select_group(store, {2, Setting::kExplicit, std::nullopt, "tie", std::nullopt}).size(), 80u);
  EXPECT_THROW(select_group(store, {2, Setting::kExplicit, std::nullopt, std::nullopt, std::nullopt}),
               ConfigError);
}

TEST(SelectGroupTest, EmptyGroupIsDataError) {
  const auto store = grid_store(1);
  EXPECT_THROW(select_group(store, {1, Setting::kExplicit, std::nullopt, "hat", std::nullopt}), DataError);
  EXPECT_THROW(select_group(store, {1, Setting::kNeutral, std::nullopt, std::nullopt, "nope"}), DataError);
}

TEST(SelectGroupTest, GroupsPartitionTheImages) {
  const auto store = grid_store(2);
  std::set<std::string> seen;
  std::size_t total = 0;
  for (int g = 1; g <= 2; ++g) {
    for (const auto& id : select_group(store, {g, Setting::kNeutral, std::nullopt, std::nullopt, std::nullopt}).ids) {
      EXPECT_TRUE(seen.insert(id).second);
      ++total;
    }
    for (const char* a : {"tie", "dress"}) {
      for (const auto& id : select_group(store, {g, Setting::kExplicit, std::nullopt, a, std::nullopt}).ids) {
        EXPECT_TRUE(seen.insert(id).second);
        ++total;
      }
    }
  }
  EXPECT_EQ(total, store.size() - 1);
}

TEST(SelectGroupTest, GroupFromIdsRejectsTextRecords) {
  const auto store = grid_store(1);
  EXPECT_THROW(group_from_ids(store, {"a tie"}), DataError);
  EXPECT_THROW(group_from_ids(store, {"missing"}), DataError);
  EXPECT_EQ(group_from_ids(store, {"img3", "img1"}).ids, (std::vector<std::string>{"img3", "img1"}));
}

TEST(EmbedStoreLookupTest, TextVectorNamesMissingText) {
  const auto store = grid_store(1);
  EXPECT_EQ(store.text_vector("a tie")[1], 1.0f);
  try {
    store.text_vector("a hat");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("a hat"), std::string::npos);
  }
}

}  // namespace
}  // namespace gepkit
