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

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gepkit/prompt_forge.hpp"

namespace gepkit {

inline constexpr std::string_view kStoreFormat = "gepstore/1";

enum class RecordKind { kImage, kText };

const char* to_string(RecordKind kind);

// Coordinates attached to a record. Image records carry the grid cell of the
// prompt that produced them; text records usually carry nothing.
struct RecordMeta {
  std::optional<int> gender_index;
  std::optional<std::string> attribute_id;
  std::optional<int> context_index;
  std::optional<Setting> setting;
  std::optional<std::string> model_tag;
  std::optional<int> seed_index;

  bool operator==(const RecordMeta&) const = default;
};

// Text records use the verbatim text as their id.
struct EmbeddingRecord {
  std::string id;
  RecordKind kind = RecordKind::kImage;
  RecordMeta meta;
  std::vector<float> vector;  // unnormalized encoder output
};

struct RecordHeader {
  std::string id;
  RecordKind kind = RecordKind::kImage;
  RecordMeta meta;
};

// Immutable, validated set of embeddings sharing one dimension. Rows are kept
// in a single packed row-major float matrix.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::vector<EmbeddingRecord> records);
  EmbeddingStore(std::vector<RecordHeader> headers, std::vector<float> matrix,
                 std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return headers_.size(); }
  const std::vector<RecordHeader>& headers() const { return headers_; }
  const RecordHeader& header(std::size_t row) const { return headers_.at(row); }
  std::span<const float> row(std::size_t row) const;
  std::span<const float> matrix() const { return matrix_; }

  std::optional<std::size_t> find(std::string_view id) const;
  // Throws DataError naming the text when it has no text record.
  std::span<const float> text_vector(std::string_view text) const;

  std::vector<EmbeddingRecord> records() const;

 private:
  void index_and_validate();

  std::vector<RecordHeader> headers_;
  std::vector<float> matrix_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> by_id_;
};

std::filesystem::path manifest_path(const std::filesystem::path& base);
std::filesystem::path matrix_path(const std::filesystem::path& base);

// Writes <base>.manifest and <base>.f32. Validates like the constructor.
void write_store(const std::vector<EmbeddingRecord>& records,
                 const std::filesystem::path& base);
void write_store(const EmbeddingStore& store, const std::filesystem::path& base);

EmbeddingStore read_store(const std::filesystem::path& base);

// Packs floats as IEEE-754 binary32 little-endian, independent of host order.
std::string encode_f32le(std::span<const float> values);
std::vector<float> decode_f32le(std::string_view bytes);

struct GroupFilter {
  int gender_index = 1;
  Setting setting = Setting::kNeutral;
  std::optional<int> context_index;
  std::optional<std::string> attribute_id;  // required for kExplicit
  std::optional<std::string> model_tag;
};

struct ImageGroup {
  std::vector<std::string> ids;
  std::vector<std::size_t> rows;
  GroupFilter filter;

  std::size_t size() const { return rows.size(); }
};

// Image records matching the filter, pooled over contexts unless a context is
// given. Throws DataError when nothing matches.
ImageGroup select_group(const EmbeddingStore& store, const GroupFilter& filter);

// Group over explicit ids, in the given order.
ImageGroup group_from_ids(const EmbeddingStore& store,
                          const std::vector<std::string>& ids);

}  // namespace gepkit
