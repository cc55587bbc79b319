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

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <json.hpp>

#include "gepkit/error.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

using nlohmann::json;

const char* to_string(RecordKind kind) {
  return kind == RecordKind::kImage ? "image" : "text";
}

namespace {

RecordKind parse_kind(std::string_view name) {
  if (name == "image") return RecordKind::kImage;
  if (name == "text") return RecordKind::kText;
  throw StoreError(StoreErrorKind::kCorruptManifest,
                   fmt::format("unknown record kind '{}'", name));
}

json meta_to_json(const RecordMeta& m) {
  json j = json::object();
  if (m.gender_index) j["gender_index"] = *m.gender_index;
  if (m.attribute_id) j["attribute_id"] = *m.attribute_id;
  if (m.context_index) j["context_index"] = *m.context_index;
  if (m.setting) j["setting"] = to_string(*m.setting);
  if (m.model_tag) j["model_tag"] = *m.model_tag;
  if (m.seed_index) j["seed_index"] = *m.seed_index;
  return j;
}

RecordMeta meta_from_json(const json& j) {
  RecordMeta m;
  if (!j.is_object()) {
    throw StoreError(StoreErrorKind::kCorruptManifest, "meta must be an object");
  }
  if (j.contains("gender_index")) m.gender_index = j["gender_index"].get<int>();
  if (j.contains("attribute_id")) m.attribute_id = j["attribute_id"].get<std::string>();
  if (j.contains("context_index")) m.context_index = j["context_index"].get<int>();
  if (j.contains("setting")) {
    try {
      m.setting = parse_setting(j["setting"].get<std::string>());
    } catch (const DataError& e) {
      throw StoreError(StoreErrorKind::kCorruptManifest, e.what());
    }
  }
  if (j.contains("model_tag")) m.model_tag = j["model_tag"].get<std::string>();
  if (j.contains("seed_index")) m.seed_index = j["seed_index"].get<int>();
  return m;
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::vector<EmbeddingRecord> records) {
  if (!records.empty()) dim_ = records.front().vector.size();
  headers_.reserve(records.size());
  matrix_.reserve(records.size() * dim_);
  for (auto& r : records) {
    if (r.vector.size() != dim_) {
      throw StoreError(StoreErrorKind::kDimensionMismatch,
                       fmt::format("record '{}' has dim {}, expected {}", r.id,
                                   r.vector.size(), dim_));
    }
    matrix_.insert(matrix_.end(), r.vector.begin(), r.vector.end());
    headers_.push_back({std::move(r.id), r.kind, std::move(r.meta)});
  }
  index_and_validate();
}

EmbeddingStore::EmbeddingStore(std::vector<RecordHeader> headers,
                               std::vector<float> matrix, std::size_t dim)
    : headers_(std::move(headers)), matrix_(std::move(matrix)), dim_(dim) {
  if (matrix_.size() != headers_.size() * dim_) {
    throw StoreError(StoreErrorKind::kByteLength,
                     fmt::format("matrix holds {} floats, expected {}",
                                 matrix_.size(), headers_.size() * dim_));
  }
  index_and_validate();
}

void EmbeddingStore::index_and_validate() {
  if (!headers_.empty() && dim_ == 0) {
    throw StoreError(StoreErrorKind::kDimensionMismatch, "dim must be positive");
  }
  by_id_.reserve(headers_.size());
  for (std::size_t i = 0; i < headers_.size(); ++i) {
    if (!by_id_.emplace(headers_[i].id, i).second) {
      throw StoreError(StoreErrorKind::kDuplicateId, "'" + headers_[i].id + "'");
    }
    for (float v : row(i)) {
      if (!std::isfinite(v)) {
        throw StoreError(StoreErrorKind::kNonFinite,
                         fmt::format("record '{}'", headers_[i].id));
      }
    }
  }
}

std::span<const float> EmbeddingStore::row(std::size_t r) const {
  return std::span<const float>(matrix_).subspan(r * dim_, dim_);
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::span<const float> EmbeddingStore::text_vector(std::string_view text) const {
  auto r = find(text);
  if (!r || headers_[*r].kind != RecordKind::kText) {
    throw DataError(fmt::format("missing text embedding for '{}'", text));
  }
  return row(*r);
}

std::vector<EmbeddingRecord> EmbeddingStore::records() const {
  std::vector<EmbeddingRecord> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    auto v = row(i);
    out.push_back({headers_[i].id, headers_[i].kind, headers_[i].meta,
                   std::vector<float>(v.begin(), v.end())});
  }
  return out;
}

std::filesystem::path manifest_path(const std::filesystem::path& base) {
  std::filesystem::path p = base;
  p += ".manifest";
  return p;
}

std::filesystem::path matrix_path(const std::filesystem::path& base) {
  std::filesystem::path p = base;
  p += ".f32";
  return p;
}

std::string encode_f32le(std::span<const float> values) {
  std::string out(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) {
      out[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }
  return out;
}

std::vector<float> decode_f32le(std::string_view bytes) {
  if (bytes.size() % 4 != 0) {
    throw StoreError(StoreErrorKind::kByteLength,
                     fmt::format("{} bytes is not a whole number of floats",
                                 bytes.size()));
  }
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b]))
              << (8 * b);
    }
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void write_store(const EmbeddingStore& store, const std::filesystem::path& base) {
  std::string manifest =
      json{{"format", kStoreFormat}, {"count", store.size()}, {"dim", store.dim()}}
          .dump();
  manifest += '\n';
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& h = store.header(i);
    json line{{"id", h.id},
              {"kind", to_string(h.kind)},
              {"offset", i * store.dim() * 4},
              {"meta", meta_to_json(h.meta)}};
    manifest += line.dump();
    manifest += '\n';
  }
  write_file_atomic(matrix_path(base), encode_f32le(store.matrix()));
  write_file_atomic(manifest_path(base), manifest);
}

void write_store(const std::vector<EmbeddingRecord>& records,
                 const std::filesystem::path& base) {
  write_store(EmbeddingStore(records), base);
}

EmbeddingStore read_store(const std::filesystem::path& base) {
  const auto mpath = manifest_path(base);
  const std::string manifest = read_file(mpath);
  const std::string bytes = read_file(matrix_path(base));

  auto lines = split_lines(manifest);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) {
    throw StoreError(StoreErrorKind::kCorruptManifest, mpath.string() + " is empty");
  }

  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<RecordHeader> headers;
  try {
    json head = json::parse(lines[0]);
    if (head.at("format").get<std::string>() != kStoreFormat) {
      throw StoreError(StoreErrorKind::kCorruptManifest,
                       "unsupported format " + head.at("format").dump());
    }
    count = head.at("count").get<std::size_t>();
    dim = head.at("dim").get<std::size_t>();
    if (lines.size() - 1 != count) {
      throw StoreError(StoreErrorKind::kCorruptManifest,
                       fmt::format("header says {} records, found {}", count,
                                   lines.size() - 1));
    }
    if (count > 0 && dim == 0) {
      throw StoreError(StoreErrorKind::kCorruptManifest, "dim must be positive");
    }
    headers.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      json line = json::parse(lines[i + 1]);
      if (line.at("offset").get<std::size_t>() != i * dim * 4) {
        throw StoreError(StoreErrorKind::kCorruptManifest,
                         fmt::format("record {} has offset {}, expected {}", i,
                                     line.at("offset").dump(), i * dim * 4));
      }
      RecordHeader h;
      h.id = line.at("id").get<std::string>();
      h.kind = parse_kind(line.at("kind").get<std::string>());
      if (line.contains("meta")) h.meta = meta_from_json(line["meta"]);
      headers.push_back(std::move(h));
    }
  } catch (const json::exception& e) {
    throw StoreError(StoreErrorKind::kCorruptManifest,
                     fmt::format("{}: {}", mpath.string(), e.what()));
  }

  if (bytes.size() != 4 * count * dim) {
    throw StoreError(StoreErrorKind::kByteLength,
                     fmt::format("{} has {} bytes, expected {}",
                                 matrix_path(base).string(), bytes.size(),
                                 4 * count * dim));
  }
  return EmbeddingStore(std::move(headers), decode_f32le(bytes), dim);
}

ImageGroup select_group(const EmbeddingStore& store, const GroupFilter& filter) {
  if (filter.setting == Setting::kExplicit && !filter.attribute_id) {
    throw ConfigError("explicit-setting groups need an attribute filter");
  }
  ImageGroup group;
  group.filter = filter;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& h = store.header(i);
    const auto& m = h.meta;
    if (h.kind != RecordKind::kImage) continue;
    if (m.gender_index != filter.gender_index) continue;
    if (m.setting != filter.setting) continue;
    if (filter.context_index && m.context_index != filter.context_index) continue;
    if (filter.attribute_id && m.attribute_id != filter.attribute_id) continue;
    if (filter.model_tag && m.model_tag != filter.model_tag) continue;
    group.ids.push_back(h.id);
    group.rows.push_back(i);
  }
  if (group.rows.empty()) {
    throw DataError(fmt::format(
        "empty image group (gender {}, {}, attribute {}, context {})",
        filter.gender_index, to_string(filter.setting),
        filter.attribute_id.value_or("*"),
        filter.context_index ? std::to_string(*filter.context_index) : "*"));
  }
  return group;
}

ImageGroup group_from_ids(const EmbeddingStore& store,
                          const std::vector<std::string>& ids) {
  if (ids.empty()) throw DataError("empty image group");
  ImageGroup group;
  for (const auto& id : ids) {
    auto r = store.find(id);
    if (!r) throw DataError(fmt::format("image '{}' not in store", id));
    if (store.header(*r).kind != RecordKind::kImage) {
      throw DataError(fmt::format("record '{}' is not an image", id));
    }
    group.ids.push_back(id);
    group.rows.push_back(*r);
  }
  return group;
}

}  // namespace gepkit
