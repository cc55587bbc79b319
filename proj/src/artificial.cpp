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

#include "gepkit/artificial.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>
#include <set>

#include "gepkit/error.hpp"
#include "gepkit/seed.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

using nlohmann::json;

namespace {

std::size_t draw_below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

// First k entries of a seeded partial Fisher-Yates shuffle.
std::vector<std::string> draw_distinct(const std::vector<std::string>& from,
                                       std::size_t k, std::mt19937_64& rng) {
  std::vector<std::string> pool = from;
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + draw_below(rng, pool.size() - i)]);
  }
  pool.resize(k);
  return pool;
}

void shuffle_in_place(std::vector<std::string>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[draw_below(rng, i)]);
  }
}

double realized(std::size_t positives_a, std::size_t positives_b, std::size_t z) {
  const auto zz = static_cast<double>(z);
  return static_cast<double>(positives_a) / zz - static_cast<double>(positives_b) / zz;
}

}  // namespace

std::vector<double> DifferenceScale::grid() const {
  std::vector<double> out;
  for (int k = -9; k <= 9; ++k) {
    if (k != 0) out.push_back(scale * k / 10.0);
  }
  return out;
}

std::vector<DifferenceScale> default_scales() {
  return {{1.0}, {0.5}, {0.25}, {0.125}};
}

std::vector<ArtificialTarget> sample_targets(std::span<const DifferenceScale> scales,
                                             std::size_t per_scale,
                                             const std::vector<std::string>& attributes,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "artificial.targets"));
  std::vector<ArtificialTarget> out;
  out.reserve(attributes.size() * scales.size() * per_scale);
  for (const auto& attribute : attributes) {
    for (const auto& s : scales) {
      if (!(s.scale > 0.0) || !std::isfinite(s.scale)) {
        throw ConfigError(fmt::format("difference scale must be positive, got {}", s.scale));
      }
      const auto grid = s.grid();
      for (std::size_t i = 0; i < per_scale; ++i) {
        out.push_back({attribute, s.scale, grid[draw_below(rng, grid.size())]});
      }
    }
  }
  return out;
}

std::vector<AttributePool> pools_from_annotations(
    std::span<const AnnotationRecord> annotations,
    const std::vector<std::string>& attributes) {
  std::vector<AttributePool> pools;
  for (const auto& attribute : attributes) {
    AttributePool pool{attribute, {}, {}};
    std::set<std::string> seen;
    for (const auto& a : annotations) {
      if (a.attribute_id != attribute) continue;
      if (!seen.insert(a.image_id).second) {
        throw DataError(fmt::format("duplicate annotation for image '{}' attribute '{}'",
                                    a.image_id, attribute));
      }
      (a.resolved_label() == 1 ? pool.positives : pool.negatives).push_back(a.image_id);
    }
    pools.push_back(std::move(pool));
  }
  return pools;
}

long long nearest_difference_count(double target, std::size_t z) {
  if (z == 0) throw ConfigError("group size z must be positive");
  if (!std::isfinite(target)) throw DataError("non-finite target difference");
  const double scaled = target * static_cast<double>(z);
  const double lower = std::floor(scaled);
  const double frac = scaled - lower;
  // Half-way within rounding noise counts as a tie.
  const bool up = frac > 0.5 + 1e-9;
  return static_cast<long long>(lower) + (up ? 1 : 0);
}

ArtificialExample assemble_example(const AttributePool& pool, double target,
                                   std::size_t z, std::uint64_t seed) {
  const long long d = nearest_difference_count(target, z);
  const auto zz = static_cast<long long>(z);
  const auto p = static_cast<long long>(pool.positives.size());
  const auto n = static_cast<long long>(pool.negatives.size());
  if (d > zz || d < -zz) {
    throw DataError(fmt::format("target {} is outside [-1, 1]", target));
  }
  // Level k_b with k_a = k_b + d; both groups are drawn without overlap.
  long long lo = std::max({0LL, -d});
  long long hi = std::min(zz, zz - d);
  hi = std::min(hi, (p - d) >= 0 ? (p - d) / 2 : -1);
  const long long neg_need = 2 * zz - d - n;  // 2 k_b >= neg_need
  if (neg_need > 0) lo = std::max(lo, (neg_need + 1) / 2);
  if (lo > hi) {
    throw DataError(fmt::format(
        "insufficient pool for attribute '{}': target {} at z={} with {} positives "
        "and {} negatives",
        pool.attribute_id, target, z, p, n));
  }

  std::mt19937_64 rng(seed);
  const long long k_b = lo + static_cast<long long>(
                                 draw_below(rng, static_cast<std::size_t>(hi - lo + 1)));
  const long long k_a = k_b + d;

  auto pos = draw_distinct(pool.positives, static_cast<std::size_t>(k_a + k_b), rng);
  auto neg = draw_distinct(pool.negatives, static_cast<std::size_t>(2 * zz - k_a - k_b), rng);

  ArtificialExample ex;
  ex.attribute_id = pool.attribute_id;
  ex.target_diff = target;
  ex.z = z;
  ex.positives_a = static_cast<std::size_t>(k_a);
  ex.positives_b = static_cast<std::size_t>(k_b);
  ex.group_a.assign(pos.begin(), pos.begin() + k_a);
  ex.group_a.insert(ex.group_a.end(), neg.begin(), neg.begin() + (zz - k_a));
  ex.group_b.assign(pos.begin() + k_a, pos.end());
  ex.group_b.insert(ex.group_b.end(), neg.begin() + (zz - k_a), neg.end());
  shuffle_in_place(ex.group_a, rng);
  shuffle_in_place(ex.group_b, rng);
  ex.realized_diff = realized(ex.positives_a, ex.positives_b, z);
  return ex;
}

ArtificialDataset build_dataset(const std::vector<AttributePool>& pools,
                                std::span<const DifferenceScale> scales,
                                std::size_t per_scale, std::size_t z,
                                std::uint64_t seed, const std::string& model_tag) {
  if (z == 0) throw ConfigError("group size z must be positive");
  std::vector<std::string> attributes;
  for (const auto& pool : pools) attributes.push_back(pool.attribute_id);
  const auto targets = sample_targets(scales, per_scale, attributes, seed);

  ArtificialDataset ds;
  ds.z = z;
  ds.seed = seed;
  std::string last_error;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    const auto& pool = *std::find_if(pools.begin(), pools.end(), [&](const AttributePool& p) {
      return p.attribute_id == t.attribute_id;
    });
    try {
      auto ex = assemble_example(pool, t.target, z, derive_seed(seed, "artificial.example", i));
      ex.scale = t.scale;
      ex.model_tag = model_tag;
      ds.examples.push_back(std::move(ex));
    } catch (const DataError& e) {
      last_error = e.what();
      ds.skipped.push_back({t.attribute_id, t.target, e.what()});
    }
  }
  if (2 * ds.skipped.size() > targets.size()) {
    throw DataError(fmt::format("{} of {} artificial targets are unrealizable; last: {}",
                                ds.skipped.size(), targets.size(), last_error));
  }
  return ds;
}

CorrelationReport evaluate_on_dataset(const ArtificialDataset& dataset,
                                      const GroupEstimate& estimate,
                                      const EmbeddingStore& store, bool stratified) {
  std::vector<double> predicted, reference;
  std::vector<TaggedPair> tagged;
  for (const auto& ex : dataset.examples) {
    const double a = estimate(ex.attribute_id, group_from_ids(store, ex.group_a));
    const double b = estimate(ex.attribute_id, group_from_ids(store, ex.group_b));
    predicted.push_back(a - b);
    reference.push_back(ex.realized_diff);
    tagged.push_back({ex.attribute_id, ex.model_tag, a - b, ex.realized_diff});
  }
  auto report = correlate(predicted, reference);
  if (stratified) add_stratified(report, tagged);
  return report;
}

std::string format_dataset(
    const ArtificialDataset& dataset,
    const std::vector<std::pair<std::string, std::string>>& header_fields) {
  json head = json::object();
  head["format"] = kArtificialFormat;
  head["count"] = dataset.examples.size();
  head["z"] = dataset.z;
  head["seed"] = dataset.seed;
  json skipped = json::array();
  for (const auto& s : dataset.skipped) {
    skipped.push_back({{"attribute_id", s.attribute_id}, {"target", s.target},
                       {"reason", s.reason}});
  }
  head["skipped"] = std::move(skipped);
  for (const auto& [k, v] : header_fields) head[k] = v;

  std::string out = head.dump() + "\n";
  for (const auto& ex : dataset.examples) {
    json line = {{"attribute_id", ex.attribute_id},
                 {"model_tag", ex.model_tag},
                 {"scale", ex.scale},
                 {"target", ex.target_diff},
                 {"positives_a", ex.positives_a},
                 {"positives_b", ex.positives_b},
                 {"realized", ex.realized_diff},
                 {"group_a", ex.group_a},
                 {"group_b", ex.group_b}};
    out += line.dump() + "\n";
  }
  return out;
}

ArtificialDataset parse_dataset(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<std::string> body;
  for (const auto& l : lines) {
    if (!trim(l).empty()) body.push_back(l);
  }
  if (body.empty()) throw DataError("empty gepart/1 manifest");
  ArtificialDataset ds;
  std::size_t count = 0;
  try {
    const json head = json::parse(body[0]);
    if (head.at("format").get<std::string>() != kArtificialFormat) {
      throw DataError(fmt::format("expected format {}", kArtificialFormat));
    }
    count = head.at("count").get<std::size_t>();
    ds.z = head.at("z").get<std::size_t>();
    ds.seed = head.at("seed").get<std::uint64_t>();
    for (const auto& s : head.at("skipped")) {
      ds.skipped.push_back({s.at("attribute_id").get<std::string>(),
                            s.at("target").get<double>(),
                            s.at("reason").get<std::string>()});
    }
    for (std::size_t i = 1; i < body.size(); ++i) {
      const json j = json::parse(body[i]);
      ArtificialExample ex;
      ex.attribute_id = j.at("attribute_id").get<std::string>();
      ex.model_tag = j.at("model_tag").get<std::string>();
      ex.scale = j.at("scale").get<double>();
      ex.target_diff = j.at("target").get<double>();
      ex.positives_a = j.at("positives_a").get<std::size_t>();
      ex.positives_b = j.at("positives_b").get<std::size_t>();
      ex.group_a = j.at("group_a").get<std::vector<std::string>>();
      ex.group_b = j.at("group_b").get<std::vector<std::string>>();
      ex.z = ds.z;
      if (ex.group_a.size() != ds.z || ex.group_b.size() != ds.z) {
        throw DataError(fmt::format("example {} groups are not of size {}", i, ds.z));
      }
      ex.realized_diff = realized(ex.positives_a, ex.positives_b, ds.z);
      if (ex.realized_diff != j.at("realized").get<double>()) {
        throw DataError(fmt::format("example {} realized difference disagrees with counts", i));
      }
      ds.examples.push_back(std::move(ex));
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed gepart/1 manifest: {}", e.what()));
  }
  if (ds.examples.size() != count) {
    throw DataError(fmt::format("gepart/1 header promises {} examples, found {}", count,
                                ds.examples.size()));
  }
  return ds;
}

}  // namespace gepkit
