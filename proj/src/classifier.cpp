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

#include "gepkit/classifier.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>

#include "gepkit/error.hpp"
#include "gepkit/estimators.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

using nlohmann::json;

void TrainerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
  if (!(l2_penalty >= 0.0)) throw ConfigError("l2_penalty must be non-negative");
  if (ensemble_size < 1) throw ConfigError("ensemble_size must be at least 1");
}

void RowMatrix::append(std::span<const double> values) {
  if (cols == 0 && data.empty()) cols = values.size();
  if (values.size() != cols) {
    throw DataError(fmt::format("row of length {} in a matrix with {} columns",
                                values.size(), cols));
  }
  data.insert(data.end(), values.begin(), values.end());
}

RowMatrix normalized_rows(const EmbeddingStore& store,
                          std::span<const std::size_t> rows) {
  RowMatrix m;
  m.cols = store.dim();
  m.data.reserve(rows.size() * m.cols);
  for (std::size_t r : rows) m.append(l2_normalized(store.row(r)));
  return m;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double example_bce(double z, int y) { return softplus(z) - y * z; }

void check_labels(const RowMatrix& x, std::span<const int> labels,
                  std::size_t weight_dim) {
  if (labels.size() != x.rows()) {
    throw DataError(fmt::format("{} labels for {} rows", labels.size(), x.rows()));
  }
  if (x.rows() > 0 && x.cols != weight_dim) {
    throw DataError(fmt::format("weights of dim {} for rows of dim {}", weight_dim,
                                x.cols));
  }
}

struct Example {
  std::size_t row;
  int label;
  const RowMatrix* source;
};

double mean_loss(const std::vector<Example>& set, std::span<const double> w,
                 double b) {
  double sum = 0.0;
  for (const auto& e : set) sum += example_bce(dot(w, e.source->row(e.row)) + b, e.label);
  return sum / static_cast<double>(set.size());
}

}  // namespace

double LinearClassifier::logit(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw DataError(fmt::format("input of dim {} for a classifier of dim {}",
                                x.size(), weights.size()));
  }
  return dot(weights, x) + bias;
}

std::size_t ClassifierEnsemble::dim() const {
  return members.empty() ? 0 : members.front().weights.size();
}

double ClassifierEnsemble::predict(std::span<const double> x) const {
  if (members.empty()) throw DataError("ensemble has no members");
  double sum = 0.0;
  for (const auto& m : members) sum += m.predict(x);
  return sum / static_cast<double>(members.size());
}

double bce_loss(std::span<const double> weights, double bias, const RowMatrix& x,
                std::span<const int> labels, double l2_penalty) {
  check_labels(x, labels, weights.size());
  const double ridge = 0.5 * l2_penalty * dot(weights, weights);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    sum += example_bce(dot(weights, x.row(i)) + bias, labels[i]) + ridge;
  }
  return sum;
}

BceGradient bce_gradient(std::span<const double> weights, double bias,
                         const RowMatrix& x, std::span<const int> labels,
                         double l2_penalty) {
  check_labels(x, labels, weights.size());
  BceGradient g{std::vector<double>(weights.size(), 0.0), 0.0};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    const double residual = sigmoid(dot(weights, row) + bias) - labels[i];
    for (std::size_t k = 0; k < weights.size(); ++k) {
      g.weights[k] += residual * row[k] + l2_penalty * weights[k];
    }
    g.bias += residual;
  }
  return g;
}

LinearClassifier train_classifier(const RowMatrix& positives,
                                  const RowMatrix& negatives,
                                  const TrainerConfig& config, std::uint64_t seed) {
  config.validate();
  if (positives.rows() == 0 || negatives.rows() == 0) {
    throw DataError("classifier training needs positive and negative examples");
  }
  if (positives.cols != negatives.cols) {
    throw DataError(fmt::format("positive dim {} differs from negative dim {}",
                                positives.cols, negatives.cols));
  }
  const std::size_t dim = positives.cols;
  std::mt19937_64 rng(seed);

  std::vector<Example> train, validation;
  auto split_class = [&](const RowMatrix& m, int label) {
    std::vector<std::size_t> idx(m.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_val = static_cast<std::size_t>(
        std::max(1L, std::lround(config.validation_fraction * static_cast<double>(m.rows()))));
    if (n_val >= m.rows()) {
      throw DataError(fmt::format(
          "class with label {} has {} example(s); none left for training after the "
          "validation split",
          label, m.rows()));
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_val ? validation : train).push_back({idx[i], label, &m});
    }
  };
  split_class(positives, 1);
  split_class(negatives, 0);

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  LinearClassifier best{w, b, seed, {}};
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  int epoch = 0;
  const double lr = config.learning_rate;
  const double l2 = config.l2_penalty;

  while (epoch < config.max_iterations) {
    ++epoch;
    std::shuffle(train.begin(), train.end(), rng);
    for (const auto& e : train) {
      auto x = e.source->row(e.row);
      const double residual = sigmoid(dot(w, x) + b) - e.label;
      for (std::size_t k = 0; k < dim; ++k) w[k] -= lr * (residual * x[k] + l2 * w[k]);
      b -= lr * residual;
    }
    const double val_loss = mean_loss(validation, w, b);
    if (!std::isfinite(val_loss) || !std::isfinite(b)) {
      throw DegenerateError(fmt::format(
          "classifier training diverged at epoch {} (seed {})", epoch, seed));
    }
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best.weights = w;
      best.bias = b;
      best.log.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.early_stop_patience) {
      break;
    }
  }
  best.log.iterations_run = epoch;
  best.log.best_validation_loss = best_loss;
  return best;
}

ClassifierEnsemble train_ensemble(const RowMatrix& positives,
                                  const RowMatrix& negatives,
                                  const std::string& attribute_id,
                                  const TrainerConfig& config) {
  config.validate();
  ClassifierEnsemble ensemble{attribute_id, {}};
  ensemble.members.reserve(static_cast<std::size_t>(config.ensemble_size));
  for (int k = 0; k < config.ensemble_size; ++k) {
    ensemble.members.push_back(train_classifier(
        positives, negatives, config, config.base_seed + static_cast<std::uint64_t>(k)));
  }
  return ensemble;
}

ClassifierEnsemble train_ensemble(const TrainingSentenceSets& sentences,
                                  const EmbeddingStore& store,
                                  const TrainerConfig& config) {
  auto embed = [&](const std::vector<std::string>& texts) {
    RowMatrix m;
    m.cols = store.dim();
    for (const auto& t : texts) m.append(l2_normalized(store.text_vector(t)));
    return m;
  };
  return train_ensemble(embed(sentences.positives), embed(sentences.negatives),
                        sentences.attribute_id, config);
}

std::vector<double> classifier_scores(const ImageGroup& group,
                                      const ClassifierEnsemble& ensemble,
                                      const EmbeddingStore& store) {
  if (ensemble.dim() != store.dim()) {
    throw DataError(fmt::format("ensemble '{}' has dim {}, store has dim {}",
                                ensemble.attribute_id, ensemble.dim(), store.dim()));
  }
  std::vector<double> out;
  out.reserve(group.size());
  for (std::size_t r : group.rows) out.push_back(ensemble.predict(l2_normalized(store.row(r))));
  return out;
}

double classifier_freq(const ImageGroup& group, const ClassifierEnsemble& ensemble,
                       const EmbeddingStore& store) {
  if (group.rows.empty()) throw DataError("empty image group");
  return mean(classifier_scores(group, ensemble, store));
}

void write_ensemble(const ClassifierEnsemble& ensemble,
                    const std::filesystem::path& base,
                    const std::vector<std::pair<std::string, std::string>>& header_fields) {
  const std::size_t dim = ensemble.dim();
  std::vector<float> packed;
  packed.reserve(dim * ensemble.members.size());
  json head = {{"format", kEnsembleFormat},
               {"attribute_id", ensemble.attribute_id},
               {"dim", dim},
               {"count", ensemble.members.size()}};
  for (const auto& [k, v] : header_fields) head[k] = v;
  std::string manifest = head.dump();
  manifest += '\n';
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    const auto& m = ensemble.members[i];
    if (m.weights.size() != dim) {
      throw StoreError(StoreErrorKind::kDimensionMismatch,
                       fmt::format("ensemble member {} has dim {}", i, m.weights.size()));
    }
    for (double v : m.weights) packed.push_back(static_cast<float>(v));
    manifest += json{{"seed", m.seed},
                     {"bias", m.bias},
                     {"iterations_run", m.log.iterations_run},
                     {"best_epoch", m.log.best_epoch},
                     {"best_validation_loss", m.log.best_validation_loss},
                     {"offset", i * dim * 4}}
                    .dump();
    manifest += '\n';
  }
  write_file_atomic(matrix_path(base), encode_f32le(packed));
  write_file_atomic(manifest_path(base), manifest);
}

ClassifierEnsemble read_ensemble(const std::filesystem::path& base) {
  const auto mpath = manifest_path(base);
  auto lines = split_lines(read_file(mpath));
  const std::string bytes = read_file(matrix_path(base));
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) {
    throw StoreError(StoreErrorKind::kCorruptManifest, mpath.string() + " is empty");
  }
  ClassifierEnsemble ensemble;
  std::size_t dim = 0, count = 0;
  try {
    json head = json::parse(lines[0]);
    if (head.at("format").get<std::string>() != kEnsembleFormat) {
      throw StoreError(StoreErrorKind::kCorruptManifest,
                       "unsupported format " + head.at("format").dump());
    }
    ensemble.attribute_id = head.at("attribute_id").get<std::string>();
    dim = head.at("dim").get<std::size_t>();
    count = head.at("count").get<std::size_t>();
    if (lines.size() - 1 != count) {
      throw StoreError(StoreErrorKind::kCorruptManifest,
                       fmt::format("header says {} members, found {}", count,
                                   lines.size() - 1));
    }
    if (bytes.size() != 4 * dim * count) {
      throw StoreError(StoreErrorKind::kByteLength,
                       fmt::format("{} has {} bytes, expected {}",
                                   matrix_path(base).string(), bytes.size(),
                                   4 * dim * count));
    }
    const std::vector<float> weights = decode_f32le(bytes);
    for (std::size_t i = 0; i < count; ++i) {
      json line = json::parse(lines[i + 1]);
      if (line.at("offset").get<std::size_t>() != i * dim * 4) {
        throw StoreError(StoreErrorKind::kCorruptManifest,
                         fmt::format("member {} has a bad offset", i));
      }
      LinearClassifier m;
      m.seed = line.at("seed").get<std::uint64_t>();
      m.bias = line.at("bias").get<double>();
      m.log.iterations_run = line.at("iterations_run").get<int>();
      m.log.best_epoch = line.at("best_epoch").get<int>();
      m.log.best_validation_loss = line.at("best_validation_loss").get<double>();
      m.weights.assign(weights.begin() + static_cast<std::ptrdiff_t>(i * dim),
                       weights.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
      for (double v : m.weights) {
        if (!std::isfinite(v)) {
          throw StoreError(StoreErrorKind::kNonFinite, fmt::format("member {}", i));
        }
      }
      if (!std::isfinite(m.bias)) {
        throw StoreError(StoreErrorKind::kNonFinite, fmt::format("member {} bias", i));
      }
      ensemble.members.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw StoreError(StoreErrorKind::kCorruptManifest,
                     fmt::format("{}: {}", mpath.string(), e.what()));
  }
  return ensemble;
}

}  // namespace gepkit
