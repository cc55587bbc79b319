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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gepkit/embed_store.hpp"
#include "gepkit/prompt_forge.hpp"

namespace gepkit {

inline constexpr std::string_view kEnsembleFormat = "gepcls/1";

struct TrainerConfig {
  double learning_rate = 1e-3;
  int max_iterations = 5000;  // epochs
  double validation_fraction = 0.10;
  int early_stop_patience = 5;  // epochs without validation improvement
  double l2_penalty = 0.0;
  int ensemble_size = 10;
  std::uint64_t base_seed = 0;

  void validate() const;
};

// Dense row-major matrix of doubles.
struct RowMatrix {
  std::size_t cols = 0;
  std::vector<double> data;

  std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
  void append(std::span<const double> values);
};

// Unit-normalized rows of the given store records.
RowMatrix normalized_rows(const EmbeddingStore& store,
                          std::span<const std::size_t> rows);

double sigmoid(double z);

struct TrainLog {
  int iterations_run = 0;
  int best_epoch = 0;
  double best_validation_loss = 0.0;
};

struct LinearClassifier {
  std::vector<double> weights;
  double bias = 0.0;
  std::uint64_t seed = 0;
  TrainLog log;

  double logit(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return sigmoid(logit(x)); }
};

struct ClassifierEnsemble {
  std::string attribute_id;
  std::vector<LinearClassifier> members;

  std::size_t dim() const;
  // Arithmetic mean of the members' probabilities.
  double predict(std::span<const double> x) const;
};

// Binary cross-entropy summed over rows, plus (l2/2)|w|^2 per row.
double bce_loss(std::span<const double> weights, double bias, const RowMatrix& x,
                std::span<const int> labels, double l2_penalty = 0.0);

struct BceGradient {
  std::vector<double> weights;
  double bias = 0.0;
};

BceGradient bce_gradient(std::span<const double> weights, double bias,
                         const RowMatrix& x, std::span<const int> labels,
                         double l2_penalty = 0.0);

// Logistic regression fit with per-example SGD on positives (y=1) and
// negatives (y=0). A stratified validation split is held out; the returned
// parameters are those of the epoch with the lowest validation loss.
// Throws DataError for an empty class after the split and DegenerateError if
// the loss stops being finite.
LinearClassifier train_classifier(const RowMatrix& positives,
                                  const RowMatrix& negatives,
                                  const TrainerConfig& config, std::uint64_t seed);

// cfg.ensemble_size members with seeds base_seed, base_seed + 1, ...
ClassifierEnsemble train_ensemble(const RowMatrix& positives,
                                  const RowMatrix& negatives,
                                  const std::string& attribute_id,
                                  const TrainerConfig& config);

// Looks up every sentence's text embedding in the store.
ClassifierEnsemble train_ensemble(const TrainingSentenceSets& sentences,
                                  const EmbeddingStore& store,
                                  const TrainerConfig& config);

std::vector<double> classifier_scores(const ImageGroup& group,
                                      const ClassifierEnsemble& ensemble,
                                      const EmbeddingStore& store);

double classifier_freq(const ImageGroup& group, const ClassifierEnsemble& ensemble,
                       const EmbeddingStore& store);

// <base>.manifest + <base>.f32; weights are stored as float32, so a reloaded
// ensemble carries float-rounded weights. Extra header fields are stored as
// strings and ignored on read.
void write_ensemble(const ClassifierEnsemble& ensemble,
                    const std::filesystem::path& base,
                    const std::vector<std::pair<std::string, std::string>>& header_fields = {});
ClassifierEnsemble read_ensemble(const std::filesystem::path& base);

}  // namespace gepkit
