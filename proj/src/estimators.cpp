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

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "gepkit/error.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

const char* to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::kSimilarity:
      return "similarity";
    case Estimator::kCalibrated:
      return "calibrated";
    case Estimator::kClassifier:
      return "classifier";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "similarity") return Estimator::kSimilarity;
  if (name == "calibrated") return Estimator::kCalibrated;
  if (name == "classifier") return Estimator::kClassifier;
  throw ConfigError(fmt::format("unknown estimator '{}'", name));
}

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw DataError(fmt::format("cosine of vectors with dims {} and {}", u.size(),
                                v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    uu += static_cast<double>(u[i]) * u[i];
    vv += static_cast<double>(v[i]) * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw DataError("cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::vector<double> l2_normalized(std::span<const float> v) {
  double norm2 = 0.0;
  for (float x : v) norm2 += static_cast<double>(x) * x;
  if (norm2 == 0.0) throw DataError("cannot normalize a zero-norm vector");
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DegenerateError("mean of an empty set");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::vector<double> similarity_scores(const ImageGroup& group,
                                      std::span<const float> text,
                                      const EmbeddingStore& store) {
  std::vector<double> out;
  out.reserve(group.size());
  for (std::size_t r : group.rows) out.push_back(cosine(store.row(r), text));
  return out;
}

std::vector<double> calibrated_scores(const ImageGroup& group,
                                      std::span<const float> text,
                                      std::span<const float> reference,
                                      const EmbeddingStore& store) {
  std::vector<double> out;
  out.reserve(group.size());
  for (std::size_t r : group.rows) {
    out.push_back(cosine(store.row(r), text) - cosine(store.row(r), reference));
  }
  return out;
}

double similarity_freq(const ImageGroup& group, const AttributeSpec& attribute,
                       const EmbeddingStore& store) {
  if (group.rows.empty()) throw DataError("empty image group");
  return mean(similarity_scores(group, store.text_vector(attribute.query_phrase),
                                store));
}

double calibrated_freq(const ImageGroup& group, const AttributeSpec& attribute,
                       const EmbeddingStore& store) {
  if (group.rows.empty()) throw DataError("empty image group");
  return mean(calibrated_scores(group, store.text_vector(attribute.query_phrase),
                                store.text_vector(attribute.calibration_reference),
                                store));
}

double clipscore(std::span<const float> prompt_text, const ImageGroup& group,
                 const EmbeddingStore& store, double multiplier) {
  if (group.rows.empty()) throw DataError("empty image group");
  double sum = 0.0;
  for (std::size_t r : group.rows) {
    sum += std::max(0.0, cosine(store.row(r), prompt_text));
  }
  return multiplier * sum / static_cast<double>(group.size());
}

double separability_ratio(std::span<const LabeledScore> scores) {
  double present_sum[2] = {0.0, 0.0};
  std::size_t present_n[2] = {0, 0};
  double absent_sum = 0.0;
  std::size_t absent_n = 0;
  for (const auto& s : scores) {
    if (s.gender_index != 1 && s.gender_index != 2) {
      throw DataError(fmt::format("gender index {} is not 1 or 2", s.gender_index));
    }
    if (s.present) {
      present_sum[s.gender_index - 1] += s.score;
      ++present_n[s.gender_index - 1];
    } else {
      absent_sum += s.score;
      ++absent_n;
    }
  }
  if (present_n[0] == 0 || present_n[1] == 0 || absent_n == 0) {
    throw DegenerateError(
        "separability ratio needs present images for both genders and absent images");
  }
  const double gender_gap = present_sum[0] / present_n[0] - present_sum[1] / present_n[1];
  const double existence_gap =
      (present_sum[0] + present_sum[1]) / (present_n[0] + present_n[1]) -
      absent_sum / absent_n;
  if (existence_gap == 0.0) {
    throw DegenerateError("separability ratio has a zero denominator");
  }
  return gender_gap / existence_gap;
}

std::string format_estimate_report(const EstimateReport& report,
                                   const std::vector<std::string>& preamble) {
  std::string out = "# gepestimate/1\n";
  out += fmt::format("# estimator={}\n", to_string(report.estimator));
  for (const auto& line : preamble) {
    out += line;
    out += '\n';
  }
  out += "setting\tgender_index\tattribute\tvalue\tz\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", to_string(r.setting), r.gender_index,
                       r.attribute_id, format_real(r.value), r.z);
  }
  return out;
}

EstimateReport parse_estimate_report(std::string_view text) {
  EstimateReport report;
  bool saw_format = false, saw_header = false;
  for (const auto& raw : split_lines(text)) {
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line == "# gepestimate/1") saw_format = true;
      if (line.rfind("# estimator=", 0) == 0) {
        report.estimator = parse_estimator(line.substr(12));
      }
      continue;
    }
    if (!saw_header) {
      saw_header = true;
      continue;
    }
    auto f = split(line, '\t');
    if (f.size() != 5) throw DataError("estimate row needs 5 fields: " + std::string(line));
    report.rows.push_back({parse_setting(f[0]),
                           static_cast<int>(parse_int(f[1], "gender_index")), f[2],
                           parse_real(f[3], "value"),
                           static_cast<std::size_t>(parse_int(f[4], "z"))});
  }
  if (!saw_format) throw DataError("not a gepestimate/1 report");
  return report;
}

std::string format_image_scores(const EstimateReport& report,
                                const std::vector<std::string>& preamble) {
  std::string out = "# gepscores/1\n";
  out += fmt::format("# estimator={}\n", to_string(report.estimator));
  for (const auto& line : preamble) {
    out += line;
    out += '\n';
  }
  out += "image_id\tattribute\tscore\n";
  for (const auto& s : report.image_scores) {
    out += fmt::format("{}\t{}\t{}\n", s.image_id, s.attribute_id, format_real(s.score));
  }
  return out;
}

}  // namespace gepkit
