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

#include "gepkit/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>

#include "gepkit/error.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

namespace {

void require_paired(std::span<const double> x, std::span<const double> y,
                    std::string_view what) {
  if (x.size() != y.size()) {
    throw DataError(fmt::format("{}: lengths {} and {} differ", what, x.size(), y.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw DataError(fmt::format("{}: non-finite value at {}", what, i));
    }
  }
}

std::int64_t tied_pairs(std::span<const double> sorted) {
  std::int64_t total = 0, run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Sorts v ascending; returns the number of strictly inverted pairs.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf,
                         std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "kendall_tau_b");
  const std::size_t n = x.size();
  if (n < 2) throw DegenerateError("kendall_tau_b needs at least two observations");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t x_ties = tied_pairs(xs);

  std::int64_t joint_ties = 0, run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
      ++run;
    } else {
      joint_ties += run * (run - 1) / 2;
      run = 1;
    }
  }

  std::vector<double> buf(n);
  const std::int64_t discordant = merge_count(ys, buf, 0, n);
  const std::int64_t y_ties = tied_pairs(ys);

  const std::int64_t s = n0 - x_ties - y_ties + joint_ties - 2 * discordant;
  const double denom =
      static_cast<double>(n0 - x_ties) * static_cast<double>(n0 - y_ties);
  if (denom == 0.0) throw DegenerateError("kendall_tau_b: input is entirely tied");
  return static_cast<double>(s) / std::sqrt(denom);
}

double mcc_signs(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "mcc_signs");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool px = x[i] >= 0.0, py = y[i] >= 0.0;
    if (px && py) ++tp;
    else if (!px && !py) ++tn;
    else if (px) ++fp;
    else ++fn;
  }
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "pearson");
  const std::size_t n = x.size();
  if (n < 2) throw DegenerateError("pearson needs at least two observations");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DataError(fmt::format("roc_auc: {} scores for {} labels", scores.size(),
                                labels.size()));
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Rank sum of positives with mid-ranks for ties; ranks doubled to stay integral.
  std::int64_t twice_rank_sum = 0;
  std::int64_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const auto twice_mid = static_cast<std::int64_t>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      const int label = labels[order[k]];
      if (label != 0 && label != 1) throw DataError("roc_auc: labels must be 0 or 1");
      if (!std::isfinite(scores[order[k]])) throw DataError("roc_auc: non-finite score");
      if (label == 1) {
        twice_rank_sum += twice_mid;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DegenerateError("roc_auc needs both classes");
  const std::int64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos * n_neg));
}

int majority_vote(std::span<const int> votes) {
  if (votes.size() % 2 == 0) {
    throw DataError(fmt::format("majority vote needs an odd vote count, got {}",
                                votes.size()));
  }
  std::size_t yes = 0;
  for (int v : votes) {
    if (v != 0 && v != 1) throw DataError("votes must be 0 or 1");
    yes += static_cast<std::size_t>(v);
  }
  return 2 * yes > votes.size() ? 1 : 0;
}

double krippendorff_alpha(const std::vector<std::vector<std::optional<int>>>& ratings) {
  std::vector<int> categories;
  for (const auto& item : ratings) {
    for (const auto& r : item) {
      if (r) categories.push_back(*r);
    }
  }
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  const std::size_t k = categories.size();
  auto cat = [&](int v) {
    return static_cast<std::size_t>(
        std::lower_bound(categories.begin(), categories.end(), v) - categories.begin());
  };

  // Coincidence matrix.
  std::vector<double> o(k * k, 0.0);
  std::size_t pairable_items = 0;
  for (const auto& item : ratings) {
    std::vector<std::size_t> counts(k, 0);
    std::size_t m = 0;
    for (const auto& r : item) {
      if (r) {
        ++counts[cat(*r)];
        ++m;
      }
    }
    if (m < 2) continue;
    ++pairable_items;
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t d = 0; d < k; ++d) {
        const double pairs = c == d ? static_cast<double>(counts[c]) * (counts[c] - 1.0)
                                    : static_cast<double>(counts[c]) * counts[d];
        o[c * k + d] += pairs * w;
      }
    }
  }
  if (pairable_items < 2) {
    throw DegenerateError("krippendorff_alpha needs two items with two ratings each");
  }
  std::vector<double> marginal(k, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) marginal[c] += o[c * k + d];
    n += marginal[c];
  }
  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      if (c == d) continue;
      observed += o[c * k + d];
      expected += marginal[c] * marginal[d];
    }
  }
  if (expected == 0.0) {
    throw DegenerateError("krippendorff_alpha: every rating has the same value");
  }
  return 1.0 - (n - 1.0) * observed / expected;
}

const char* to_string(PairStratum stratum) {
  switch (stratum) {
    case PairStratum::kSameAttributeSameModel:
      return "same_attribute_same_model";
    case PairStratum::kDiffAttributeSameModel:
      return "diff_attribute_same_model";
    case PairStratum::kSameAttributeDiffModel:
      return "same_attribute_diff_model";
    case PairStratum::kDiffAttributeDiffModel:
      return "diff_attribute_diff_model";
  }
  return "unknown";
}

double stratified_tau(std::span<const TaggedPair> examples, PairStratum stratum) {
  const bool want_same_attr = stratum == PairStratum::kSameAttributeSameModel ||
                              stratum == PairStratum::kSameAttributeDiffModel;
  const bool want_same_model = stratum == PairStratum::kSameAttributeSameModel ||
                               stratum == PairStratum::kDiffAttributeSameModel;
  std::int64_t pairs = 0, concordant = 0, discordant = 0, x_ties = 0, y_ties = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (std::size_t j = i + 1; j < examples.size(); ++j) {
      const auto& a = examples[i];
      const auto& b = examples[j];
      if ((a.attribute_id == b.attribute_id) != want_same_attr) continue;
      if ((a.model_tag == b.model_tag) != want_same_model) continue;
      ++pairs;
      const double dx = a.predicted - b.predicted;
      const double dy = a.reference - b.reference;
      if (dx == 0.0) ++x_ties;
      if (dy == 0.0) ++y_ties;
      if (dx * dy > 0.0) ++concordant;
      else if (dx * dy < 0.0) ++discordant;
    }
  }
  if (pairs == 0) {
    throw DegenerateError(fmt::format("no example pairs in stratum {}", to_string(stratum)));
  }
  const double denom =
      static_cast<double>(pairs - x_ties) * static_cast<double>(pairs - y_ties);
  if (denom == 0.0) {
    throw DegenerateError(
        fmt::format("stratum {} is entirely tied", to_string(stratum)));
  }
  return static_cast<double>(concordant - discordant) / std::sqrt(denom);
}

CorrelationReport correlate(std::span<const double> predicted,
                            std::span<const double> reference) {
  CorrelationReport r;
  r.tau_b = kendall_tau_b(predicted, reference);
  r.mcc = mcc_signs(predicted, reference);
  r.pearson = pearson(predicted, reference);
  r.n_examples = predicted.size();
  return r;
}

void add_stratified(CorrelationReport& report, std::span<const TaggedPair> examples) {
  for (std::size_t s = 0; s < kAllStrata.size(); ++s) {
    try {
      report.stratified_tau[s] = stratified_tau(examples, kAllStrata[s]);
    } catch (const DegenerateError&) {
      report.stratified_tau[s] = std::nullopt;
    }
  }
}

std::string tau_mcc_cell(const CorrelationReport& report) {
  return fmt::format("{:.3f}/{:.3f}", report.tau_b, report.mcc);
}

std::string format_correlation_report(const CorrelationReport& report,
                                      const std::vector<std::string>& preamble) {
  std::string out = "# gepcorr/1\n";
  for (const auto& line : preamble) out += line + "\n";
  out += "metric\tvalue\n";
  out += fmt::format("tau_b\t{}\nmcc\t{}\npearson\t{}\nn\t{}\n", format_real(report.tau_b),
                     format_real(report.mcc), format_real(report.pearson),
                     report.n_examples);
  for (std::size_t s = 0; s < kAllStrata.size(); ++s) {
    const auto& v = report.stratified_tau[s];
    out += fmt::format("tau_{}\t{}\n", to_string(kAllStrata[s]),
                       v ? format_real(*v) : "-");
  }
  return out;
}

CorrelationReport parse_correlation_report(std::string_view text) {
  CorrelationReport r;
  bool saw_format = false, saw_header = false;
  for (const auto& raw : split_lines(text)) {
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line == "# gepcorr/1") saw_format = true;
      continue;
    }
    if (!saw_header) {
      saw_header = true;
      continue;
    }
    auto f = split(line, '\t');
    if (f.size() != 2) throw DataError("gepcorr/1 row needs 2 fields");
    if (f[0] == "tau_b") r.tau_b = parse_real(f[1], "tau_b");
    else if (f[0] == "mcc") r.mcc = parse_real(f[1], "mcc");
    else if (f[0] == "pearson") r.pearson = parse_real(f[1], "pearson");
    else if (f[0] == "n") r.n_examples = static_cast<std::size_t>(parse_int(f[1], "n"));
    else {
      for (std::size_t s = 0; s < kAllStrata.size(); ++s) {
        if (f[0] == std::string("tau_") + to_string(kAllStrata[s]) && f[1] != "-") {
          r.stratified_tau[s] = parse_real(f[1], f[0]);
        }
      }
    }
  }
  if (!saw_format) throw DataError("not a gepcorr/1 report");
  return r;
}

}  // namespace gepkit
