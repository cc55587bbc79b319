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

// Acceptance checks A1..A10. With no argument every check runs; with an id
// only that check runs. One PASS/FAIL line per check; exit status 1 if any
// check fails.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>

#include "gepkit/artificial.hpp"
#include "gepkit/classifier.hpp"
#include "gepkit/cli.hpp"
#include "gepkit/error.hpp"
#include "gepkit/estimators.hpp"
#include "gepkit/gep.hpp"
#include "gepkit/prompt_forge.hpp"
#include "gepkit/stats.hpp"
#include "gepkit/text_io.hpp"
#include "oracles.hpp"
#include "pipeline_fixture.hpp"
#include "random_store.hpp"
#include "synthetic_benchmark.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gepkit;

struct Outcome {
  bool pass = false;
  std::string detail;
};

const fs::path kFixtures = fs::path(GEPKIT_SOURCE_DIR) / "data" / "fixtures";

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gepkit_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, double> reference_scores() {
  std::map<std::string, double> out;
  for (const auto& line : split_lines(read_file(kFixtures / "human_gep_scores.tsv"))) {
    auto f = split(line, '\t');
    if (f.size() == 4 && f[0] != "model") out[f[0] + "_" + f[1]] = parse_real(f[2], "gep");
  }
  return out;
}

Outcome check_a1() {
  Stopwatch watch;
  const auto reference = reference_scores();
  double worst = 0.0;
  std::string cells;
  for (const auto& [stem, gep] : reference) {
    const auto table =
        parse_frequency_table(read_file(kFixtures / "human_frequencies" / (stem + ".tsv")));
    const double score = gep_score(gep_vector(table));
    worst = std::max(worst, std::abs(score - gep));
    cells += fmt::format(" {}={:.4f}", stem, score);
  }
  const double t = watch.seconds();
  return {reference.size() == 6 && worst <= 0.005 && t < 1.0,
          fmt::format("6 scores, max |score - reference| = {:.5f}, {:.3f}s;{}", worst, t,
                      cells)};
}

Outcome check_a2() {
  std::size_t cells = 0, mismatches = 0;
  double worst = 0.0;
  std::string first;
  for (const auto& entry : fs::directory_iterator(kFixtures / "human_gep_vectors")) {
    const auto reference = parse_gep_result(read_file(entry.path()));
    const auto table =
        parse_frequency_table(read_file(kFixtures / "human_frequencies" / entry.path().filename()));
    const auto v = gep_vector(table);
    for (std::size_t j = 0; j < v.size(); ++j) {
      ++cells;
      const long long got = std::llround(v[j] * 100.0);
      const long long want = std::llround(reference.vector[j] * 100.0);
      if (got != want) {
        ++mismatches;
        worst = std::max(worst, std::abs(v[j] - reference.vector[j]));
        if (first.empty()) {
          first = fmt::format("{} {}: {:.2f} vs {:.2f}", entry.path().stem().string(),
                              table.attributes()[j], v[j], reference.vector[j]);
        }
      }
    }
  }
  return {cells == 90 && mismatches == 0,
          fmt::format("{} of {} cells differ from the reference vectors (max deviation "
                      "{:.2f}{}{})",
                      mismatches, cells, worst, first.empty() ? "" : "; first: ", first)};
}

Outcome check_a3() {
  Stopwatch watch;
  std::mt19937_64 rng(20260301);
  std::uniform_int_distribution<int> len(2, 10);
  std::uniform_int_distribution<int> level(-4, 4);
  std::uniform_real_distribution<double> real(-1.0, 1.0);
  auto draw = [&](int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    const bool tied = rng() % 2 == 0;
    for (auto& x : v) x = tied ? level(rng) * 0.25 : real(rng);
    return v;
  };
  std::map<std::string, std::size_t> done;
  double worst = 0.0;
  auto record = [&](const std::string& name, double got, double want) {
    worst = std::max(worst, std::abs(got - want));
    ++done[name];
  };

  while (done["tau_b"] < 100 || done["pearson"] < 100) {
    const int n = len(rng);
    const auto x = draw(n), y = draw(n);
    try {
      const double t = kendall_tau_b(x, y);
      if (done["tau_b"] < 100) record("tau_b", t, oracle::tau_b(x, y));
    } catch (const DegenerateError&) {
    }
    try {
      const double p = pearson(x, y);
      if (done["pearson"] < 100) record("pearson", p, oracle::pearson(x, y));
    } catch (const DegenerateError&) {
    }
  }
  while (done["mcc"] < 100) {
    const int n = len(rng);
    const auto x = draw(n), y = draw(n);
    record("mcc", mcc_signs(x, y), oracle::mcc_signs(x, y));
  }
  while (done["roc_auc"] < 100) {
    const int n = len(rng);
    const auto s = draw(n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng() % 2);
    try {
      record("roc_auc", roc_auc(s, labels), oracle::roc_auc(s, labels));
    } catch (const DegenerateError&) {
    }
  }
  while (done["krippendorff"] < 100) {
    const int items = len(rng);
    const int raters = 2 + static_cast<int>(rng() % 3);
    std::vector<std::vector<std::optional<int>>> ratings(static_cast<std::size_t>(items));
    for (auto& item : ratings) {
      for (int r = 0; r < raters; ++r) {
        if (rng() % 5 == 0) {
          item.push_back(std::nullopt);
        } else {
          item.push_back(static_cast<int>(rng() % 3));
        }
      }
    }
    try {
      record("krippendorff", krippendorff_alpha(ratings), oracle::krippendorff(ratings));
    } catch (const DegenerateError&) {
    }
  }
  const double t = watch.seconds();
  return {worst <= 1e-12 && t < 10.0,
          fmt::format("5 statistics x 100 instances, max |lib - oracle| = {:.2e}, {:.3f}s", worst,
                      t)};
}

Outcome check_a4() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t dim = 8, rows = 16;
  const double h = 1e-5;
  double worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    RowMatrix x;
    x.cols = dim;
    std::vector<int> y;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row(dim);
      for (auto& v : row) v = normal(rng);
      x.append(row);
      y.push_back(static_cast<int>(rng() % 2));
    }
    std::vector<double> w(dim);
    for (auto& v : w) v = normal(rng);
    const double b = normal(rng);
    const double l2 = point % 2 == 0 ? 0.0 : 0.1;
    const auto g = bce_gradient(w, b, x, y, l2);
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t k = 0; k <= dim; ++k) {
      double fd;
      if (k < dim) {
        auto wp = w, wm = w;
        wp[k] += h;
        wm[k] -= h;
        fd = (bce_loss(wp, b, x, y, l2) - bce_loss(wm, b, x, y, l2)) / (2 * h);
      } else {
        fd = (bce_loss(w, b + h, x, y, l2) - bce_loss(w, b - h, x, y, l2)) / (2 * h);
      }
      const double an = k < dim ? g.weights[k] : g.bias;
      diff2 += (an - fd) * (an - fd);
      ref2 += fd * fd;
    }
    worst = std::max(worst, std::sqrt(diff2 / ref2));
  }
  return {worst <= 1e-5,
          fmt::format("20 points, max relative gradient error = {:.2e}", worst)};
}

struct TrialAucs {
  double classifier = 0.0;
  double calibrated = 0.0;
  double similarity = 0.0;
};

TrialAucs run_trial(const testing::BenchmarkParams& params, int trial) {
  const auto b = testing::make_benchmark(params, 1000 + static_cast<std::uint64_t>(trial));
  TrainerConfig cfg;
  cfg.base_seed = static_cast<std::uint64_t>(trial);
  const auto ensemble = train_ensemble(b.sentences, b.store, cfg);
  const auto q = b.store.text_vector(b.attribute.query_phrase);
  const auto r = b.store.text_vector(b.attribute.calibration_reference);
  return {roc_auc(classifier_scores(b.images, ensemble, b.store), b.labels),
          roc_auc(calibrated_scores(b.images, q, r, b.store), b.labels),
          roc_auc(similarity_scores(b.images, q, b.store), b.labels)};
}

Outcome check_a5() {
  Stopwatch watch;
  double sum = 0.0, low = 1.0;
  for (int t = 0; t < 10; ++t) {
    const double auc = run_trial(testing::transfer_params(), t).classifier;
    sum += auc;
    low = std::min(low, auc);
  }
  const double t = watch.seconds();
  return {sum / 10 >= 0.95 && t < 30.0,
          fmt::format("10 trials, mean ensemble AUC = {:.4f} (min {:.4f}), {:.2f}s", sum / 10,
                      low, t)};
}

Outcome check_a6() {
  int ordered = 0;
  TrialAucs mean;
  for (int t = 0; t < 10; ++t) {
    const auto a = run_trial(testing::confounded_params(), t);
    ordered += a.classifier >= a.calibrated && a.calibrated >= a.similarity;
    mean.classifier += a.classifier / 10;
    mean.calibrated += a.calibrated / 10;
    mean.similarity += a.similarity / 10;
  }
  return {ordered >= 8,
          fmt::format("ordering held in {}/10 trials; mean AUC classifier {:.4f}, "
                      "calibrated {:.4f}, similarity {:.4f}",
                      ordered, mean.classifier, mean.calibrated, mean.similarity)};
}

Outcome check_a7() {
  Stopwatch watch;
  std::vector<AttributePool> pools;
  std::vector<EmbeddingRecord> records;
  std::unordered_set<std::string> positive;
  for (int a = 0; a < 15; ++a) {
    AttributePool pool{fmt::format("attr{}", a), {}, {}};
    for (int i = 0; i < 200; ++i) {
      pool.positives.push_back(fmt::format("{}_p{}", pool.attribute_id, i));
      pool.negatives.push_back(fmt::format("{}_n{}", pool.attribute_id, i));
      positive.insert(pool.positives.back());
      records.push_back({pool.positives.back(), RecordKind::kImage, {}, {1.0f}});
      records.push_back({pool.negatives.back(), RecordKind::kImage, {}, {1.0f}});
    }
    pools.push_back(std::move(pool));
  }
  const EmbeddingStore store(std::move(records));
  const auto scales = default_scales();
  const std::size_t z = 40;
  const auto four = build_dataset(pools, scales, 10, z, 7);
  const auto three = build_dataset(pools, std::span(scales).first(3), 10, z, 7);

  double worst = 0.0;
  ArtificialDataset distinct = four;
  distinct.examples.clear();
  std::set<double> seen;
  for (const auto& ex : four.examples) {
    worst = std::max(worst, std::abs(ex.realized_diff - ex.target_diff));
    if (seen.insert(ex.realized_diff).second) distinct.examples.push_back(ex);
  }
  auto exact = [&](const std::string&, const ImageGroup& g) {
    std::size_t k = 0;
    for (const auto& id : g.ids) k += positive.count(id);
    return static_cast<double>(k) / static_cast<double>(g.size());
  };
  const double tau = evaluate_on_dataset(distinct, exact, store).tau_b;
  const double t = watch.seconds();
  const bool pass = four.examples.size() == 600 && three.examples.size() == 450 &&
                    four.skipped.empty() && three.skipped.empty() &&
                    worst <= 0.5 / static_cast<double>(z) + 1e-12 && tau == 1.0 && t < 10.0;
  return {pass, fmt::format("{} and {} examples, {} skips, max |realized - target| = {:.4f}, "
                            "oracle tau-b on {} distinct diffs = {}, {:.2f}s",
                            four.examples.size(), three.examples.size(),
                            four.skipped.size() + three.skipped.size(), worst,
                            distinct.examples.size(), tau, t)};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

Outcome check_a8() {
  const auto dir = scratch("determinism");
  const auto fixture = testing::write_pipeline_fixture(dir / "fixture", 11);
  std::vector<std::map<std::string, std::string>> runs;
  std::ostringstream sink;
  auto* saved = std::cout.rdbuf(sink.rdbuf());
  struct Restore {
    std::streambuf* buf;
    ~Restore() { std::cout.rdbuf(buf); }
  } restore{saved};
  for (const std::string out : {"run_1", "run_2"}) {
    const auto cfg = testing::write_run_config(fixture, dir / (out + ".json"), (dir / out).string());
    for (const char* cmd : {"prompts", "train", "estimate", "score", "artificial", "eval-corr",
                            "report"}) {
      const int code = run_cli({"gepkit", "--config", cfg.string(), cmd});
      if (code != 0) return {false, fmt::format("'{}' exited with {}", cmd, code)};
    }
    runs.push_back(snapshot(dir / out));
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : runs[0]) {
    auto it = runs[1].find(name);
    differing += it == runs[1].end() || it->second != bytes;
  }
  return {differing == 0 && runs[0].size() == runs[1].size() && runs[0].count("report.tsv"),
          fmt::format("{} output files per run, {} differ", runs[0].size(), differing)};
}

Outcome check_a9() {
  const auto dir = scratch("stores");
  const auto base = dir / "store";
  std::mt19937_64 rng(9);
  std::size_t round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto records = testing::random_records(rng, rng() % 12, 1 + rng() % 8);
    write_store(records, base);
    const auto back = read_store(base).records();
    bool same = back.size() == records.size();
    for (std::size_t r = 0; same && r < back.size(); ++r) {
      same = back[r].id == records[r].id && back[r].kind == records[r].kind &&
             back[r].meta == records[r].meta && testing::bit_equal(back[r].vector, records[r].vector);
    }
    round_trips += same;
  }

  std::vector<std::string> failures;
  auto expect_kind = [&](const std::string& what, StoreErrorKind want, const auto& action) {
    try {
      action();
      failures.push_back(what + ": accepted");
    } catch (const StoreError& e) {
      if (e.kind() != want) failures.push_back(what + ": got " + to_string(e.kind()));
    }
  };
  const std::vector<EmbeddingRecord> good = {{"a", RecordKind::kImage, {}, {1.0f, 2.0f}},
                                             {"b", RecordKind::kText, {}, {3.0f, 4.0f}}};
  auto rewrite = [&](const fs::path& path, const std::function<std::string(std::string)>& edit) {
    write_store(good, base);
    write_file_atomic(path, edit(read_file(path)));
  };
  const auto manifest = manifest_path(base), matrix = matrix_path(base);

  expect_kind("dimension mismatch", StoreErrorKind::kDimensionMismatch, [&] {
    EmbeddingStore({{"a", RecordKind::kImage, {}, {1.0f}}, {"b", RecordKind::kImage, {}, {1.0f, 2.0f}}});
  });
  expect_kind("duplicate id", StoreErrorKind::kDuplicateId, [&] {
    rewrite(manifest, [](std::string m) {
      m.replace(m.find("\"id\":\"b\""), 8, "\"id\":\"a\"");
      return m;
    });
    read_store(base);
  });
  expect_kind("truncated matrix", StoreErrorKind::kByteLength, [&] {
    rewrite(matrix, [](std::string m) { return m.substr(0, m.size() - 1); });
    read_store(base);
  });
  expect_kind("NaN value", StoreErrorKind::kNonFinite, [&] {
    rewrite(matrix, [](std::string m) { return m.substr(0, 4) + std::string("\x00\x00\xc0\x7f", 4) + m.substr(8); });
    read_store(base);
  });
  expect_kind("garbled manifest", StoreErrorKind::kCorruptManifest, [&] {
    rewrite(manifest, [](std::string m) { return m.substr(0, m.size() / 2); });
    read_store(base);
  });
  expect_kind("wrong format tag", StoreErrorKind::kCorruptManifest, [&] {
    rewrite(manifest, [](std::string m) {
      m.replace(m.find("gepstore/1"), 10, "gepstore/9");
      return m;
    });
    read_store(base);
  });
  expect_kind("missing matrix", StoreErrorKind::kIo, [&] {
    write_store(good, base);
    fs::remove(matrix);
    read_store(base);
  });
  std::string detail = fmt::format("{}/1000 random stores round-trip bit-exactly; {} of 7 "
                                   "corruptions rejected with the expected kind",
                                   round_trips, 7 - failures.size());
  for (const auto& f : failures) detail += "; " + f;
  return {round_trips == 1000 && failures.empty(), detail};
}

Outcome check_a10() {
  const auto sets = default_prompt_sets();
  const auto neutral = build_neutral_prompts(sets.genders, sets.contexts);
  const auto expl = build_explicit_prompts(sets.genders, sets.attributes, sets.contexts);
  bool split_ok = true;
  std::size_t per_attribute = 0;
  for (const auto& a : sets.attributes) {
    const auto s = build_training_sentences(sets.training_genders, a, sets.training_contexts);
    split_ok &= s.positives.size() == 48 && s.negatives.size() == 48;
    per_attribute = s.positives.size() + s.negatives.size();
  }
  return {neutral.size() == 32 && expl.size() == 480 && per_attribute == 96 && split_ok,
          fmt::format("{} neutral, {} explicit, {} training sentences per attribute ({})",
                      neutral.size(), expl.size(), per_attribute,
                      split_ok ? "48/48 for every attribute" : "split not 48/48")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"A1", check_a1}, {"A2", check_a2}, {"A3", check_a3}, {"A4", check_a4},
      {"A5", check_a5}, {"A6", check_a6}, {"A7", check_a7}, {"A8", check_a8},
      {"A9", check_a9}, {"A10", check_a10}};
  const std::string only = argc > 1 ? argv[1] : "";
  bool any = false, all_pass = true;
  for (const auto& [id, check] : checks) {
    if (!only.empty() && only != id) continue;
    any = true;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << id << (o.pass ? " PASS: " : " FAIL: ") << o.detail << std::endl;
    all_pass &= o.pass;
  }
  if (!any) {
    std::cerr << "unknown check '" << only << "'\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
