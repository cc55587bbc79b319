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

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>

#include "gepkit/cli.hpp"
#include "gepkit/embed_store.hpp"
#include "gepkit/gep.hpp"
#include "gepkit/seed.hpp"
#include "gepkit/stats.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path write_output(const RunConfig& config, const fs::path& rel,
                      std::string_view contents) {
  const fs::path path = config.output_dir / rel;
  write_file_atomic(path, contents);
  return path;
}

std::string header_line(const RunConfig& config, json head) {
  for (const auto& [k, v] : config.header_fields()) head[k] = v;
  return head.dump() + "\n";
}

EmbeddingStore load_store(const RunConfig& config) {
  if (!config.store) throw ConfigError("run config names no embedding store");
  return read_store(*config.store);
}

std::vector<AnnotationRecord> load_annotations(const RunConfig& config) {
  if (!config.annotations) throw ConfigError("run config names no annotation file");
  return parse_annotations(read_file(*config.annotations));
}

// Annotations on image records of this run's model.
std::vector<AnnotationRecord> annotations_in_store(const RunConfig& config,
                                                   const EmbeddingStore& store) {
  std::vector<AnnotationRecord> out;
  for (auto& a : load_annotations(config)) {
    const auto row = store.find(a.image_id);
    if (!row) continue;
    const auto& h = store.header(*row);
    if (h.kind != RecordKind::kImage) continue;
    if (config.model_tag && h.meta.model_tag != config.model_tag) continue;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<std::string> attribute_ids(const RunConfig& config) {
  std::vector<std::string> ids;
  for (const auto& a : config.sets.attributes) ids.push_back(a.id);
  return ids;
}

fs::path ensemble_base(const RunConfig& config, std::string_view attribute_id) {
  return config.output_dir / "ensembles" / std::string(attribute_id);
}

// Per-image scores of one estimator for one attribute.
class Scorer {
 public:
  Scorer(const RunConfig& config, const EmbeddingStore& store, Estimator estimator)
      : config_(config), store_(store), estimator_(estimator) {}

  std::vector<double> scores(const std::string& attribute_id, const ImageGroup& group) {
    const auto& attribute = find_attribute(config_.sets.attributes, attribute_id);
    switch (estimator_) {
      case Estimator::kSimilarity:
        return similarity_scores(group, store_.text_vector(attribute.query_phrase), store_);
      case Estimator::kCalibrated:
        return calibrated_scores(group, store_.text_vector(attribute.query_phrase),
                                 store_.text_vector(attribute.calibration_reference),
                                 store_);
      case Estimator::kClassifier:
        return classifier_scores(group, ensemble(attribute_id), store_);
    }
    return {};
  }

  double freq(const std::string& attribute_id, const ImageGroup& group) {
    const auto s = scores(attribute_id, group);
    return mean(s);
  }

 private:
  const ClassifierEnsemble& ensemble(const std::string& attribute_id) {
    auto it = ensembles_.find(attribute_id);
    if (it == ensembles_.end()) {
      const fs::path base = ensemble_base(config_, attribute_id);
      if (!fs::exists(manifest_path(base))) {
        throw DataError(fmt::format("no trained ensemble for '{}' at {}; run train first",
                                    attribute_id, base.string()));
      }
      it = ensembles_.emplace(attribute_id, read_ensemble(base)).first;
    }
    return it->second;
  }

  const RunConfig& config_;
  const EmbeddingStore& store_;
  Estimator estimator_;
  std::map<std::string, ClassifierEnsemble> ensembles_;
};

std::string estimate_name(Estimator e, Setting s) {
  return fmt::format("{}_{}", to_string(e), to_string(s));
}

EstimateReport read_estimates(const RunConfig& config, Estimator e, Setting s) {
  const fs::path path = config.output_dir / "estimates" / (estimate_name(e, s) + ".tsv");
  if (!fs::exists(path)) {
    throw DataError(fmt::format("missing estimate report {}; run estimate first", path.string()));
  }
  return parse_estimate_report(read_file(path));
}

FrequencyTable human_table(const RunConfig& config, const EmbeddingStore& store,
                           std::span<const AnnotationRecord> annotations, Setting s) {
  auto table = frequency_from_annotations(annotations, store, s, attribute_ids(config), 2,
                                          config.model_tag);
  table.label = config.label;
  return table;
}

FrequencyTable estimate_table(const RunConfig& config, Estimator e, Setting s) {
  auto table = frequency_from_estimates(read_estimates(config, e, s), s, attribute_ids(config), 2);
  table.label = config.label;
  return table;
}

std::string cell_or_dash(const std::optional<double>& v) {
  return v ? format_real(*v) : "-";
}

std::vector<fs::path> sorted_files(const fs::path& dir, std::string_view suffix) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() >= suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string stem_of(const fs::path& p, std::string_view suffix) {
  std::string name = p.filename().string();
  return name.substr(0, name.size() - suffix.size());
}

}  // namespace

std::vector<fs::path> cmd_prompts(const RunConfig& config) {
  const auto& sets = config.sets;
  std::vector<fs::path> written;
  const auto neutral = build_neutral_prompts(sets.genders, sets.contexts);
  const auto expl = build_explicit_prompts(sets.genders, sets.attributes, sets.contexts);

  written.push_back(write_output(
      config, "prompts/neutral.jsonl",
      header_line(config, {{"format", "gepprompts/1"}, {"setting", "neutral"},
                           {"count", neutral.size()}}) +
          prompt_manifest_body(neutral)));
  written.push_back(write_output(
      config, "prompts/explicit.jsonl",
      header_line(config, {{"format", "gepprompts/1"}, {"setting", "explicit"},
                           {"count", expl.size()}}) +
          prompt_manifest_body(expl)));

  std::string body;
  std::size_t count = 0;
  for (const auto& attribute : sets.attributes) {
    const auto s = build_training_sentences(sets.training_genders, attribute,
                                            sets.training_contexts);
    count += s.positives.size() + s.negatives.size();
    body += training_manifest_body(s);
  }
  written.push_back(write_output(
      config, "prompts/training.jsonl",
      header_line(config, {{"format", "gepsentences/1"},
                           {"attributes", sets.attributes.size()},
                           {"count", count}}) +
          body));
  return written;
}

std::vector<fs::path> cmd_train(const RunConfig& config) {
  const auto store = load_store(config);
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < config.sets.attributes.size(); ++i) {
    const auto& attribute = config.sets.attributes[i];
    const auto sentences = build_training_sentences(config.sets.training_genders, attribute,
                                                    config.sets.training_contexts);
    TrainerConfig trainer = config.trainer;
    trainer.base_seed = derive_seed(config.seed, "train", i);
    const auto ensemble = train_ensemble(sentences, store, trainer);
    const fs::path base = ensemble_base(config, attribute.id);
    write_ensemble(ensemble, base, config.header_fields());
    written.push_back(manifest_path(base));
    written.push_back(matrix_path(base));
  }
  return written;
}

std::vector<fs::path> cmd_estimate(const RunConfig& config) {
  const auto store = load_store(config);
  const int genders = static_cast<int>(config.sets.genders.indicators.size());
  std::vector<fs::path> written;

  for (Estimator e : config.estimators) {
    Scorer scorer(config, store, e);
    for (Setting s : config.settings) {
      EstimateReport report;
      report.estimator = e;
      for (int g = 1; g <= genders; ++g) {
        for (const auto& attribute : config.sets.attributes) {
          GroupFilter filter{g, s, std::nullopt, std::nullopt, config.model_tag};
          if (s == Setting::kExplicit) filter.attribute_id = attribute.id;
          const auto group = select_group(store, filter);
          const auto scores = scorer.scores(attribute.id, group);
          report.rows.push_back({s, g, attribute.id, mean(scores), group.size()});
          for (std::size_t k = 0; k < scores.size(); ++k) {
            report.image_scores.push_back({group.ids[k], attribute.id, scores[k]});
          }
        }
      }
      const std::string name = estimate_name(e, s);
      written.push_back(write_output(config, "estimates/" + name + ".tsv",
                                     format_estimate_report(report, config.preamble())));
      written.push_back(write_output(config, "estimates/" + name + "_images.tsv",
                                     format_image_scores(report, config.preamble())));
    }
  }

  if (config.clipscore) {
    std::string out = "# gepclipscore/1\n";
    for (const auto& line : config.preamble()) out += line + "\n";
    out += fmt::format("# multiplier={}\n", format_real(config.clipscore_multiplier));
    out += "setting\tgender_index\tclipscore\tz\n";
    for (Setting s : config.settings) {
      double total = 0.0;
      std::size_t n = 0;
      for (int g = 1; g <= genders; ++g) {
        std::vector<GroupFilter> filters;
        if (s == Setting::kNeutral) {
          filters.push_back({g, s, std::nullopt, std::nullopt, config.model_tag});
        } else {
          for (const auto& a : config.sets.attributes) {
            filters.push_back({g, s, std::nullopt, a.id, config.model_tag});
          }
        }
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& filter : filters) {
          const auto group = select_group(store, filter);
          for (std::size_t k = 0; k < group.size(); ++k) {
            const auto& h = store.header(group.rows[k]);
            if (!h.meta.context_index) {
              throw DataError(fmt::format("image '{}' has no context index", h.id));
            }
            const std::string prompt = prompt_text_for(
                config.sets, g, filter.attribute_id, *h.meta.context_index);
            sum += clipscore(store.text_vector(prompt), group_from_ids(store, {h.id}), store,
                             config.clipscore_multiplier);
            ++count;
          }
        }
        out += fmt::format("{}\t{}\t{}\t{}\n", to_string(s), g,
                           format_real(sum / static_cast<double>(count)), count);
        total += sum;
        n += count;
      }
      out += fmt::format("{}\tall\t{}\t{}\n", to_string(s),
                         format_real(total / static_cast<double>(n)), n);
    }
    written.push_back(write_output(config, "estimates/clipscore.tsv", out));
  }
  return written;
}

std::vector<fs::path> cmd_score(const RunConfig& config) {
  std::vector<fs::path> written;
  for (const auto& path : config.frequency_tables) {
    const auto table = parse_frequency_table(read_file(path));
    const auto result = compute_gep(table);
    written.push_back(write_output(
        config, "scores/fixture_" + path.stem().string() + ".gep.tsv",
        format_gep_result(result, config.preamble())));
  }
  if (config.store) {
    const auto store = load_store(config);
    std::vector<AnnotationRecord> annotations;
    if (config.annotations) annotations = annotations_in_store(config, store);
    for (Setting s : config.settings) {
      std::vector<std::pair<std::string, FrequencyTable>> tables;
      if (config.annotations) {
        tables.emplace_back(std::string("human"), human_table(config, store, annotations, s));
      }
      for (Estimator e : config.estimators) {
        tables.emplace_back(std::string(to_string(e)), estimate_table(config, e, s));
      }
      for (const auto& [source, table] : tables) {
        const std::string name = fmt::format("scores/{}_{}", source, to_string(s));
        written.push_back(write_output(config, name + ".freq.tsv",
                                       format_frequency_table(table, config.preamble())));
        written.push_back(write_output(config, name + ".gep.tsv",
                                       format_gep_result(compute_gep(table), config.preamble())));
      }
    }
  }
  if (written.empty()) {
    throw ConfigError("nothing to score: configure frequency_tables or a store");
  }
  return written;
}

std::vector<fs::path> cmd_artificial(const RunConfig& config) {
  const auto store = load_store(config);
  const auto annotations = annotations_in_store(config, store);
  const auto pools = pools_from_annotations(annotations, attribute_ids(config));
  const auto dataset =
      build_dataset(pools, config.scales, config.per_scale, config.z,
                    derive_seed(config.seed, "artificial"), config.model_tag.value_or(config.label));
  for (const auto& s : dataset.skipped) {
    std::cerr << fmt::format("warning: skipped {} target {}: {}\n", s.attribute_id,
                             format_real(s.target), s.reason);
  }
  return {write_output(config, "artificial/dataset.jsonl",
                       format_dataset(dataset, config.header_fields()))};
}

std::vector<fs::path> cmd_eval(const RunConfig& config) {
  std::vector<fs::path> written;
  if (!config.store) throw ConfigError("run config names no embedding store");
  const auto store = load_store(config);

  auto report_text = [&](const CorrelationReport& r, const std::vector<std::string>& extra) {
    auto preamble = config.preamble();
    preamble.insert(preamble.end(), extra.begin(), extra.end());
    return format_correlation_report(r, preamble);
  };

  if (config.annotations) {
    const auto annotations = annotations_in_store(config, store);

    for (Setting s : config.settings) {
      const auto human = gep_vector(human_table(config, store, annotations, s));
      for (Estimator e : config.estimators) {
        const auto predicted = gep_vector(estimate_table(config, e, s));
        const auto r = correlate(predicted, human);
        written.push_back(write_output(
            config, fmt::format("eval/vector_{}.tsv", estimate_name(e, s)),
            report_text(r, {fmt::format("# estimator={}", to_string(e)),
                            fmt::format("# setting={}", to_string(s))})));
      }
    }

    for (Estimator e : config.estimators) {
      Scorer scorer(config, store, e);
      std::string out = "# gepauc/1\n";
      for (const auto& line : config.preamble()) out += line + "\n";
      out += fmt::format("# estimator={}\n", to_string(e));
      out += "attribute\tauc\tpositives\tnegatives\n";
      double sum = 0.0;
      std::size_t defined = 0;
      for (const auto& id : attribute_ids(config)) {
        std::vector<std::string> ids;
        std::vector<int> labels;
        for (const auto& a : annotations) {
          if (a.attribute_id != id) continue;
          ids.push_back(a.image_id);
          labels.push_back(a.resolved_label());
        }
        const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
        std::optional<double> auc;
        if (pos > 0 && pos < labels.size()) {
          auc = roc_auc(scorer.scores(id, group_from_ids(store, ids)), labels);
          sum += *auc;
          ++defined;
        }
        out += fmt::format("{}\t{}\t{}\t{}\n", id, cell_or_dash(auc), pos, labels.size() - pos);
      }
      out += fmt::format("mean\t{}\t-\t-\n",
                         defined ? format_real(sum / static_cast<double>(defined)) : "-");
      written.push_back(write_output(config, fmt::format("eval/auc_{}.tsv", to_string(e)), out));
    }

    std::vector<std::vector<std::optional<int>>> ratings;
    for (const auto& a : annotations) {
      ratings.emplace_back(a.worker_labels.begin(), a.worker_labels.end());
    }
    std::optional<double> alpha;
    try {
      alpha = krippendorff_alpha(ratings);
    } catch (const DegenerateError&) {
    }
    std::string out = "# gepagree/1\n";
    for (const auto& line : config.preamble()) out += line + "\n";
    out += "metric\tvalue\n";
    out += fmt::format("krippendorff_alpha\t{}\nitems\t{}\n", cell_or_dash(alpha), ratings.size());
    written.push_back(write_output(config, "eval/agreement.tsv", out));
  }

  std::optional<fs::path> dataset_path = config.artificial_dataset;
  if (!dataset_path && fs::exists(config.output_dir / "artificial" / "dataset.jsonl")) {
    dataset_path = config.output_dir / "artificial" / "dataset.jsonl";
  }
  if (dataset_path) {
    const auto dataset = parse_dataset(read_file(*dataset_path));
    for (Estimator e : config.estimators) {
      Scorer scorer(config, store, e);
      const auto r = evaluate_on_dataset(
          dataset,
          [&](const std::string& id, const ImageGroup& g) { return scorer.freq(id, g); }, store,
          config.stratified);
      written.push_back(write_output(
          config, fmt::format("eval/artificial_{}.tsv", to_string(e)),
          report_text(r, {fmt::format("# estimator={}", to_string(e)),
                          fmt::format("# examples={}", dataset.examples.size())})));
    }
  }

  if (written.empty()) {
    throw ConfigError("nothing to evaluate: configure annotations or an artificial dataset");
  }
  return written;
}

std::vector<fs::path> cmd_report(const RunConfig& config) {
  std::string rows;
  for (const auto& path : sorted_files(config.output_dir / "scores", ".gep.tsv")) {
    const auto r = parse_gep_result(read_file(path));
    rows += fmt::format("gep\t{}\t{}\n", stem_of(path, ".gep.tsv"), format_real(r.score));
  }
  const fs::path eval_dir = config.output_dir / "eval";
  for (const std::string prefix : {"vector_", "artificial_"}) {
    for (const auto& path : sorted_files(eval_dir, ".tsv")) {
      const std::string stem = stem_of(path, ".tsv");
      if (stem.rfind(prefix, 0) != 0) continue;
      const auto r = parse_correlation_report(read_file(path));
      rows += fmt::format("tau/mcc\t{}\t{}\n", stem, tau_mcc_cell(r));
    }
  }
  for (const auto& path : sorted_files(eval_dir, ".tsv")) {
    const std::string stem = stem_of(path, ".tsv");
    if (stem.rfind("auc_", 0) != 0 && stem != "agreement") continue;
    for (const auto& line : split_lines(read_file(path))) {
      const auto f = split(line, '\t');
      if (f.size() >= 2 && (f[0] == "mean" || f[0] == "krippendorff_alpha")) {
        rows += fmt::format("{}\t{}\t{}\n", f[0] == "mean" ? "auc" : "alpha", stem, f[1]);
      }
    }
  }
  const fs::path clip = config.output_dir / "estimates" / "clipscore.tsv";
  if (fs::exists(clip)) {
    for (const auto& line : split_lines(read_file(clip))) {
      const auto f = split(line, '\t');
      if (f.size() == 4 && f[1] == "all") rows += fmt::format("clipscore\t{}\t{}\n", f[0], f[2]);
    }
  }
  if (rows.empty()) {
    throw DataError(fmt::format("no results under {} to report", config.output_dir.string()));
  }
  std::string out = "# gepreport/1\n";
  for (const auto& line : config.preamble()) out += line + "\n";
  out += "kind\tname\tvalue\n" + rows;
  std::cout << out;
  return {write_output(config, "report.tsv", out)};
}

int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::kConfig:
      return 2;
    case ErrorClass::kData:
      return 3;
    case ErrorClass::kDegenerate:
      return 4;
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"gepkit: attribute-level presentation differences between image groups"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "Run config JSON file")->envname("GEPKIT_CONFIG");

  using Command = std::vector<fs::path> (*)(const RunConfig&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"prompts", "Write neutral, explicit and training-sentence manifests", cmd_prompts},
      {"train", "Train one classifier ensemble per attribute", cmd_train},
      {"estimate", "Estimate attribute frequencies with each configured estimator", cmd_estimate},
      {"score", "Compute GEP vectors and scores", cmd_score},
      {"eval-corr", "Correlate estimated differences with references", cmd_eval},
      {"artificial", "Build an artificial difference dataset", cmd_artificial},
      {"report", "Summarize scores and evaluations", cmd_report},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) subs.push_back(app.add_subcommand(name, help));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (config_path.empty()) {
      throw ConfigError("no run config: pass --config or set GEPKIT_CONFIG");
    }
    const RunConfig config = load_run_config(config_path);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const auto written = std::get<2>(commands[i])(config);
      if (std::get<0>(commands[i]) != "report") {
        for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "gepkit: " << e.what() << "\n";
    return exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "gepkit: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gepkit
