// Copyright 2026 The captune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "captune/pipeline/stages.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "captune/data/augment.hpp"
#include "captune/data/filter.hpp"
#include "captune/data/toy_corpus.hpp"
#include "captune/data/translate.hpp"
#include "captune/evalkit/metrics.hpp"
#include "captune/evalkit/report.hpp"
#include "captune/model/encoder.hpp"
#include "captune/numcore/rng.hpp"
#include "captune/select/select.hpp"
#include "captune/trainer/trainer.hpp"
#include "captune/util/io.hpp"
#include "json.hpp"

namespace captune::pipeline {

namespace {

using evalkit::format_number;

std::vector<std::string> lineage_comments(const model::Lineage& lineage) {
  std::vector<std::string> out;
  for (const auto& [k, v] : lineage) out.push_back(k + "=" + v);
  return out;
}

std::string key_values(const model::Lineage& lineage) {
  std::string out;
  for (const auto& [k, v] : lineage) out += k + "=" + v + "\n";
  return out;
}

fs::path sibling(const fs::path& p, std::string_view suffix) {
  fs::path out = p;
  out.replace_filename(p.stem().string() + std::string(suffix));
  return out;
}

fs::path meta_path(const fs::path& dataset) {
  fs::path out = dataset;
  out += ".meta.json";
  return out;
}

/// Dataset plus a sidecar naming the producing stage, lineage and inputs.
std::vector<fs::path> write_dataset(const data::Dataset& ds, const fs::path& out,
                                    const PipelineConfig& cfg, std::string_view stage,
                                    const std::vector<fs::path>& inputs) {
  data::save_dataset(ds, out);
  nlohmann::json meta;
  meta["stage"] = stage;
  meta["lineage"] = lineage_of(cfg);
  meta["records"] = ds.size();
  nlohmann::json in = nlohmann::json::array();
  for (const auto& p : inputs) {
    in.push_back({{"file", p.filename().string()}, {"sha256", util::sha256_hex(util::read_file(p))}});
  }
  meta["inputs"] = in;
  util::write_file(meta_path(out), meta.dump(2) + "\n");
  return {out, meta_path(out)};
}

std::size_t count_split(const data::Dataset& ds, data::Split s) { return ds.indices(s).size(); }

std::size_t caption_count(const data::Dataset& ds) {
  std::size_t n = 0;
  for (const auto& r : ds.records()) n += r.captions.size();
  return n;
}

std::unique_ptr<data::Translator> make_translator(const PipelineConfig& cfg) {
  if (!cfg.translate_command.empty()) {
    return std::make_unique<data::CommandTranslator>(cfg.translate_command);
  }
  return std::make_unique<data::PseudoTranslator>(stage_seed(cfg, "translate"),
                                                  std::vector<std::string>{cfg.target_lang});
}

std::unique_ptr<data::CaptionProvider> make_provider(const PipelineConfig& cfg) {
  if (!cfg.augment_command.empty()) {
    return std::make_unique<data::CommandCaptionProvider>(cfg.augment_command);
  }
  return std::make_unique<data::TemplateCaptionProvider>(
      data::ToyWorld::make(cfg.toy, stage_seed(cfg, "gen-toy")), stage_seed(cfg, "augment"),
      cfg.hallucination_rate);
}

std::vector<std::string> train_texts(const data::Dataset& ds) {
  std::vector<std::string> texts;
  for (std::size_t i : ds.indices(data::Split::kTrain)) {
    for (const auto& c : ds[i].captions) texts.push_back(c.text);
  }
  return texts;
}

/// Vocabulary for the scorer: train captions, the template provider's
/// phrasing, and their translations into the target language.
model::Vocabulary scorer_vocabulary(const PipelineConfig& cfg, const data::Dataset& ds) {
  std::vector<std::string> texts = train_texts(ds);
  if (cfg.augment_enabled && cfg.augment_command.empty()) {
    for (const auto& p : data::TemplateCaptionProvider::prefixes()) {
      texts.push_back(data::fill_template(p, "", ""));
    }
  }
  if (cfg.translate_enabled) {
    const auto tr = make_translator(cfg);
    const std::vector<std::string> src = texts;
    const auto out = tr->translate_all(src, "en", cfg.target_lang);
    texts.insert(texts.end(), out.begin(), out.end());
  }
  return model::Vocabulary::build(texts);
}

model::Model load(const fs::path& p) { return model::load_model(p).model; }

std::string params_text(const model::Model& m, const trainer::TrainConfig& tc,
                        const trainer::TrainResult& r, const model::Lineage& lineage) {
  std::size_t total = m.params.total_scalars();
  if (m.adapters) total += lora::adapter_parameter_count(*m.adapters);
  std::string out = key_values(lineage);
  out += "mode=" + std::string(model::train_mode_name(tc.mode)) + "\n";
  out += "total_scalars=" + std::to_string(total) + "\n";
  out += "trainable_scalars=" + std::to_string(r.trainable_scalars) + "\n";
  out += "trainable_percent=" +
         format_number(100.0 * static_cast<double>(r.trainable_scalars) /
                       static_cast<double>(total)) +
         "\n";
  out += "optimizer_state_scalars=" + std::to_string(r.optimizer_state_scalars) + "\n";
  return out;
}

StageResult train_model(const PipelineConfig& cfg, std::string_view stage,
                        trainer::TrainConfig tc, const data::Dataset& ds, model::Model m,
                        const fs::path& out) {
  if (tc.mode == model::TrainMode::kLitLora && !m.adapters) {
    m.adapters = lora::make_adapter_set(m.params, tc.lora, stage_seed(cfg, "lora"));
  }
  trainer::TrainOptions opts;
  opts.power_w = cfg.power_w;
  opts.intensity = cfg.intensity;
  const trainer::TrainResult r = trainer::train(tc, ds, m, opts);
  const model::Lineage lineage = lineage_of(cfg);

  StageResult res;
  res.stage = std::string(stage);
  model::save_model(out, m, lineage);
  const fs::path log = sibling(out, ".log.csv");
  const fs::path energy = sibling(out, ".energy.txt");
  const fs::path params = sibling(out, ".params.txt");
  util::write_file(log, r.log.to_csv(lineage_comments(lineage)));
  util::write_file(energy, key_values(lineage) + trainer::energy_text(r.energy));
  util::write_file(params, params_text(m, tc, r, lineage));
  res.artifacts = {out, log, energy, params};

  std::ostringstream s;
  s << stage << ": " << r.log.steps.size() << " steps, mode "
    << model::train_mode_name(tc.mode) << ", " << r.trainable_scalars << " trainable scalars";
  if (!r.log.steps.empty()) {
    s << ", loss " << format_number(r.log.steps.front().loss) << " -> "
      << format_number(r.log.steps.back().loss);
  }
  s << " -> " << out.string();
  res.summary = s.str();
  return res;
}

template <class F>
StageResult guarded(std::string_view stage, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(std::string(stage), e.kind(), e.what());
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), ErrorKind::kInternal, e.what());
  }
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

std::map<std::string, std::string> lineage_from_comments(const std::vector<std::string>& comments) {
  std::map<std::string, std::string> out;
  for (const auto& c : comments) {
    const auto eq = c.find('=');
    if (eq != std::string::npos) out[c.substr(0, eq)] = c.substr(eq + 1);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"gen-toy", "filter", "augment", "translate",
                                              "select",  "train",  "eval",    "report",
                                              "pipeline"};
  return names;
}

std::uint64_t stage_seed(const PipelineConfig& cfg, std::string_view purpose) {
  return numcore::mix_seed(cfg.seed, purpose);
}

model::Lineage lineage_of(const PipelineConfig& cfg) {
  return {{"config_hash", config_hash(cfg)}, {"seed", std::to_string(cfg.seed)}};
}

StageResult run_gen_toy(const PipelineConfig& cfg, const fs::path& out) {
  return guarded("gen-toy", [&] {
    const data::ToyCorpus corpus = data::generate_toy_corpus(cfg.toy, stage_seed(cfg, "gen-toy"));
    StageResult res;
    res.stage = "gen-toy";
    res.artifacts = write_dataset(corpus.dataset, out, cfg, "gen-toy", {});
    std::string truth = "id,cluster,modifier,corrupted\n";
    std::size_t corrupted = 0;
    for (std::size_t i = 0; i < corpus.dataset.size(); ++i) {
      truth += corpus.dataset[i].id + "," + std::to_string(corpus.truth.cluster[i]) + "," +
               std::to_string(corpus.truth.modifier[i]) + "," +
               (corpus.truth.corrupted[i] ? "1" : "0") + "\n";
      corrupted += corpus.truth.corrupted[i] ? 1 : 0;
    }
    const fs::path truth_path = sibling(out, ".truth.csv");
    util::write_file(truth_path, truth);
    res.artifacts.push_back(truth_path);
    res.summary = "gen-toy: " + std::to_string(corpus.dataset.size()) + " records (" +
                  std::to_string(count_split(corpus.dataset, data::Split::kTrain)) + " train, " +
                  std::to_string(count_split(corpus.dataset, data::Split::kTest)) + " test), " +
                  std::to_string(corrupted) + " corrupted -> " + out.string();
    return res;
  });
}

StageResult run_filter(const PipelineConfig& cfg, const fs::path& in, const fs::path& model_path,
                       const fs::path& out) {
  return guarded("filter", [&] {
    const data::Dataset ds = data::load_dataset(in);
    const model::Model m = load(model_path);
    const data::Dataset kept =
        data::clip_score_filter(ds, m, cfg.filter_threshold, {data::Split::kTrain});
    StageResult res;
    res.stage = "filter";
    res.artifacts = write_dataset(kept, out, cfg, "filter", {in, model_path});
    res.summary = "filter: kept " + std::to_string(kept.size()) + " of " +
                  std::to_string(ds.size()) + " records (threshold " +
                  format_number(cfg.filter_threshold) + ") -> " + out.string();
    return res;
  });
}

StageResult run_augment(const PipelineConfig& cfg, const fs::path& in, const fs::path& out) {
  return guarded("augment", [&] {
    const data::Dataset ds = data::load_dataset(in);
    const auto provider = make_provider(cfg);
    const data::AugmentResult r =
        data::augment_captions(ds, *provider, cfg.augment_k, {data::Split::kTrain});
    StageResult res;
    res.stage = "augment";
    res.artifacts = write_dataset(r.dataset, out, cfg, "augment", {in});
    res.summary = "augment: " + std::to_string(caption_count(ds)) + " -> " +
                  std::to_string(caption_count(r.dataset)) + " captions, " +
                  std::to_string(r.failures) + " failures -> " + out.string();
    return res;
  });
}

StageResult run_translate(const PipelineConfig& cfg, const fs::path& in, const fs::path& out) {
  return guarded("translate", [&] {
    const data::Dataset ds = data::load_dataset(in);
    const auto tr = make_translator(cfg);
    data::TranslateOptions opts;
    opts.target_lang = cfg.target_lang;
    opts.mode = cfg.translate_mode;
    const data::Dataset t = data::translate(ds, *tr, opts);
    StageResult res;
    res.stage = "translate";
    res.artifacts = write_dataset(t, out, cfg, "translate", {in});
    res.summary = "translate: " + std::to_string(caption_count(t)) + " captions now in '" +
                  cfg.target_lang + "' via " + tr->id() + " -> " + out.string();
    return res;
  });
}

StageResult run_select(const PipelineConfig& cfg, const fs::path& in, const fs::path& model_path,
                       const fs::path& out) {
  return guarded("select", [&] {
    const data::Dataset ds = data::load_dataset(in);
    const model::Model m = load(model_path);
    const select::SelectionResult r =
        select::select_captions(ds, m, cfg.select, {data::Split::kTrain});
    StageResult res;
    res.stage = "select";
    res.artifacts = write_dataset(r.dataset, out, cfg, "select", {in, model_path});
    std::string csv;
    for (const auto& c : lineage_comments(lineage_of(cfg))) csv += "# " + c + "\n";
    csv += "strategy,records,captions_before,captions_after,removed,fallbacks\n";
    const auto& st = r.stats;
    csv += std::string(select::strategy_name(cfg.select.strategy)) + "," +
           std::to_string(st.records) + "," + std::to_string(st.captions_before) + "," +
           std::to_string(st.captions_after) + "," +
           std::to_string(st.captions_before - st.captions_after) + "," +
           std::to_string(st.fallbacks) + "\n";
    const fs::path summary = sibling(out, ".selection.csv");
    util::write_file(summary, csv);
    res.artifacts.push_back(summary);
    res.summary = "select: " + std::string(select::strategy_name(cfg.select.strategy)) +
                  " kept " + std::to_string(st.captions_after) + " of " +
                  std::to_string(st.captions_before) + " train captions -> " + out.string();
    return res;
  });
}

StageResult run_train(const PipelineConfig& cfg, const fs::path& in,
                      const std::optional<fs::path>& model_in, const fs::path& out) {
  return guarded("train", [&] {
    const data::Dataset ds = data::load_dataset(in);
    model::Model m;
    if (model_in) {
      m = load(*model_in);
    } else {
      const auto texts = train_texts(ds);
      m = model::make_model(model::Vocabulary::build(texts), cfg.encoder, stage_seed(cfg, "init"));
    }
    trainer::TrainConfig tc = cfg.train;
    tc.seed = stage_seed(cfg, "train");
    return train_model(cfg, "train", tc, ds, std::move(m), out);
  });
}

StageResult run_eval(const PipelineConfig& cfg, const fs::path& in, const fs::path& model_path,
                     const fs::path& out, const std::string& run_label) {
  return guarded("eval", [&] {
    const data::Dataset ds = data::load_dataset(in);
    const model::Model m = load(model_path);
    const evalkit::RetrievalEvaluation ev = evalkit::evaluate_retrieval(ds, m, data::Split::kTest);
    std::set<std::string> langs;
    for (std::size_t i : ds.indices(data::Split::kTest)) {
      for (const auto& c : ds[i].captions) langs.insert(c.lang);
    }
    std::string label = "test:";
    for (const auto& l : langs) label += (label.back() == ':' ? "" : "+") + l;
    const std::vector<evalkit::RetrievalRow> rows{{run_label, label, ev.text_to_image},
                                                  {run_label, label, ev.image_to_text}};
    util::write_file(out, evalkit::retrieval_csv(rows, lineage_comments(lineage_of(cfg))));
    StageResult res;
    res.stage = "eval";
    res.artifacts = {out};
    res.summary = "eval: " + run_label + " " + label + " txt2img mean recall " +
                  format_number(ev.text_to_image.mean_recall) + ", img2txt " +
                  format_number(ev.image_to_text.mean_recall) + " -> " + out.string();
    return res;
  });
}

StageResult run_report(const fs::path& run_dir) {
  return guarded("report", [&] {
    const fs::path eval_path = run_dir / "eval.csv";
    const fs::path base_path = run_dir / "eval_baseline.csv";
    const fs::path energy_path = run_dir / "final.energy.txt";
    const fs::path params_path = run_dir / "final.params.txt";
    if (!fs::exists(eval_path)) {
      throw IoError("report: missing artifacts in " + run_dir.string() + ": eval.csv");
    }
    struct Source {
      std::string file;
      std::map<std::string, std::string> lineage;
    };
    std::vector<Source> sources;

    std::vector<std::string> comments;
    const auto trained = evalkit::parse_retrieval_csv(util::read_file(eval_path), &comments);
    sources.push_back({"eval.csv", lineage_from_comments(comments)});
    std::vector<evalkit::RetrievalRow> baseline;
    if (fs::exists(base_path)) {
      comments.clear();
      baseline = evalkit::parse_retrieval_csv(util::read_file(base_path), &comments);
      sources.push_back({"eval_baseline.csv", lineage_from_comments(comments)});
    }
    std::map<std::string, std::string> energy;
    std::map<std::string, std::string> params;
    if (fs::exists(energy_path)) {
      energy = parse_key_values(util::read_file(energy_path));
      sources.push_back({"final.energy.txt", energy});
    }
    if (fs::exists(params_path)) {
      params = parse_key_values(util::read_file(params_path));
      sources.push_back({"final.params.txt", params});
    }
    for (const auto& s : sources) {
      for (const char* key : {"config_hash", "seed"}) {
        const auto a = sources.front().lineage.find(key);
        const auto b = s.lineage.find(key);
        const std::string va = a == sources.front().lineage.end() ? "<none>" : a->second;
        const std::string vb = b == s.lineage.end() ? "<none>" : b->second;
        if (va != vb) {
          throw IntegrityError("report: lineage mismatch on " + std::string(key) + ": " +
                               sources.front().file + " has " + va + ", " + s.file + " has " +
                               vb);
        }
      }
    }
    const auto& lin = sources.front().lineage;
    auto lin_value = [&](const char* k) {
      auto it = lin.find(k);
      return it == lin.end() ? std::string("<none>") : it->second;
    };

    auto key_of = [](const evalkit::RetrievalRow& r) {
      return r.dataset + "/" + std::string(evalkit::direction_name(r.report.direction));
    };
    std::map<std::string, const evalkit::RetrievalRow*> base_by_key;
    for (const auto& r : baseline) base_by_key[key_of(r)] = &r;

    const bool with_delta = !baseline.empty();
    std::vector<std::string> header{"Dataset", "Direction", "R@1", "R@5", "R@10", "Mean recall"};
    if (with_delta) {
      header.push_back("Baseline mean");
      header.push_back("Delta");
    }
    std::vector<std::vector<std::string>> rows;
    std::string csv;
    for (const auto& c : lineage_comments(model::Lineage(lin.begin(), lin.end()))) {
      csv += "# " + c + "\n";
    }
    csv += with_delta ? "dataset,direction,metric,baseline,trained,delta\n"
                      : "dataset,direction,metric,trained\n";
    std::vector<std::string> labels;
    std::vector<double> values;
    static const char* kMetrics[] = {"r1", "r5", "r10", "mean_recall"};
    for (const auto& r : trained) {
      const auto& rep = r.report;
      const std::string dir(evalkit::direction_name(rep.direction));
      std::vector<std::string> row{r.dataset, dir};
      for (double v : rep.recall) row.push_back(format_number(v));
      row.push_back(format_number(rep.mean_recall));
      const evalkit::RetrievalRow* b = nullptr;
      if (with_delta) {
        auto it = base_by_key.find(key_of(r));
        if (it == base_by_key.end()) {
          throw IntegrityError("report: baseline has no row for " + key_of(r));
        }
        b = it->second;
        row.push_back(format_number(b->report.mean_recall));
        row.push_back(format_number(rep.mean_recall - b->report.mean_recall));
      }
      rows.push_back(row);
      for (std::size_t m = 0; m < 4; ++m) {
        const double t = m < 3 ? rep.recall.at(m) : rep.mean_recall;
        csv += r.dataset + "," + dir + "," + kMetrics[m] + ",";
        if (b != nullptr) {
          const double bv = m < 3 ? b->report.recall.at(m) : b->report.mean_recall;
          csv += format_number(bv) + "," + format_number(t) + "," + format_number(t - bv) + "\n";
        } else {
          csv += format_number(t) + "\n";
        }
      }
      labels.push_back(r.dataset + " " + dir);
      values.push_back(b != nullptr ? rep.mean_recall - b->report.mean_recall : rep.mean_recall);
    }

    std::string md = "# Run report\n\n";
    md += "- config hash: `" + lin_value("config_hash") + "`\n";
    md += "- seed: " + lin_value("seed") + "\n\n";
    md += "## Retrieval\n\n" + evalkit::markdown_table(header, rows) + "\n";
    if (!energy.empty()) {
      md += "## Energy\n\n";
      std::vector<std::vector<std::string>> erows;
      for (const auto& [k, v] : energy) {
        if (k != "config_hash" && k != "seed") erows.push_back({k, v});
      }
      md += evalkit::markdown_table({"Quantity", "Value"}, erows) + "\n";
    }
    if (!params.empty()) {
      md += "## Parameters\n\n";
      std::vector<std::vector<std::string>> prows;
      for (const auto& [k, v] : params) {
        if (k != "config_hash" && k != "seed") prows.push_back({k, v});
      }
      md += evalkit::markdown_table({"Quantity", "Value"}, prows) + "\n";
    }

    const std::string title =
        with_delta ? "Mean recall delta (trained - baseline)" : "Mean recall";
    util::write_file(run_dir / "report.md", md);
    util::write_file(run_dir / "report.csv", csv);
    util::write_file(run_dir / "report.svg", evalkit::svg_bar_chart(title, labels, values));
    StageResult res;
    res.stage = "report";
    res.artifacts = {run_dir / "report.md", run_dir / "report.csv", run_dir / "report.svg"};
    std::ostringstream s;
    s << "report: " << trained.size() << " rows" << (with_delta ? " with baseline deltas" : "")
      << " -> " << (run_dir / "report.md").string();
    res.summary = s.str();
    return res;
  });
}

std::vector<StageResult> run_pipeline(const PipelineConfig& cfg, const fs::path& run_dir,
                                      const std::function<void(const StageResult&)>& on_stage) {
  validate(cfg);
  std::vector<StageResult> results;
  auto record = [&](StageResult r) {
    if (on_stage) on_stage(r);
    results.push_back(std::move(r));
  };
  guarded("pipeline", [&] {
    fs::create_directories(run_dir);
    util::write_file(run_dir / "config.txt",
                     "# config_hash=" + config_hash(cfg) + "\n" + canonical_text(cfg));
    return StageResult{};
  });

  fs::path current = run_dir / "corpus.jsonl";
  record(run_gen_toy(cfg, current));

  const fs::path scorer = run_dir / "scorer.ckpt";
  record(guarded("pretrain", [&] {
    const data::Dataset ds = data::load_dataset(current);
    model::Model m = model::make_model(scorer_vocabulary(cfg, ds), cfg.encoder,
                                       stage_seed(cfg, "init"));
    trainer::TrainConfig tc = cfg.train;
    tc.mode = model::TrainMode::kFull;
    tc.total_steps = cfg.pretrain_steps;
    tc.batch_size = cfg.pretrain_batch_size;
    tc.max_lr = cfg.pretrain_max_lr;
    tc.min_lr = cfg.pretrain_min_lr;
    tc.seed = stage_seed(cfg, "pretrain");
    return train_model(cfg, "pretrain", tc, ds, std::move(m), scorer);
  }));

  if (cfg.filter_enabled) {
    const fs::path next = run_dir / "filtered.jsonl";
    record(run_filter(cfg, current, scorer, next));
    current = next;
  }
  if (cfg.augment_enabled) {
    const fs::path next = run_dir / "augmented.jsonl";
    record(run_augment(cfg, current, next));
    current = next;
  }
  if (cfg.translate_enabled) {
    const fs::path next = run_dir / "translated.jsonl";
    record(run_translate(cfg, current, next));
    current = next;
  }
  if (cfg.select_enabled) {
    const fs::path next = run_dir / "selected.jsonl";
    record(run_select(cfg, current, scorer, next));
    current = next;
  }
  record(run_eval(cfg, current, scorer, run_dir / "eval_baseline.csv", "baseline"));
  record(run_train(cfg, current, scorer, run_dir / "final.ckpt"));
  record(run_eval(cfg, current, run_dir / "final.ckpt", run_dir / "eval.csv", "trained"));
  record(run_report(run_dir));
  return results;
}

}  // namespace captune::pipeline
