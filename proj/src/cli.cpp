#include "hact/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hact/errors.hpp"
#include "hact/io.hpp"
#include "hact/models.hpp"
#include "hact/pipeline.hpp"
#include "hact/synth.hpp"
#include "hact/train.hpp"

namespace hact::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Reads `--config` files as JSON: top-level keys are options of the main
/// command, nested objects are sections named after subcommands, e.g.
/// {"train": {"epochs": 10}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->count() > 0) {
        j[name] = opt->results().size() == 1 ? json(opt->results()[0]) : json(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) j[sub->get_name()] = json::parse(to_config(sub, default_also, false, ""));
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static void collect(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto sub = parents;
        sub.push_back(it.key());
        collect(*it, sub, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v, it.key()));
      } else {
        item.inputs.push_back(scalar(*it, it.key()));
      }
      out.push_back(std::move(item));
    }
  }

  static std::string scalar(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config key '" + key + "' must be a string, number, boolean or list");
  }
};

struct SynthArgs {
  std::uint64_t seed = 0;
  std::string out;
  std::string preset = "standard";
  int num_slides = -1, rois_per_slide = -1, min_size = -1, max_size = -1;
  double noise = -1;
  int jobs = 1;
};

struct BuildArgs {
  std::string in, out;
  BuildOptions options;
  std::string nuclei = "detect";
  std::string tg_features = "top24";
};

struct TrainArgs {
  std::string graphs, out;
  std::string variant = "hact";
  RunOptions run;
};

struct EvalArgs {
  std::string checkpoint, graphs, out;
  std::uint64_t fold_seed = 0;
  std::string partition = "test";
  SplitFractions fractions;
};

struct ReportArgs {
  std::string runs, out;
};

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw std::invalid_argument(flag + " is required");
}

int cmd_synth(const SynthArgs& a) {
  require(a.out, "--out");
  SynthConfig cfg;
  if (a.preset == "standard") {
    cfg = SynthConfig::standard(a.seed);
  } else if (a.preset == "hard") {
    cfg = SynthConfig::hard(a.seed);
  } else {
    throw std::invalid_argument("--preset must be 'standard' or 'hard'");
  }
  if (a.num_slides >= 0) cfg.num_slides = a.num_slides;
  if (a.rois_per_slide >= 0) cfg.rois_per_slide = a.rois_per_slide;
  if (a.min_size >= 0) cfg.min_size = a.min_size;
  if (a.max_size >= 0) cfg.max_size = a.max_size;
  if (a.noise >= 0) cfg.noise_level = a.noise;
  cfg.validate();
  const auto samples = generate_dataset(cfg, a.jobs);
  write_dataset(samples, cfg, a.out);
  std::printf("wrote %zu RoIs from %d slides to %s\n", samples.size(), cfg.num_slides, a.out.c_str());
  return kExitOk;
}

int cmd_build(BuildArgs a) {
  require(a.in, "--in");
  require(a.out, "--out");
  if (a.nuclei == "detect") {
    a.options.nuclei = NucleiSource::Detect;
  } else if (a.nuclei == "csv") {
    a.options.nuclei = NucleiSource::Csv;
  } else {
    throw std::invalid_argument("--nuclei must be 'detect' or 'csv'");
  }
  if (a.tg_features == "top24") {
    a.options.tissue_features = TissueFeatureMode::TopVariance;
  } else if (a.tg_features == "all") {
    a.options.tissue_features = TissueFeatureMode::All;
  } else {
    a.options.tissue_features = TissueFeatureMode::FromFile;
    a.options.feature_file = a.tg_features;
  }
  a.options.params.tg.validate();
  const auto summary = build_graphs(a.in, a.out, a.options);
  for (const auto& w : summary.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("built %zu HACT graphs in %s\n", summary.rois, a.out.c_str());
  return kExitOk;
}

int cmd_train(TrainArgs a) {
  require(a.graphs, "--graphs");
  require(a.out, "--out");
  a.run.variant = parse_variant(a.variant);
  const auto data = load_graph_dir(a.graphs);
  const auto outcome = run_training(data, a.run, a.out);
  std::printf("%s fold %llu: best epoch %d of %d, val wF1 %.4f, test wF1 %.4f\n",
              std::string(variant_name(a.run.variant)).c_str(), static_cast<unsigned long long>(a.run.fold_seed),
              outcome.best_epoch, outcome.epochs_run, outcome.val_weighted_f1, outcome.test_weighted_f1);
  return kExitOk;
}

int cmd_eval(const EvalArgs& a) {
  require(a.checkpoint, "--checkpoint");
  require(a.graphs, "--graphs");
  Model model = model_from_checkpoint(read_text_file(a.checkpoint));
  const auto data = load_graph_dir(a.graphs);
  std::vector<std::size_t> indices;
  if (a.partition == "all") {
    for (std::size_t i = 0; i < data.graphs.size(); ++i) indices.push_back(i);
  } else {
    const auto split = split_by_slide(data.slide_ids(), a.fractions, a.fold_seed);
    if (a.partition == "test") {
      indices = split.test;
    } else if (a.partition == "val") {
      indices = split.val;
    } else if (a.partition == "train") {
      indices = split.train;
    } else {
      throw std::invalid_argument("--partition must be train, val, test or all");
    }
  }
  const std::string doc = evaluate_checkpoint(model, data, indices);
  if (a.out.empty()) {
    std::cout << doc;
  } else {
    write_text_file(a.out, doc);
  }
  return kExitOk;
}

int cmd_report(const ReportArgs& a) {
  require(a.runs, "--runs");
  const auto r = report_runs(a.runs);
  write_text_file(a.out.empty() ? fs::path(a.runs) / "report.json" : fs::path(a.out), r.json);
  std::cout << r.table;
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  configure_allocator();
  CLI::App app{"Hierarchical cell-to-tissue graph pipeline on synthetic histology"};
  app.name("hact");
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic RoI dataset");
  s->add_option("--seed", synth.seed, "Dataset seed");
  s->add_option("--out", synth.out, "Output directory");
  s->add_option("--preset", synth.preset, "standard or hard");
  s->add_option("--num-slides", synth.num_slides, "Override the number of slides");
  s->add_option("--rois-per-slide", synth.rois_per_slide, "Override RoIs per slide");
  s->add_option("--min-size", synth.min_size, "Minimum RoI side length");
  s->add_option("--max-size", synth.max_size, "Maximum RoI side length");
  s->add_option("--noise", synth.noise, "Noise level in [0, 1]");
  s->add_option("--jobs", synth.jobs, "Worker threads");

  BuildArgs build;
  auto* b = app.add_subcommand("build-graphs", "Build HACT graphs from RoI images");
  b->add_option("--in", build.in, "Directory with RoI PNGs and manifest.json");
  b->add_option("--out", build.out, "Output directory for .hact.json files");
  b->add_option("--jobs", build.options.jobs, "Worker threads");
  b->add_option("--knn-k", build.options.params.cg.k, "Neighbors per cell");
  b->add_option("--d-min-px", build.options.params.cg.d_min, "Maximum cell edge length in pixels");
  b->add_option("--sp-target", build.options.params.tg.target_superpixels, "Initial superpixel count");
  b->add_option("--sp-compactness", build.options.params.tg.slic_compactness, "Superpixel compactness");
  b->add_option("--sp-iterations", build.options.params.tg.slic_iterations, "Superpixel k-means iterations");
  b->add_option("--downscale", build.options.params.tg.downscale, "Superpixel downscale factor");
  b->add_option("--merge-threshold", build.options.params.tg.merge_threshold, "Merge distance threshold (z units)");
  b->add_option("--min-regions", build.options.params.tg.min_final_regions, "Minimum regions after merging");
  b->add_option("--nuclei", build.nuclei, "detect (segment the image) or csv (<roi>.nuclei.csv)");
  b->add_option("--tg-features", build.tg_features, "top24, all, or a tg_features.json to reuse");
  b->add_flag("--debug-labels", build.options.debug_labels, "Write 16-bit superpixel label maps");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model on one slide-level split");
  t->add_option("--variant", tr.variant, "cg, tg, concat or hact");
  t->add_option("--fold-seed", tr.run.fold_seed, "Seed of the slide-level split and initialization");
  t->add_option("--graphs", tr.graphs, "Directory of .hact.json files");
  t->add_option("--out", tr.out, "Run output directory");
  t->add_option("--epochs", tr.run.train.epochs, "Maximum epochs");
  t->add_option("--batch-size", tr.run.train.batch_size, "Graphs per batch");
  t->add_option("--lr", tr.run.train.lr, "Adam learning rate");
  t->add_option("--weight-decay", tr.run.train.weight_decay, "Weight decay");
  t->add_option("--patience", tr.run.train.patience, "Early-stopping patience in epochs");
  t->add_option("--train-frac", tr.run.fractions.train, "Fraction of slides for training");
  t->add_option("--val-frac", tr.run.fractions.val, "Fraction of slides for validation");
  t->add_option("--test-frac", tr.run.fractions.test, "Fraction of slides for testing");
  t->add_option("--hidden", tr.run.model.hidden, "GIN hidden width");
  t->add_option("--t-cg", tr.run.model.t_cg, "Cell-graph GIN layers");
  t->add_option("--t-tg", tr.run.model.t_tg, "Tissue-graph GIN layers");
  t->add_flag("--verbose", tr.run.verbose, "Log every epoch to stderr");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint.json from train");
  e->add_option("--graphs", ev.graphs, "Directory of .hact.json files");
  e->add_option("--fold-seed", ev.fold_seed, "Split seed used to select the partition");
  e->add_option("--partition", ev.partition, "train, val, test or all");
  e->add_option("--train-frac", ev.fractions.train, "Fraction of slides for training");
  e->add_option("--val-frac", ev.fractions.val, "Fraction of slides for validation");
  e->add_option("--test-frac", ev.fractions.test, "Fraction of slides for testing");
  e->add_option("--out", ev.out, "Write metrics JSON here instead of stdout");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Aggregate runs into mean and std per variant");
  r->add_option("--runs", rep.runs, "Directory searched recursively for metrics.json");
  r->add_option("--out", rep.out, "Aggregate JSON path (default <runs>/report.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (b->parsed()) return cmd_build(build);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_eval(ev);
    if (r->parsed()) return cmd_report(rep);
  } catch (const DivergenceError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitDivergence;
  } catch (const DataError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitData;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace hact::cli
