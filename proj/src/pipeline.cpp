#include "hact/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hact/errors.hpp"
#include "hact/features.hpp"
#include "hact/image.hpp"
#include "hact/io.hpp"
#include "hact/synth.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace hact {

namespace fs = std::filesystem;
using nlohmann::json;

void configure_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

struct RoiInput {
  std::string roi_id;
  std::string slide_id;
  std::optional<int> label;
  fs::path image;
};

std::vector<RoiInput> list_inputs(const fs::path& in) {
  if (!fs::is_directory(in)) throw DataError("input directory '" + in.string() + "' does not exist");
  std::vector<RoiInput> inputs;
  const fs::path manifest = in / "manifest.json";
  if (fs::exists(manifest)) {
    for (const auto& e : read_manifest(manifest)) {
      inputs.push_back({e.roi_id, e.slide_id, e.label, in / (e.roi_id + ".png")});
    }
  } else {
    for (const auto& entry : fs::directory_iterator(in)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png" &&
          entry.path().filename().string().find(".labels.") == std::string::npos) {
        const std::string stem = entry.path().stem().string();
        inputs.push_back({stem, stem, std::nullopt, entry.path()});
      }
    }
    std::sort(inputs.begin(), inputs.end(), [](const auto& a, const auto& b) { return a.roi_id < b.roi_id; });
  }
  if (inputs.empty()) throw DataError("no inputs found in '" + in.string() + "'");
  return inputs;
}

void write_label_map(const fs::path& path, const SuperpixelLabeling& labeling) {
  std::vector<std::uint16_t> values(labeling.labels.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<std::uint16_t>(std::min<std::uint32_t>(labeling.labels[i], 65535));
  }
  write_png16(path, labeling.width, labeling.height, values);
}

}  // namespace

std::vector<std::size_t> read_feature_selection(const fs::path& file) {
  try {
    const auto doc = json::parse(read_text_file(file));
    return doc.at("selected").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ParseError("feature selection file '" + file.string() + "': " + e.what());
  }
}

BuildSummary build_graphs(const fs::path& in, const fs::path& out, const BuildOptions& options) {
  const auto inputs = list_inputs(in);
  HactParams params = options.params;
  params.tg.selected_features.clear();  // full 45 + 2 columns first, selection below
  std::vector<HactGraph> graphs(inputs.size());
  std::vector<std::vector<std::string>> warnings(inputs.size());

  parallel_for(inputs.size(), options.jobs, [&](std::size_t i) {
    const auto& roi = inputs[i];
    const RgbImage image = read_png(roi.image);
    std::vector<EntityMask> nuclei;
    if (options.nuclei == NucleiSource::Csv) {
      const fs::path csv = roi.image.parent_path() / (roi.roi_id + ".nuclei.csv");
      nuclei = masks_from_nuclei(nuclei_from_csv(read_text_file(csv)), image.width, image.height);
    } else {
      nuclei = detect_nuclei(image);
    }
    if (nuclei.empty()) throw DataError("RoI '" + roi.roi_id + "': empty cell graph");
    auto built = build_hact(image, nuclei, params, roi.slide_id, roi.label);
    for (auto& w : built.warnings) warnings[i].push_back(roi.roi_id + ": " + w);
    if (options.debug_labels) write_label_map(out / (roi.roi_id + ".labels.png"), built.labeling);
    graphs[i] = std::move(built.graph);
  });

  BuildSummary summary;
  summary.rois = inputs.size();
  for (auto& w : warnings) summary.warnings.insert(summary.warnings.end(), w.begin(), w.end());
  switch (options.tissue_features) {
    case TissueFeatureMode::All: break;
    case TissueFeatureMode::FromFile: summary.selected_features = read_feature_selection(options.feature_file); break;
    case TissueFeatureMode::TopVariance: {
      std::size_t rows = 0;
      for (const auto& g : graphs) rows += g.tissue_graph.num_nodes();
      FeatureMatrix reference(rows, kSuperpixelFeatureCount + 2);
      std::size_t r = 0;
      for (const auto& g : graphs) {
        const auto& f = g.tissue_graph.features();
        for (std::size_t k = 0; k < f.rows(); ++k, ++r) std::copy(f.row(k).begin(), f.row(k).end(), reference.row(r).begin());
      }
      summary.selected_features = select_features_by_variance(reference);
      break;
    }
  }
  if (options.tissue_features != TissueFeatureMode::All) {
    for (auto& g : graphs) g.tissue_graph = select_tissue_features(g.tissue_graph, summary.selected_features);
  }

  fs::create_directories(out);
  parallel_for(inputs.size(), options.jobs,
               [&](std::size_t i) { write_hact_file(out / (inputs[i].roi_id + ".hact.json"), graphs[i]); });
  json names = json::array();
  for (const auto& n : tissue_feature_schema(summary.selected_features)) names.push_back(n);
  json sel = json::array();
  for (auto s : summary.selected_features) sel.push_back(s);
  write_text_file(out / "tg_features.json", json{{"selected", sel}, {"schema", names}}.dump(1) + "\n");
  return summary;
}

std::vector<const HactGraph*> GraphSet::pointers(const std::vector<std::size_t>& indices) const {
  std::vector<const HactGraph*> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(&graphs.at(i));
  return out;
}

std::vector<std::string> GraphSet::slide_ids() const {
  std::vector<std::string> out;
  for (const auto& g : graphs) out.push_back(g.slide_id);
  return out;
}

GraphSet load_graph_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("graph directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 10 && name.ends_with(".hact.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no inputs found in '" + dir.string() + "'");
  GraphSet set;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    set.roi_ids.push_back(name.substr(0, name.size() - 10));
    set.graphs.push_back(read_hact_file(f));
  }
  return set;
}

namespace {

json metrics_json(const Metrics& m) {
  json per_class = json::array();
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& pc = m.per_class[c];
    per_class.push_back(
        {{"class", c}, {"precision", pc.precision}, {"recall", pc.recall}, {"f1", pc.f1}, {"support", pc.support}});
  }
  return {{"weighted_f1", m.weighted_f1}, {"accuracy", m.accuracy}, {"confusion", m.confusion}, {"per_class", per_class}};
}

std::vector<int> labels_of(const GraphSet& data, const std::vector<std::size_t>& indices) {
  std::vector<int> out;
  for (auto i : indices) {
    if (!data.graphs[i].label) throw DataError("RoI '" + data.roi_ids[i] + "' has no label");
    out.push_back(*data.graphs[i].label);
  }
  return out;
}

}  // namespace

RunOutcome run_training(const GraphSet& data, const RunOptions& options, const fs::path& out) {
  const auto split = split_by_slide(data.slide_ids(), options.fractions, options.fold_seed);
  ModelConfig mc = options.model;
  mc.variant = options.variant;
  mc.seed = CounterRng::derive(options.fold_seed, 0x30DE1ULL);
  mc.cell_dim = data.graphs.front().cell_graph.feature_dim();
  mc.tissue_dim = data.graphs.front().tissue_graph.feature_dim();
  TrainConfig tc = options.train;
  tc.seed = CounterRng::derive(options.fold_seed, 0x7A1ULL);

  std::ostringstream log;
  log << "epoch,loss,val_wf1\n";
  auto on_epoch = [&](const EpochLog& e) {
    char line[128];
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", e.epoch, e.loss, e.val_wf1);
    log << line;
    if (options.verbose) {
      std::fprintf(stderr, "[%s fold %llu] epoch %d loss %.4f val_wf1 %.4f\n", std::string(variant_name(mc.variant)).c_str(),
                   static_cast<unsigned long long>(options.fold_seed), e.epoch, e.loss, e.val_wf1);
    }
  };
  auto result = train(Model(mc), data.pointers(split.train), data.pointers(split.val), tc, on_epoch);

  const auto test_pred = predict(result.best, data.pointers(split.test));
  const auto test_metrics = compute_metrics(labels_of(data, split.test), test_pred, mc.num_classes);
  const auto val_pred = predict(result.best, data.pointers(split.val));
  const auto val_metrics = compute_metrics(labels_of(data, split.val), val_pred, mc.num_classes);

  json doc = {{"variant", variant_name(mc.variant)},
              {"fold_seed", options.fold_seed},
              {"best_epoch", result.best_epoch},
              {"epochs_run", static_cast<int>(result.log.size())},
              {"val", metrics_json(val_metrics)},
              {"test", metrics_json(test_metrics)},
              {"test_weighted_f1", test_metrics.weighted_f1},
              {"split",
               {{"train_slides", split.train_slides},
                {"val_slides", split.val_slides},
                {"test_slides", split.test_slides},
                {"num_train", split.train.size()},
                {"num_val", split.val.size()},
                {"num_test", split.test.size()}}},
              {"train_config",
               {{"batch_size", tc.batch_size},
                {"lr", tc.lr},
                {"weight_decay", tc.weight_decay},
                {"epochs", tc.epochs},
                {"patience", tc.patience}}}};
  fs::create_directories(out);
  write_text_file(out / "metrics.json", doc.dump(1) + "\n");
  write_text_file(out / "train_log.csv", log.str());
  write_text_file(out / "checkpoint.json", checkpoint_to_json(result.best));
  return {val_metrics.weighted_f1, test_metrics.weighted_f1, result.best_epoch, static_cast<int>(result.log.size())};
}

std::string evaluate_checkpoint(Model& model, const GraphSet& data, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw DataError("evaluate: no graphs selected");
  const auto pred = predict(model, data.pointers(indices));
  const auto metrics = compute_metrics(labels_of(data, indices), pred, model.config().num_classes);
  json preds = json::array();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    preds.push_back({{"roi_id", data.roi_ids[indices[k]]}, {"label", *data.graphs[indices[k]].label}, {"pred", pred[k]}});
  }
  json doc = metrics_json(metrics);
  doc["variant"] = variant_name(model.config().variant);
  doc["num_graphs"] = indices.size();
  doc["predictions"] = preds;
  return doc.dump(1) + "\n";
}

Report report_runs(const fs::path& runs) {
  if (!fs::is_directory(runs)) throw DataError("runs directory '" + runs.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(runs)) {
    if (entry.is_regular_file() && entry.path().filename() == "metrics.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no inputs found in '" + runs.string() + "'");
  struct FoldResult {
    std::uint64_t fold_seed;
    double weighted_f1;
    std::vector<double> class_f1;
    bool operator<(const FoldResult& o) const { return fold_seed < o.fold_seed; }
  };
  std::map<std::string, std::vector<FoldResult>> by_variant;
  std::size_t num_classes = 0;
  for (const auto& f : files) {
    try {
      const auto doc = json::parse(read_text_file(f));
      FoldResult r{doc.at("fold_seed").get<std::uint64_t>(), doc.at("test_weighted_f1").get<double>(), {}};
      for (const auto& c : doc.at("test").at("per_class")) r.class_f1.push_back(c.at("f1").get<double>());
      num_classes = std::max(num_classes, r.class_f1.size());
      by_variant[doc.at("variant").get<std::string>()].push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError("'" + f.string() + "': " + e.what());
    }
  }
  json variants = json::object();
  std::ostringstream table;
  table << "variant    folds  weighted F1 (%)";
  for (std::size_t c = 0; c < num_classes; ++c) table << "   class " << c << " F1 (%)";
  table << "\n";
  const auto cell = [](const MeanStd& ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%6.2f +- %5.2f", 100 * ms.mean, 100 * ms.std);
    return std::string(buf);
  };
  for (const auto name : {"cg", "tg", "concat", "hact"}) {
    auto it = by_variant.find(name);
    if (it == by_variant.end()) continue;
    auto folds = it->second;
    std::sort(folds.begin(), folds.end());
    std::vector<double> values;
    json per_fold = json::array();
    for (const auto& fr : folds) {
      values.push_back(fr.weighted_f1);
      per_fold.push_back({{"fold_seed", fr.fold_seed}, {"test_weighted_f1", fr.weighted_f1}, {"class_f1", fr.class_f1}});
    }
    const auto ms = mean_std(values);
    json per_class = json::array();
    std::vector<MeanStd> class_ms;
    for (std::size_t c = 0; c < num_classes; ++c) {
      std::vector<double> fc;
      for (const auto& fr : folds) fc.push_back(c < fr.class_f1.size() ? fr.class_f1[c] : 0.0);
      class_ms.push_back(mean_std(fc));
      per_class.push_back({{"class", c}, {"f1_mean", class_ms.back().mean}, {"f1_std", class_ms.back().std}});
    }
    variants[name] = {{"folds", per_fold}, {"mean", ms.mean}, {"std", ms.std}, {"per_class", per_class}};
    char head[32];
    std::snprintf(head, sizeof head, "%-10s %5zu  ", name, values.size());
    table << head << cell(ms);
    for (const auto& c : class_ms) table << "   " << cell(c);
    table << "\n";
  }
  Report r;
  r.json = json{{"variants", variants}}.dump(1) + "\n";
  r.table = table.str();
  return r;
}

}  // namespace hact
