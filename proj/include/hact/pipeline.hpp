#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hact/graph.hpp"
#include "hact/hact_graph.hpp"
#include "hact/models.hpp"
#include "hact/train.hpp"

namespace hact {

/// Keeps freed tensor buffers in the heap instead of returning them to the
/// OS after every op (glibc only; no-op elsewhere).
void configure_allocator();

/// Runs body(i) for i in [0, n) on up to `jobs` threads. The first exception
/// (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

enum class NucleiSource { Detect, Csv };
enum class TissueFeatureMode { TopVariance, All, FromFile };

struct BuildOptions {
  HactParams params;
  NucleiSource nuclei = NucleiSource::Detect;
  TissueFeatureMode tissue_features = TissueFeatureMode::TopVariance;
  std::filesystem::path feature_file;  // tg_features.json for FromFile
  int jobs = 1;
  bool debug_labels = false;  // also write <roi>.labels.png (16-bit)
};

struct BuildSummary {
  std::size_t rois = 0;
  std::vector<std::size_t> selected_features;  // empty when all are kept
  std::vector<std::string> warnings;
};

/// Reads <in>/manifest.json (or every *.png when absent), writes one
/// <roi>.hact.json per RoI and tg_features.json to `out`. Throws DataError
/// ("no inputs found") on an empty input directory.
BuildSummary build_graphs(const std::filesystem::path& in, const std::filesystem::path& out,
                          const BuildOptions& options);

std::vector<std::size_t> read_feature_selection(const std::filesystem::path& file);

struct GraphSet {
  std::vector<std::string> roi_ids;
  std::vector<HactGraph> graphs;

  std::vector<const HactGraph*> pointers(const std::vector<std::size_t>& indices) const;
  std::vector<std::string> slide_ids() const;
};

/// Every *.hact.json in `dir`, ordered by file name.
GraphSet load_graph_dir(const std::filesystem::path& dir);

struct RunOptions {
  Variant variant = Variant::Hact;
  std::uint64_t fold_seed = 0;
  SplitFractions fractions;
  TrainConfig train;
  ModelConfig model;  // variant, seed and feature widths are filled in from the data
  bool verbose = false;
};

struct RunOutcome {
  double val_weighted_f1 = 0.0;
  double test_weighted_f1 = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
};

/// Splits by slide with fold_seed, trains, evaluates on the test slides and
/// writes metrics.json, train_log.csv and checkpoint.json into `out`.
RunOutcome run_training(const GraphSet& data, const RunOptions& options, const std::filesystem::path& out);

/// Metrics of a checkpoint on `indices` of `data` as a JSON document.
std::string evaluate_checkpoint(Model& model, const GraphSet& data, const std::vector<std::size_t>& indices);

struct Report {
  std::string json;
  std::string table;
};

/// Aggregates every metrics.json below `runs` by variant (mean and population std of test weighted F1).
Report report_runs(const std::filesystem::path& runs);

}  // namespace hact
