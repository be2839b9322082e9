#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hact/graph.hpp"
#include "hact/models.hpp"

namespace hact {

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// Sample indices per partition; no slide contributes to two partitions.
struct Split {
  std::vector<std::size_t> train, val, test;
  std::vector<std::string> train_slides, val_slides, test_slides;
};

/// Shuffles the distinct slide ids with `seed` and cuts them into partitions of
/// round(n * val) and round(n * test) slides (each at least one), the rest
/// going to training. Throws DataError with fewer than three slides.
Split split_by_slide(std::span<const std::string> slide_of_sample, const SplitFractions& fractions,
                     std::uint64_t seed);

/// Support-weighted mean of per-class F1 over the classes present in y_true.
/// Throws std::invalid_argument on empty or mismatched input.
double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred);

/// Undefined precision or recall (no predictions or no support) counts as 0.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

struct Metrics {
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // [true][pred]
  std::vector<ClassMetrics> per_class;
};

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, int num_classes);

struct TrainConfig {
  int batch_size = 16;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  int epochs = 100;
  int patience = 20;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;  // mean training loss over batches
  double val_wf1 = 0.0;
};

struct TrainResult {
  Model best;  // parameters from the epoch with the best validation weighted F1
  int best_epoch = 0;
  double best_val_wf1 = -1.0;
  std::vector<EpochLog> log;
};

/// Mini-batch Adam training with early stopping on validation weighted F1 (ties
/// keep the earlier epoch). Normalization statistics are fitted on `train_set`
/// and stored in the model. Throws DivergenceError on a non-finite loss.
TrainResult train(Model model, std::span<const HactGraph* const> train_set,
                  std::span<const HactGraph* const> val_set, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Argmax class per graph (ties pick the lower class).
std::vector<int> predict(Model& model, std::span<const HactGraph* const> graphs, int batch_size = 32);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

}  // namespace hact
