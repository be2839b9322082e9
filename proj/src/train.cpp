#include "hact/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "hact/errors.hpp"
#include "hact/rng.hpp"

namespace hact {

Split split_by_slide(std::span<const std::string> slide_of_sample, const SplitFractions& fractions,
                     std::uint64_t seed) {
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
      std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
  const std::set<std::string> unique(slide_of_sample.begin(), slide_of_sample.end());
  std::vector<std::string> slides(unique.begin(), unique.end());
  const auto n = static_cast<long>(slides.size());
  if (n < 3) {
    throw DataError("split_by_slide: " + std::to_string(n) + " slides cannot fill train, val and test partitions");
  }
  const long n_val = std::max(1L, std::lround(static_cast<double>(n) * fractions.val));
  const long n_test = std::max(1L, std::lround(static_cast<double>(n) * fractions.test));
  const long n_train = n - n_val - n_test;
  if (n_train < 1) throw DataError("split_by_slide: no slides left for training");

  CounterRng rng(CounterRng::derive(seed, 0x5B117ULL));
  shuffle(slides, rng);
  Split s;
  s.train_slides.assign(slides.begin(), slides.begin() + n_train);
  s.val_slides.assign(slides.begin() + n_train, slides.begin() + n_train + n_val);
  s.test_slides.assign(slides.begin() + n_train + n_val, slides.end());
  const std::set<std::string> train(s.train_slides.begin(), s.train_slides.end());
  const std::set<std::string> val(s.val_slides.begin(), s.val_slides.end());
  for (std::size_t i = 0; i < slide_of_sample.size(); ++i) {
    if (train.contains(slide_of_sample[i])) {
      s.train.push_back(i);
    } else if (val.contains(slide_of_sample[i])) {
      s.val.push_back(i);
    } else {
      s.test.push_back(i);
    }
  }
  std::sort(s.train_slides.begin(), s.train_slides.end());
  std::sort(s.val_slides.begin(), s.val_slides.end());
  std::sort(s.test_slides.begin(), s.test_slides.end());
  return s;
}

double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw std::invalid_argument("weighted_f1: empty input");
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("weighted_f1: length mismatch");
  const std::set<int> classes(y_true.begin(), y_true.end());
  double total = 0.0;
  for (int c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == c, p = y_pred[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    total += f1 * static_cast<double>(tp + fn);
  }
  return total / static_cast<double>(y_true.size());
}

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, int num_classes) {
  Metrics m;
  m.weighted_f1 = weighted_f1(y_true, y_pred);
  m.confusion.assign(num_classes, std::vector<int>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= 0 && y_true[i] < num_classes && y_pred[i] >= 0 && y_pred[i] < num_classes) {
      ++m.confusion[y_true[i]][y_pred[i]];
    }
    correct += y_true[i] == y_pred[i];
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
  m.per_class.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    int tp = m.confusion[c][c], predicted = 0, support = 0;
    for (int k = 0; k < num_classes; ++k) {
      predicted += m.confusion[k][c];
      support += m.confusion[c][k];
    }
    auto& pc = m.per_class[c];
    pc.support = support;
    pc.precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
    pc.recall = support > 0 ? static_cast<double>(tp) / support : 0.0;
    pc.f1 = tp > 0 ? 2.0 * tp / static_cast<double>(predicted + support) : 0.0;
  }
  return m;
}

namespace {

std::vector<PreparedGraph> prepare_all(std::span<const HactGraph* const> graphs, const Normalization& norm) {
  std::vector<PreparedGraph> out;
  out.reserve(graphs.size());
  for (const auto* g : graphs) {
    if (!g->label) throw DataError("graph of slide '" + g->slide_id + "' has no label");
    out.push_back(prepare_graph(*g, norm));
  }
  return out;
}

std::vector<int> predict_prepared(Model& model, const std::vector<PreparedGraph>& graphs, int batch_size) {
  std::vector<int> out;
  out.reserve(graphs.size());
  for (std::size_t start = 0; start < graphs.size(); start += static_cast<std::size_t>(batch_size)) {
    std::vector<const PreparedGraph*> members;
    for (std::size_t i = start; i < std::min(graphs.size(), start + batch_size); ++i) members.push_back(&graphs[i]);
    const Batch batch = make_batch(members);
    ad::Tape tape;
    const ad::Tensor& logits = model.forward(tape, batch).value();
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.cols(); ++c) {
        if (logits(r, c) > logits(r, best)) best = c;
      }
      out.push_back(static_cast<int>(best));
    }
  }
  return out;
}

}  // namespace

std::vector<int> predict(Model& model, std::span<const HactGraph* const> graphs, int batch_size) {
  std::vector<PreparedGraph> prepared;
  prepared.reserve(graphs.size());
  for (const auto* g : graphs) prepared.push_back(prepare_graph(*g, model.normalization()));
  return predict_prepared(model, prepared, batch_size);
}

TrainResult train(Model model, std::span<const HactGraph* const> train_set, std::span<const HactGraph* const> val_set,
                  const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_set.empty()) throw DataError("train: empty training set");
  if (val_set.empty()) throw DataError("train: empty validation set");
  if (config.batch_size < 1 || config.epochs < 0 || config.patience < 1) {
    throw std::invalid_argument("train: invalid configuration");
  }
  model.normalization() = Normalization::fit(train_set);
  const auto train_data = prepare_all(train_set, model.normalization());
  const auto val_data = prepare_all(val_set, model.normalization());
  std::vector<int> val_labels;
  for (const auto& g : val_data) val_labels.push_back(g.label);

  ad::Adam opt(model.parameter_tensors(), {config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
  TrainResult result{model, 0, -1.0, {}};
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    CounterRng rng(CounterRng::derive(config.seed, static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      std::vector<const PreparedGraph*> members;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        members.push_back(&train_data[order[i]]);
      }
      const Batch batch = make_batch(members);
      opt.zero_grad();
      ad::Tape tape;
      const ad::Var loss = ad::softmax_cross_entropy(model.forward(tape, batch), batch.labels);
      const double value = loss.value().data[0];
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batches + 1));
      }
      tape.backward(loss);
      opt.step();
      loss_sum += value;
      ++batches;
    }
    const auto val_pred = predict_prepared(model, val_data, 32);
    const EpochLog entry{epoch, loss_sum / batches, weighted_f1(val_labels, val_pred)};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (entry.val_wf1 > result.best_val_wf1) {
      result.best_val_wf1 = entry.val_wf1;
      result.best_epoch = epoch;
      result.best = model;
    }
    if (epoch - result.best_epoch >= config.patience) break;
  }
  return result;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty input");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace hact
