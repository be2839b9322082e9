// Acceptance checks: one PASS/FAIL line per criterion. Exit code 0 only when every selected non-soft criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hact/autodiff.hpp"
#include "hact/cell_graph.hpp"
#include "hact/hact_graph.hpp"
#include "hact/models.hpp"
#include "hact/pipeline.hpp"
#include "hact/synth.hpp"
#include "hact/tissue_graph.hpp"
#include "hact/train.hpp"
#include "support.hpp"

using namespace hact;
using namespace hact::testing;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr double kFdRelTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr int kFdSeeds = 10;
constexpr double kFdMaxSeconds = 120.0;
constexpr double kReluMargin = 1e-2;  // no ReLU input closer than this to its kink at the check point
constexpr double kLogitScale = 2.0;   // largest |logit| at the check point
constexpr double kPermTol = 1e-10;
constexpr int kPermGraphs = 50;
constexpr int kKnnSets = 100;
constexpr int kSegSeeds = 20;
constexpr double kSegAgreement = 0.95;
constexpr int kHactRois = 50;
constexpr int kHactMinCgLarger = 48;
constexpr double kMetricTol = 1e-12;
constexpr int kMetricCases = 1000;
constexpr double kBenchMinF1 = 0.90;
constexpr double kBenchMaxMinutes = 30.0;
constexpr double kOrderSlack = 0.02;
constexpr int kSplitSeeds = 100;
constexpr int kFolds = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  int jobs = 1;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& line) {
  std::fprintf(stderr, "  .. %s\n", line.c_str());
  std::fflush(stderr);
}

fs::path fresh(const fs::path& p) {
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------- 1

ad::Tensor random_tensor(std::size_t r, std::size_t c, CounterRng& rng, bool param) {
  ad::Tensor t = param ? ad::Tensor::parameter(r, c) : ad::Tensor(r, c);
  for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Cross-entropy of v * W against fixed labels: a smooth scalar of any n x d value.
struct Scalarizer {
  ad::Tensor w;
  std::vector<int> labels;
  Scalarizer(std::size_t rows, std::size_t cols, CounterRng& rng) : w(random_tensor(cols, 3, rng, false)) {
    for (std::size_t i = 0; i < rows; ++i) labels.push_back(static_cast<int>(rng.below(3)));
  }
  ad::Var operator()(ad::Tape& t, ad::Var v) const { return ad::softmax_cross_entropy(ad::matmul(v, t.constant(w)), labels); }
};

double min_relu_input(const ad::Tape& tape) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tape.size(); ++i) {
    if (tape.op_of(i) != "relu") continue;
    for (double v : tape.value_of(tape.inputs_of(i)[0]).data) m = std::min(m, std::abs(v));
  }
  return m;
}

Outcome gradient_oracle(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_op = 0.0;
  std::size_t op_checks = 0;
  for (std::uint64_t seed = 0; seed < kFdSeeds; ++seed) {
    CounterRng rng(CounterRng::derive(0xAC1, seed));
    const std::size_t n = 2 + rng.below(5), k = 1 + rng.below(5), m = 1 + rng.below(4);
    ad::Tensor a = random_tensor(n, k, rng, true), b = random_tensor(k, m, rng, true), c = random_tensor(n, k, rng, true);
    ad::Tensor bias = random_tensor(1, k, rng, true);
    const Scalarizer s_nm(n, m, rng), s_nk(n, k, rng), s_2nk(2 * n, k, rng), s_n2k(n, 2 * k, rng);
    const std::size_t segments = 1 + rng.below(n);
    std::vector<NodeIndex> seg(n), rows(n + 2);
    for (auto& id : seg) id = static_cast<NodeIndex>(rng.below(segments));
    for (auto& r : rows) r = static_cast<NodeIndex>(rng.below(n));
    const Scalarizer s_seg(segments, k, rng), s_rows(n + 2, k, rng);
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.below(k));
    std::vector<ad::Tensor*> ab{&a, &b}, ac{&a, &c}, abias{&a, &bias}, only_a{&a};
    const std::vector<std::pair<std::function<ad::Var(ad::Tape&)>, std::vector<ad::Tensor*>*>> ops = {
        {[&](ad::Tape& t) { return s_nm(t, ad::matmul(t.leaf(a), t.leaf(b))); }, &ab},
        {[&](ad::Tape& t) { return s_nk(t, ad::add(t.leaf(a), t.leaf(c))); }, &ac},
        {[&](ad::Tape& t) { return s_nk(t, ad::add(t.leaf(a), t.leaf(bias))); }, &abias},
        {[&](ad::Tape& t) { return s_nk(t, ad::relu(t.leaf(a))); }, &only_a},
        {[&](ad::Tape& t) {
           const std::vector<ad::Var> parts{t.leaf(a), t.leaf(c)};
           return s_2nk(t, ad::concat(parts, 0));
         },
         &ac},
        {[&](ad::Tape& t) {
           const std::vector<ad::Var> parts{t.leaf(a), t.leaf(c)};
           return s_n2k(t, ad::concat(parts, 1));
         },
         &ac},
        {[&](ad::Tape& t) { return s_seg(t, ad::segment_sum(t.leaf(a), seg, segments)); }, &only_a},
        {[&](ad::Tape& t) { return s_rows(t, ad::row_gather(t.leaf(a), rows)); }, &only_a},
        {[&](ad::Tape& t) { return ad::sum(ad::relu(t.leaf(a))); }, &only_a},
        {[&](ad::Tape& t) { return ad::softmax_cross_entropy(t.leaf(a), labels); }, &only_a},
    };
    for (const auto& [f, params] : ops) {
      worst_op = std::max(worst_op, ad::finite_diff_check(f, *params, kFdStep).max_rel_error);
      ++op_checks;
    }
  }

  // Full HACT-Net loss: all GIN stages, the cell-to-tissue transfer, both readouts and the classifier.
  double worst_model = 0.0, worst_model_abs = 0.0;
  int redraws = 0;
  std::size_t entries = 0;
  for (std::uint64_t seed = 0; seed < kFdSeeds; ++seed) {
    for (std::uint64_t draw = 0;; ++draw) {
      CounterRng rng(CounterRng::derive(CounterRng::derive(0xF0D, seed), draw));
      std::vector<HactGraph> graphs;
      for (int i = 0; i < 2; ++i) {
        graphs.push_back(random_hact(4 + rng.below(5), 2 + rng.below(2), 17, 26, rng, static_cast<int>(rng.below(5))));
      }
      ModelConfig cfg;
      cfg.hidden = 8;
      cfg.classifier_hidden = 8;
      cfg.seed = seed;
      Model model(cfg);
      for (auto& p : model.parameters()) {
        if (p.name.ends_with(".b")) {
          for (double& v : p.tensor->data) v = rng.uniform(-0.1, 0.1);
        }
      }
      std::vector<PreparedGraph> prepared;
      for (const auto& g : graphs) prepared.push_back(prepare_graph(g, model.normalization()));
      std::vector<const PreparedGraph*> ptrs;
      for (const auto& p : prepared) ptrs.push_back(&p);
      const Batch batch = make_batch(ptrs);
      {
        ad::Tape probe;
        double largest = 0.0;
        for (double v : model.forward(probe, batch).value().data) largest = std::max(largest, std::abs(v));
        for (auto& p : model.parameters()) {
          if (p.name.starts_with("classifier.fc1")) {
            for (double& v : p.tensor->data) v *= kLogitScale / largest;
          }
        }
      }
      ad::Tape probe;
      ad::softmax_cross_entropy(model.forward(probe, batch), batch.labels);
      if (min_relu_input(probe) < kReluMargin) {
        ++redraws;
        continue;
      }
      const auto res = ad::finite_diff_check(
          [&](ad::Tape& t) { return ad::softmax_cross_entropy(model.forward(t, batch), batch.labels); },
          model.parameter_tensors(), kFdStep);
      worst_model = std::max(worst_model, res.max_rel_error);
      worst_model_abs = std::max(worst_model_abs, res.max_abs_error);
      entries += res.checked;
      break;
    }
  }
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = worst_op < kFdRelTol && worst_model < kFdRelTol && elapsed < kFdMaxSeconds;
  o.detail = fmt("ops: %zu checks over %d seeds, max rel %.2e; HACT loss: %d seeds, %zu entries, max rel %.2e, max abs %.1e "
                 "(%d points redrawn near ReLU kinks); %.1fs (limit %.0fs, tol %.0e)",
                 op_checks, kFdSeeds, worst_op, kFdSeeds, entries, worst_model, worst_model_abs, redraws, elapsed, kFdMaxSeconds,
                 kFdRelTol);
  return o;
}

// ---------------------------------------------------------------- 2

std::vector<double> logits_of(Model& m, const HactGraph& g) {
  const PreparedGraph p = prepare_graph(g, m.normalization());
  const PreparedGraph* ptr = &p;
  ad::Tape tape;
  return m.forward(tape, make_batch(std::span(&ptr, 1))).value().data;
}

Outcome permutation_invariance(const Context&) {
  double worst = 0.0, largest = 0.0;
  int checked = 0;
  for (Variant v : {Variant::CG, Variant::TG, Variant::Concat, Variant::Hact}) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.seed = 17;
    Model m(cfg);
    for (int i = 0; i < kPermGraphs; ++i) {
      CounterRng rng(CounterRng::derive(0x9E7, static_cast<std::uint64_t>(i)));
      const HactGraph g = random_hact(10 + rng.below(60), 2 + rng.below(12), 17, 26, rng);
      const HactGraph q = permute_hact(g, random_permutation(g.cell_graph.num_nodes(), rng),
                                       random_permutation(g.tissue_graph.num_nodes(), rng));
      const auto a = logits_of(m, g), b = logits_of(m, q);
      for (std::size_t c = 0; c < a.size(); ++c) {
        worst = std::max(worst, std::abs(a[c] - b[c]));
        largest = std::max(largest, std::abs(a[c]));
      }
      ++checked;
    }
  }
  return {worst < kPermTol, fmt("%d graph pairs over 4 variants, max |dlogit| %.2e (tol %.0e, max |logit| %.3g)",
                                checked, worst, kPermTol, largest)};
}

// ---------------------------------------------------------------- 3

Outcome knn_oracle(const Context&) {
  int equal = 0, total_edges = 0;
  for (int s = 0; s < kKnnSets; ++s) {
    CounterRng rng(CounterRng::derive(0x3A4, static_cast<std::uint64_t>(s)));
    const std::size_t n = 1 + rng.below(500);
    const double extent = rng.uniform(100.0, 1200.0);
    std::vector<Point2> pts(n);
    const bool lattice = s % 10 == 0;  // exercise distance ties
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = lattice ? Point2{10.0 * rng.below(30), 10.0 * rng.below(30)}
                       : Point2{rng.uniform(0, extent), rng.uniform(0, extent)};
    }
    CgParams p;
    p.index = KnnIndex::Grid;
    const auto grid = knn_edges(pts, p);
    const auto oracle = brute_force_knn(pts, p.k, p.d_min);
    equal += std::set<Edge>(grid.begin(), grid.end()) == oracle && grid.size() == oracle.size();
    total_edges += static_cast<int>(oracle.size());
  }
  return {equal == kKnnSets, fmt("%d/%d point sets equal (k=5, d_min=50, %d oracle edges)", equal, kKnnSets,
                                 total_edges)};
}

// ---------------------------------------------------------------- 4

Outcome segmentation_laws(const Context&) {
  int partitions_ok = 0, partitions = 0, monotone_ok = 0, agree_ok = 0;
  double worst_agreement = 1.0;
  for (int s = 0; s < kSegSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    CounterRng rng(CounterRng::derive(0x5E6, seed));
    const SynthConfig cfg = SynthConfig::standard(seed);
    const int w = cfg.min_size + static_cast<int>(rng.below(cfg.max_size - cfg.min_size + 1));
    const int h = cfg.min_size + static_cast<int>(rng.below(cfg.max_size - cfg.min_size + 1));
    const RgbImage img = render_roi(cfg, s % 5, w, h, SlideStyle{}, rng).image;
    TgParams p;
    const auto initial = slic(img, p);
    partitions_ok += check_partition(initial).empty();
    ++partitions;
    std::size_t previous = initial.num_regions;
    bool monotone = true;
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      p.merge_threshold = t;
      const auto merged = merge_superpixels(img, initial, p);
      partitions_ok += check_partition(merged).empty();
      ++partitions;
      monotone = monotone && merged.num_regions <= previous;
      previous = merged.num_regions;
    }
    monotone_ok += monotone;

    const int fw = 96 + static_cast<int>(rng.below(96)), fh = 96 + static_cast<int>(rng.below(96));
    std::vector<int> truth;
    const RgbImage four = four_color_image(fw, fh, fw / 3 + static_cast<int>(rng.below(fw / 3)),
                                           fh / 3 + static_cast<int>(rng.below(fh / 3)), truth);
    const TgParams defaults;
    const double agreement = majority_agreement(merge_superpixels(four, slic(four, defaults), defaults), truth, 4);
    worst_agreement = std::min(worst_agreement, agreement);
    agree_ok += agreement >= kSegAgreement;
  }
  Outcome o;
  o.pass = partitions_ok == partitions && monotone_ok == kSegSeeds && agree_ok == kSegSeeds;
  o.detail = fmt("%d/%d labelings are 4-connected partitions; monotone on %d/%d RoIs; four-color agreement >= %.2f "
                 "on %d/%d seeds (min %.4f)",
                 partitions_ok, partitions, monotone_ok, kSegSeeds, kSegAgreement, agree_ok, kSegSeeds,
                 worst_agreement);
  return o;
}

// ---------------------------------------------------------------- 5

Outcome hact_structure(const Context&) {
  const SynthConfig cfg = SynthConfig::standard(7);
  const HactParams params;
  int cg_larger = 0, total = 0;
  for (int i = 0; i < kHactRois; ++i) {
    CounterRng rng(CounterRng::derive(0x4AC, static_cast<std::uint64_t>(i)));
    const int w = cfg.min_size + static_cast<int>(rng.below(cfg.max_size - cfg.min_size + 1));
    const int h = cfg.min_size + static_cast<int>(rng.below(cfg.max_size - cfg.min_size + 1));
    const SynthSample s = render_roi(cfg, i % 5, w, h, SlideStyle{}, rng);
    const HactGraph g = build_hact(s.image, detect_nuclei(s.image), params, "slide", s.label).graph;
    const auto& a = g.assignment.cell_to_tissue;
    bool ok = a.size() == g.cell_graph.num_nodes();
    for (auto t : a) ok = ok && t < g.tissue_graph.num_nodes();  // exactly one region per cell
    total += ok;
    const auto cells = g.cell_graph.num_nodes(), tissue = g.tissue_graph.num_nodes();
    cg_larger += cells > tissue;
  }
  Outcome o;
  o.pass = total == kHactRois && cg_larger >= kHactMinCgLarger;
  o.detail = fmt("assignment total with unit row sums on %d/%d RoIs; |V_CG| > |V_TG| on %d/%d (need %d)", total,
                 kHactRois, cg_larger, kHactRois, kHactMinCgLarger);
  return o;
}

// ---------------------------------------------------------------- 6

double confusion_oracle(const std::vector<int>& t, const std::vector<int>& p, int classes) {
  std::vector<std::vector<double>> cm(classes, std::vector<double>(classes, 0.0));
  for (std::size_t i = 0; i < t.size(); ++i) cm[t[i]][p[i]] += 1.0;
  double total = 0.0;
  for (int c = 0; c < classes; ++c) {
    double row = 0, col = 0;
    for (int k = 0; k < classes; ++k) {
      row += cm[c][k];
      col += cm[k][c];
    }
    if (row == 0) continue;
    const double prec = col > 0 ? cm[c][c] / col : 0.0, rec = cm[c][c] / row;
    total += (prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0) * row / static_cast<double>(t.size());
  }
  return total;
}

Outcome metric_oracle(const Context&) {
  double worst = 0.0;
  for (int i = 0; i < kMetricCases; ++i) {
    CounterRng rng(CounterRng::derive(0x3E7, static_cast<std::uint64_t>(i)));
    const int classes = 2 + static_cast<int>(rng.below(5));
    const std::size_t n = 1 + rng.below(100);
    std::vector<int> t(n), p(n);
    for (auto& v : t) v = static_cast<int>(rng.below(classes));
    for (auto& v : p) v = static_cast<int>(rng.below(classes));
    worst = std::max(worst, std::abs(weighted_f1(t, p) - confusion_oracle(t, p, classes)));
  }
  const double hand = weighted_f1(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 1, 1});
  const double hand_err = std::abs(hand - 11.0 / 15.0);
  return {worst < kMetricTol && hand_err < kMetricTol,
          fmt("%d random cases, max |diff| %.1e; hand case %.15f vs 11/15 (tol %.0e)", kMetricCases, worst, hand,
              kMetricTol)};
}

// ---------------------------------------------------------------- 7, 8

struct FoldScores {
  std::vector<double> test_f1;
  double mean() const { return mean_std(test_f1).mean; }
};

fs::path make_graphs(const SynthConfig& cfg, const fs::path& root, int jobs) {
  const fs::path data = fresh(root / "data"), graphs = fresh(root / "graphs");
  write_dataset(generate_dataset(cfg, jobs), cfg, data);
  BuildOptions opts;
  opts.jobs = jobs;
  build_graphs(data, graphs, opts);
  return graphs;
}

FoldScores train_folds(const GraphSet& data, Variant v, const fs::path& runs) {
  FoldScores scores;
  for (int f = 0; f < kFolds; ++f) {
    RunOptions opts;
    opts.variant = v;
    opts.fold_seed = static_cast<std::uint64_t>(f);
    const auto t0 = std::chrono::steady_clock::now();
    const RunOutcome r = run_training(data, opts, runs / (std::string(variant_name(v)) + std::to_string(f)));
    scores.test_f1.push_back(r.test_weighted_f1);
    progress(fmt("%s fold %d: test wF1 %.4f (best epoch %d of %d, %.0fs)", std::string(variant_name(v)).c_str(), f,
                 r.test_weighted_f1, r.best_epoch, r.epochs_run, seconds_since(t0)));
  }
  return scores;
}

Outcome benchmark(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = ctx.work / "c7";
  const GraphSet data = load_graph_dir(make_graphs(SynthConfig::standard(0), root, ctx.jobs));
  progress(fmt("standard dataset: %zu graphs ready after %.0fs", data.graphs.size(), seconds_since(t0)));
  const FoldScores s = train_folds(data, Variant::Hact, fresh(root / "runs"));
  const double minutes = seconds_since(t0) / 60.0;
  const double worst = *std::min_element(s.test_f1.begin(), s.test_f1.end());
  std::string folds;
  for (double v : s.test_f1) folds += fmt("%s%.4f", folds.empty() ? "" : ", ", v);
  return {worst >= kBenchMinF1 && minutes < kBenchMaxMinutes,
          fmt("HACT test wF1 per fold [%s] (need >= %.2f each); %.1f min end to end (limit %.0f)", folds.c_str(),
              kBenchMinF1, minutes, kBenchMaxMinutes)};
}

Outcome directional(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = ctx.work / "c8";
  const GraphSet data = load_graph_dir(make_graphs(SynthConfig::hard(0), root, ctx.jobs));
  const fs::path runs = fresh(root / "runs");
  double m[4];
  const Variant order[4] = {Variant::CG, Variant::TG, Variant::Concat, Variant::Hact};
  for (int i = 0; i < 4; ++i) m[i] = train_folds(data, order[i], runs).mean();
  const double cg = m[0], tg = m[1], concat = m[2], hact = m[3];
  const bool pass = hact >= concat - kOrderSlack && concat >= std::max(cg, tg) - kOrderSlack;
  return {pass, fmt("mean test wF1 over %d folds: CG %.4f, TG %.4f, Concat %.4f, HACT %.4f; need HACT >= Concat - %.2f "
                    "and Concat >= max(CG, TG) - %.2f (%.1f min)",
                    kFolds, cg, tg, concat, hact, kOrderSlack, kOrderSlack, seconds_since(t0) / 60.0)};
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const Context& ctx) {
  SynthConfig cfg = SynthConfig::standard(11);
  cfg.num_slides = 10;
  cfg.rois_per_slide = 4;
  std::string metrics[2], checkpoints[2], logs[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path root = ctx.work / ("c9_run" + std::to_string(run));
    // the second run also uses a different worker count
    const GraphSet data = load_graph_dir(make_graphs(cfg, root, run == 0 ? 1 : std::max(2, ctx.jobs)));
    RunOptions opts;
    opts.fold_seed = 1;
    opts.train.epochs = 15;
    const fs::path out = fresh(root / "run");
    run_training(data, opts, out);
    metrics[run] = slurp(out / "metrics.json");
    checkpoints[run] = slurp(out / "checkpoint.json");
    logs[run] = slurp(out / "train_log.csv");
  }
  const bool same = metrics[0] == metrics[1] && checkpoints[0] == checkpoints[1] && logs[0] == logs[1];
  return {same && !metrics[0].empty(),
          fmt("two synth -> build-graphs -> train runs (40 RoIs, 15 epochs): metrics.json %s, checkpoint.json %s, "
              "train_log.csv %s",
              metrics[0] == metrics[1] ? "identical" : "DIFFER", checkpoints[0] == checkpoints[1] ? "identical" : "DIFFER",
              logs[0] == logs[1] ? "identical" : "DIFFER")};
}

// ---------------------------------------------------------------- 10

Outcome split_integrity(const Context&) {
  const SynthConfig cfg = SynthConfig::standard(0);
  std::vector<std::string> slide_of;
  for (int s = 0; s < cfg.num_slides; ++s) {
    for (int r = 0; r < cfg.rois_per_slide; ++r) slide_of.push_back(fmt("slide_%03d", s));
  }
  CounterRng rng(0x5B1);
  shuffle(slide_of, rng);
  int clean = 0;
  for (int seed = 0; seed < kSplitSeeds; ++seed) {
    const Split sp = split_by_slide(slide_of, {}, static_cast<std::uint64_t>(seed));
    std::set<std::string> parts[3];
    const std::vector<std::size_t>* idx[3] = {&sp.train, &sp.val, &sp.test};
    for (int k = 0; k < 3; ++k) {
      for (auto i : *idx[k]) parts[k].insert(slide_of[i]);
    }
    bool ok = sp.train.size() + sp.val.size() + sp.test.size() == slide_of.size();
    for (const auto& id : parts[0]) ok = ok && !parts[1].contains(id) && !parts[2].contains(id);
    for (const auto& id : parts[1]) ok = ok && !parts[2].contains(id);
    clean += ok;
  }
  return {clean == kSplitSeeds,
          fmt("%d/%d seeds with no slide in two partitions (%d slides, %zu RoIs)", clean, kSplitSeeds, cfg.num_slides,
              slide_of.size())};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const Context&)> run;
  bool soft = false;  // reported, but not counted in the exit status
};

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  std::string work = (fs::temp_directory_path() / "hact_acceptance").string();
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--only", only, "Criterion numbers to run (default: all)")->delimiter(',');
  app.add_option("--work", work, "Scratch directory for datasets and runs");
  app.add_option("--jobs", jobs, "Worker threads for synthesis and graph building");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "gradient oracle", gradient_oracle},
      {2, "permutation invariance", permutation_invariance},
      {3, "kNN oracle equivalence", knn_oracle},
      {4, "segmentation laws", segmentation_laws},
      {5, "HACT structural law", hact_structure},
      {6, "metric oracle", metric_oracle},
      {7, "synthetic benchmark learnability", benchmark},
      {8, "directional ordering on the hard preset", directional, true},
      {9, "determinism", determinism},
      {10, "split integrity", split_integrity},
  };
  const Context ctx{work, jobs};
  fs::create_directories(ctx.work);
  int failed = 0, soft_failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ++ran;
    (c.soft ? soft_failed : failed) += !o.pass;
    std::printf("[%s] %2d %s%s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, c.soft ? " (soft)" : "",
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed", ran - failed - soft_failed, ran);
  if (soft_failed > 0) std::printf(" (%d soft failure%s not counted)", soft_failed, soft_failed == 1 ? "" : "s");
  std::printf("\n");
  return failed == 0 ? 0 : 1;
}
