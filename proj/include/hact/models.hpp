#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hact/autodiff.hpp"
#include "hact/graph.hpp"
#include "hact/rng.hpp"

namespace hact {

enum class Variant { CG, TG, Concat, Hact };

std::string_view variant_name(Variant v);
/// Accepts "cg", "tg", "concat", "hact" (case-insensitive). Throws std::invalid_argument.
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::Hact;
  int t_cg = 4;
  int t_tg = 4;
  int hidden = 32;
  int classifier_hidden = 64;
  int num_classes = 5;
  std::size_t cell_dim = 17;
  std::size_t tissue_dim = 26;
  std::uint64_t seed = 0;

  bool uses_cells() const { return variant != Variant::TG; }
  bool uses_tissue() const { return variant != Variant::CG; }
  bool operator==(const ModelConfig&) const = default;
};

/// Per-column z-score statistics fitted on training graphs.
struct Normalization {
  std::vector<double> cell_mean, cell_std;
  std::vector<double> tissue_mean, tissue_std;

  static Normalization fit(std::span<const HactGraph* const> graphs);
  /// Identity transform for the given widths.
  static Normalization identity(std::size_t cell_dim, std::size_t tissue_dim);
  bool operator==(const Normalization&) const = default;
};

/// One RoI with normalized features and directed (both-way) edge lists.
struct PreparedGraph {
  std::size_t num_cells = 0, num_tissue = 0;
  std::vector<double> cell_x, tissue_x;
  std::vector<NodeIndex> cell_src, cell_dst, tissue_src, tissue_dst;
  std::vector<NodeIndex> assignment;
  int label = -1;
};

PreparedGraph prepare_graph(const HactGraph& h, const Normalization& norm);

/// Disjoint union of prepared graphs, ready for a forward pass.
struct Batch {
  std::size_t num_graphs = 0;
  std::size_t num_cells = 0, num_tissue = 0;
  std::size_t cell_dim = 0, tissue_dim = 0;
  std::vector<double> cell_x, tissue_x;
  std::vector<NodeIndex> cell_src, cell_dst, tissue_src, tissue_dst;
  std::vector<NodeIndex> cell_graph, tissue_graph;  // owning graph per node
  std::vector<NodeIndex> assignment;                // batch-level tissue index per cell
  std::vector<int> labels;
};

Batch make_batch(std::span<const PreparedGraph* const> graphs);

struct NamedParameter {
  std::string name;
  ad::Tensor* tensor;
};

/// GIN-based classifier over cell graphs, tissue graphs, both, or the hierarchical graph.
class Model {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return cfg_; }
  Normalization& normalization() { return norm_; }
  const Normalization& normalization() const { return norm_; }

  std::vector<NamedParameter> parameters();
  std::vector<ad::Tensor*> parameter_tensors();

  /// Logits, one row per graph.
  ad::Var forward(ad::Tape& tape, const Batch& batch);

  /// Width of the graph-level embedding fed to the classifier.
  std::size_t readout_dim() const;

 private:
  struct Linear {
    ad::Tensor w, b;
  };
  struct GinLayer {
    Linear l1, l2;
  };

  ad::Var linear(ad::Tape& tape, Linear& l, ad::Var x);
  ad::Var gin_stack(ad::Tape& tape, std::vector<GinLayer>& layers, ad::Var h0, std::span<const NodeIndex> src,
                    std::span<const NodeIndex> dst, std::vector<ad::Var>& per_layer);
  void init_parameters();

  ModelConfig cfg_;
  Normalization norm_;
  std::vector<GinLayer> cg_layers_, tg_layers_;
  Linear fc1_, fc2_;
};

/// Xavier-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
void xavier_uniform(ad::Tensor& w, CounterRng& rng);

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(Model& model);
/// Throws ParseError / UnsupportedVersionError.
Model model_from_checkpoint(std::string_view text);

std::string model_config_to_json(const ModelConfig& cfg);

}  // namespace hact
