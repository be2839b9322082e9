#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hact {

using NodeIndex = std::uint32_t;

/// Undirected edge, stored with the smaller endpoint first.
struct Edge {
  NodeIndex a = 0;
  NodeIndex b = 0;

  static Edge make(NodeIndex u, NodeIndex v) { return u < v ? Edge{u, v} : Edge{v, u}; }
  auto operator<=>(const Edge&) const = default;
  bool operator==(const Edge&) const = default;
};

/// Dense row-major matrix of node features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Compressed neighbor lists; neighbors of v are indices[offsets[v] .. offsets[v+1]).
struct Adjacency {
  std::vector<std::size_t> offsets;
  std::vector<NodeIndex> indices;

  std::span<const NodeIndex> of(NodeIndex v) const {
    return {indices.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
};

/// Undirected attributed graph. Edges are canonicalized (smaller index first,
/// lexicographically sorted) on construction but otherwise kept as given, so
/// that validate() can report malformed input.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t num_nodes, std::vector<Edge> edges, FeatureMatrix features,
        std::vector<std::string> schema);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t feature_dim() const { return features_.cols(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const FeatureMatrix& features() const { return features_; }
  const std::vector<std::string>& schema() const { return schema_; }

  /// Sorted neighbor list of v. Throws std::out_of_range for invalid v.
  std::vector<NodeIndex> neighbors(NodeIndex v) const;
  Adjacency adjacency() const;

  bool operator==(const Graph&) const = default;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  FeatureMatrix features_;
  std::vector<std::string> schema_;
};

/// One violation message per broken invariant instance; empty iff valid.
std::vector<std::string> validate(const Graph& g);

/// Maps every cell node to exactly one tissue node.
struct AssignmentMap {
  std::vector<NodeIndex> cell_to_tissue;

  bool operator==(const AssignmentMap&) const = default;
};

/// Cell-graph, tissue-graph and the cell-to-tissue assignment.
struct HactGraph {
  Graph cell_graph;
  Graph tissue_graph;
  AssignmentMap assignment;
  std::optional<int> label;
  std::string slide_id;

  bool operator==(const HactGraph&) const = default;
};

struct HactValidation {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

HactValidation validate(const HactGraph& h);

/// Disjoint union of several graphs.
struct GraphBatch {
  Graph merged;
  std::vector<std::size_t> graph_offsets;  // size = num_graphs + 1
  std::vector<NodeIndex> graph_ids;        // owning graph per merged node

  std::size_t num_graphs() const { return graph_offsets.empty() ? 0 : graph_offsets.size() - 1; }
};

/// Throws DataError if feature schemas differ.
GraphBatch disjoint_union(std::span<const Graph> graphs);

/// Per-segment column sums of a feature matrix.
FeatureMatrix segment_sum(const FeatureMatrix& values, std::span<const NodeIndex> segment_ids,
                          std::size_t num_segments);

inline constexpr int kHactFormatVersion = 1;

/// Versioned ".hact.json" encoding.
std::string serialize(const HactGraph& h);
/// Throws ParseError or UnsupportedVersionError.
HactGraph deserialize(std::string_view text);

void write_hact_file(const std::filesystem::path& path, const HactGraph& h);
HactGraph read_hact_file(const std::filesystem::path& path);

}  // namespace hact
