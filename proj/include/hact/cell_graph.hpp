#pragma once

#include <limits>
#include <span>
#include <vector>

#include "hact/features.hpp"
#include "hact/graph.hpp"

namespace hact {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class KnnIndex { Auto, Grid, BruteForce };

struct CgParams {
  int k = 5;
  double d_min = 50.0;  // pixels; edges must be strictly shorter
  int image_width = 0;
  int image_height = 0;
  KnnIndex index = KnnIndex::Auto;  // Auto: brute force below 64 points
};

/// Directed kNN selection (ties by smaller index) pruned at d_min, symmetrized by union.
std::vector<Edge> knn_edges(std::span<const Point2> centroids, const CgParams& params);

inline constexpr std::size_t kCellFeatureDim = 17;
/// Shape (7) + texture (8) + normalized centroid (2).
std::vector<std::string> cell_feature_schema();

/// Throws DataError("empty cell graph") when there are no nuclei.
Graph build_cell_graph(const RgbImage& image, const std::vector<EntityMask>& nuclei, const CgParams& params);

}  // namespace hact
