#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hact/features.hpp"
#include "hact/graph.hpp"
#include "hact/image.hpp"

namespace hact {

struct TgParams {
  int target_superpixels = 200;
  double slic_compactness = 10.0;
  int slic_iterations = 10;
  int downscale = 4;
  double merge_threshold = 0.5;  // Euclidean distance in z-score units
  int min_final_regions = 4;
  /// Indices into the 45 superpixel features kept as node features; empty keeps all.
  std::vector<std::size_t> selected_features;
  /// z-score statistics for merge distances; empty means "fit on the initial
  /// superpixels of the image being merged".
  std::vector<double> merge_mean, merge_std;

  void validate() const;
};

/// Region id per pixel; ids are contiguous in [0, num_regions).
struct SuperpixelLabeling {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> labels;
  std::size_t num_regions = 0;

  std::uint32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const SuperpixelLabeling&) const = default;
};

struct Lab {
  double l, a, b;
};

/// sRGB (D65) to CIELAB.
Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// k-means over (L, a, b, x, y) on the downscaled image, then connectivity
/// enforcement; labels are upsampled by nearest neighbor. Throws
/// std::invalid_argument for images under 16x16.
SuperpixelLabeling slic(const RgbImage& image, const TgParams& params);

/// Mean and population std of superpixel_features over every region of every labeling.
void fit_merge_normalization(std::span<const FeatureMatrix> region_features, std::vector<double>& mean,
                             std::vector<double>& std);

/// superpixel_features of every region, one row per region id.
FeatureMatrix region_feature_matrix(const RgbImage& image, const SuperpixelLabeling& labeling);

/// Greedy agglomerative merging of adjacent regions on z-scored superpixel features.
SuperpixelLabeling merge_superpixels(const RgbImage& image, const SuperpixelLabeling& labeling,
                                     const TgParams& params);

/// Pairs of 4-adjacent regions.
std::vector<Edge> rag_edges(const SuperpixelLabeling& labeling);

/// Pixel lists per region, in raster order.
std::vector<std::vector<PixelCoord>> region_pixels(const SuperpixelLabeling& labeling);

/// Empty iff ids are contiguous, every region non-empty, and every region 4-connected.
std::vector<std::string> check_partition(const SuperpixelLabeling& labeling);

std::vector<std::string> tissue_feature_schema(std::span<const std::size_t> selected);

struct TissueGraphResult {
  Graph graph;
  SuperpixelLabeling labeling;
};

/// Node per merged region: selected superpixel features then centroid / (W, H).
TissueGraphResult build_tissue_graph(const RgbImage& image, const TgParams& params);

inline constexpr std::size_t kSelectedTissueFeatures = 24;

/// Top `count` of the 45 superpixel features by variance over `reference` rows
/// (ties broken by index), returned in ascending index order.
std::vector<std::size_t> select_features_by_variance(const FeatureMatrix& reference,
                                                     std::size_t count = kSelectedTissueFeatures);

/// Restricts a full (45 + 2 column) tissue graph to `selected` + centroids.
Graph select_tissue_features(const Graph& full, std::span<const std::size_t> selected);

}  // namespace hact
