#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hact/cell_graph.hpp"
#include "hact/features.hpp"
#include "hact/graph.hpp"
#include "hact/tissue_graph.hpp"

namespace hact {

struct Assignment {
  AssignmentMap map;
  std::vector<std::string> warnings;  // one per clamped out-of-bounds centroid
};

/// Each cell goes to the region under its rounded centroid; centroids outside
/// the image are clamped to the nearest pixel and reported.
Assignment assign_cells(std::span<const Point2> centroids, const SuperpixelLabeling& labeling);

struct HactParams {
  CgParams cg;
  TgParams tg;
};

struct HactBuild {
  HactGraph graph;
  SuperpixelLabeling labeling;
  std::vector<std::string> warnings;
};

/// Cell graph, tissue graph and assignment for one RoI.
HactBuild build_hact(const RgbImage& image, const std::vector<EntityMask>& nuclei, const HactParams& params,
                     std::string slide_id = {}, std::optional<int> label = std::nullopt);

}  // namespace hact
