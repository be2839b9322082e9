#include "hact/hact_graph.hpp"

#include <algorithm>
#include <cmath>

namespace hact {

Assignment assign_cells(std::span<const Point2> centroids, const SuperpixelLabeling& labeling) {
  Assignment out;
  out.map.cell_to_tissue.reserve(centroids.size());
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    const auto x = static_cast<long>(std::lround(centroids[i].x));
    const auto y = static_cast<long>(std::lround(centroids[i].y));
    const long cx = std::clamp<long>(x, 0, labeling.width - 1);
    const long cy = std::clamp<long>(y, 0, labeling.height - 1);
    if (cx != x || cy != y) {
      out.warnings.push_back("cell " + std::to_string(i) + " centroid (" + std::to_string(centroids[i].x) + ", " +
                             std::to_string(centroids[i].y) + ") outside the image; clamped");
    }
    out.map.cell_to_tissue.push_back(labeling.at(static_cast<int>(cx), static_cast<int>(cy)));
  }
  return out;
}

HactBuild build_hact(const RgbImage& image, const std::vector<EntityMask>& nuclei, const HactParams& params,
                     std::string slide_id, std::optional<int> label) {
  CgParams cg = params.cg;
  cg.image_width = image.width;
  cg.image_height = image.height;

  HactBuild out;
  out.graph.cell_graph = build_cell_graph(image, nuclei, cg);
  auto tissue = build_tissue_graph(image, params.tg);
  out.graph.tissue_graph = std::move(tissue.graph);
  out.labeling = std::move(tissue.labeling);

  std::vector<Point2> centroids;
  centroids.reserve(nuclei.size());
  for (const auto& m : nuclei) centroids.push_back({m.centroid_x(), m.centroid_y()});
  auto assignment = assign_cells(centroids, out.labeling);
  out.graph.assignment = std::move(assignment.map);
  out.warnings = std::move(assignment.warnings);
  out.graph.label = label;
  out.graph.slide_id = std::move(slide_id);
  for (auto& w : validate(out.graph).warnings) out.warnings.push_back(std::move(w));
  return out;
}

}  // namespace hact
