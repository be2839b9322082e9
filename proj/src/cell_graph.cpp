#include "hact/cell_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hact/errors.hpp"

namespace hact {

namespace {

struct Candidate {
  double d2;
  NodeIndex index;
  bool operator<(const Candidate& o) const { return d2 != o.d2 ? d2 < o.d2 : index < o.index; }
};

void keep_nearest(std::vector<Candidate>& cands, std::size_t k) {
  if (cands.size() > k) {
    std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k - 1), cands.end());
    cands.resize(k);
  }
}

double squared_distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

void brute_force(std::span<const Point2> pts, std::size_t k, double d_min2, std::vector<Edge>& out) {
  std::vector<Candidate> cands;
  for (std::size_t v = 0; v < pts.size(); ++v) {
    cands.clear();
    for (std::size_t u = 0; u < pts.size(); ++u) {
      if (u == v) continue;
      const double d2 = squared_distance(pts[v], pts[u]);
      if (d2 < d_min2) cands.push_back({d2, static_cast<NodeIndex>(u)});
    }
    keep_nearest(cands, k);
    for (const auto& c : cands) out.push_back(Edge::make(static_cast<NodeIndex>(v), c.index));
  }
}

// Uniform bucket grid; rings of cells are visited outward until the k-th
// candidate is provably closer than anything unvisited.
void grid_search(std::span<const Point2> pts, std::size_t k, double d_min, std::vector<Edge>& out) {
  const double d_min2 = d_min * d_min;
  double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double extent_x = xmax - xmin, extent_y = ymax - ymin;
  // square cells holding about two points each; degenerate (collinear) sets get 2n cells
  const double n = static_cast<double>(pts.size());
  double cell = std::max(std::sqrt(2.0 * extent_x * extent_y / n), std::max(extent_x, extent_y) / (2.0 * n));
  if (!(cell > 0)) cell = 1.0;
  const int nx = std::min(1 << 16, static_cast<int>(extent_x / cell) + 1);
  const int ny = std::min(1 << 16, static_cast<int>(extent_y / cell) + 1);
  const double cell_x = cell, cell_y = cell;
  const double ring_step = cell;

  auto cell_of = [&](const Point2& p) {
    const int cx = std::clamp(static_cast<int>((p.x - xmin) / cell_x), 0, nx - 1);
    const int cy = std::clamp(static_cast<int>((p.y - ymin) / cell_y), 0, ny - 1);
    return std::pair{cx, cy};
  };
  std::vector<std::size_t> start(static_cast<std::size_t>(nx) * ny + 1, 0);
  std::vector<std::size_t> cell_index(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto [cx, cy] = cell_of(pts[i]);
    cell_index[i] = static_cast<std::size_t>(cy) * nx + cx;
    ++start[cell_index[i] + 1];
  }
  for (std::size_t c = 0; c + 1 < start.size(); ++c) start[c + 1] += start[c];
  std::vector<NodeIndex> bucket(pts.size());
  {
    auto cursor = start;
    for (std::size_t i = 0; i < pts.size(); ++i) bucket[cursor[cell_index[i]]++] = static_cast<NodeIndex>(i);
  }

  std::vector<Candidate> cands;
  const int max_ring = std::max(nx, ny);
  for (std::size_t v = 0; v < pts.size(); ++v) {
    cands.clear();
    const auto [cx, cy] = cell_of(pts[v]);
    auto visit = [&](int gx, int gy) {
      if (gx < 0 || gy < 0 || gx >= nx || gy >= ny) return;
      const auto c = static_cast<std::size_t>(gy) * nx + gx;
      for (std::size_t s = start[c]; s < start[c + 1]; ++s) {
        const NodeIndex u = bucket[s];
        if (u == v) continue;
        const double d2 = squared_distance(pts[v], pts[u]);
        if (d2 < d_min2) cands.push_back({d2, u});
      }
    };
    for (int r = 0; r <= max_ring; ++r) {
      if (r == 0) {
        visit(cx, cy);
      } else {
        for (int gx = cx - r; gx <= cx + r; ++gx) {
          visit(gx, cy - r);
          visit(gx, cy + r);
        }
        for (int gy = cy - r + 1; gy <= cy + r - 1; ++gy) {
          visit(cx - r, gy);
          visit(cx + r, gy);
        }
      }
      // any point outside rings 0..r is at least r * ring_step away
      const double bound = r * ring_step;
      const double bound2 = bound * bound * (1.0 - 1e-12);
      if (bound2 >= d_min2) break;
      if (cands.size() >= k) {
        keep_nearest(cands, k);
        const double kth = std::max_element(cands.begin(), cands.end())->d2;
        if (kth < bound2) break;
      }
    }
    keep_nearest(cands, k);
    for (const auto& c : cands) out.push_back(Edge::make(static_cast<NodeIndex>(v), c.index));
  }
}

}  // namespace

std::vector<Edge> knn_edges(std::span<const Point2> centroids, const CgParams& params) {
  if (params.k < 1) throw std::invalid_argument("knn_edges: k must be >= 1");
  if (!(params.d_min > 0)) throw std::invalid_argument("knn_edges: d_min must be positive");
  std::vector<Edge> edges;
  if (centroids.size() < 2) return edges;
  const auto k = static_cast<std::size_t>(params.k);
  const bool brute = params.index == KnnIndex::BruteForce ||
                     (params.index == KnnIndex::Auto && centroids.size() < 64);
  if (brute) {
    brute_force(centroids, k, params.d_min * params.d_min, edges);
  } else {
    grid_search(centroids, k, params.d_min, edges);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<std::string> cell_feature_schema() {
  std::vector<std::string> schema;
  for (auto n : kShapeFeatureNames) schema.emplace_back(n);
  for (auto n : kNucleusTextureFeatureNames) schema.emplace_back(n);
  schema.emplace_back("centroid_x");
  schema.emplace_back("centroid_y");
  return schema;
}

Graph build_cell_graph(const RgbImage& image, const std::vector<EntityMask>& nuclei, const CgParams& params) {
  if (nuclei.empty()) throw DataError("empty cell graph");
  const GrayImage lum = to_luminance(image);
  const double w = params.image_width > 0 ? params.image_width : image.width;
  const double h = params.image_height > 0 ? params.image_height : image.height;
  FeatureMatrix features(nuclei.size(), kCellFeatureDim);
  std::vector<Point2> centroids(nuclei.size());
  for (std::size_t i = 0; i < nuclei.size(); ++i) {
    const auto shape = shape_features(nuclei[i]);
    const auto texture = texture_features_nucleus(lum, nuclei[i]);
    auto row = features.row(i);
    std::copy(shape.values.begin(), shape.values.end(), row.begin());
    std::copy(texture.values.begin(), texture.values.end(), row.begin() + 7);
    centroids[i] = {nuclei[i].centroid_x(), nuclei[i].centroid_y()};
    row[15] = centroids[i].x / w;
    row[16] = centroids[i].y / h;
  }
  return Graph(nuclei.size(), knn_edges(centroids, params), std::move(features), cell_feature_schema());
}

}  // namespace hact
