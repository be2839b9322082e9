#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "hact/cell_graph.hpp"
#include "hact/graph.hpp"
#include "hact/image.hpp"
#include "hact/rng.hpp"
#include "hact/tissue_graph.hpp"

namespace hact::testing {

inline std::vector<std::string> schema_of(std::size_t dim, const std::string& prefix = "f") {
  std::vector<std::string> s;
  for (std::size_t i = 0; i < dim; ++i) s.push_back(prefix + std::to_string(i));
  return s;
}

inline FeatureMatrix random_features(std::size_t rows, std::size_t cols, CounterRng& rng) {
  FeatureMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

/// Each unordered pair is an edge with probability p.
inline std::vector<Edge> random_edges(std::size_t n, double p, CounterRng& rng) {
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < p) edges.push_back({static_cast<NodeIndex>(a), static_cast<NodeIndex>(b)});
    }
  }
  return edges;
}

inline Graph random_graph(std::size_t n, double p, std::size_t dim, CounterRng& rng) {
  auto edges = random_edges(n, p, rng);
  return Graph(n, std::move(edges), random_features(n, dim, rng), schema_of(dim));
}

inline HactGraph random_hact(std::size_t cells, std::size_t tissue, std::size_t cell_dim, std::size_t tissue_dim,
                             CounterRng& rng, int label = 0) {
  HactGraph h;
  h.cell_graph = Graph(cells, random_edges(cells, 4.0 / std::max<double>(cells, 1), rng),
                       random_features(cells, cell_dim, rng), schema_of(cell_dim, "c"));
  h.tissue_graph = Graph(tissue, random_edges(tissue, 0.4, rng), random_features(tissue, tissue_dim, rng),
                         schema_of(tissue_dim, "t"));
  for (std::size_t i = 0; i < cells; ++i) {
    h.assignment.cell_to_tissue.push_back(static_cast<NodeIndex>(rng.below(tissue)));
  }
  h.label = label;
  h.slide_id = "slide";
  return h;
}

inline std::vector<NodeIndex> random_permutation(std::size_t n, CounterRng& rng) {
  std::vector<NodeIndex> p(n);
  std::iota(p.begin(), p.end(), 0);
  shuffle(p, rng);
  return p;
}

/// Node i of `g` becomes node perm[i].
inline Graph permute_graph(const Graph& g, const std::vector<NodeIndex>& perm) {
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) edges.push_back(Edge::make(perm[e.a], perm[e.b]));
  std::sort(edges.begin(), edges.end());
  FeatureMatrix f(g.num_nodes(), g.feature_dim());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t c = 0; c < g.feature_dim(); ++c) f(perm[i], c) = g.features()(i, c);
  }
  return Graph(g.num_nodes(), std::move(edges), std::move(f), g.schema());
}

inline HactGraph permute_hact(const HactGraph& h, const std::vector<NodeIndex>& cell_perm,
                              const std::vector<NodeIndex>& tissue_perm) {
  HactGraph out = h;
  out.cell_graph = permute_graph(h.cell_graph, cell_perm);
  out.tissue_graph = permute_graph(h.tissue_graph, tissue_perm);
  out.assignment.cell_to_tissue.assign(h.assignment.cell_to_tissue.size(), 0);
  for (std::size_t i = 0; i < cell_perm.size(); ++i) {
    out.assignment.cell_to_tissue[cell_perm[i]] = tissue_perm[h.assignment.cell_to_tissue[i]];
  }
  return out;
}

/// O(n^2) kNN graph: each node picks its k nearest others (ties by index),
/// keeps those strictly closer than d_min, and edges are the union.
inline std::set<Edge> brute_force_knn(const std::vector<Point2>& pts, int k, double d_min) {
  std::set<Edge> edges;
  for (std::size_t v = 0; v < pts.size(); ++v) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t u = 0; u < pts.size(); ++u) {
      if (u == v) continue;
      const double dx = pts[v].x - pts[u].x, dy = pts[v].y - pts[u].y;
      cand.push_back({dx * dx + dy * dy, u});
    }
    std::sort(cand.begin(), cand.end());
    for (std::size_t i = 0; i < cand.size() && i < static_cast<std::size_t>(k); ++i) {
      if (std::sqrt(cand[i].first) < d_min) {
        edges.insert(Edge::make(static_cast<NodeIndex>(v), static_cast<NodeIndex>(cand[i].second)));
      }
    }
  }
  return edges;
}

inline RgbImage constant_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

/// Four axis-aligned quadrants with distinct colors; returns the ground-truth quadrant per pixel.
inline RgbImage four_color_image(int w, int h, int split_x, int split_y, std::vector<int>& truth) {
  static constexpr std::uint8_t colors[4][3] = {{230, 220, 225}, {200, 120, 170}, {120, 60, 110}, {240, 190, 150}};
  RgbImage img(w, h);
  truth.assign(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int q = (x >= split_x ? 1 : 0) + (y >= split_y ? 2 : 0);
      truth[static_cast<std::size_t>(y) * w + x] = q;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = colors[q][c];
    }
  }
  return img;
}

/// Fraction of pixels whose region's majority ground-truth class is their own class.
inline double majority_agreement(const SuperpixelLabeling& l, const std::vector<int>& truth, int classes) {
  std::vector<std::vector<std::size_t>> counts(l.num_regions, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < l.labels.size(); ++i) ++counts[l.labels[i]][truth[i]];
  std::size_t agree = 0;
  for (const auto& c : counts) agree += *std::max_element(c.begin(), c.end());
  return static_cast<double>(agree) / static_cast<double>(l.labels.size());
}

}  // namespace hact::testing
