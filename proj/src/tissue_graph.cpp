#include "hact/tissue_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace hact {

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

struct LabImage {
  int width = 0, height = 0;
  std::vector<Lab> px;
  const Lab& at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
};

// Block-average downscale in sRGB, then Lab. The last row/column of blocks absorbs remainders.
LabImage downscale_to_lab(const RgbImage& image, int factor) {
  LabImage out;
  out.width = std::max(1, image.width / factor);
  out.height = std::max(1, image.height / factor);
  out.px.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int sy = 0; sy < out.height; ++sy) {
    const int y0 = sy * factor, y1 = sy == out.height - 1 ? image.height : y0 + factor;
    for (int sx = 0; sx < out.width; ++sx) {
      const int x0 = sx * factor, x1 = sx == out.width - 1 ? image.width : x0 + factor;
      double acc[3] = {0, 0, 0};
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          for (int c = 0; c < 3; ++c) acc[c] += image.at(x, y, c);
        }
      }
      const double n = static_cast<double>((x1 - x0) * (y1 - y0));
      const auto r = static_cast<std::uint8_t>(std::lround(acc[0] / n));
      const auto g = static_cast<std::uint8_t>(std::lround(acc[1] / n));
      const auto b = static_cast<std::uint8_t>(std::lround(acc[2] / n));
      out.px[static_cast<std::size_t>(sy) * out.width + sx] = srgb_to_lab(r, g, b);
    }
  }
  return out;
}

double lab_dist2(const Lab& p, const Lab& q) {
  const double dl = p.l - q.l, da = p.a - q.a, db = p.b - q.b;
  return dl * dl + da * da + db * db;
}

struct Center {
  Lab color;
  double x, y;
};

// Labels every 4-connected component; returns component id per pixel.
std::vector<std::uint32_t> label_components(const std::vector<std::uint32_t>& labels, int w, int h,
                                            std::size_t& num_components) {
  std::vector<std::uint32_t> comp(labels.size(), std::numeric_limits<std::uint32_t>::max());
  std::vector<std::size_t> stack;
  std::uint32_t next = 0;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (comp[start] != std::numeric_limits<std::uint32_t>::max()) continue;
    comp[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      const std::size_t nbrs[4] = {x + 1 < w ? i + 1 : i, x > 0 ? i - 1 : i,
                                   y + 1 < h ? i + static_cast<std::size_t>(w) : i,
                                   y > 0 ? i - static_cast<std::size_t>(w) : i};
      for (auto j : nbrs) {
        if (comp[j] == std::numeric_limits<std::uint32_t>::max() && labels[j] == labels[i]) {
          comp[j] = next;
          stack.push_back(j);
        }
      }
    }
    ++next;
  }
  num_components = next;
  return comp;
}

// Renumbers labels by first occurrence in raster order.
std::size_t relabel_by_first_occurrence(std::vector<std::uint32_t>& labels) {
  std::map<std::uint32_t, std::uint32_t> remap;
  for (auto& l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<std::uint32_t>(remap.size()));
    l = it->second;
  }
  return remap.size();
}

// Every label keeps its largest component; orphan components join the
// largest adjacent component until only kept components remain.
void enforce_connectivity(std::vector<std::uint32_t>& labels, int w, int h) {
  std::size_t ncomp = 0;
  const auto comp = label_components(labels, w, h, ncomp);
  std::vector<std::size_t> size(ncomp, 0);
  std::vector<std::uint32_t> comp_label(ncomp, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++size[comp[i]];
    comp_label[comp[i]] = labels[i];
  }
  std::map<std::uint32_t, std::uint32_t> keeper;  // label -> largest component
  for (std::uint32_t c = 0; c < ncomp; ++c) {
    auto it = keeper.find(comp_label[c]);
    if (it == keeper.end() || size[c] > size[it->second]) keeper[comp_label[c]] = c;
  }
  std::vector<std::set<std::uint32_t>> adj(ncomp);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w && comp[i] != comp[i + 1]) {
        adj[comp[i]].insert(comp[i + 1]);
        adj[comp[i + 1]].insert(comp[i]);
      }
      if (y + 1 < h && comp[i] != comp[i + w]) {
        adj[comp[i]].insert(comp[i + w]);
        adj[comp[i + w]].insert(comp[i]);
      }
    }
  }
  std::vector<std::uint32_t> parent(ncomp);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t c) {
    while (parent[c] != c) c = parent[c] = parent[parent[c]];
    return c;
  };
  std::vector<std::uint8_t> kept(ncomp, 0);
  for (const auto& [label, c] : keeper) kept[c] = 1;
  std::vector<std::size_t> root_size = size;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::uint32_t c = 0; c < ncomp; ++c) {
      const auto rc = find(c);
      if (rc != c || kept[rc]) continue;
      std::uint32_t best = rc;
      std::size_t best_size = 0;
      bool best_kept = false;
      for (auto nb : adj[c]) {
        const auto rn = find(nb);
        if (rn == rc) continue;
        const bool k = kept[rn] != 0;
        if ((k && !best_kept) || (k == best_kept && root_size[rn] > best_size) ||
            (k == best_kept && root_size[rn] == best_size && rn < best)) {
          best = rn;
          best_size = root_size[rn];
          best_kept = k;
        }
      }
      if (best == rc) continue;
      parent[rc] = best;
      root_size[best] += root_size[rc];
      // the merged set inherits the neighbors of the orphan
      for (auto nb : adj[c]) adj[best].insert(nb);
      changed = true;
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = comp_label[find(comp[i])];
}

using FeatureRow = std::vector<double>;

FeatureRow region_features(const RgbImage& image, const std::vector<PixelCoord>& pixels) {
  return superpixel_features(image, EntityMask::from_pixels(pixels, image.width, image.height)).values;
}

}  // namespace

void TgParams::validate() const {
  if (downscale < 1) throw std::invalid_argument("TgParams: downscale must be >= 1");
  if (slic_iterations < 0 || target_superpixels < 1 || min_final_regions < 1) {
    throw std::invalid_argument("TgParams: counts must be positive");
  }
  for (auto i : selected_features) {
    if (i >= kSuperpixelFeatureCount) throw std::invalid_argument("TgParams: selected feature index out of range");
  }
  if (merge_mean.size() != merge_std.size() || (!merge_mean.empty() && merge_mean.size() != kSuperpixelFeatureCount)) {
    throw std::invalid_argument("TgParams: merge statistics must both be empty or hold 45 values");
  }
}

Lab srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = srgb_to_linear(r8 / 255.0);
  const double g = srgb_to_linear(g8 / 255.0);
  const double b = srgb_to_linear(b8 / 255.0);
  const double x = 0.412456 * r + 0.357576 * g + 0.180438 * b;
  const double y = 0.212673 * r + 0.715152 * g + 0.072175 * b;
  const double z = 0.0193339 * r + 0.119192 * g + 0.950304 * b;
  const double fx = lab_f(x / 0.95047), fy = lab_f(y / 1.0), fz = lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

SuperpixelLabeling slic(const RgbImage& image, const TgParams& params) {
  params.validate();
  if (image.width < 16 || image.height < 16) throw std::invalid_argument("slic: image smaller than 16x16");
  const int f = params.downscale;
  const LabImage lab = downscale_to_lab(image, f);
  const int w = lab.width, h = lab.height;
  const int target = std::min(params.target_superpixels, w * h);

  const int nx = std::clamp(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(target) * w / h))), 1, w);
  const int ny = std::clamp(static_cast<int>(std::lround(static_cast<double>(target) / nx)), 1, h);
  const double step = std::sqrt(static_cast<double>(w) * h / (static_cast<double>(nx) * ny));
  const int window = static_cast<int>(std::ceil(std::max(static_cast<double>(w) / nx, static_cast<double>(h) / ny)));
  const double spatial_weight = (params.slic_compactness / step) * (params.slic_compactness / step);

  auto gradient = [&](int x, int y) {
    const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
    const int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
    return lab_dist2(lab.at(xr, y), lab.at(xl, y)) + lab_dist2(lab.at(x, yd), lab.at(x, yu));
  };

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double cx = (i + 0.5) * w / nx, cy = (j + 0.5) * h / ny;
      int px = std::clamp(static_cast<int>(cx), 0, w - 1), py = std::clamp(static_cast<int>(cy), 0, h - 1);
      // move the seed to the lowest-gradient pixel of its 3x3 neighborhood
      double best = gradient(px, py);
      int bx = px, by = py;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = px + dx, qy = py + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          const double g = gradient(qx, qy);
          if (g < best) {
            best = g;
            bx = qx;
            by = qy;
          }
        }
      }
      if (bx != px || by != py) {
        cx = bx + 0.5;
        cy = by + 0.5;
      }
      centers.push_back({lab.at(bx, by), cx, cy});
    }
  }

  std::vector<std::uint32_t> labels(static_cast<std::size_t>(w) * h, 0);
  std::vector<double> best(labels.size());
  for (int iter = 0; iter < std::max(1, params.slic_iterations); ++iter) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - window);
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x)) + window);
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - window);
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y)) + window);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dx = x + 0.5 - c.x, dy = y + 0.5 - c.y;
          const double d = lab_dist2(lab.at(x, y), c.color) + spatial_weight * (dx * dx + dy * dy);
          const auto i = static_cast<std::size_t>(y) * w + x;
          if (d < best[i]) {
            best[i] = d;
            labels[i] = static_cast<std::uint32_t>(k);
          }
        }
      }
    }
    std::vector<double> acc(centers.size() * 6, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto i = static_cast<std::size_t>(y) * w + x;
        double* a = &acc[labels[i] * 6];
        const Lab& p = lab.at(x, y);
        a[0] += p.l;
        a[1] += p.a;
        a[2] += p.b;
        a[3] += x + 0.5;
        a[4] += y + 0.5;
        a[5] += 1.0;
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double* a = &acc[k * 6];
      if (a[5] == 0) continue;
      centers[k] = {{a[0] / a[5], a[1] / a[5], a[2] / a[5]}, a[3] / a[5], a[4] / a[5]};
    }
  }

  enforce_connectivity(labels, w, h);
  relabel_by_first_occurrence(labels);

  SuperpixelLabeling out;
  out.width = image.width;
  out.height = image.height;
  out.labels.resize(static_cast<std::size_t>(image.width) * image.height);
  for (int y = 0; y < image.height; ++y) {
    const int sy = std::min(y / f, h - 1);
    for (int x = 0; x < image.width; ++x) {
      const int sx = std::min(x / f, w - 1);
      out.labels[static_cast<std::size_t>(y) * image.width + x] = labels[static_cast<std::size_t>(sy) * w + sx];
    }
  }
  out.num_regions = relabel_by_first_occurrence(out.labels);
  return out;
}

std::vector<std::vector<PixelCoord>> region_pixels(const SuperpixelLabeling& labeling) {
  std::vector<std::vector<PixelCoord>> out(labeling.num_regions);
  for (int y = 0; y < labeling.height; ++y) {
    for (int x = 0; x < labeling.width; ++x) out[labeling.at(x, y)].push_back({x, y});
  }
  return out;
}

std::vector<Edge> rag_edges(const SuperpixelLabeling& labeling) {
  std::set<Edge> edges;
  const int w = labeling.width, h = labeling.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto a = labeling.at(x, y);
      if (x + 1 < w && labeling.at(x + 1, y) != a) edges.insert(Edge::make(a, labeling.at(x + 1, y)));
      if (y + 1 < h && labeling.at(x, y + 1) != a) edges.insert(Edge::make(a, labeling.at(x, y + 1)));
    }
  }
  return {edges.begin(), edges.end()};
}

std::vector<std::string> check_partition(const SuperpixelLabeling& labeling) {
  std::vector<std::string> out;
  if (labeling.labels.size() != static_cast<std::size_t>(labeling.width) * labeling.height) {
    out.push_back("label map size does not match image size");
    return out;
  }
  std::vector<std::size_t> count(labeling.num_regions, 0);
  for (auto l : labeling.labels) {
    if (l >= labeling.num_regions) {
      out.push_back("label " + std::to_string(l) + " outside [0," + std::to_string(labeling.num_regions) + ")");
      return out;
    }
    ++count[l];
  }
  for (std::size_t r = 0; r < count.size(); ++r) {
    if (count[r] == 0) out.push_back("region " + std::to_string(r) + " is empty");
  }
  std::size_t ncomp = 0;
  label_components(labeling.labels, labeling.width, labeling.height, ncomp);
  if (ncomp != labeling.num_regions) {
    out.push_back(std::to_string(ncomp) + " connected components for " + std::to_string(labeling.num_regions) +
                  " regions (some region is not 4-connected)");
  }
  return out;
}

void fit_merge_normalization(std::span<const FeatureMatrix> region_features, std::vector<double>& mean,
                             std::vector<double>& sd) {
  mean.assign(kSuperpixelFeatureCount, 0.0);
  sd.assign(kSuperpixelFeatureCount, 0.0);
  std::size_t n = 0;
  for (const auto& m : region_features) {
    if (m.cols() != kSuperpixelFeatureCount) throw std::invalid_argument("fit_merge_normalization: expected 45 columns");
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t f = 0; f < kSuperpixelFeatureCount; ++f) mean[f] += m(r, f);
    }
    n += m.rows();
  }
  if (n == 0) return;
  for (auto& x : mean) x /= static_cast<double>(n);
  for (const auto& m : region_features) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t f = 0; f < kSuperpixelFeatureCount; ++f) sd[f] += (m(r, f) - mean[f]) * (m(r, f) - mean[f]);
    }
  }
  for (auto& x : sd) x = std::sqrt(x / static_cast<double>(n));
}

FeatureMatrix region_feature_matrix(const RgbImage& image, const SuperpixelLabeling& labeling) {
  const auto pixels = region_pixels(labeling);
  FeatureMatrix out(pixels.size(), kSuperpixelFeatureCount);
  for (std::size_t r = 0; r < pixels.size(); ++r) {
    const auto f = region_features(image, pixels[r]);
    std::copy(f.begin(), f.end(), out.row(r).begin());
  }
  return out;
}

SuperpixelLabeling merge_superpixels(const RgbImage& image, const SuperpixelLabeling& labeling,
                                     const TgParams& params) {
  params.validate();
  const std::size_t n = labeling.num_regions;
  auto pixels = region_pixels(labeling);
  std::vector<FeatureRow> feats(n);
  for (std::size_t r = 0; r < n; ++r) feats[r] = region_features(image, pixels[r]);

  // z-score statistics over the initial regions unless supplied; constant features are ignored
  std::vector<double> mean = params.merge_mean, sd = params.merge_std;
  if (mean.empty()) {
    FeatureMatrix initial(n, kSuperpixelFeatureCount);
    for (std::size_t r = 0; r < n; ++r) std::copy(feats[r].begin(), feats[r].end(), initial.row(r).begin());
    fit_merge_normalization(std::span(&initial, 1), mean, sd);
  }
  std::vector<double> inv_std(kSuperpixelFeatureCount, 0.0);
  for (std::size_t f = 0; f < kSuperpixelFeatureCount; ++f) inv_std[f] = sd[f] > 1e-12 ? 1.0 / sd[f] : 0.0;
  auto distance = [&](std::uint32_t a, std::uint32_t b) {
    double d2 = 0;
    for (std::size_t f = 0; f < kSuperpixelFeatureCount; ++f) {
      const double d = (feats[a][f] - feats[b][f]) * inv_std[f];
      d2 += d * d;
    }
    return std::sqrt(d2);
  };

  std::vector<std::set<std::uint32_t>> adj(n);
  for (const auto& e : rag_edges(labeling)) {
    adj[e.a].insert(e.b);
    adj[e.b].insert(e.a);
  }
  std::vector<std::uint32_t> owner(n);
  std::iota(owner.begin(), owner.end(), 0u);
  std::vector<std::uint8_t> alive(n, 1);
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> cache;
  std::size_t alive_count = n;

  while (alive_count > static_cast<std::size_t>(params.min_final_regions)) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::uint32_t, std::uint32_t> best_pair{0, 0};
    for (std::uint32_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      for (auto b : adj[a]) {
        if (b <= a) continue;
        auto [it, inserted] = cache.try_emplace({a, b}, 0.0);
        if (inserted) it->second = distance(a, b);
        if (it->second < best) {
          best = it->second;
          best_pair = {a, b};
        }
      }
    }
    if (!(best < params.merge_threshold)) break;
    const auto [a, b] = best_pair;
    pixels[a].insert(pixels[a].end(), pixels[b].begin(), pixels[b].end());
    pixels[b].clear();
    feats[a] = region_features(image, pixels[a]);
    alive[b] = 0;
    --alive_count;
    for (auto c : adj[b]) {
      adj[c].erase(b);
      if (c != a) {
        adj[c].insert(a);
        adj[a].insert(c);
      }
    }
    adj[a].erase(b);
    adj[b].clear();
    for (auto it = cache.begin(); it != cache.end();) {
      const auto [p, q] = it->first;
      if (p == a || q == a || p == b || q == b) {
        it = cache.erase(it);
      } else {
        ++it;
      }
    }
    for (auto& o : owner) {
      if (o == b) o = a;
    }
  }

  // survivors keep their relative order
  std::vector<std::uint32_t> new_id(n, 0);
  std::uint32_t next = 0;
  for (std::uint32_t r = 0; r < n; ++r) {
    if (alive[r]) new_id[r] = next++;
  }
  SuperpixelLabeling out;
  out.width = labeling.width;
  out.height = labeling.height;
  out.num_regions = next;
  out.labels.resize(labeling.labels.size());
  for (std::size_t i = 0; i < labeling.labels.size(); ++i) out.labels[i] = new_id[owner[labeling.labels[i]]];
  return out;
}

std::vector<std::string> tissue_feature_schema(std::span<const std::size_t> selected) {
  std::vector<std::string> schema;
  if (selected.empty()) {
    for (auto name : kSuperpixelFeatureNames) schema.emplace_back(name);
  } else {
    for (auto i : selected) schema.emplace_back(kSuperpixelFeatureNames.at(i));
  }
  schema.emplace_back("centroid_x");
  schema.emplace_back("centroid_y");
  return schema;
}

TissueGraphResult build_tissue_graph(const RgbImage& image, const TgParams& params) {
  TissueGraphResult result;
  result.labeling = merge_superpixels(image, slic(image, params), params);
  const auto pixels = region_pixels(result.labeling);
  const auto& sel = params.selected_features;
  const std::size_t dim = (sel.empty() ? kSuperpixelFeatureCount : sel.size()) + 2;
  FeatureMatrix features(pixels.size(), dim);
  for (std::size_t r = 0; r < pixels.size(); ++r) {
    const auto mask = EntityMask::from_pixels(pixels[r], image.width, image.height);
    const auto full = superpixel_features(image, mask).values;
    auto row = features.row(r);
    if (sel.empty()) {
      std::copy(full.begin(), full.end(), row.begin());
    } else {
      for (std::size_t k = 0; k < sel.size(); ++k) row[k] = full[sel[k]];
    }
    row[dim - 2] = mask.centroid_x() / image.width;
    row[dim - 1] = mask.centroid_y() / image.height;
  }
  result.graph = Graph(pixels.size(), rag_edges(result.labeling), std::move(features), tissue_feature_schema(sel));
  return result;
}

std::vector<std::size_t> select_features_by_variance(const FeatureMatrix& reference, std::size_t count) {
  if (reference.cols() < kSuperpixelFeatureCount) {
    throw std::invalid_argument("select_features_by_variance: reference needs the 45 superpixel features");
  }
  count = std::min(count, kSuperpixelFeatureCount);
  std::vector<std::pair<double, std::size_t>> ranked;
  const double n = static_cast<double>(std::max<std::size_t>(1, reference.rows()));
  for (std::size_t f = 0; f < kSuperpixelFeatureCount; ++f) {
    double s = 0;
    for (std::size_t r = 0; r < reference.rows(); ++r) s += reference(r, f);
    const double mean = s / n;
    double v = 0;
    for (std::size_t r = 0; r < reference.rows(); ++r) v += (reference(r, f) - mean) * (reference(r, f) - mean);
    ranked.emplace_back(v / n, f);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

Graph select_tissue_features(const Graph& full, std::span<const std::size_t> selected) {
  if (full.feature_dim() != kSuperpixelFeatureCount + 2) {
    throw std::invalid_argument("select_tissue_features: expected a 47-column tissue graph");
  }
  for (auto i : selected) {
    if (i >= kSuperpixelFeatureCount) throw std::invalid_argument("select_tissue_features: index out of range");
  }
  const std::size_t dim = selected.size() + 2;
  FeatureMatrix features(full.num_nodes(), dim);
  for (std::size_t r = 0; r < full.num_nodes(); ++r) {
    const auto src = full.features().row(r);
    auto dst = features.row(r);
    for (std::size_t k = 0; k < selected.size(); ++k) dst[k] = src[selected[k]];
    dst[dim - 2] = src[kSuperpixelFeatureCount];
    dst[dim - 1] = src[kSuperpixelFeatureCount + 1];
  }
  return Graph(full.num_nodes(), full.edges(), std::move(features), tissue_feature_schema(selected));
}

}  // namespace hact
