#include "hact/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hact {

namespace {

constexpr std::array<std::string_view, kSuperpixelFeatureCount> make_superpixel_names() {
  return {"glcm_contrast", "glcm_dissimilarity", "glcm_homogeneity", "glcm_energy", "glcm_entropy",
          "glcm_asm",
          "red_hist_0", "red_hist_1", "red_hist_2", "red_hist_3", "red_hist_4", "red_hist_5",
          "red_hist_6", "red_hist_7", "red_mean", "red_std", "red_median", "red_energy", "red_skewness",
          "green_hist_0", "green_hist_1", "green_hist_2", "green_hist_3", "green_hist_4",
          "green_hist_5", "green_hist_6", "green_hist_7", "green_mean", "green_std", "green_median",
          "green_energy", "green_skewness",
          "blue_hist_0", "blue_hist_1", "blue_hist_2", "blue_hist_3", "blue_hist_4", "blue_hist_5",
          "blue_hist_6", "blue_hist_7", "blue_mean", "blue_std", "blue_median", "blue_energy",
          "blue_skewness"};
}

struct Moments {
  double mean = 0, variance = 0, skewness = 0;
};

Moments moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  const double n = static_cast<double>(xs.size());
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double m2 = 0, m3 = 0;
  for (double x : xs) {
    const double d = x - m.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m.variance = m2;
  m.skewness = m2 > 1e-24 ? m3 / std::pow(m2, 1.5) : 0.0;
  return m;
}

double entropy_bits(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

// Local raster covering a bounding box, used for membership tests.
struct LocalMask {
  BoundingBox box;
  std::vector<std::uint8_t> inside;

  LocalMask(const EntityMask& m, int pad) {
    box = {std::max(0, m.bbox.x0 - pad), std::max(0, m.bbox.y0 - pad),
           std::min(m.image_width, m.bbox.x1 + pad), std::min(m.image_height, m.bbox.y1 + pad)};
    inside.assign(static_cast<std::size_t>(box.width()) * box.height(), 0);
    for (const auto& p : m.pixels) inside[index(p.x, p.y)] = 1;
  }

  int width() const { return box.width(); }
  int height() const { return box.height(); }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y - box.y0) * box.width() + (x - box.x0);
  }
  bool contains(int x, int y) const {
    return x >= box.x0 && y >= box.y0 && x < box.x1 && y < box.y1 && inside[index(x, y)];
  }
};

using Point = std::pair<long long, long long>;

long long cross(const Point& o, const Point& a, const Point& b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

// Andrew's monotone chain; collinear points dropped.
std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Number of lattice points inside or on the convex hull of the mask's pixel centers.
std::size_t hull_lattice_count(const EntityMask& mask) {
  std::vector<Point> pts;
  pts.reserve(mask.pixels.size());
  for (const auto& p : mask.pixels) pts.emplace_back(p.x, p.y);
  const auto hull = convex_hull(std::move(pts));
  if (hull.size() == 1) return 1;
  if (hull.size() == 2) {
    const auto dx = std::llabs(hull[1].first - hull[0].first);
    const auto dy = std::llabs(hull[1].second - hull[0].second);
    return static_cast<std::size_t>(std::gcd(dx, dy) + 1);
  }
  // hull is counter-clockwise; a point is inside iff it is left of or on every edge
  std::size_t count = 0;
  for (int y = mask.bbox.y0; y < mask.bbox.y1; ++y) {
    for (int x = mask.bbox.x0; x < mask.bbox.x1; ++x) {
      const Point q{x, y};
      bool in = true;
      for (std::size_t i = 0; i < hull.size() && in; ++i) {
        if (cross(hull[i], hull[(i + 1) % hull.size()], q) < 0) in = false;
      }
      if (in) ++count;
    }
  }
  return count;
}

std::size_t crack_perimeter(const EntityMask& mask) {
  const LocalMask local(mask, 1);
  std::size_t edges = 0;
  constexpr int dx[4] = {1, -1, 0, 0};
  constexpr int dy[4] = {0, 0, 1, -1};
  for (const auto& p : mask.pixels) {
    for (int k = 0; k < 4; ++k) {
      if (!local.contains(p.x + dx[k], p.y + dy[k])) ++edges;
    }
  }
  return edges;
}

// Accumulates symmetric co-occurrence counts for one offset.
template <typename Inside, typename Level>
std::size_t accumulate_pairs(std::vector<double>& counts, int width, int height, int levels, int dx,
                             int dy, Inside inside, Level level) {
  std::size_t pairs = 0;
  for (int y = 0; y < height; ++y) {
    const int ny = y + dy;
    if (ny < 0 || ny >= height) continue;
    for (int x = 0; x < width; ++x) {
      const int nx = x + dx;
      if (nx < 0 || nx >= width || !inside(x, y) || !inside(nx, ny)) continue;
      const int a = level(x, y), b = level(nx, ny);
      counts[static_cast<std::size_t>(a) * levels + b] += 1.0;
      counts[static_cast<std::size_t>(b) * levels + a] += 1.0;
      ++pairs;
    }
  }
  return pairs;
}

constexpr int kOffsets[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};

template <typename Inside, typename Level>
Glcm averaged_glcm(int width, int height, int levels, Inside inside, Level level, int fallback_level) {
  Glcm out(levels);
  int used = 0;
  for (const auto& off : kOffsets) {
    std::vector<double> counts(static_cast<std::size_t>(levels) * levels, 0.0);
    const auto pairs = accumulate_pairs(counts, width, height, levels, off[0], off[1], inside, level);
    if (pairs == 0) continue;
    const double total = 2.0 * static_cast<double>(pairs);
    for (int i = 0; i < levels; ++i) {
      for (int j = 0; j < levels; ++j) out(i, j) += counts[static_cast<std::size_t>(i) * levels + j] / total;
    }
    ++used;
  }
  if (used == 0) {
    out(fallback_level, fallback_level) = 1.0;
    return out;
  }
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) out(i, j) /= used;
  }
  return out;
}

}  // namespace

const std::array<std::string_view, kSuperpixelFeatureCount> kSuperpixelFeatureNames = make_superpixel_names();

EntityMask EntityMask::from_pixels(std::vector<PixelCoord> pixels, int image_width, int image_height) {
  if (pixels.empty()) throw std::invalid_argument("EntityMask: empty pixel set");
  EntityMask m;
  m.image_width = image_width;
  m.image_height = image_height;
  m.bbox = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::min(),
            std::numeric_limits<int>::min()};
  for (const auto& p : pixels) {
    m.bbox.x0 = std::min(m.bbox.x0, p.x);
    m.bbox.y0 = std::min(m.bbox.y0, p.y);
    m.bbox.x1 = std::max(m.bbox.x1, p.x + 1);
    m.bbox.y1 = std::max(m.bbox.y1, p.y + 1);
  }
  m.pixels = std::move(pixels);
  return m;
}

double EntityMask::centroid_x() const {
  double s = 0;
  for (const auto& p : pixels) s += p.x;
  return s / static_cast<double>(pixels.size());
}

double EntityMask::centroid_y() const {
  double s = 0;
  for (const auto& p : pixels) s += p.y;
  return s / static_cast<double>(pixels.size());
}

int otsu_threshold(const std::array<std::size_t, 256>& histogram) {
  const double total = static_cast<double>(std::accumulate(histogram.begin(), histogram.end(), std::size_t{0}));
  const auto distinct = std::count_if(histogram.begin(), histogram.end(), [](std::size_t c) { return c > 0; });
  if (distinct < 2) return -1;
  double sum_all = 0;
  for (int i = 0; i < 256; ++i) sum_all += i * static_cast<double>(histogram[i]);
  double w0 = 0, sum0 = 0, best = -1.0;
  int best_t = -1;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(histogram[t]);
    sum0 += t * static_cast<double>(histogram[t]);
    const double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double mu0 = sum0 / w0, mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<EntityMask> connected_components(const std::vector<std::uint8_t>& foreground, int width,
                                             int height, std::size_t min_area) {
  std::vector<EntityMask> out;
  std::vector<std::uint8_t> seen(foreground.size(), 0);
  std::vector<PixelCoord> stack;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto i = static_cast<std::size_t>(y) * width + x;
      if (!foreground[i] || seen[i]) continue;
      std::vector<PixelCoord> pixels;
      stack.push_back({x, y});
      seen[i] = 1;
      while (!stack.empty()) {
        const auto p = stack.back();
        stack.pop_back();
        pixels.push_back(p);
        const PixelCoord nbrs[4] = {{p.x + 1, p.y}, {p.x - 1, p.y}, {p.x, p.y + 1}, {p.x, p.y - 1}};
        for (const auto& q : nbrs) {
          if (q.x < 0 || q.y < 0 || q.x >= width || q.y >= height) continue;
          const auto j = static_cast<std::size_t>(q.y) * width + q.x;
          if (foreground[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(q);
          }
        }
      }
      if (pixels.size() < min_area) continue;
      std::sort(pixels.begin(), pixels.end(),
                [](const PixelCoord& a, const PixelCoord& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
      out.push_back(EntityMask::from_pixels(std::move(pixels), width, height));
    }
  }
  return out;
}

std::vector<EntityMask> detect_nuclei(const RgbImage& image) {
  std::array<std::size_t, 256> hist{};
  std::vector<std::uint8_t> inverted(static_cast<std::size_t>(image.width) * image.height);
  for (std::size_t i = 0; i < inverted.size(); ++i) {
    const auto* p = &image.pixels[i * 3];
    const auto lum8 = static_cast<int>(std::lround(luminance(p[0], p[1], p[2]) * 255.0));
    inverted[i] = static_cast<std::uint8_t>(255 - std::clamp(lum8, 0, 255));
    ++hist[inverted[i]];
  }
  const int t = otsu_threshold(hist);
  if (t < 0) return {};
  std::vector<std::uint8_t> fg(inverted.size());
  for (std::size_t i = 0; i < fg.size(); ++i) fg[i] = inverted[i] > t ? 1 : 0;
  return connected_components(fg, image.width, image.height, 10);
}

std::vector<EntityMask> masks_from_nuclei(const std::vector<Nucleus>& nuclei, int width, int height) {
  std::vector<EntityMask> out;
  for (const auto& n : nuclei) {
    std::vector<PixelCoord> pixels;
    const int x0 = std::max(0, static_cast<int>(std::floor(n.x - n.radius)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(n.x + n.radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(n.y - n.radius)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(n.y + n.radius)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - n.x, dy = y - n.y;
        if (dx * dx + dy * dy <= n.radius * n.radius) pixels.push_back({x, y});
      }
    }
    if (pixels.empty()) {
      const int x = std::clamp(static_cast<int>(std::lround(n.x)), 0, width - 1);
      const int y = std::clamp(static_cast<int>(std::lround(n.y)), 0, height - 1);
      pixels.push_back({x, y});
    }
    out.push_back(EntityMask::from_pixels(std::move(pixels), width, height));
  }
  return out;
}

FeatureVector shape_features(const EntityMask& mask) {
  const double area = static_cast<double>(mask.area());
  const double cx = mask.centroid_x(), cy = mask.centroid_y();
  double mu20 = 0, mu02 = 0, mu11 = 0;
  for (const auto& p : mask.pixels) {
    const double dx = p.x - cx, dy = p.y - cy;
    mu20 += dx * dx;
    mu02 += dy * dy;
    mu11 += dx * dy;
  }
  mu20 /= area;
  mu02 /= area;
  mu11 /= area;
  const double half_trace = 0.5 * (mu20 + mu02);
  const double root = std::sqrt(0.25 * (mu20 - mu02) * (mu20 - mu02) + mu11 * mu11);
  const double l1 = half_trace + root;
  const double l2 = std::max(0.0, half_trace - root);
  const double eccentricity = l1 > 0 ? std::sqrt(std::max(0.0, 1.0 - l2 / l1)) : 0.0;
  double orientation = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
  if (orientation <= -std::numbers::pi / 2) orientation += std::numbers::pi;
  const double solidity = area / static_cast<double>(hull_lattice_count(mask));
  return {{eccentricity, area, 4.0 * std::sqrt(l1), 4.0 * std::sqrt(l2),
           static_cast<double>(crack_perimeter(mask)), solidity, orientation},
          kShapeFeatureNames};
}

double Glcm::sum() const { return std::accumulate(p_.begin(), p_.end(), 0.0); }

int quantize(double value, int levels) {
  const int q = static_cast<int>(std::floor(value * levels));
  return std::clamp(q, 0, levels - 1);
}

Glcm glcm_direction(const GrayImage& patch, int levels, int dx, int dy) {
  if (patch.width < 2 || patch.height < 2) throw std::invalid_argument("glcm: patch smaller than 2x2");
  if (levels < 2) throw std::invalid_argument("glcm: levels must be >= 2");
  std::vector<double> counts(static_cast<std::size_t>(levels) * levels, 0.0);
  const auto pairs = accumulate_pairs(
      counts, patch.width, patch.height, levels, dx, dy, [](int, int) { return true; },
      [&](int x, int y) { return quantize(patch.at(x, y), levels); });
  Glcm out(levels);
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      out(i, j) = counts[static_cast<std::size_t>(i) * levels + j] / (2.0 * static_cast<double>(pairs));
    }
  }
  return out;
}

Glcm glcm(const GrayImage& patch, int levels) {
  if (patch.width < 2 || patch.height < 2) throw std::invalid_argument("glcm: patch smaller than 2x2");
  if (levels < 2) throw std::invalid_argument("glcm: levels must be >= 2");
  return averaged_glcm(
      patch.width, patch.height, levels, [](int, int) { return true; },
      [&](int x, int y) { return quantize(patch.at(x, y), levels); }, 0);
}

Glcm glcm_masked(const std::vector<int>& quantized, const std::vector<std::uint8_t>& inside, int width,
                 int height, int levels) {
  int fallback = 0;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    if (inside[i]) {
      fallback = quantized[i];
      break;
    }
  }
  return averaged_glcm(
      width, height, levels,
      [&](int x, int y) { return inside[static_cast<std::size_t>(y) * width + x] != 0; },
      [&](int x, int y) { return quantized[static_cast<std::size_t>(y) * width + x]; }, fallback);
}

GlcmStats glcm_stats(const Glcm& m) {
  GlcmStats s;
  for (int i = 0; i < m.levels(); ++i) {
    for (int j = 0; j < m.levels(); ++j) {
      const double p = m(i, j);
      if (p == 0.0) continue;
      const double d = i - j;
      s.contrast += p * d * d;
      s.dissimilarity += p * std::abs(d);
      s.homogeneity += p / (1.0 + d * d);
      s.asm_ += p * p;
      s.entropy -= p * std::log2(p);
    }
  }
  s.energy = std::sqrt(s.asm_);
  return s;
}

FeatureVector texture_features_nucleus(const GrayImage& luminance, const EntityMask& mask) {
  constexpr int kRing = 5;
  const LocalMask local(mask, kRing);

  std::vector<double> fg;
  fg.reserve(mask.area());
  for (const auto& p : mask.pixels) fg.push_back(luminance.at(p.x, p.y));

  std::vector<std::uint8_t> ring(local.inside.size(), 0);
  std::vector<PixelCoord> disc;
  for (int dy = -kRing; dy <= kRing; ++dy) {
    for (int dx = -kRing; dx <= kRing; ++dx) {
      if (dx * dx + dy * dy <= kRing * kRing) disc.push_back({dx, dy});
    }
  }
  for (const auto& p : mask.pixels) {
    for (const auto& d : disc) {
      const int x = p.x + d.x, y = p.y + d.y;
      if (x < local.box.x0 || y < local.box.y0 || x >= local.box.x1 || y >= local.box.y1) continue;
      const auto i = local.index(x, y);
      if (!local.inside[i]) ring[i] = 1;
    }
  }
  double bg_sum = 0;
  std::size_t bg_count = 0;
  for (int y = local.box.y0; y < local.box.y1; ++y) {
    for (int x = local.box.x0; x < local.box.x1; ++x) {
      if (ring[local.index(x, y)]) {
        bg_sum += luminance.at(x, y);
        ++bg_count;
      }
    }
  }
  const Moments fm = moments(fg);
  const double bg_mean = bg_count > 0 ? bg_sum / static_cast<double>(bg_count) : fm.mean;

  std::array<double, kGlcmLevels> hist{};
  for (double v : fg) hist[quantize(v, kGlcmLevels)] += 1.0 / static_cast<double>(fg.size());

  const auto& b = mask.bbox;
  std::vector<int> q(static_cast<std::size_t>(b.width()) * b.height());
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      q[static_cast<std::size_t>(y - b.y0) * b.width() + (x - b.x0)] = quantize(luminance.at(x, y), kGlcmLevels);
    }
  }
  const std::vector<std::uint8_t> all(q.size(), 1);
  const auto gs = glcm_stats(glcm_masked(q, all, b.width(), b.height(), kGlcmLevels));

  return {{bg_mean - fm.mean, std::sqrt(fm.variance), fm.skewness, entropy_bits(hist), gs.dissimilarity,
           gs.homogeneity, gs.energy, gs.asm_},
          kNucleusTextureFeatureNames};
}

FeatureVector superpixel_features(const RgbImage& image, const EntityMask& region) {
  const LocalMask local(region, 0);
  std::vector<int> q(local.inside.size(), 0);
  for (const auto& p : region.pixels) {
    const auto* px = &image.pixels[image.index(p.x, p.y)];
    q[local.index(p.x, p.y)] = quantize(luminance(px[0], px[1], px[2]), kGlcmLevels);
  }
  const auto gs = glcm_stats(glcm_masked(q, local.inside, local.width(), local.height(), kGlcmLevels));

  std::vector<double> values = {gs.contrast, gs.dissimilarity, gs.homogeneity, gs.energy, gs.entropy, gs.asm_};
  values.reserve(kSuperpixelFeatureCount);
  const double n = static_cast<double>(region.area());
  for (int c = 0; c < 3; ++c) {
    std::array<std::size_t, 256> counts{};
    for (const auto& p : region.pixels) ++counts[image.at(p.x, p.y, c)];
    std::array<double, 8> hist{};
    double sum = 0, sum_sq = 0;
    for (int v = 0; v < 256; ++v) {
      const double k = static_cast<double>(counts[v]);
      hist[v / 32] += k;
      const double x = v / 255.0;
      sum += k * x;
      sum_sq += k * x * x;
    }
    for (double& h : hist) h /= n;
    const double mean = sum / n;
    double m2 = 0, m3 = 0;
    for (int v = 0; v < 256; ++v) {
      if (!counts[v]) continue;
      const double d = v / 255.0 - mean;
      m2 += static_cast<double>(counts[v]) * d * d;
      m3 += static_cast<double>(counts[v]) * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    // median: mean of the elements at ranks floor((n-1)/2) and floor(n/2)
    const std::size_t lo_rank = (region.area() - 1) / 2, hi_rank = region.area() / 2;
    int lo_val = -1, hi_val = -1;
    std::size_t seen = 0;
    for (int v = 0; v < 256 && hi_val < 0; ++v) {
      seen += counts[v];
      if (lo_val < 0 && seen > lo_rank) lo_val = v;
      if (seen > hi_rank) hi_val = v;
    }
    values.insert(values.end(), hist.begin(), hist.end());
    values.push_back(mean);
    values.push_back(std::sqrt(m2));
    values.push_back((lo_val + hi_val) / (2.0 * 255.0));
    values.push_back(sum_sq / n);
    values.push_back(m2 > 1e-24 ? m3 / std::pow(m2, 1.5) : 0.0);
  }
  return {std::move(values), kSuperpixelFeatureNames};
}

}  // namespace hact
