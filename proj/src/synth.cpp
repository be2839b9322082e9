#include "hact/synth.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "hact/errors.hpp"
#include "hact/io.hpp"

namespace hact {

namespace {

constexpr double kPi = std::numbers::pi;

struct Rgb {
  double r, g, b;
};

constexpr Rgb kBackgroundColor{244, 242, 246};
constexpr Rgb kStromaColor{236, 210, 225};
constexpr Rgb kEpitheliumColor{225, 165, 200};
constexpr Rgb kNecrosisColor{110, 75, 100};
constexpr Rgb kNucleusColor{55, 25, 95};

Rgb tissue_color(TissueType t) {
  switch (t) {
    case TissueType::Background: return kBackgroundColor;
    case TissueType::Stroma: return kStromaColor;
    case TissueType::Epithelium: return kEpitheliumColor;
    case TissueType::Necrosis: return kNecrosisColor;
  }
  return kBackgroundColor;
}

struct Tuft {
  double cx, cy, radius;
};

struct Duct {
  double cx, cy, radius, lumen;
  std::vector<Tuft> tufts;
};

class Canvas {
 public:
  Canvas(int w, int h, TissueType base) : w_(w), h_(h), tissue_(static_cast<std::size_t>(w) * h, base) {}

  void fill_disc(double cx, double cy, double r, TissueType t) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(w_ - 1, static_cast<int>(std::ceil(cx + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(h_ - 1, static_cast<int>(std::ceil(cy + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy <= r * r) tissue_[idx(x, y)] = t;
      }
    }
  }

  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }
  TissueType at(int x, int y) const { return tissue_[idx(x, y)]; }
  TissueType& at(int x, int y) { return tissue_[idx(x, y)]; }
  std::vector<TissueType>& tissue() { return tissue_; }

 private:
  int w_, h_;
  std::vector<TissueType> tissue_;
};

class NucleusPlacer {
 public:
  NucleusPlacer(int w, int h, double gap) : w_(w), h_(h), gap_(gap) {}

  bool try_place(const Nucleus& n) {
    const double margin = n.radius + 2.0;
    if (n.x < margin || n.y < margin || n.x > w_ - 1 - margin || n.y > h_ - 1 - margin) return false;
    for (const auto& o : placed_) {
      const double dx = o.x - n.x, dy = o.y - n.y;
      const double min_d = o.radius + n.radius + gap_;
      if (dx * dx + dy * dy < min_d * min_d) return false;
    }
    placed_.push_back(n);
    return true;
  }

  std::vector<Nucleus>& placed() { return placed_; }

 private:
  int w_, h_;
  double gap_;
  std::vector<Nucleus> placed_;
};

Nucleus random_nucleus(const ClassMotif& m, double x, double y, CounterRng& rng) {
  Nucleus n;
  n.x = x;
  n.y = y;
  n.radius = rng.uniform(m.radius_min, m.radius_max);
  n.aspect = rng.uniform(1.0, m.aspect_max);
  n.angle = rng.uniform(0.0, kPi);
  n.intensity = rng.uniform(0.8, 1.0);
  return n;
}

int expected_count(double density_per_10k, double area, CounterRng& rng) {
  const double mean = density_per_10k * area / 10000.0;
  // jitter the count by +-15% so RoIs of one class differ
  return std::max(0, static_cast<int>(std::lround(mean * rng.uniform(0.85, 1.15))));
}

bool inside_any_duct(const std::vector<Duct>& ducts, double x, double y, double pad) {
  for (const auto& d : ducts) {
    const double dx = x - d.cx, dy = y - d.cy;
    const double r = d.radius + pad;
    if (dx * dx + dy * dy < r * r) return true;
  }
  return false;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

SynthConfig SynthConfig::standard(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;

  // sparse isolated round nuclei on a light background
  ClassMotif normal;
  normal.light_base = true;
  normal.patches = 1.0;
  normal.scatter_density = 22.0;
  normal.scatter_clusters = 7;
  normal.cluster_sigma = 18.0;
  normal.aspect_max = 1.1;
  normal.min_gap = 3.0;

  // a few dilated ducts with a regular double layer
  ClassMotif benign;
  benign.min_ducts = 3;
  benign.max_ducts = 4;
  benign.duct_radius_min = 36.0;
  benign.duct_radius_max = 46.0;
  benign.lumen_fraction = 0.38;
  benign.ring_spacing = 10.5;
  benign.ring_layers = 3;
  benign.epithelium_density = 80.0;
  benign.scatter_density = 2.0;

  // benign ducts with crowded tufts and cells bridging the lumen
  ClassMotif atypical = benign;
  atypical.lumen_fraction = 0.42;
  atypical.epithelium_density = 120.0;
  atypical.inner_cells = 60;
  atypical.min_ducts = 4;
  atypical.max_ducts = 5;
  atypical.min_gap = 1.5;
  atypical.radius_min = 3.2;
  atypical.radius_max = 4.4;
  atypical.ring_spacing = 11.0;

  // large ducts filled by several cell layers around a necrotic core
  ClassMotif dcis;
  dcis.min_ducts = 2;
  dcis.max_ducts = 3;
  dcis.duct_radius_min = 42.0;
  dcis.duct_radius_max = 54.0;
  dcis.lumen_fraction = 0.3;
  dcis.ring_spacing = 10.5;
  dcis.ring_layers = 3;
  dcis.epithelium_density = 160.0;
  dcis.necrotic_core = true;
  dcis.scatter_density = 2.0;

  // diffuse dense infiltration of pleomorphic cells through textured stroma
  ClassMotif invasive;
  invasive.scatter_density = 50.0;
  invasive.stroma_band = true;
  invasive.band_fraction = 0.6;
  invasive.band_density = 120.0;
  invasive.radius_min = 2.8;
  invasive.radius_max = 4.4;
  invasive.aspect_max = 1.7;
  invasive.min_gap = 1.5;
  invasive.patches = 0.3;

  cfg.class_motifs = {normal, benign, atypical, dcis, invasive};
  return cfg;
}

SynthConfig SynthConfig::hard(std::uint64_t seed) {
  SynthConfig cfg = standard(seed);
  auto& m = cfg.class_motifs;
  // 0 vs 4: identical tissue layout (textured band), different cell density and shape
  m[0].stroma_band = true;
  m[0].band_density = 14.0;
  m[0].scatter_density = 8.0;
  m[0].patches = 0.5;
  m[4].band_density = 32.0;
  m[4].scatter_density = 8.0;
  // 2 vs 3: identical ring cell layout, only the lumen content differs
  m[2] = m[3];
  m[2].necrotic_core = false;
  // 1 vs 2: partially overlapping duct geometry
  m[1].ring_spacing = 10.5;
  m[1].duct_radius_min = 36.0;
  m[1].duct_radius_max = 50.0;
  m[1].lumen_fraction = 0.45;
  cfg.noise_level = 0.3;
  return cfg;
}

void SynthConfig::validate() const {
  if (min_size < 128 || max_size < min_size) throw std::invalid_argument("synth: image sizes must be >= 128");
  if (num_classes < 2) throw std::invalid_argument("synth: num_classes must be >= 2");
  if (static_cast<int>(class_motifs.size()) < num_classes) {
    throw std::invalid_argument("synth: missing class motifs");
  }
  if (num_slides < 1 || rois_per_slide < 1) throw std::invalid_argument("synth: empty dataset");
  if (noise_level < 0.0 || noise_level > 1.0) throw std::invalid_argument("synth: noise_level outside [0,1]");
  for (int c = 0; c < num_classes; ++c) {
    const auto& m = class_motifs[c];
    if (m.scatter_density <= 0.0 || m.ring_spacing <= 0.0 || (m.stroma_band && m.band_density <= 0.0)) {
      throw std::invalid_argument("synth: densities must be positive (class " + std::to_string(c) + ")");
    }
    if (m.min_ducts > m.max_ducts || m.radius_min <= 0.0 || m.radius_max < m.radius_min) {
      throw std::invalid_argument("synth: inconsistent motif ranges (class " + std::to_string(c) + ")");
    }
  }
}

SynthSample render_roi(const SynthConfig& cfg, int label, int width, int height,
                       const SlideStyle& style, CounterRng& rng) {
  if (label < 0 || label >= cfg.num_classes) throw std::invalid_argument("render_roi: label out of range");
  const ClassMotif& m = cfg.class_motifs[label];
  const double min_side = std::min(width, height);
  Canvas canvas(width, height, m.light_base ? TissueType::Background : TissueType::Stroma);

  // patches of the other base tissue (fat on stroma, stroma on fat)
  const double patches = m.patches;
  int num_patches = static_cast<int>(patches);
  if (rng.uniform() < patches - num_patches) ++num_patches;
  for (int i = 0; i < num_patches; ++i) {
    const double r = rng.uniform(0.12, 0.25) * min_side;
    canvas.fill_disc(rng.uniform(0, width), rng.uniform(0, height), r,
                     m.light_base ? TissueType::Stroma : TissueType::Background);
  }

  // textured stroma band through a point near the center
  std::vector<std::uint8_t> band(static_cast<std::size_t>(width) * height, 0);
  double band_area = 0.0;
  const double band_theta = rng.uniform(0.0, kPi);
  if (m.stroma_band) {
    const double px = width * rng.uniform(0.35, 0.65);
    const double py = height * rng.uniform(0.35, 0.65);
    const double nx = -std::sin(band_theta), ny = std::cos(band_theta);
    const double half = 0.5 * m.band_fraction * min_side;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (std::abs((x - px) * nx + (y - py) * ny) < half) {
          band[canvas.idx(x, y)] = 1;
          canvas.at(x, y) = TissueType::Stroma;
          band_area += 1.0;
        }
      }
    }
  }

  // ducts
  std::vector<Duct> ducts;
  const int num_ducts = m.max_ducts > 0 ? rng.uniform_int(m.min_ducts, m.max_ducts) : 0;
  for (int i = 0; i < num_ducts; ++i) {
    for (int attempt = 0; attempt < 60; ++attempt) {
      double radius = rng.uniform(m.duct_radius_min, m.duct_radius_max);
      radius = std::min(radius, 0.45 * min_side - 4.0);
      const double cx = rng.uniform(radius + 4.0, width - radius - 4.0);
      const double cy = rng.uniform(radius + 4.0, height - radius - 4.0);
      bool free = true;
      for (const auto& d : ducts) {
        const double dx = d.cx - cx, dy = d.cy - cy;
        if (std::hypot(dx, dy) < d.radius + radius + 8.0) free = false;
      }
      if (!free) continue;
      ducts.push_back({cx, cy, radius, m.lumen_fraction * radius});
      break;
    }
  }
  for (const auto& d : ducts) {
    canvas.fill_disc(d.cx, d.cy, d.radius, TissueType::Epithelium);
    canvas.fill_disc(d.cx, d.cy, d.lumen, m.necrotic_core ? TissueType::Necrosis : TissueType::Background);
  }
  // irregular epithelial tufts growing into the lumen
  if (m.inner_cells > 0) {
    for (auto& d : ducts) {
      const int tufts = rng.uniform_int(3, 5);
      for (int t = 0; t < tufts; ++t) {
        const double a = rng.uniform(0.0, 2 * kPi);
        const Tuft tuft{d.cx + d.lumen * std::cos(a), d.cy + d.lumen * std::sin(a), d.lumen * rng.uniform(0.3, 0.5)};
        canvas.fill_disc(tuft.cx, tuft.cy, tuft.radius, TissueType::Epithelium);
        d.tufts.push_back(tuft);
      }
    }
  }

  NucleusPlacer placer(width, height, m.min_gap);
  for (const auto& d : ducts) {
    const double rmax = m.radius_max;
    const double inner = d.lumen + rmax + (m.necrotic_core ? 6.0 : 1.0);
    const double outer = d.radius - rmax - 1.0;
    std::vector<double> layers;
    if (m.ring_layers <= 1 || outer - inner < 2 * rmax + 3) {
      layers.push_back(0.5 * (inner + outer));
    } else {
      for (int l = 0; l < m.ring_layers; ++l) {
        layers.push_back(inner + (outer - inner) * l / (m.ring_layers - 1));
      }
    }
    for (double rho : layers) {
      const int count = std::max(3, static_cast<int>(2 * kPi * rho / m.ring_spacing));
      const double phase = rng.uniform(0.0, 2 * kPi);
      for (int i = 0; i < count; ++i) {
        const double a = phase + 2 * kPi * i / count + rng.uniform(-0.1, 0.1) * (2 * kPi / count);
        const double r = rho + rng.uniform(-1.0, 1.0);
        placer.try_place(random_nucleus(m, d.cx + r * std::cos(a), d.cy + r * std::sin(a), rng));
      }
    }
    if (m.epithelium_density > 0.0 && outer > inner) {
      const double wall = kPi * (outer * outer - inner * inner);
      const int extra = expected_count(m.epithelium_density, wall, rng);
      for (int i = 0; i < extra; ++i) {
        for (int attempt = 0; attempt < 30; ++attempt) {
          const double a = rng.uniform(0.0, 2 * kPi);
          const double r = std::sqrt(rng.uniform(inner * inner, outer * outer));
          if (placer.try_place(random_nucleus(m, d.cx + r * std::cos(a), d.cy + r * std::sin(a), rng))) break;
        }
      }
    }
    for (int i = 0; i < m.inner_cells; ++i) {
      if (d.tufts.empty()) break;
      for (int attempt = 0; attempt < 20; ++attempt) {
        const Tuft& t = d.tufts[rng.below(d.tufts.size())];
        const double a = rng.uniform(0.0, 2 * kPi);
        const double r = std::sqrt(rng.uniform(0.0, 1.0)) * t.radius;
        if (placer.try_place(random_nucleus(m, t.cx + r * std::cos(a), t.cy + r * std::sin(a), rng))) break;
      }
    }
  }
  if (m.stroma_band && band_area > 0) {
    const int count = expected_count(m.band_density, band_area, rng);
    for (int i = 0; i < count; ++i) {
      for (int attempt = 0; attempt < 30; ++attempt) {
        const double x = rng.uniform(0, width), y = rng.uniform(0, height);
        const int xi = std::clamp(static_cast<int>(x), 0, width - 1);
        const int yi = std::clamp(static_cast<int>(y), 0, height - 1);
        if (!band[canvas.idx(xi, yi)] || inside_any_duct(ducts, x, y, m.radius_max + 2)) continue;
        if (placer.try_place(random_nucleus(m, x, y, rng))) break;
      }
    }
  }
  {
    const int count = expected_count(m.scatter_density, static_cast<double>(width) * height, rng);
    std::vector<std::pair<double, double>> clusters;
    for (int c = 0; c < m.scatter_clusters; ++c) {
      clusters.emplace_back(rng.uniform(0.1, 0.9) * width, rng.uniform(0.1, 0.9) * height);
    }
    for (int i = 0; i < count; ++i) {
      for (int attempt = 0; attempt < 30; ++attempt) {
        double x = rng.uniform(0, width), y = rng.uniform(0, height);
        if (!clusters.empty()) {
          const auto& c = clusters[rng.below(clusters.size())];
          x = c.first + m.cluster_sigma * rng.normal();
          y = c.second + m.cluster_sigma * rng.normal();
        }
        if (inside_any_duct(ducts, x, y, m.radius_max + 2)) continue;
        if (placer.try_place(random_nucleus(m, x, y, rng))) break;
      }
    }
  }

  // paint tissue
  std::vector<double> px(static_cast<std::size_t>(width) * height * 3);
  const double stripe_nx = std::cos(band_theta), stripe_ny = std::sin(band_theta);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto i = canvas.idx(x, y);
      Rgb c = tissue_color(canvas.at(x, y));
      double tex = 0.0;
      if (band[i]) tex = 12.0 * std::sin(2 * kPi * (x * stripe_nx + y * stripe_ny) / 6.0);
      if (canvas.at(x, y) == TissueType::Necrosis) tex = 10.0 * rng.normal();
      px[i * 3 + 0] = c.r + tex;
      px[i * 3 + 1] = c.g + tex;
      px[i * 3 + 2] = c.b + tex;
    }
  }
  // nuclei with Gaussian falloff inside the ellipse
  for (const auto& n : placer.placed()) {
    const double a = n.radius, b = n.radius / n.aspect;
    const double ca = std::cos(n.angle), sa = std::sin(n.angle);
    const int x0 = std::max(0, static_cast<int>(std::floor(n.x - a)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(n.x + a)));
    const int y0 = std::max(0, static_cast<int>(std::floor(n.y - a)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(n.y + a)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - n.x, dy = y - n.y;
        const double u = (dx * ca + dy * sa) / a;
        const double v = (-dx * sa + dy * ca) / b;
        const double rho2 = u * u + v * v;
        if (rho2 > 1.0) continue;
        const double alpha = n.intensity * std::exp(-0.5 * rho2);
        const auto i = canvas.idx(x, y) * 3;
        px[i + 0] = (1 - alpha) * px[i + 0] + alpha * kNucleusColor.r;
        px[i + 1] = (1 - alpha) * px[i + 1] + alpha * kNucleusColor.g;
        px[i + 2] = (1 - alpha) * px[i + 2] + alpha * kNucleusColor.b;
      }
    }
  }

  SynthSample sample;
  sample.label = label;
  sample.image = RgbImage(width, height);
  const double sigma = 25.0 * cfg.noise_level;
  for (std::size_t i = 0; i < px.size(); ++i) {
    double v = px[i] + style.shift[i % 3];
    if (sigma > 0) v += sigma * rng.normal();
    sample.image.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  sample.nuclei = std::move(placer.placed());
  sample.tissue = std::move(canvas.tissue());
  return sample;
}

std::vector<SynthSample> generate_dataset(const SynthConfig& cfg, int jobs) {
  cfg.validate();
  const int total = cfg.num_slides * cfg.rois_per_slide;

  struct RoiPlan {
    int label, width, height, slide;
    SlideStyle style;
  };
  std::vector<RoiPlan> plan;
  plan.reserve(static_cast<std::size_t>(total));
  for (int s = 0; s < cfg.num_slides; ++s) {
    CounterRng slide_rng(CounterRng::derive(cfg.seed, 0x51DE0000ULL + static_cast<std::uint64_t>(s)));
    SlideStyle style;
    for (double& c : style.shift) c = slide_rng.uniform(-cfg.slide_jitter, cfg.slide_jitter);
    const int dominant = static_cast<int>(slide_rng.below(static_cast<std::uint64_t>(cfg.num_classes)));
    std::vector<double> weights(static_cast<std::size_t>(cfg.num_classes), 1.0);
    weights[dominant] = cfg.dominant_weight;
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    for (int r = 0; r < cfg.rois_per_slide; ++r) {
      double u = slide_rng.uniform() * wsum;
      int label = cfg.num_classes - 1;
      for (int c = 0; c < cfg.num_classes; ++c) {
        if (u < weights[c]) {
          label = c;
          break;
        }
        u -= weights[c];
      }
      const int w = slide_rng.uniform_int(cfg.min_size, cfg.max_size);
      const int h = slide_rng.uniform_int(cfg.min_size, cfg.max_size);
      plan.push_back({label, w, h, s, style});
    }
  }

  std::vector<SynthSample> out(static_cast<std::size_t>(total));
  auto render_one = [&](int i) {
    const auto& p = plan[i];
    CounterRng rng(CounterRng::derive(cfg.seed, static_cast<std::uint64_t>(i)));
    auto sample = render_roi(cfg, p.label, p.width, p.height, p.style, rng);
    char slide[32], roi[48];
    std::snprintf(slide, sizeof(slide), "slide_%03d", p.slide);
    std::snprintf(roi, sizeof(roi), "s%03d_r%03d", p.slide, i % cfg.rois_per_slide);
    sample.slide_id = slide;
    sample.roi_id = roi;
    out[i] = std::move(sample);
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (int i = 0; i < total; ++i) render_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < jobs; ++t) {
      workers.emplace_back([&] {
        for (int i = next++; i < total; i = next++) render_one(i);
      });
    }
    for (auto& w : workers) w.join();
  }
  return out;
}

std::string nuclei_to_csv(const std::vector<Nucleus>& nuclei) {
  std::string out = "x,y,radius,intensity\n";
  for (const auto& n : nuclei) {
    out += format_fixed(n.x) + "," + format_fixed(n.y) + "," + format_fixed(n.radius) + "," +
           format_fixed(n.intensity) + "\n";
  }
  return out;
}

std::vector<Nucleus> nuclei_from_csv(std::string_view text) {
  std::vector<Nucleus> out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError("nuclei csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,radius,intensity") throw ParseError("nuclei csv: bad header '" + line + "'");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[4];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 4; ++k) {
      auto [ptr, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc{} || (k < 3 && (ptr == end || *ptr != ',')) || (k == 3 && ptr != end)) {
        throw ParseError("nuclei csv: malformed row " + std::to_string(lineno));
      }
      p = ptr + 1;
    }
    Nucleus n;
    n.x = v[0];
    n.y = v[1];
    n.radius = v[2];
    n.intensity = v[3];
    out.push_back(n);
  }
  return out;
}

void write_dataset(const std::vector<SynthSample>& samples, const SynthConfig& cfg,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json rois = nlohmann::json::array();
  for (const auto& s : samples) {
    write_png(dir / (s.roi_id + ".png"), s.image);
    write_text_file(dir / (s.roi_id + ".nuclei.csv"), nuclei_to_csv(s.nuclei));
    rois.push_back({{"roi_id", s.roi_id},
                    {"slide_id", s.slide_id},
                    {"label", s.label},
                    {"width", s.image.width},
                    {"height", s.image.height}});
  }
  nlohmann::json manifest{{"version", 1},
                          {"seed", cfg.seed},
                          {"num_classes", cfg.num_classes},
                          {"rois", std::move(rois)}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(manifest_path));
    std::vector<ManifestEntry> out;
    for (const auto& r : j.at("rois")) {
      out.push_back({r.at("roi_id").get<std::string>(), r.at("slide_id").get<std::string>(),
                     r.at("label").get<int>(), r.at("width").get<int>(), r.at("height").get<int>()});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace hact
