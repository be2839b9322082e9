#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hact/image.hpp"
#include "hact/rng.hpp"

namespace hact {

/// Tissue classes painted into the per-pixel ground-truth map.
enum class TissueType : std::uint8_t { Background = 0, Stroma = 1, Epithelium = 2, Necrosis = 3 };

struct Nucleus {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;     // semi-major axis in pixels
  double intensity = 1.0;  // stain strength in [0, 1]
  double aspect = 1.0;     // semi-major / semi-minor, rendering only
  double angle = 0.0;      // major-axis angle in radians, rendering only
};

/// Structural recipe for one class. Densities are nuclei per 10,000 px.
struct ClassMotif {
  int min_ducts = 0;
  int max_ducts = 0;
  double duct_radius_min = 30.0;
  double duct_radius_max = 46.0;
  double lumen_fraction = 0.55;     // lumen radius / duct radius
  double ring_spacing = 11.0;       // arc length between ring nuclei
  int ring_layers = 1;
  int inner_cells = 0;              // irregular cells inside each lumen
  double epithelium_density = 0.0;  // extra nuclei packed into each duct wall after the rings
  bool necrotic_core = false;
  double scatter_density = 5.0;     // nuclei outside ducts and band
  int scatter_clusters = 0;         // 0: uniform scatter, else loose Gaussian clusters
  double cluster_sigma = 20.0;
  bool stroma_band = false;
  double band_density = 0.0;
  double band_fraction = 0.4;       // band width relative to min(w, h)
  double radius_min = 2.8;
  double radius_max = 4.0;
  double min_gap = 2.0;             // minimum free space between two nuclei
  double aspect_max = 1.15;
  bool light_base = false;          // canvas starts as background instead of stroma
  double patches = 1.0;             // expected number of patches of the other base tissue
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int num_slides = 40;
  int rois_per_slide = 10;
  int min_size = 256;
  int max_size = 320;
  int num_classes = 5;
  std::vector<ClassMotif> class_motifs;
  double noise_level = 0.1;
  double slide_jitter = 10.0;    // max per-slide RGB shift
  double dominant_weight = 3.0;  // slide class prior: dominant class weight vs 1 for others

  /// Five well-separated motifs (normal, benign, atypical, DCIS, invasive analogues).
  static SynthConfig standard(std::uint64_t seed);
  /// Motifs where cell layout and tissue layout each separate only some class pairs.
  static SynthConfig hard(std::uint64_t seed);

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct SynthSample {
  RgbImage image;
  std::vector<Nucleus> nuclei;
  std::vector<TissueType> tissue;  // ground-truth tissue map, width * height
  int label = 0;
  std::string slide_id;
  std::string roi_id;
};

struct SlideStyle {
  double shift[3] = {0.0, 0.0, 0.0};
};

SynthSample render_roi(const SynthConfig& cfg, int label, int width, int height,
                       const SlideStyle& style, CounterRng& rng);

/// Deterministic in cfg; `jobs` only changes wall-clock time.
std::vector<SynthSample> generate_dataset(const SynthConfig& cfg, int jobs = 1);

struct ManifestEntry {
  std::string roi_id;
  std::string slide_id;
  int label = 0;
  int width = 0;
  int height = 0;
};

/// Writes <roi>.png, <roi>.nuclei.csv and manifest.json.
void write_dataset(const std::vector<SynthSample>& samples, const SynthConfig& cfg,
                   const std::filesystem::path& dir);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path);

std::string nuclei_to_csv(const std::vector<Nucleus>& nuclei);
/// Parses `x,y,radius,intensity` rows (header required). Throws ParseError.
std::vector<Nucleus> nuclei_from_csv(std::string_view text);

}  // namespace hact
