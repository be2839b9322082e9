#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hact/image.hpp"
#include "hact/synth.hpp"

namespace hact {

struct PixelCoord {
  int x = 0;
  int y = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
};

/// Pixels of one connected entity (nucleus or tissue region).
struct EntityMask {
  std::vector<PixelCoord> pixels;
  BoundingBox bbox;
  int image_width = 0;
  int image_height = 0;

  static EntityMask from_pixels(std::vector<PixelCoord> pixels, int image_width, int image_height);

  std::size_t area() const { return pixels.size(); }
  double centroid_x() const;
  double centroid_y() const;
};

/// Feature values with a static, ordered schema.
struct FeatureVector {
  std::vector<double> values;
  std::span<const std::string_view> schema;
};

inline constexpr std::array<std::string_view, 7> kShapeFeatureNames = {
    "eccentricity", "area", "major_axis_length", "minor_axis_length",
    "perimeter",    "solidity", "orientation"};

inline constexpr std::array<std::string_view, 8> kNucleusTextureFeatureNames = {
    "fg_bg_difference", "intensity_std",    "intensity_skewness", "intensity_entropy",
    "glcm_dissimilarity", "glcm_homogeneity", "glcm_energy",      "glcm_asm"};

inline constexpr std::size_t kSuperpixelFeatureCount = 45;
extern const std::array<std::string_view, kSuperpixelFeatureCount> kSuperpixelFeatureNames;

inline constexpr int kGlcmLevels = 8;

/// Otsu threshold on inverted luminance, 4-connected components, area >= 10.
std::vector<EntityMask> detect_nuclei(const RgbImage& image);

/// Otsu threshold over a 256-bin histogram: class 0 is [0, t], class 1 is (t, 255].
/// Returns -1 when the histogram holds fewer than two distinct values.
int otsu_threshold(const std::array<std::size_t, 256>& histogram);

/// Filled discs from precomputed detections (nuclei.csv ingestion path).
std::vector<EntityMask> masks_from_nuclei(const std::vector<Nucleus>& nuclei, int width, int height);

/// 4-connected components of `foreground`, in raster order of first pixel.
std::vector<EntityMask> connected_components(const std::vector<std::uint8_t>& foreground, int width,
                                             int height, std::size_t min_area);

/// eccentricity, area, major/minor axis length, perimeter, solidity, orientation.
FeatureVector shape_features(const EntityMask& mask);

/// Normalized, symmetric gray-level co-occurrence matrix.
class Glcm {
 public:
  explicit Glcm(int levels) : levels_(levels), p_(static_cast<std::size_t>(levels) * levels, 0.0) {}

  int levels() const { return levels_; }
  double operator()(int i, int j) const { return p_[static_cast<std::size_t>(i) * levels_ + j]; }
  double& operator()(int i, int j) { return p_[static_cast<std::size_t>(i) * levels_ + j]; }
  double sum() const;

 private:
  int levels_;
  std::vector<double> p_;
};

struct GlcmStats {
  double contrast = 0, dissimilarity = 0, homogeneity = 0, energy = 0, entropy = 0, asm_ = 0;
};

int quantize(double value, int levels);

/// Co-occurrences at unit distance for one offset (dx, dy). Throws for patches under 2x2.
Glcm glcm_direction(const GrayImage& patch, int levels, int dx, int dy);
/// Average of the four normalized directional matrices (0, 45, 90, 135 degrees).
Glcm glcm(const GrayImage& patch, int levels = kGlcmLevels);
/// Same as glcm() but only pairs with both pixels inside `inside` count. A region
/// without any pair yields the single diagonal entry of its (constant) level.
Glcm glcm_masked(const std::vector<int>& quantized, const std::vector<std::uint8_t>& inside, int width,
                 int height, int levels);
GlcmStats glcm_stats(const Glcm& m);

/// fg/bg difference, std, skewness, entropy, then GLCM dissimilarity, homogeneity, energy, ASM.
FeatureVector texture_features_nucleus(const GrayImage& luminance, const EntityMask& mask);

/// 6 GLCM statistics on luminance, then per RGB channel 8 histogram bins,
/// mean, std, median, energy and skewness.
FeatureVector superpixel_features(const RgbImage& image, const EntityMask& region);

}  // namespace hact
