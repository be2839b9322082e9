#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hact {

/// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }
  std::uint8_t at(int x, int y, int c) const { return pixels[index(x, y) + c]; }
  std::uint8_t& at(int x, int y, int c) { return pixels[index(x, y) + c]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  bool operator==(const RgbImage&) const = default;
};

/// Rec. 601 luma scaled to [0, 1].
inline double luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

/// Single-channel raster with values in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

GrayImage to_luminance(const RgbImage& image);

void write_png(const std::filesystem::path& path, const RgbImage& image);
/// Reads 8-bit gray/RGB/RGBA PNGs (alpha dropped). Throws DataError.
RgbImage read_png(const std::filesystem::path& path);
/// 16-bit grayscale PNG, used for label-map debug output.
void write_png16(const std::filesystem::path& path, int width, int height,
                 const std::vector<std::uint16_t>& values);

}  // namespace hact
