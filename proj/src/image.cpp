#include "hact/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "hact/errors.hpp"

namespace hact {

GrayImage to_luminance(const RgbImage& image) {
  GrayImage out(image.width, image.height);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const auto* p = &image.pixels[i * 3];
    out.values[i] = luminance(p[0], p[1], p[2]);
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

void write_png_rows(const std::filesystem::path& path, int width, int height, int bit_depth,
                    int color_type, const std::vector<png_bytep>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng: cannot allocate writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng: write failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  auto* base = const_cast<std::uint8_t*>(image.pixels.data());
  for (int y = 0; y < image.height; ++y) rows[y] = base + image.index(0, y);
  write_png_rows(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_png16(const std::filesystem::path& path, int width, int height,
                 const std::vector<std::uint16_t>& values) {
  // libpng expects big-endian samples; png_set_swap handles little-endian hosts
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  auto* base = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(values.data()));
  for (int y = 0; y < height; ++y) rows[y] = base + static_cast<std::size_t>(y) * width * 2;
  write_png_rows(path, width, height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

RgbImage read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng: cannot allocate reader");
  }
  RgbImage image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng: cannot decode " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  image = RgbImage(static_cast<int>(png_get_image_width(png, info)),
                   static_cast<int>(png_get_image_height(png, info)));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(image.width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("unsupported PNG layout: " + path.string());
  }
  rows.resize(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) rows[y] = image.pixels.data() + image.index(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace hact
