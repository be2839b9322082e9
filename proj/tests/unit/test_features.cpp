#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hact/features.hpp"
#include "support.hpp"

using namespace hact;
using namespace hact::testing;

namespace {

EntityMask rect_mask(int x0, int y0, int w, int h, int iw = 100, int ih = 100) {
  std::vector<PixelCoord> px;
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) px.push_back({x, y});
  }
  return EntityMask::from_pixels(px, iw, ih);
}

EntityMask disc_mask(double cx, double cy, double r, int iw = 100, int ih = 100) {
  std::vector<PixelCoord> px;
  for (int y = 0; y < ih; ++y) {
    for (int x = 0; x < iw; ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) px.push_back({x, y});
    }
  }
  return EntityMask::from_pixels(px, iw, ih);
}

// 4-neighbour pixel edges between the mask and its complement.
std::size_t boundary_edges(const EntityMask& m) {
  std::set<std::pair<int, int>> in;
  for (const auto& p : m.pixels) in.insert({p.x, p.y});
  std::size_t n = 0;
  for (const auto& p : m.pixels) {
    n += !in.contains({p.x + 1, p.y}) + !in.contains({p.x - 1, p.y}) + !in.contains({p.x, p.y + 1}) +
         !in.contains({p.x, p.y - 1});
  }
  return n;
}

RgbImage paint(const RgbImage& base, const EntityMask& m, std::uint8_t v) {
  RgbImage img = base;
  for (const auto& p : m.pixels) {
    for (int c = 0; c < 3; ++c) img.at(p.x, p.y, c) = v;
  }
  return img;
}

}  // namespace

TEST_CASE("detect_nuclei: separated blobs, blank image and sub-threshold speck") {
  RgbImage img = constant_image(200, 200, 240, 240, 240);
  int placed = 0;
  for (int gy = 0; gy < 4; ++gy) {
    for (int gx = 0; gx < 5; ++gx) {
      img = paint(img, disc_mask(20 + 40 * gx, 25 + 45 * gy, 4.0, 200, 200), 40);
      ++placed;
    }
  }
  CHECK(detect_nuclei(img).size() == static_cast<std::size_t>(placed));
  CHECK(detect_nuclei(constant_image(64, 64, 255, 255, 255)).empty());
  const RgbImage speck = paint(constant_image(64, 64, 255, 255, 255), rect_mask(10, 10, 5, 1, 64, 64), 0);
  CHECK(detect_nuclei(speck).empty());
}

TEST_CASE("otsu_threshold splits a bimodal histogram between the modes") {
  std::array<std::size_t, 256> h{};
  h[40] = 100;
  h[200] = 300;
  const int t = otsu_threshold(h);
  CHECK(t >= 40);
  CHECK(t < 200);
  std::array<std::size_t, 256> flat{};
  flat[17] = 5;
  CHECK(otsu_threshold(flat) == -1);
}

TEST_CASE("connected_components uses 4-connectivity in raster order") {
  // two diagonal pixels are separate components
  std::vector<std::uint8_t> fg(9, 0);
  fg[0] = fg[4] = fg[8] = 1;
  const auto comps = connected_components(fg, 3, 3, 1);
  REQUIRE(comps.size() == 3);
  CHECK(comps[0].pixels[0] == PixelCoord{0, 0});
  CHECK(comps[2].pixels[0] == PixelCoord{2, 2});
}

TEST_CASE("shape features of a disc, a square and a 30x6 rectangle") {
  const auto disc = shape_features(disc_mask(50, 50, 10));
  CHECK(disc.values.size() == 7);
  CHECK(std::abs(disc.values[0]) < 0.05);
  CHECK(std::abs(disc.values[5] - 1.0) < 0.02);

  const EntityMask square = rect_mask(5, 5, 10, 10);
  const auto sq = shape_features(square);
  CHECK(sq.values[1] == 100.0);
  CHECK(sq.values[4] == static_cast<double>(boundary_edges(square)));
  CHECK(sq.values[5] == 1.0);

  const auto rect = shape_features(rect_mask(10, 10, 30, 6));
  // second central moments of a w x h pixel block are (w^2-1)/12 and (h^2-1)/12
  const double expected = std::sqrt((30.0 * 30 - 1) / (6.0 * 6 - 1));
  CHECK(std::abs(rect.values[2] / rect.values[3] - expected) < 1e-9);
  CHECK(std::abs(rect.values[2] / rect.values[3] - 5.0) < 0.5);
  CHECK(rect.values[6] == 0.0);

  const auto vertical = shape_features(rect_mask(10, 10, 6, 30));
  CHECK(std::abs(vertical.values[6] - std::numbers::pi / 2) < 1e-12);
}

TEST_CASE("a single pixel has zero eccentricity and orientation") {
  const auto f = shape_features(rect_mask(3, 3, 1, 1));
  CHECK(f.values[0] == 0.0);
  CHECK(f.values[6] == 0.0);
  for (double v : f.values) CHECK(std::isfinite(v));
}

TEST_CASE("orientation stays in (-pi/2, pi/2] for every rotation") {
  for (int k = 0; k < 24; ++k) {
    const double a = k * std::numbers::pi / 12;
    std::vector<PixelCoord> px;
    for (int t = -15; t <= 15; ++t) {
      for (int s = -2; s <= 2; ++s) {
        px.push_back({static_cast<int>(std::lround(50 + t * std::cos(a) - s * std::sin(a))),
                      static_cast<int>(std::lround(50 + t * std::sin(a) + s * std::cos(a)))});
      }
    }
    std::sort(px.begin(), px.end(), [](auto& l, auto& r) { return std::tie(l.y, l.x) < std::tie(r.y, r.x); });
    px.erase(std::unique(px.begin(), px.end()), px.end());
    const double o = shape_features(EntityMask::from_pixels(px, 100, 100)).values[6];
    CHECK(o > -std::numbers::pi / 2);
    CHECK(o <= std::numbers::pi / 2);
  }
}

TEST_CASE("GLCM of a constant patch is one diagonal entry") {
  GrayImage patch(6, 5, 0.4);
  const Glcm m = glcm(patch);
  CHECK(m(quantize(0.4, 8), quantize(0.4, 8)) == 1.0);
  CHECK(std::abs(m.sum() - 1.0) < 1e-12);
  const auto s = glcm_stats(m);
  CHECK(s.energy == 1.0);
  CHECK(s.dissimilarity == 0.0);
  CHECK(s.entropy == 0.0);
}

TEST_CASE("checkerboard GLCM places horizontal and vertical mass off the diagonal") {
  GrayImage patch(4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) patch.at(x, y) = (x + y) % 2 ? 1.0 : 0.0;
  }
  for (auto [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
    const Glcm m = glcm_direction(patch, 8, dx, dy);
    CHECK(m(0, 7) == 0.5);
    CHECK(m(7, 0) == 0.5);
    CHECK(std::abs(m.sum() - 1.0) < 1e-12);
  }
  // diagonal neighbours share the level
  const Glcm d = glcm_direction(patch, 8, 1, 1);
  CHECK(d(0, 0) + d(7, 7) == doctest::Approx(1.0));
  CHECK_THROWS_AS(glcm(GrayImage(1, 4)), std::invalid_argument);
}

TEST_CASE("GLCM is symmetric and normalized on random patches") {
  CounterRng rng(5);
  for (int t = 0; t < 20; ++t) {
    GrayImage p(2 + static_cast<int>(rng.below(10)), 2 + static_cast<int>(rng.below(10)));
    for (double& v : p.values) v = rng.uniform();
    const Glcm m = glcm(p);
    CHECK(std::abs(m.sum() - 1.0) < 1e-12);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) CHECK(m(i, j) == m(j, i));
    }
  }
}

TEST_CASE("nucleus texture: dark nucleus on white background") {
  GrayImage lum(40, 40, 1.0);
  const EntityMask m = disc_mask(20, 20, 5, 40, 40);
  for (const auto& p : m.pixels) lum.at(p.x, p.y) = 0.0;
  const auto f = texture_features_nucleus(lum, m);
  REQUIRE(f.values.size() == 8);
  CHECK(f.values[0] == 1.0);
  CHECK(f.values[1] == 0.0);
  CHECK(f.values[2] == 0.0);
  CHECK(std::abs(f.values[3]) < 1e-12);

  GrayImage flat(40, 40, 0.3);
  const auto g = texture_features_nucleus(flat, m);
  CHECK(g.values[6] == 1.0);
  CHECK(g.values[4] == 0.0);
}

TEST_CASE("nucleus texture: symmetric histogram has zero skewness, border ring is clipped") {
  GrayImage lum(30, 30, 1.0);
  const EntityMask m = rect_mask(0, 0, 6, 4, 30, 30);
  int i = 0;
  for (const auto& p : m.pixels) lum.at(p.x, p.y) = (i++ % 2) ? 0.2 : 0.6;
  const auto f = texture_features_nucleus(lum, m);
  CHECK(std::abs(f.values[2]) < 1e-9);
  for (double v : f.values) CHECK(std::isfinite(v));
}

TEST_CASE("superpixel features: constant region, histogram law and two-tone region") {
  const RgbImage gray = constant_image(20, 20, 128, 128, 128);
  const EntityMask region = rect_mask(0, 0, 10, 10, 20, 20);
  const auto f = superpixel_features(gray, region);
  REQUIRE(f.values.size() == 45);
  CHECK(f.values[0] == 0.0);
  CHECK(f.values[4] == 0.0);
  for (int c = 0; c < 3; ++c) {
    const std::size_t base = 6 + 13 * c;
    double sum = 0;
    for (int b = 0; b < 8; ++b) sum += f.values[base + b];
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(f.values[base + 9] == 0.0);
  }

  RgbImage two = gray;
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 5; ++x) {
      for (int c = 0; c < 3; ++c) two.at(x, y, c) = 10;
    }
  }
  const auto t = superpixel_features(two, region);
  for (int c = 0; c < 3; ++c) {
    const std::size_t base = 6 + 13 * c;
    CHECK(t.values[base + 0] == 0.5);  // 10 falls in bin 0
    CHECK(t.values[base + 4] == 0.5);  // 128 falls in bin 4
  }
}

TEST_CASE("features are translation invariant") {
  CounterRng rng(8);
  RgbImage img(80, 80);
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng.below(256));
  RgbImage shifted(80, 80);
  for (int y = 0; y + 13 < 80; ++y) {
    for (int x = 0; x + 7 < 80; ++x) {
      for (int c = 0; c < 3; ++c) shifted.at(x + 7, y + 13, c) = img.at(x, y, c);
    }
  }
  const EntityMask m = disc_mask(30, 30, 8, 80, 80);
  std::vector<PixelCoord> moved;
  for (const auto& p : m.pixels) moved.push_back({p.x + 7, p.y + 13});
  const EntityMask m2 = EntityMask::from_pixels(moved, 80, 80);

  const auto s1 = shape_features(m), s2 = shape_features(m2);
  const auto p1 = superpixel_features(img, m), p2 = superpixel_features(shifted, m2);
  const auto t1 = texture_features_nucleus(to_luminance(img), m);
  const auto t2 = texture_features_nucleus(to_luminance(shifted), m2);
  for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(s1.values[i] - s2.values[i]) < 1e-9);
  for (std::size_t i = 0; i < 45; ++i) CHECK(std::abs(p1.values[i] - p2.values[i]) < 1e-9);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(t1.values[i] - t2.values[i]) < 1e-9);
}

TEST_CASE("degenerate one-pixel regions give finite features") {
  const RgbImage img = constant_image(10, 10, 90, 30, 200);
  const EntityMask px = rect_mask(4, 4, 1, 1, 10, 10);
  for (double v : superpixel_features(img, px).values) CHECK(std::isfinite(v));
  for (double v : texture_features_nucleus(to_luminance(img), px).values) CHECK(std::isfinite(v));
}

TEST_CASE("masks_from_nuclei draws discs inside the image") {
  const auto masks = masks_from_nuclei({{5.0, 5.0, 3.0, 1.0}, {0.0, 0.0, 2.0, 1.0}}, 20, 20);
  REQUIRE(masks.size() == 2);
  CHECK(std::abs(masks[0].centroid_x() - 5.0) < 1e-9);
  for (const auto& p : masks[1].pixels) CHECK((p.x >= 0 && p.y >= 0));
}
