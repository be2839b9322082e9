#include <doctest.h>

#include <array>
#include <map>
#include <set>
#include <queue>

#include "hact/synth.hpp"
#include "hact/tissue_graph.hpp"
#include "support.hpp"

using namespace hact;
using namespace hact::testing;

namespace {

SuperpixelLabeling labeling_from(int w, int h, std::vector<std::uint32_t> labels, std::size_t n) {
  SuperpixelLabeling l;
  l.width = w;
  l.height = h;
  l.labels = std::move(labels);
  l.num_regions = n;
  return l;
}

bool rag_connected(const std::vector<Edge>& edges, std::size_t n) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto u : adj[v]) {
      if (!seen[u]) {
        seen[u] = true;
        ++count;
        q.push(u);
      }
    }
  }
  return count == n;
}

RgbImage synthetic_roi(std::uint64_t seed, int label) {
  const SynthConfig cfg = SynthConfig::standard(seed);
  CounterRng rng(seed);
  return render_roi(cfg, label, 256, 240, SlideStyle{}, rng).image;
}

}  // namespace

TEST_CASE("sRGB to Lab reference values") {
  const Lab white = srgb_to_lab(255, 255, 255);
  CHECK(std::abs(white.l - 100.0) < 1e-3);
  CHECK(std::abs(white.a) < 1e-3);
  CHECK(std::abs(white.b) < 1e-3);
  const Lab red = srgb_to_lab(255, 0, 0);
  CHECK(std::abs(red.l - 53.2408) < 1e-2);
  CHECK(std::abs(red.a - 80.0925) < 1e-2);
  CHECK(std::abs(red.b - 67.2032) < 1e-2);
  CHECK(srgb_to_lab(0, 0, 0).l == doctest::Approx(0.0));
}

TEST_CASE("SLIC on a constant 64x64 image with target 16") {
  TgParams p;
  p.target_superpixels = 16;
  const auto l = slic(constant_image(64, 64, 200, 150, 180), p);
  CHECK(l.num_regions == 16);
  CHECK(check_partition(l).empty());
  std::vector<std::size_t> sizes(l.num_regions, 0);
  for (auto id : l.labels) ++sizes[id];
  for (auto s : sizes) {
    CHECK(s >= 192);
    CHECK(s <= 320);
  }
}

TEST_CASE("SLIC recovers a left/right two-tone boundary within 2 px") {
  RgbImage img = constant_image(64, 64, 240, 230, 235);
  for (int y = 0; y < 64; ++y) {
    for (int x = 32; x < 64; ++x) {
      img.at(x, y, 0) = 120;
      img.at(x, y, 1) = 40;
      img.at(x, y, 2) = 100;
    }
  }
  TgParams p;
  p.target_superpixels = 2;
  const auto l = slic(img, p);
  REQUIRE(l.num_regions == 2);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 30; ++x) CHECK(l.at(x, y) == l.at(0, 0));
    for (int x = 34; x < 64; ++x) CHECK(l.at(x, y) != l.at(0, 0));
  }
}

TEST_CASE("SLIC rejects tiny images and bad parameters") {
  CHECK_THROWS_AS(slic(constant_image(15, 40, 1, 2, 3), TgParams{}), std::invalid_argument);
  TgParams p;
  p.downscale = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = TgParams{};
  p.selected_features = {45};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("check_partition flags split regions and gaps in ids") {
  CHECK(check_partition(labeling_from(3, 1, {0, 1, 0}, 2)).size() == 1);
  CHECK_FALSE(check_partition(labeling_from(2, 1, {0, 2}, 3)).empty());
  CHECK(check_partition(labeling_from(2, 2, {0, 0, 1, 1}, 2)).empty());
}

TEST_CASE("RAG edges for simple layouts") {
  CHECK(rag_edges(labeling_from(4, 2, {0, 0, 1, 1, 0, 0, 1, 1}, 2)) == std::vector<Edge>{{0, 1}});
  CHECK(rag_edges(labeling_from(2, 2, {0, 1, 2, 3}, 4)) == std::vector<Edge>{{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CHECK(rag_edges(labeling_from(3, 3, std::vector<std::uint32_t>(9, 0), 1)).empty());
}

TEST_CASE("merging: zero threshold keeps input, constant image collapses to the floor") {
  const RgbImage img = synthetic_roi(3, 1);
  TgParams p;
  const auto initial = slic(img, p);
  TgParams zero = p;
  zero.merge_threshold = 0.0;
  CHECK(merge_superpixels(img, initial, zero) == initial);

  const RgbImage flat = constant_image(128, 128, 210, 170, 190);
  const auto merged = merge_superpixels(flat, slic(flat, p), p);
  CHECK(merged.num_regions == static_cast<std::size_t>(p.min_final_regions));
  CHECK(check_partition(merged).empty());
}

TEST_CASE("merging is a partition and monotone in the threshold") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const RgbImage img = synthetic_roi(seed, static_cast<int>(seed % 5));
    TgParams p;
    const auto initial = slic(img, p);
    CHECK(check_partition(initial).empty());
    std::size_t previous = initial.num_regions;
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
      p.merge_threshold = t;
      const auto merged = merge_superpixels(img, initial, p);
      CHECK(check_partition(merged).empty());
      CHECK(merged.num_regions <= previous);
      previous = merged.num_regions;
    }
  }
}

TEST_CASE("four-color images merge back to their four quadrants") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed);
    const int w = 96 + static_cast<int>(rng.below(64)), h = 96 + static_cast<int>(rng.below(64));
    std::vector<int> truth;
    const RgbImage img = four_color_image(w, h, w / 3 + static_cast<int>(rng.below(w / 3)),
                                          h / 3 + static_cast<int>(rng.below(h / 3)), truth);
    TgParams p;
    const auto merged = merge_superpixels(img, slic(img, p), p);
    CHECK(majority_agreement(merged, truth, 4) >= 0.95);
    // the four largest regions are pure and cover distinct quadrants; the rest are thin block-boundary strips
    std::vector<std::array<std::size_t, 4>> counts(merged.num_regions, std::array<std::size_t, 4>{});
    for (std::size_t i = 0; i < merged.labels.size(); ++i) ++counts[merged.labels[i]][truth[i]];
    std::vector<std::size_t> order(merged.num_regions);
    std::iota(order.begin(), order.end(), 0);
    const auto size = [&](std::size_t r) { return counts[r][0] + counts[r][1] + counts[r][2] + counts[r][3]; };
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return size(a) > size(b); });
    REQUIRE(order.size() >= 4);
    std::set<std::size_t> quadrants;
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& c = counts[order[k]];
      const auto top = std::max_element(c.begin(), c.end());
      CHECK(*top == size(order[k]));
      quadrants.insert(static_cast<std::size_t>(top - c.begin()));
    }
    CHECK(quadrants.size() == 4);
  }
}

TEST_CASE("merge normalization statistics are pooled over all rows") {
  const std::vector<FeatureMatrix> rows{FeatureMatrix(2, 45), FeatureMatrix(2, 45)};
  std::vector<FeatureMatrix> m = rows;
  m[0](0, 3) = 1.0;
  m[1](1, 3) = 3.0;
  std::vector<double> mean, sd;
  fit_merge_normalization(m, mean, sd);
  REQUIRE(mean.size() == 45);
  CHECK(mean[3] == 1.0);
  CHECK(sd[3] == doctest::Approx(std::sqrt((0.0 + 1 + 1 + 4) / 4)));
  CHECK(sd[0] == 0.0);
}

TEST_CASE("tissue graph: 26 features recomputed at full resolution") {
  const RgbImage img = synthetic_roi(9, 3);
  TgParams p;
  for (std::size_t i = 0; i < 24; ++i) p.selected_features.push_back(i + 10);
  const auto result = build_tissue_graph(img, p);
  const Graph& g = result.graph;
  CHECK(g.feature_dim() == 26);
  CHECK(g.num_nodes() == result.labeling.num_regions);
  CHECK(g.schema() == tissue_feature_schema(p.selected_features));
  CHECK(validate(g).empty());
  CHECK(rag_connected(g.edges(), g.num_nodes()));
  CHECK(g.edges() == rag_edges(result.labeling));
  const auto pixels = region_pixels(result.labeling);
  for (std::size_t r = 0; r < g.num_nodes(); ++r) {
    const EntityMask mask = EntityMask::from_pixels(pixels[r], img.width, img.height);
    const auto f = superpixel_features(img, mask);
    for (std::size_t i = 0; i < 24; ++i) CHECK(g.features()(r, i) == f.values[p.selected_features[i]]);
    CHECK(g.features()(r, 24) == doctest::Approx(mask.centroid_x() / img.width));
    CHECK(g.features()(r, 25) == doctest::Approx(mask.centroid_y() / img.height));
  }
}

TEST_CASE("variance selection keeps the highest-variance columns, ties by index") {
  CounterRng rng(2);
  FeatureMatrix ref(50, 45);
  std::vector<double> scale(45);
  for (std::size_t c = 0; c < 45; ++c) scale[c] = (c * 7) % 45 / 10.0;
  for (std::size_t r = 0; r < 50; ++r) {
    for (std::size_t c = 0; c < 45; ++c) ref(r, c) = scale[c] * (r % 2 ? 1.0 : -1.0);
  }
  // oracle: variance of +-s columns is s^2, so rank by scale then index
  std::vector<std::size_t> order(45);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scale[a] > scale[b]; });
  std::vector<std::size_t> expected(order.begin(), order.begin() + 24);
  std::sort(expected.begin(), expected.end());
  CHECK(select_features_by_variance(ref) == expected);

  const FeatureMatrix flat(10, 45);
  std::vector<std::size_t> first(24);
  std::iota(first.begin(), first.end(), 0);
  CHECK(select_features_by_variance(flat) == first);
}

TEST_CASE("select_tissue_features keeps chosen columns and the centroids") {
  CounterRng rng(6);
  const Graph full(3, {{0, 1}}, random_features(3, 47, rng), tissue_feature_schema({}));
  const std::vector<std::size_t> sel{2, 40};
  const Graph g = select_tissue_features(full, sel);
  CHECK(g.feature_dim() == 4);
  CHECK(g.features()(1, 1) == full.features()(1, 40));
  CHECK(g.features()(2, 3) == full.features()(2, 46));
  CHECK(g.edges() == full.edges());
}
