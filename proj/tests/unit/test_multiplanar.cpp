#include <cmath>
#include <random>

#include "doctest.h"
#include "mpseg/error.hpp"
#include "mpseg/multiplanar.hpp"
#include "support/oracles.hpp"

using namespace mpseg;

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

VolumeGeometry cube(std::int64_t n) {
  VolumeGeometry g;
  g.dims = {n, n, n};
  return g;
}

}  // namespace

TEST_CASE("canonical views") {
  const ViewSet s = generate_views(3, 0, 60.0, true);
  REQUIRE(s.views.size() == 3);
  CHECK(s.views[0] == Vec3{1, 0, 0});
  CHECK(s.views[1] == Vec3{0, 1, 0});
  CHECK(s.views[2] == Vec3{0, 0, 1});
  CHECK_THROWS_AS(generate_views(4, 0, 60.0, true), DataError);
}

TEST_CASE("random views are deterministic, unit, upper hemisphere and spread out") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 123456789ULL}) {
    const ViewSet a = generate_views(6, seed, 60.0);
    const ViewSet b = generate_views(6, seed, 60.0);
    CHECK(a.to_json() == b.to_json());
    REQUIRE(a.views.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(std::abs(dot(a.views[i], a.views[i]) - 1.0) < 1e-12);
      CHECK(a.views[i][2] >= 0.0);
      for (std::size_t j = i + 1; j < 6; ++j) CHECK(line_angle_deg(a.views[i], a.views[j]) >= 60.0);
    }
  }
  const ViewSet three = generate_views(3, 5, 45.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) CHECK(line_angle_deg(three.views[i], three.views[j]) >= 45.0);
  CHECK(generate_views(3, 5, 45.0).to_json() != generate_views(3, 6, 45.0).to_json());
  CHECK_THROWS_AS(generate_views(7, 1, 70.0), DataError);
}

TEST_CASE("view sets round-trip through JSON") {
  const ViewSet a = generate_views(5, 77, 50.0);
  const ViewSet b = ViewSet::from_json(a.to_json());
  REQUIRE(b.views.size() == a.views.size());
  for (std::size_t i = 0; i < a.views.size(); ++i) CHECK(a.views[i] == b.views[i]);
  CHECK_THROWS_AS(ViewSet::from_json(R"({"views":[[1,1,0]]})"), DataError);
}

TEST_CASE("fit_grid") {
  SUBCASE("single 100^3 geometry, infer") {
    const std::vector<VolumeGeometry> g{cube(100)};
    const GridSize s = fit_grid(g, GridFitMode::infer);
    CHECK(s.pixels == 100);
    CHECK(s.side_mm == doctest::Approx(100.0));
  }
  SUBCASE("mean-size scan from the data description") {
    VolumeGeometry g;
    g.dims = {415, 244, 266};
    g.spacing_mm = {0.78, 0.77, 0.96};
    const std::vector<VolumeGeometry> gs{g};
    const GridSize s = fit_grid(gs, GridFitMode::infer);
    CHECK(s.side_mm == doctest::Approx(323.7));
    CHECK(s.pixels == 415);
    CHECK(fit_grid(gs, GridFitMode::train).pixels % 2 == 0);
  }
  SUBCASE("train uses the pooled 75th percentile") {
    VolumeGeometry a, b;
    a.dims = {10, 20, 1};
    b.dims = {30, 40, 1};
    const std::vector<VolumeGeometry> gs{a, b};
    // pooled axis values {1,1,10,20,30,40}: type-7 75th percentile = 27.5
    const GridSize s = fit_grid(gs, GridFitMode::train);
    std::vector<double> pooled{1, 1, 10, 20, 30, 40};
    const double h = 0.75 * (pooled.size() - 1);
    const double q = pooled[std::size_t(h)] + (h - std::floor(h)) * (pooled[std::size_t(h) + 1] - pooled[std::size_t(h)]);
    CHECK(s.side_mm == doctest::Approx(q));
    CHECK(s.pixels == 28);
  }
  SUBCASE("diagonal") {
    const std::vector<VolumeGeometry> g{cube(10)};
    CHECK(fit_grid(g, GridFitMode::infer, true).side_mm == doctest::Approx(std::sqrt(300.0)));
  }
}

TEST_CASE("view grid basis is orthonormal and deterministic") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 50; ++t) {
    Vec3 v{n(rng), n(rng), n(rng)};
    const double len = std::sqrt(dot(v, v));
    for (auto& x : v) x /= len;
    const ViewGrid g(v, {1, 2, 3}, 40.0, 16);
    CHECK(std::abs(dot(g.basis_u(), g.basis_u()) - 1) < 1e-12);
    CHECK(std::abs(dot(g.basis_v(), g.basis_v()) - 1) < 1e-12);
    CHECK(std::abs(dot(g.basis_u(), g.basis_v())) < 1e-12);
    CHECK(std::abs(dot(g.basis_u(), g.normal())) < 1e-12);
    // the grid-coordinate map inverts point()
    const Vec3 p = g.point(3.5, 7.0, 11.25);
    const Vec3 c = g.grid_coordinates(p);
    CHECK(c[0] == doctest::Approx(3.5));
    CHECK(c[1] == doctest::Approx(7.0));
    CHECK(c[2] == doctest::Approx(11.25));
  }
}

TEST_CASE("aligned axial view reproduces the raw planes") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-1, 1);
  const VolumeGeometry g = cube(12);
  std::vector<float> data(g.size());
  for (auto& x : data) x = u(rng);
  const Volume image(g, data);
  const LabelVolume labels = oracle::random_labels(rng, g.dims, 4);
  const ViewGrid grid({0, 0, 1}, g.center_mm(), 12.0, 12);
  const SliceBatch b = extract_slices({&image, &labels, nullptr}, grid);
  bool exact = true;
  for (std::int64_t k = 0; k < 12; ++k)
    for (std::int64_t bb = 0; bb < 12; ++bb)
      for (std::int64_t a = 0; a < 12; ++a) {
        const Vec3 p = grid.point(double(a), double(bb), double(k));
        const Vec3 ci = g.continuous_index(p);
        const auto i = std::llround(ci[0]), j = std::llround(ci[1]), kk = std::llround(ci[2]);
        CHECK(std::abs(ci[0] - double(i)) < 1e-9);
        CHECK(kk == k);
        exact &= b.image[grid.pixel_offset(a, bb, k)] == image.at(i, j, kk);
        exact &= b.labels[grid.pixel_offset(a, bb, k)] == labels.at(i, j, kk);
      }
  CHECK(exact);
  for (Label l : b.labels) CHECK(l < 4);
}

TEST_CASE("slices outside the volume take fill values") {
  const VolumeGeometry g = cube(6);
  const Volume image(g, std::vector<float>(g.size(), 5.0f));
  const Volume weights(g, std::vector<float>(g.size(), 3.0f));
  const LabelVolume labels(g, std::vector<Label>(g.size(), 1), 2);
  const ViewGrid grid({0, 0, 1}, {100, 100, 100}, 6.0, 6);
  const SliceBatch b = extract_slices({&image, &labels, &weights}, grid);
  for (float x : b.image) CHECK(x == 0.0f);
  for (float x : b.weights) CHECK(x == 1.0f);
  for (Label x : b.labels) CHECK(x == 0);
}

TEST_CASE("reconstruction of an aligned view is the identity") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0, 1);
  VolumeGeometry g;
  g.dims = {8, 8, 8};
  g.spacing_mm = {1.5, 1.5, 1.5};
  g.origin_mm = {-3, 4, 10};
  for (const Vec3& n : {Vec3{0, 0, 1}, Vec3{1, 0, 0}, Vec3{0, 1, 0}}) {
    const ViewGrid grid(n, g.center_mm(), 12.0, 8);
    SlicePrediction pred{8, 3, std::vector<float>(512 * 3)};
    for (auto& x : pred.probs) x = u(rng);
    const ProbabilityVolume r = reconstruct_view(pred, grid, g);
    double worst = 0;
    for (std::int64_t k = 0; k < 8; ++k)
      for (std::int64_t b = 0; b < 8; ++b)
        for (std::int64_t a = 0; a < 8; ++a) {
          const Vec3 ci = g.continuous_index(grid.point(double(a), double(b), double(k)));
          const auto vo = linear_index(g.dims, std::llround(ci[0]), std::llround(ci[1]), std::llround(ci[2]));
          for (int c = 0; c < 3; ++c)
            worst = std::max(worst, double(std::abs(r.voxel(vo)[c] - pred.probs[grid.pixel_offset(a, b, k) * 3 + c])));
        }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("constant and one-class predictions reconstruct inside the cube") {
  const VolumeGeometry g = cube(10);
  const ViewGrid grid(Vec3{0.6, 0.0, 0.8}, g.center_mm(), 30.0, 12);
  SlicePrediction pred{12, 2, std::vector<float>(12 * 12 * 12 * 2)};
  for (std::size_t p = 0; p < pred.probs.size(); p += 2) {
    pred.probs[p] = 0.25f;
    pred.probs[p + 1] = 0.75f;
  }
  const ProbabilityVolume r = reconstruct_view(pred, grid, g);
  const LabelVolume fused = argmax_labels(r);
  for (std::size_t v = 0; v < g.size(); ++v) {
    CHECK(r.voxel(v)[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(r.voxel(v)[1] == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(fused[v] == 1);
  }
  SlicePrediction bad{11, 2, std::vector<float>(11 * 11 * 11 * 2)};
  CHECK_THROWS_AS(reconstruct_view(bad, grid, g), DataError);
}

TEST_CASE("fusion sums then takes the argmax") {
  VolumeGeometry g;
  g.dims = {1, 1, 1};
  const ProbabilityVolume a(g, 2, {0.6f, 0.4f}, true);
  const ProbabilityVolume b(g, 2, {0.1f, 0.9f}, true);
  CHECK(fuse(std::vector<ProbabilityVolume>{a, b})[0] == 1);
  CHECK(fuse(std::vector<ProbabilityVolume>{a})[0] == 0);
  CHECK(fuse(std::vector<ProbabilityVolume>{a, a, a, a})[0] == 0);
  const ProbabilityVolume tie(g, 3, {0.2f, 0.4f, 0.4f}, true);
  CHECK(fuse(std::vector<ProbabilityVolume>{tie})[0] == 1);
  const ProbabilityVolume s = sum_views(std::vector<ProbabilityVolume>{a, b});
  CHECK(s.voxel(0)[0] == doctest::Approx(0.7));
  CHECK(s.voxel(0)[1] == doctest::Approx(1.3));
  CHECK_THROWS_AS(fuse(std::vector<ProbabilityVolume>{}), DataError);
}

TEST_CASE("fusion is order invariant without near-ties") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0, 1);
  const VolumeGeometry g = cube(5);
  std::vector<ProbabilityVolume> views;
  for (int v = 0; v < 4; ++v) {
    std::vector<float> p(g.size() * 3);
    for (auto& x : p) x = u(rng);
    views.emplace_back(g, 3, p, false);
  }
  const LabelVolume forward = fuse(views);
  std::vector<ProbabilityVolume> reversed(views.rbegin(), views.rend());
  const LabelVolume backward = fuse(reversed);
  const ProbabilityVolume sum = sum_views(views);
  for (std::size_t v = 0; v < g.size(); ++v) {
    auto s = sum.voxel(v);
    std::vector<float> sorted(s.begin(), s.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted[2] - sorted[1] > 1e-6) CHECK(forward[v] == backward[v]);
  }
}
