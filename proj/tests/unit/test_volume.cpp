#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mpseg/error.hpp"
#include "mpseg/volume.hpp"
#include "mpseg/volume_io.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace mpseg;
using testing_support::TempDir;

namespace {

VolumeGeometry cube(std::int64_t n) {
  VolumeGeometry g;
  g.dims = {n, n, n};
  return g;
}

}  // namespace

TEST_CASE("volume header with raw file of the right size loads") {
  TempDir dir("vol");
  write_text(dir / "v.json",
             R"({"dims":[2,2,2],"dtype":"f32","spacing_mm":[1,1,1],"data_file":"v.raw"})");
  std::vector<float> data(8, 2.5f);
  write_f32_file(dir / "v.raw", data);
  const Volume v = read_intensity(dir / "v.json");
  CHECK(v.size() == 8);
  CHECK(v.at(1, 1, 1) == 2.5f);
}

TEST_CASE("short raw file is a size mismatch") {
  TempDir dir("vol");
  write_text(dir / "v.json",
             R"({"dims":[2,2,2],"dtype":"f32","spacing_mm":[1,1,1],"data_file":"v.raw"})");
  std::vector<std::uint8_t> bytes(16, 0);
  write_bytes(dir / "v.raw", bytes);
  CHECK_THROWS_AS(read_intensity(dir / "v.json"), DataError);
}

TEST_CASE("random 16^3 volumes round-trip bit-identically") {
  TempDir dir("vol");
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n(0.0f, 100.0f);
  VolumeGeometry g = cube(16);
  g.spacing_mm = {0.78, 0.77, 0.96};
  g.origin_mm = {-12.5, 3.25, 100.0};
  std::vector<float> data(g.size());
  for (auto& x : data) x = n(rng);
  const Volume v(g, data);
  write_volume(v, dir / "a.json");
  const Volume back = read_intensity(dir / "a.json");
  CHECK(back.geometry() == g);
  REQUIRE(back.size() == v.size());
  CHECK(std::memcmp(back.data().data(), v.data().data(), v.size() * sizeof(float)) == 0);

  const LabelVolume labels = oracle::random_labels(rng, {9, 7, 5}, 4);
  write_volume(labels, dir / "l.json");
  CHECK(read_labels(dir / "l.json") == labels);
}

TEST_CASE("probability volumes store K float32 values per voxel") {
  TempDir dir("vol");
  const VolumeGeometry g = cube(3);
  std::vector<float> p(g.size() * 4, 0.25f);
  write_volume(ProbabilityVolume(g, 4, p, true), dir / "p.json");
  CHECK(std::filesystem::file_size(dir / "p.raw") == g.size() * 4 * 4);
  const ProbabilityVolume back = read_probabilities(dir / "p.json");
  CHECK(back.num_classes() == 4);
  CHECK(back.voxel(5)[3] == 0.25f);
}

TEST_CASE("writing into a missing directory is an I/O error") {
  const Volume v(cube(2), std::vector<float>(8, 0.0f));
  CHECK_THROWS_AS(write_volume(v, "/nonexistent_dir_mpseg/x/v.json"), IoError);
}

TEST_CASE("i16 volumes load as intensities") {
  TempDir dir("vol");
  write_text(dir / "v.json", R"({"dims":[2,1,1],"dtype":"i16","spacing_mm":[1,1,1],"data_file":"v.raw"})");
  std::vector<std::uint8_t> bytes{0x18, 0xFC, 0x10, 0x00};  // -1000, 16
  write_bytes(dir / "v.raw", bytes);
  const Volume v = read_intensity(dir / "v.json");
  CHECK(v[0] == -1000.0f);
  CHECK(v[1] == 16.0f);
}

TEST_CASE("label validation") {
  CHECK_THROWS_AS(LabelVolume(cube(1), {3}, 3), DataError);
  CHECK_THROWS_AS(LabelVolume(cube(2), {0, 1}, 3), DataError);
  CHECK_THROWS_AS(Volume(cube(1), {std::numeric_limits<float>::quiet_NaN()}), DataError);
  CHECK_THROWS_AS(ProbabilityVolume(cube(1), 2, {0.5f, 0.6f}, true), DataError);
  CHECK_NOTHROW(ProbabilityVolume(cube(1), 2, {0.5f, 0.6f}, false));
}

TEST_CASE("trilinear sampling") {
  VolumeGeometry g = cube(4);
  g.spacing_mm = {2.0, 1.0, 0.5};
  g.origin_mm = {10.0, -3.0, 1.0};

  SUBCASE("voxel centers return stored values") {
    std::vector<float> data(g.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = float(i);
    const Volume v(g, data);
    for (std::size_t i = 0; i < data.size(); i += 7) {
      const Vec3 p = g.physical_position(unravel_index(g.dims, i));
      CHECK(sample_trilinear(v, p) == double(i));
    }
  }

  SUBCASE("midpoint between 0 and 1 is 0.5") {
    std::vector<float> data(g.size(), 0.0f);
    for (std::int64_t k = 0; k < 4; ++k)
      for (std::int64_t j = 0; j < 4; ++j) data[linear_index(g.dims, 2, j, k)] = 1.0f;
    const Volume v(g, data);
    const Vec3 a = g.physical_position({1, 1, 1});
    const Vec3 b = g.physical_position({2, 1, 1});
    CHECK(sample_trilinear(v, {(a[0] + b[0]) / 2, a[1], a[2]}) == doctest::Approx(0.5));
  }

  SUBCASE("affine fields are reproduced") {
    std::vector<float> data(g.size());
    for (std::size_t o = 0; o < data.size(); ++o) {
      const Index3 p = unravel_index(g.dims, o);
      data[o] = float(2 * p[0] + 3 * p[1] + 5 * p[2]);
    }
    const Volume v(g, data);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int t = 0; t < 1000; ++t) {
      const Vec3 idx{u(rng), u(rng), u(rng)};
      Vec3 p;
      for (int a = 0; a < 3; ++a) p[a] = g.origin_mm[a] + idx[a] * g.spacing_mm[a];
      CHECK(sample_trilinear(v, p) == doctest::Approx(2 * idx[0] + 3 * idx[1] + 5 * idx[2]).epsilon(1e-4 / 30));
    }
  }

  SUBCASE("outside points take the fill value") {
    const Volume v(g, std::vector<float>(g.size(), 7.0f));
    CHECK(sample_trilinear(v, {0.0, 0.0, 0.0}, -1.0) == -1.0);
  }
}

TEST_CASE("nearest sampling agrees with exhaustive search") {
  std::mt19937_64 rng(5);
  VolumeGeometry g = cube(8);
  g.spacing_mm = {1.5, 0.7, 1.1};
  g.origin_mm = {-4.0, 2.0, 0.5};
  const LabelVolume labels = oracle::random_labels(rng, g.dims, 5);
  const LabelVolume placed(g, std::vector<Label>(labels.labels().begin(), labels.labels().end()), 5);
  std::uniform_real_distribution<double> u(-0.49, 7.49);
  for (int t = 0; t < 2000; ++t) {
    const Vec3 idx{u(rng), u(rng), u(rng)};
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = g.origin_mm[a] + idx[a] * g.spacing_mm[a];
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t o = 0; o < g.size(); ++o) {
      const Index3 q = unravel_index(g.dims, o);
      double d = 0;
      for (int a = 0; a < 3; ++a) d += (idx[a] - double(q[a])) * (idx[a] - double(q[a]));
      if (d < best) {
        best = d;
        arg = o;
      }
    }
    CHECK(sample_nearest(placed, p) == placed[arg]);
  }
  CHECK(sample_nearest(placed, {-100.0, 0.0, 0.0}, 3) == 3);
}
