#include <algorithm>
#include <random>

#include "doctest.h"
#include "mpseg/error.hpp"
#include "mpseg/preprocess.hpp"

using namespace mpseg;

namespace {

Volume line(std::vector<float> values) {
  VolumeGeometry g;
  g.dims = {static_cast<std::int64_t>(values.size()), 1, 1};
  return Volume(g, std::move(values));
}

}  // namespace

TEST_CASE("clip_negatives") {
  const Volume v = clip_negatives(line({-5, 0, 7}));
  CHECK(v[0] == 0.0f);
  CHECK(v[1] == 0.0f);
  CHECK(v[2] == 7.0f);

  const Volume pos = line({1, 2, 3});
  const Volume same = clip_negatives(pos);
  CHECK(std::equal(pos.data().begin(), pos.data().end(), same.data().begin()));

  std::mt19937_64 rng(2);
  std::normal_distribution<float> n(0, 10);
  std::vector<float> raw(500);
  for (auto& x : raw) x = n(rng);
  const Volume clipped = clip_negatives(line(raw));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CHECK(clipped[i] >= 0.0f);
    if (raw[i] > 0) CHECK(clipped[i] == raw[i]);
  }
}

TEST_CASE("quartiles use linear interpolation between order statistics") {
  const std::vector<double> s{10, 20, 30, 40};
  CHECK(quantile_linear(s, 0.25) == doctest::Approx(17.5));
  CHECK(quantile_linear(s, 0.75) == doctest::Approx(32.5));
  CHECK(quantile_linear(s, 0.5) == doctest::Approx(25.0));
  CHECK(quantile_linear(s, 0.0) == 10.0);
  CHECK(quantile_linear(s, 1.0) == 40.0);
}

TEST_CASE("standardize {0,0,10,10}") {
  const auto r = standardize(line({0, 0, 10, 10}));
  CHECK(r.stats.mean == doctest::Approx(5.0));
  CHECK(r.stats.q25 == doctest::Approx(0.0));
  CHECK(r.stats.q75 == doctest::Approx(10.0));
  CHECK(r.volume[0] == doctest::Approx(-0.5));
  CHECK(r.volume[3] == doctest::Approx(0.5));

  const auto med = standardize(line({0, 0, 1, 10, 10}), CenterStatistic::median);
  CHECK(med.stats.center_value() == doctest::Approx(1.0));
}

TEST_CASE("constant volume has a degenerate scale") {
  CHECK_THROWS_AS(standardize(line({3, 3, 3, 3})), DataError);
}

TEST_CASE("standardize preserves order and ignores storage order") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(-50, 500);
  std::vector<float> raw(777);
  for (auto& x : raw) x = u(rng);
  const auto a = standardize(clip_negatives(line(raw)));
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const float ci = std::max(raw[i], 0.0f), cp = std::max(raw[i - 1], 0.0f);
    if (ci < cp) CHECK(a.volume[i] <= a.volume[i - 1]);
    if (ci > cp) CHECK(a.volume[i] >= a.volume[i - 1]);
  }
  std::vector<float> shuffled = raw;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto b = standardize(clip_negatives(line(shuffled)));
  CHECK(a.stats.mean == b.stats.mean);
  CHECK(a.stats.q25 == b.stats.q25);
  CHECK(a.stats.q75 == b.stats.q75);
}
