#include <cmath>
#include <random>

#include "doctest.h"
#include "mpseg/distance.hpp"
#include "mpseg/error.hpp"
#include "mpseg/metrics.hpp"
#include "support/oracles.hpp"

using namespace mpseg;

namespace {

LabelVolume blank(const Index3& dims, int K) {
  VolumeGeometry g;
  g.dims = dims;
  return LabelVolume(g, std::vector<Label>(g.size(), 0), K);
}

LabelVolume paint(const LabelVolume& base, const std::vector<std::pair<Index3, Label>>& set) {
  std::vector<Label> data(base.labels().begin(), base.labels().end());
  for (const auto& [p, c] : set) data[linear_index(base.geometry().dims, p[0], p[1], p[2])] = c;
  return LabelVolume(base.geometry(), data, base.num_classes());
}

// Joint permutation of axes (x,y,z) -> (y,z,x) plus a flip along the new x.
LabelVolume permute_flip(const LabelVolume& y) {
  const Index3 d = y.geometry().dims;
  VolumeGeometry g;
  g.dims = {d[1], d[2], d[0]};
  std::vector<Label> out(g.size());
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i)
        out[linear_index(g.dims, d[1] - 1 - j, k, i)] = y.at(i, j, k);
  return LabelVolume(g, out, y.num_classes());
}

void check_close(double a, double b) {
  if (std::isinf(b)) {
    CHECK(std::isinf(a));
  } else {
    CHECK(std::abs(a - b) <= 1e-9);
  }
}

}  // namespace

TEST_CASE("dice basics") {
  const LabelVolume e = blank({4, 4, 4}, 2);
  std::vector<std::pair<Index3, Label>> a, b;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        a.push_back({{i, j, k}, 1});
        b.push_back({{i + 1, j, k}, 1});
      }
  const LabelVolume p = paint(e, a), y = paint(e, b);
  CHECK(dice(p, p).macro == 1.0);
  CHECK(dice(p, y).per_class[0] == doctest::Approx(0.5));
  const LabelVolume far = paint(e, {{{3, 3, 3}, 1}});
  CHECK(dice(p, far).per_class[0] == 0.0);
  CHECK(dice(e, e).per_class[0] == 1.0);
  CHECK_THROWS_AS(dice(p, blank({4, 4, 3}, 2)), DataError);
  CHECK_THROWS_AS(dice(p, blank({4, 4, 4}, 3)), DataError);
}

TEST_CASE("gap dice restricts dice to the gap region") {
  std::mt19937_64 rng(3);
  const LabelVolume y = oracle::random_labels(rng, {14, 14, 14}, 3);
  CHECK(gap_dice(y, y, 10.0).macro == 1.0);

  const auto region = oracle::gap_region(y, 4.0);
  std::vector<Label> out(y.labels().begin(), y.labels().end());
  std::size_t changed = 0;
  for (std::size_t v = 0; v < out.size() && changed < 20; ++v) {
    if (!region[v]) {
      out[v] = Label((out[v] + 1) % 3);
      ++changed;
    }
  }
  const LabelVolume p(y.geometry(), out, 3);
  CHECK(gap_dice(p, y, 4.0).macro == 1.0);
  CHECK(dice(p, y).macro < 1.0);
}

TEST_CASE("one misclassified voxel inside G") {
  VolumeGeometry g;
  g.dims = {16, 16, 16};
  std::vector<Label> data(g.size(), 0);
  for (std::size_t v = 0; v < data.size(); ++v) {
    const auto i = unravel_index(g.dims, v)[0];
    data[v] = i < 7 ? 1 : (i >= 9 ? 2 : 0);
  }
  const LabelVolume y(g, data, 3);
  std::vector<Label> wrong = data;
  wrong[linear_index(g.dims, 6, 8, 8)] = 2;
  const LabelVolume p(g, wrong, 3);
  const auto r = gap_dice(p, y, 10.0);
  const auto region = oracle::gap_region(y, 10.0);
  const auto want = oracle::dice(p, y, [&](std::size_t v) { return bool(region[v]); });
  check_close(r.per_class[0], want[0]);
  check_close(r.per_class[1], want[1]);
  check_close(r.binary, oracle::binary_dice(p, y, region));
  CHECK(r.per_class[0] < 1.0);
}

TEST_CASE("gap dice with an infinite epsilon equals dice") {
  std::mt19937_64 rng(4);
  const LabelVolume y = oracle::random_labels(rng, {9, 9, 9}, 4);
  const LabelVolume p = oracle::random_labels(rng, {9, 9, 9}, 4);
  const auto full = gap_dice(p, y, kInfiniteDistance);
  const auto plain = dice(p, y);
  for (std::size_t c = 0; c < plain.per_class.size(); ++c) CHECK(full.per_class[c] == plain.per_class[c]);
}

TEST_CASE("hausdorff") {
  const LabelVolume e = blank({5, 5, 2}, 2);
  const LabelVolume a = paint(e, {{{0, 0, 0}, 1}});
  const LabelVolume b = paint(e, {{{3, 4, 0}, 1}});
  CHECK(hausdorff(a, b).max == doctest::Approx(5.0));
  CHECK(hausdorff(a, a).max == 0.0);
  CHECK(std::isinf(hausdorff(a, e).per_class[0]));
  CHECK(hausdorff(e, e).per_class[0] == 0.0);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 6; ++t) {
    const LabelVolume p = oracle::random_labels(rng, {10, 10, 10}, 3);
    const LabelVolume y = oracle::random_labels(rng, {10, 10, 10}, 3);
    const auto got = hausdorff(p, y);
    const auto want = oracle::hausdorff(p, y);
    for (std::size_t c = 0; c < want.size(); ++c) check_close(got.per_class[c], want[c]);
    const auto sym = hausdorff(y, p);
    for (std::size_t c = 0; c < want.size(); ++c) CHECK(sym.per_class[c] == got.per_class[c]);
  }
}

TEST_CASE("metrics are invariant under joint axis permutation and flip") {
  std::mt19937_64 rng(6);
  const LabelVolume p = oracle::random_labels(rng, {8, 10, 12}, 3);
  const LabelVolume y = oracle::random_labels(rng, {8, 10, 12}, 3);
  const auto a = evaluate(p, y, {});
  const auto b = evaluate(permute_flip(p), permute_flip(y), {});
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(a.dice.per_class[c] == doctest::Approx(b.dice.per_class[c]).epsilon(1e-12));
    CHECK(a.gap_dice.per_class[c] == doctest::Approx(b.gap_dice.per_class[c]).epsilon(1e-12));
    CHECK(a.hausdorff.per_class[c] == doctest::Approx(b.hausdorff.per_class[c]).epsilon(1e-12));
  }
  CHECK(a.collision_count == b.collision_count);
}

TEST_CASE("evaluate on identical volumes and report round-trip") {
  std::mt19937_64 rng(7);
  const LabelVolume y = oracle::random_labels(rng, {10, 10, 10}, 4);
  MetricsReport r = evaluate(y, y, {});
  CHECK(r.dice.macro == 1.0);
  CHECK(r.gap_dice.macro == 1.0);
  CHECK(r.hausdorff.max == 0.0);
  CHECK(r.collision_count == detect_collisions(y, 2.0).count);

  const LabelVolume p = oracle::random_labels(rng, {10, 10, 10}, 4);
  r = evaluate(p, y, {});
  r.prediction_id = "p";
  r.truth_id = "y";
  const std::string text = r.to_text();
  for (const char* key : {"\"dice.macro\"", "\"gapdice.macro.eps10\"", "\"hd.max_vox\"", "\"collisions.count.eps2\""})
    CHECK(text.find(key) != std::string::npos);
  CHECK(MetricsReport::from_text(text).to_text() == text);

  const LabelVolume lone = paint(blank({4, 4, 4}, 2), {{{1, 1, 1}, 1}});
  const MetricsReport inf = evaluate(lone, blank({4, 4, 4}, 2), {});
  CHECK(inf.to_text().find("\"inf\"") != std::string::npos);
  CHECK(std::isinf(MetricsReport::from_text(inf.to_text()).hausdorff.max));
}

TEST_CASE("epsilon tags") {
  CHECK(epsilon_tag(10.0) == "eps10");
  CHECK(epsilon_tag(2.5) == "eps2.5");
  CHECK(epsilon_tag(kInfiniteDistance) == "epsinf");
}
