#include "doctest.h"
#include "mpseg/metrics.hpp"
#include "mpseg/phantom.hpp"
#include "mpseg/pipeline.hpp"
#include "mpseg/postprocess.hpp"
#include "mpseg/volume_io.hpp"
#include "support/tempdir.hpp"

using namespace mpseg;
using testing_support::TempDir;

namespace {

Phantom small_phantom() {
  PhantomSpec s;
  s.geometry.dims = {32, 28, 24};
  s.geometry.spacing_mm = {1.0, 1.2, 1.5};
  s.shapes.push_back({1, ShapeKind::sphere, {9.0, 16.0, 17.0}, {6, 6, 6}, {}});
  s.mirror_pairs.push_back({1, 2});
  s.gap_vox = 2.0;
  s.intensity.noise_sd = 10.0;
  return generate_phantom(s);
}

PredictConfig config_for(const VolumeGeometry& g, const std::filesystem::path& work) {
  PredictConfig c;
  c.views = generate_views(6, 3, 60.0);
  const std::vector<VolumeGeometry> gs{g};
  c.grid = fit_grid(gs, GridFitMode::infer, true);
  c.work_dir = work;
  return c;
}

}  // namespace

TEST_CASE("oracle pipeline recovers the phantom and is job-count independent") {
  TempDir dir("pipe");
  const Phantom ph = small_phantom();
  PredictConfig c = config_for(ph.image.geometry(), dir.path());
  const PredictResult one = predict(ph.image, oracle_perfect(ph.labels), c);
  c.jobs = 4;
  c.keep_view_probabilities = true;
  const PredictResult four = predict(ph.image, oracle_perfect(ph.labels), c);
  CHECK(one.labels == four.labels);
  CHECK(four.view_probabilities.size() == 6);
  CHECK(one.grids.size() == 6);
  const auto d = dice(one.labels, ph.labels);
  for (double x : d.per_class) CHECK(x >= 0.95);

  const LabelVolume post = symmetric_cc_filter(one.labels, SymmetryPairs::parse("1:2")).labels;
  const auto dp = dice(post, ph.labels);
  for (std::size_t c = 0; c < d.per_class.size(); ++c) CHECK(dp.per_class[c] >= d.per_class[c]);
}

TEST_CASE("external oracle executable gives the same fused labels") {
  TempDir dir("pipe");
  const Phantom ph = small_phantom();
  write_volume(ph.labels, dir / "ref.json");
  PredictConfig c = config_for(ph.image.geometry(), dir / "work");
  c.jobs = 3;
  c.views = generate_views(3, 1, 50.0);
  const PredictResult in = predict(ph.image, oracle_perfect(ph.labels), c);
  const ExternalSegmenter ext{std::string(MPSEG_ORACLE_EXE) + " --reference " + (dir / "ref.json").string(),
                              3, std::chrono::seconds(120)};
  const PredictResult out = predict(ph.image, ext, c);
  CHECK(in.labels == out.labels);
  CHECK(std::filesystem::exists(dir / "work" / "view_2" / "output" / "done"));
}

TEST_CASE("sampling centers") {
  VolumeGeometry g;
  g.dims = {10, 20, 30};
  g.spacing_mm = {1, 2, 0.5};
  g.origin_mm = {5, 5, 5};
  const Vec3 c = sampling_center(g, CenterMode::volume_center);
  CHECK(c[0] == doctest::Approx(9.5));
  CHECK(c[1] == doctest::Approx(24.0));
  CHECK(c[2] == doctest::Approx(12.25));
  CHECK(sampling_center(g, CenterMode::scanner_origin) == Vec3{0, 0, 0});
}
