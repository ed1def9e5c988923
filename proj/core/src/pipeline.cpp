#include "mpseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>

#include "mpseg/error.hpp"

namespace mpseg {

Vec3 sampling_center(const VolumeGeometry& geometry, CenterMode mode) {
  return mode == CenterMode::volume_center ? geometry.center_mm() : Vec3{0.0, 0.0, 0.0};
}

PredictResult predict(const Volume& image, const SegmenterHandle& segmenter,
                      const PredictConfig& config) {
  const std::size_t n = config.views.views.size();
  if (n == 0) throw DataError("predict needs at least one view");
  if (config.grid.pixels < 2 || !(config.grid.side_mm > 0.0)) {
    throw DataError("predict needs a grid with d >= 2 and m > 0");
  }
  const Vec3 center = sampling_center(image.geometry(), config.center);

  std::vector<ViewGrid> grids;
  for (const auto& view : config.views.views) {
    grids.emplace_back(view, center, config.grid.side_mm, config.grid.pixels);
  }

  std::vector<std::optional<ProbabilityVolume>> reconstructed(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t v = next++; v < n; v = next++) {
      try {
        const SliceBatch batch = extract_slices({&image, nullptr, nullptr}, grids[v]);
        const auto view_dir = config.work_dir / ("view_" + std::to_string(v));
        const SlicePrediction prediction = run_segmenter(segmenter, batch, view_dir);
        reconstructed[v] = reconstruct_view(prediction, grids[v], image.geometry());
      } catch (...) {
        failures[v] = std::current_exception();
      }
    }
  };

  const auto jobs = static_cast<std::size_t>(std::clamp<int>(config.jobs, 1, static_cast<int>(n)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<ProbabilityVolume> views;
  views.reserve(n);
  for (auto& r : reconstructed) views.push_back(std::move(*r));
  PredictResult result{fuse(views), std::move(grids), {}};
  if (config.keep_view_probabilities) result.view_probabilities = std::move(views);
  return result;
}

}  // namespace mpseg
