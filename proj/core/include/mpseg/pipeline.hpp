#pragma once

#include <filesystem>
#include <vector>

#include "mpseg/multiplanar.hpp"
#include "mpseg/segmenter.hpp"
#include "mpseg/volume.hpp"

namespace mpseg {

// Where the sampling cube is centered: the volume's physical center, or the
// scanner origin (0, 0, 0).
enum class CenterMode { volume_center, scanner_origin };

struct PredictConfig {
  ViewSet views;
  GridSize grid;
  CenterMode center = CenterMode::volume_center;
  int jobs = 1;
  std::filesystem::path work_dir;
  bool keep_view_probabilities = false;
};

struct PredictResult {
  LabelVolume labels;
  std::vector<ViewGrid> grids;
  std::vector<ProbabilityVolume> view_probabilities;  // filled when requested
};

Vec3 sampling_center(const VolumeGeometry& geometry, CenterMode mode);

// sample -> segment -> reconstruct per view (up to `jobs` views at once),
// then a sequential sum over views in index order and argmax.
PredictResult predict(const Volume& image, const SegmenterHandle& segmenter,
                      const PredictConfig& config);

}  // namespace mpseg
