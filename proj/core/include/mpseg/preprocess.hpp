#pragma once

#include <span>
#include <string>

#include "mpseg/volume.hpp"

namespace mpseg {

// Quantile of ascending-sorted samples with linear interpolation between
// order statistics at position (n-1)*p ("type 7").
double quantile_linear(std::span<const double> sorted, double p);

enum class CenterStatistic { mean, median };

struct StandardizationStats {
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  CenterStatistic center = CenterStatistic::mean;

  double center_value() const { return center == CenterStatistic::mean ? mean : median; }
  double scale() const { return q75 - q25; }
  std::string to_json() const;
};

// Every voxel becomes max(value, 0).
Volume clip_negatives(const Volume& volume);

struct Standardized {
  Volume volume;
  StandardizationStats stats;
};

/// Robust standardization (x - center) / (q75 - q25) with statistics taken
/// over all voxels of this one volume. The printed formula centers on the
/// mean; `CenterStatistic::median` is available as an opt-in.
/// Throws DataError when q75 - q25 < 1e-9.
Standardized standardize(const Volume& volume, CenterStatistic center = CenterStatistic::mean);

}  // namespace mpseg
