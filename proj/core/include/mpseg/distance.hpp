#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mpseg/volume.hpp"

namespace mpseg {

inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

// Distances are measured in voxel-index units unless millimetres are
// requested, in which case each axis is scaled by the volume spacing.
enum class DistanceUnits { voxels, millimetres };

// Exact squared Euclidean distance from every voxel to the nearest nonzero
// mask voxel (separable lower-envelope-of-parabolas transform). Voxels get
// +inf when the mask is empty. `axis_scale` stretches each axis.
RealGrid squared_edt(const Mask& mask, const Vec3& axis_scale = {1.0, 1.0, 1.0});
RealGrid edt(const Mask& mask, const Vec3& axis_scale = {1.0, 1.0, 1.0});

/// For each voxel, the distances to the nearest and second-nearest
/// foreground classes (0 inside a class). Class ids of 0 mean "none"
/// and pair with an infinite distance. Ties go to the lower class id.
struct ClassDistanceField {
  Index3 dims{};
  std::vector<double> d1;
  std::vector<double> d2;
  std::vector<Label> nearest_class;
  std::vector<Label> second_class;
};

ClassDistanceField class_distances(const LabelVolume& labels,
                                   DistanceUnits units = DistanceUnits::voxels);

struct WeightMapParams {
  double w0 = 10.0;
  double sigma = 5.0;
  double wc = 1.0;
  int erode_radius_vox = 0;
  DistanceUnits units = DistanceUnits::voxels;

  // Erode by a radius-3 ball and double w0 to 20.
  static WeightMapParams eroded_recipe();
  void validate() const;
};

// wc + w0 * exp(-(d1 + d2)^2 / (2 sigma^2)); wc when either distance is infinite.
double weight_value(double d1, double d2, const WeightMapParams& params);

// Keeps a voxel of class c iff every voxel within Euclidean radius r (index
// units) is also class c; voxels outside the grid count as not-c.
LabelVolume erode_labels(const LabelVolume& labels, int radius_vox);

struct WeightMap {
  Volume weights;
  WeightMapParams params;
  // Classes present in the input that erosion removed entirely.
  std::vector<Label> emptied_classes;

  std::string metadata_json() const;
};

WeightMap weight_map(const LabelVolume& labels, const WeightMapParams& params = {});

// Voxels with d1 + d2 < epsilon on the (un-eroded) labels. epsilon = +inf
// selects the whole grid.
Mask gap_region(const LabelVolume& labels, double epsilon);

/// Predicted foreground voxels lying within `epsilon` of a different
/// foreground class. `count` is always exact; `points` holds at most
/// `max_points` voxel indices in storage order.
struct CollisionReport {
  double epsilon = 2.0;
  std::size_t count = 0;
  std::vector<Index3> points;

  std::string to_json() const;
};

CollisionReport detect_collisions(const LabelVolume& prediction, double epsilon = 2.0,
                                  std::size_t max_points = std::numeric_limits<std::size_t>::max(),
                                  DistanceUnits units = DistanceUnits::voxels);

}  // namespace mpseg
