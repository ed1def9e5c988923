#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpseg/volume.hpp"

namespace mpseg {

/// Plane normals for multiplanar slicing. v and -v denote the same view.
struct ViewSet {
  std::vector<Vec3> views;
  std::uint64_t seed = 0;
  double min_pairwise_angle_deg = 60.0;
  bool canonical = false;

  std::string to_json() const;
  static ViewSet from_json(const std::string& text);
};

// Angle in degrees between the lines spanned by a and b, in [0, 90].
double line_angle_deg(const Vec3& a, const Vec3& b);

// Largest achievable pairwise line angle for six views (icosahedral axes).
inline constexpr double kSixViewMaxAngleDeg = 63.43494882292201;

// n seeded unit normals on the upper hemisphere with every pairwise line
// angle >= min_angle_deg, found by rejection sampling with restarts (at most
// 1e5 candidate draws). When rejection sampling runs out and n <= 6 with
// min_angle_deg <= 63.43, the views are the icosahedral axes under a seeded
// uniform random rotation. `canonical` returns the first n coordinate axes.
ViewSet generate_views(int n, std::uint64_t seed, double min_angle_deg = 60.0,
                       bool canonical = false);

enum class GridFitMode { train, infer };

struct GridSize {
  std::int64_t pixels = 0;  // d
  double side_mm = 0.0;     // m
};

// Pools per-axis voxel counts and per-axis extents over all geometries.
// train: 75th percentile (count rounded up to even); infer: maxima.
// `use_diagonal` replaces extents by each volume's diagonal length.
GridSize fit_grid(std::span<const VolumeGeometry> geometries, GridFitMode mode,
                  bool use_diagonal = false);

/// Isotropic d x d x d sampling lattice of side m, oriented by a plane
/// normal. Basis vectors derive deterministically from the normal.
class ViewGrid {
 public:
  ViewGrid(const Vec3& normal, const Vec3& center_mm, double side_mm, std::int64_t pixels);

  const Vec3& normal() const { return normal_; }
  const Vec3& basis_u() const { return basis_u_; }
  const Vec3& basis_v() const { return basis_v_; }
  const Vec3& center_mm() const { return center_; }
  double side_mm() const { return side_; }
  std::int64_t pixels_per_side() const { return pixels_; }
  double pixel_spacing() const { return side_ / static_cast<double>(pixels_); }

  // (a, b, k) = (column, row, slice) grid coordinates to physical mm.
  Vec3 point(double a, double b, double k) const;
  Vec3 grid_coordinates(const Vec3& point_mm) const;

  std::size_t pixel_offset(std::int64_t a, std::int64_t b, std::int64_t k) const {
    return static_cast<std::size_t>(a + pixels_ * (b + pixels_ * k));
  }

 private:
  Vec3 normal_;
  Vec3 basis_u_;
  Vec3 basis_v_;
  Vec3 center_;
  double side_;
  std::int64_t pixels_;
};

/// Samples of one view: d slices of d x d pixels, laid out slice-major,
/// then row (b), then column (a).
struct SliceBatch {
  ViewGrid grid;
  int num_classes = 0;
  std::vector<float> image;
  std::vector<Label> labels;   // empty when not sampled
  std::vector<float> weights;  // empty when not sampled

  std::int64_t pixels() const { return grid.pixels_per_side(); }
  std::size_t slice_size() const {
    return static_cast<std::size_t>(pixels()) * static_cast<std::size_t>(pixels());
  }
  std::size_t slice_count() const { return static_cast<std::size_t>(pixels()); }
};

struct SliceInputs {
  const Volume* image = nullptr;
  const LabelVolume* labels = nullptr;
  const Volume* weights = nullptr;
};

// Image and weights use trilinear sampling (fill 0 and 1), labels nearest
// sampling (fill class 0).
SliceBatch extract_slices(const SliceInputs& inputs, const ViewGrid& grid);

/// Per-view prediction cube: d^3 pixels x K channels, channel-last, same
/// pixel order as SliceBatch.
struct SlicePrediction {
  std::int64_t pixels = 0;
  int num_classes = 0;
  std::vector<float> probs;
};

// Trilinear interpolation of each channel at every target voxel center;
// zero outside the sampled cube. Throws DataError on shape mismatch.
ProbabilityVolume reconstruct_view(const SlicePrediction& prediction, const ViewGrid& grid,
                                   const VolumeGeometry& target);

// Sum over views in index order (not normalized).
ProbabilityVolume sum_views(std::span<const ProbabilityVolume> views);

// Sum then argmax; ties break toward the lower class index.
LabelVolume fuse(std::span<const ProbabilityVolume> views);
LabelVolume argmax_labels(const ProbabilityVolume& scores);

}  // namespace mpseg
