#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mpseg {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;
using Label = std::uint8_t;

inline constexpr std::size_t voxel_count(const Index3& dims) {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
         static_cast<std::size_t>(dims[2]);
}

// Linear offset with the first index fastest.
inline constexpr std::size_t linear_index(const Index3& dims, std::int64_t i, std::int64_t j,
                                          std::int64_t k) {
  return static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
}

inline constexpr Index3 unravel_index(const Index3& dims, std::size_t offset) {
  const auto o = static_cast<std::int64_t>(offset);
  return {o % dims[0], (o / dims[0]) % dims[1], o / (dims[0] * dims[1])};
}

/// Axis-aligned physical placement of a voxel lattice. `origin_mm` is the
/// physical position of the center of voxel (0,0,0).
struct VolumeGeometry {
  Index3 dims{1, 1, 1};
  Vec3 spacing_mm{1.0, 1.0, 1.0};
  Vec3 origin_mm{0.0, 0.0, 0.0};

  // Throws DataError unless every dim >= 1 and every spacing > 0.
  void validate() const;

  std::size_t size() const { return voxel_count(dims); }
  Vec3 physical_position(const Index3& index) const;
  Vec3 continuous_index(const Vec3& point_mm) const;
  // dims * spacing, the extent covered by the voxel cells.
  Vec3 extent_mm() const;
  // Physical position of the geometric center of the voxel-center lattice.
  Vec3 center_mm() const;
  bool contains(const Index3& index) const;

  friend bool operator==(const VolumeGeometry&, const VolumeGeometry&) = default;
};

/// Dense 3D scratch grid without physical geometry, used for masks and
/// distance fields.
template <typename T>
struct Grid {
  Index3 dims{0, 0, 0};
  std::vector<T> data;

  Grid() = default;
  explicit Grid(const Index3& d, T fill = T{}) : dims(d), data(voxel_count(d), fill) {}

  std::size_t size() const { return data.size(); }
  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data[linear_index(dims, i, j, k)];
  }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data[linear_index(dims, i, j, k)];
  }
};

using Mask = Grid<std::uint8_t>;
using RealGrid = Grid<double>;

/// Scalar intensity volume (32-bit float, all values finite).
class Volume {
 public:
  Volume(VolumeGeometry geometry, std::vector<float> data);

  const VolumeGeometry& geometry() const { return geometry_; }
  std::span<const float> data() const { return data_; }
  std::size_t size() const { return data_.size(); }
  float operator[](std::size_t offset) const { return data_[offset]; }
  float at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[linear_index(geometry_.dims, i, j, k)];
  }

 private:
  VolumeGeometry geometry_;
  std::vector<float> data_;
};

/// Integer class map; class 0 is background and every label is < num_classes.
class LabelVolume {
 public:
  LabelVolume(VolumeGeometry geometry, std::vector<Label> labels, int num_classes);

  const VolumeGeometry& geometry() const { return geometry_; }
  std::span<const Label> labels() const { return labels_; }
  int num_classes() const { return num_classes_; }
  std::size_t size() const { return labels_.size(); }
  Label operator[](std::size_t offset) const { return labels_[offset]; }
  Label at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return labels_[linear_index(geometry_.dims, i, j, k)];
  }

  Mask class_mask(Label cls) const;
  Mask foreground_mask() const;
  std::size_t class_count(Label cls) const;

  friend bool operator==(const LabelVolume&, const LabelVolume&) = default;

 private:
  VolumeGeometry geometry_;
  std::vector<Label> labels_;
  int num_classes_ = 1;
};

/// Per-voxel K-vector of nonnegative scores, channel-last. `normalized`
/// volumes sum to one per voxel (within 1e-4); fused sums are not.
class ProbabilityVolume {
 public:
  ProbabilityVolume(VolumeGeometry geometry, int num_classes, std::vector<float> probs,
                    bool normalized);

  const VolumeGeometry& geometry() const { return geometry_; }
  int num_classes() const { return num_classes_; }
  bool normalized() const { return normalized_; }
  std::span<const float> data() const { return probs_; }
  std::span<const float> voxel(std::size_t offset) const {
    return std::span<const float>(probs_).subspan(offset * num_classes_, num_classes_);
  }

 private:
  VolumeGeometry geometry_;
  int num_classes_ = 1;
  std::vector<float> probs_;
  bool normalized_ = false;
};

/// The eight corner offsets and weights for trilinear interpolation at a
/// continuous index. Coordinates within 1e-9 of an integer snap to it, so
/// lattice points reproduce stored values exactly.
struct TrilinearStencil {
  std::array<std::size_t, 8> offsets{};
  std::array<double, 8> weights{};
};

// Returns nullopt when the point lies outside [0, n-1] on any axis.
std::optional<TrilinearStencil> trilinear_stencil(const Index3& dims, const Vec3& continuous);

double sample_trilinear(const Volume& volume, const Vec3& point_mm, double fill = 0.0);

// Nearest voxel with round-half-away-from-zero on index coordinates.
std::optional<Index3> nearest_voxel(const VolumeGeometry& geometry, const Vec3& point_mm);
Label sample_nearest(const LabelVolume& labels, const Vec3& point_mm, Label fill = 0);
float sample_nearest(const Volume& volume, const Vec3& point_mm, float fill = 0.0f);

}  // namespace mpseg
