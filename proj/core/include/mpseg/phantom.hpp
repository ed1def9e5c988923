#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpseg/volume.hpp"

namespace mpseg {

enum class ShapeKind { sphere, ellipsoid, capsule };

/// A quadric or capsule painted with `class_id`.
///   sphere:    center_mm, radii_mm[0]
///   ellipsoid: center_mm, radii_mm (axis-aligned semi-axes)
///   capsule:   segment center_mm +/- half_axis_mm, radius radii_mm[0]
struct ShapeSpec {
  Label class_id = 1;
  ShapeKind kind = ShapeKind::sphere;
  Vec3 center_mm{};
  Vec3 radii_mm{1.0, 1.0, 1.0};
  Vec3 half_axis_mm{};
};

/// Class `mirror` is the index-space reflection of class `source` across the
/// mid-plane perpendicular to `PhantomSpec::mirror_axis`.
struct MirrorPair {
  Label source = 0;
  Label mirror = 0;
};

struct PhantomIntensity {
  double bone_value = 1000.0;
  double background_value = 0.0;
  double noise_sd = 0.0;
};

struct PhantomSpec {
  VolumeGeometry geometry;
  std::vector<ShapeSpec> shapes;
  // Minimum Euclidean voxel distance between voxels of different classes.
  double gap_vox = 0.0;
  int mirror_axis = 0;
  std::vector<MirrorPair> mirror_pairs;
  PhantomIntensity intensity;
  std::uint64_t seed = 0;

  // Highest class id + 1.
  int num_classes() const;
  void validate() const;

  std::string to_json() const;
  static PhantomSpec from_json(const std::string& text);
};

struct Phantom {
  Volume image;
  LabelVolume labels;
};

// Rasterizes classes in listing order (a mirror class is listed right after
// its source); later classes overwrite earlier ones. Gap enforcement then
// removes voxels of each class closer than gap_vox to any earlier class.
// Noise is seeded Gaussian from the counter-based generator in random.hpp,
// added to every voxel. Throws DataError when a class ends up empty.
Phantom generate_phantom(const PhantomSpec& spec);

// Two mirrored spheres (classes 1 and 2, radius 12 vox) in a 64^3 grid with
// three-voxel clearance.
PhantomSpec two_sphere_phantom_spec(double gap_vox = 3.0);

// Simplified hip joint: femoral heads with necks (classes 1, 2) seated in
// cup-shaped hip bones (classes 3, 4), left/right mirrored across x.
PhantomSpec joint_phantom_spec();

}  // namespace mpseg
