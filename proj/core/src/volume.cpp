#include "mpseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mpseg/error.hpp"

namespace mpseg {

namespace {

constexpr double kSnapTolerance = 1e-9;

double snap(double c) {
  const double r = std::round(c);
  return std::abs(c - r) <= kSnapTolerance ? r : c;
}

}  // namespace

void VolumeGeometry::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) {
      throw DataError("volume dims must be >= 1, got " + std::to_string(dims[a]) + " on axis " +
                      std::to_string(a));
    }
    if (!(spacing_mm[a] > 0.0) || !std::isfinite(spacing_mm[a])) {
      throw DataError("volume spacing must be finite and > 0 on axis " + std::to_string(a));
    }
    if (!std::isfinite(origin_mm[a])) {
      throw DataError("volume origin must be finite");
    }
  }
}

Vec3 VolumeGeometry::physical_position(const Index3& index) const {
  return {origin_mm[0] + static_cast<double>(index[0]) * spacing_mm[0],
          origin_mm[1] + static_cast<double>(index[1]) * spacing_mm[1],
          origin_mm[2] + static_cast<double>(index[2]) * spacing_mm[2]};
}

Vec3 VolumeGeometry::continuous_index(const Vec3& point_mm) const {
  return {(point_mm[0] - origin_mm[0]) / spacing_mm[0],
          (point_mm[1] - origin_mm[1]) / spacing_mm[1],
          (point_mm[2] - origin_mm[2]) / spacing_mm[2]};
}

Vec3 VolumeGeometry::extent_mm() const {
  return {static_cast<double>(dims[0]) * spacing_mm[0],
          static_cast<double>(dims[1]) * spacing_mm[1],
          static_cast<double>(dims[2]) * spacing_mm[2]};
}

Vec3 VolumeGeometry::center_mm() const {
  return {origin_mm[0] + 0.5 * static_cast<double>(dims[0] - 1) * spacing_mm[0],
          origin_mm[1] + 0.5 * static_cast<double>(dims[1] - 1) * spacing_mm[1],
          origin_mm[2] + 0.5 * static_cast<double>(dims[2] - 1) * spacing_mm[2]};
}

bool VolumeGeometry::contains(const Index3& index) const {
  return index[0] >= 0 && index[1] >= 0 && index[2] >= 0 && index[0] < dims[0] &&
         index[1] < dims[1] && index[2] < dims[2];
}

Volume::Volume(VolumeGeometry geometry, std::vector<float> data)
    : geometry_(geometry), data_(std::move(data)) {
  geometry_.validate();
  if (data_.size() != geometry_.size()) {
    throw DataError("volume data length " + std::to_string(data_.size()) +
                    " does not match dims (" + std::to_string(geometry_.size()) + ")");
  }
  for (std::size_t n = 0; n < data_.size(); ++n) {
    if (!std::isfinite(data_[n])) {
      throw DataError("non-finite intensity at voxel " + std::to_string(n));
    }
  }
}

LabelVolume::LabelVolume(VolumeGeometry geometry, std::vector<Label> labels, int num_classes)
    : geometry_(geometry), labels_(std::move(labels)), num_classes_(num_classes) {
  geometry_.validate();
  if (num_classes_ < 1 || num_classes_ > 256) {
    throw DataError("num_classes must be in [1, 256], got " + std::to_string(num_classes_));
  }
  if (labels_.size() != geometry_.size()) {
    throw DataError("label data length " + std::to_string(labels_.size()) +
                    " does not match dims (" + std::to_string(geometry_.size()) + ")");
  }
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    if (labels_[n] >= num_classes_) {
      throw DataError("label " + std::to_string(labels_[n]) + " at voxel " + std::to_string(n) +
                      " is >= num_classes " + std::to_string(num_classes_));
    }
  }
}

Mask LabelVolume::class_mask(Label cls) const {
  Mask mask(geometry_.dims);
  for (std::size_t n = 0; n < labels_.size(); ++n) mask.data[n] = labels_[n] == cls;
  return mask;
}

Mask LabelVolume::foreground_mask() const {
  Mask mask(geometry_.dims);
  for (std::size_t n = 0; n < labels_.size(); ++n) mask.data[n] = labels_[n] != 0;
  return mask;
}

std::size_t LabelVolume::class_count(Label cls) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), cls));
}

ProbabilityVolume::ProbabilityVolume(VolumeGeometry geometry, int num_classes,
                                     std::vector<float> probs, bool normalized)
    : geometry_(geometry),
      num_classes_(num_classes),
      probs_(std::move(probs)),
      normalized_(normalized) {
  geometry_.validate();
  if (num_classes_ < 1 || num_classes_ > 256) {
    throw DataError("num_classes must be in [1, 256], got " + std::to_string(num_classes_));
  }
  if (probs_.size() != geometry_.size() * static_cast<std::size_t>(num_classes_)) {
    throw DataError("probability data length " + std::to_string(probs_.size()) +
                    " does not match dims x K");
  }
  for (std::size_t n = 0; n < probs_.size(); ++n) {
    if (!std::isfinite(probs_[n]) || probs_[n] < 0.0f) {
      throw DataError("probability entry " + std::to_string(n) + " is negative or non-finite");
    }
  }
  if (normalized_) {
    for (std::size_t v = 0; v < geometry_.size(); ++v) {
      double sum = 0.0;
      for (const float p : voxel(v)) sum += p;
      if (std::abs(sum - 1.0) > 1e-4) {
        throw DataError("normalized probability volume sums to " + std::to_string(sum) +
                        " at voxel " + std::to_string(v));
      }
    }
  }
}

std::optional<TrilinearStencil> trilinear_stencil(const Index3& dims, const Vec3& continuous) {
  std::array<std::int64_t, 3> base{};
  std::array<std::int64_t, 3> step{};
  std::array<double, 3> frac{};
  for (int a = 0; a < 3; ++a) {
    const double c = snap(continuous[a]);
    const auto last = static_cast<double>(dims[a] - 1);
    if (!(c >= -kSnapTolerance && c <= last + kSnapTolerance)) return std::nullopt;
    const double clamped = std::clamp(c, 0.0, last);
    if (dims[a] == 1) {
      base[a] = 0;
      step[a] = 0;
      frac[a] = 0.0;
      continue;
    }
    const auto i0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(clamped)),
                                           dims[a] - 2);
    base[a] = i0;
    step[a] = 1;
    frac[a] = clamped - static_cast<double>(i0);
  }
  TrilinearStencil stencil;
  int corner = 0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? frac[0] : 1.0 - frac[0];
        const double wy = dy ? frac[1] : 1.0 - frac[1];
        const double wz = dz ? frac[2] : 1.0 - frac[2];
        stencil.offsets[corner] = linear_index(dims, base[0] + dx * step[0],
                                               base[1] + dy * step[1], base[2] + dz * step[2]);
        stencil.weights[corner] = wx * wy * wz;
        ++corner;
      }
    }
  }
  return stencil;
}

double sample_trilinear(const Volume& volume, const Vec3& point_mm, double fill) {
  const auto stencil = trilinear_stencil(volume.geometry().dims,
                                         volume.geometry().continuous_index(point_mm));
  if (!stencil) return fill;
  double value = 0.0;
  for (int c = 0; c < 8; ++c) {
    if (stencil->weights[c] != 0.0) value += stencil->weights[c] * volume[stencil->offsets[c]];
  }
  return value;
}

std::optional<Index3> nearest_voxel(const VolumeGeometry& geometry, const Vec3& point_mm) {
  const Vec3 c = geometry.continuous_index(point_mm);
  Index3 index{};
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(c[a])) return std::nullopt;
    index[a] = static_cast<std::int64_t>(std::round(c[a]));
  }
  if (!geometry.contains(index)) return std::nullopt;
  return index;
}

Label sample_nearest(const LabelVolume& labels, const Vec3& point_mm, Label fill) {
  const auto index = nearest_voxel(labels.geometry(), point_mm);
  return index ? labels.at((*index)[0], (*index)[1], (*index)[2]) : fill;
}

float sample_nearest(const Volume& volume, const Vec3& point_mm, float fill) {
  const auto index = nearest_voxel(volume.geometry(), point_mm);
  return index ? volume.at((*index)[0], (*index)[1], (*index)[2]) : fill;
}

}  // namespace mpseg
