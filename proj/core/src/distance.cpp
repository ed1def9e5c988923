#include "mpseg/distance.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "mpseg/error.hpp"

namespace mpseg {

namespace {

// One pass of the lower envelope of parabolas along a line of n samples
// spaced `step` apart. `f` holds squared distances (+inf where no site).
void envelope_1d(const double* f, double* out, std::int64_t n, double step,
                 std::vector<std::int64_t>& sites, std::vector<double>& bounds) {
  sites.resize(static_cast<std::size_t>(n));
  bounds.resize(static_cast<std::size_t>(n) + 1);
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (f[q] == kInfiniteDistance) continue;
    const double xq = static_cast<double>(q) * step;
    if (k < 0) {
      k = 0;
      sites[0] = q;
      bounds[0] = -kInfiniteDistance;
      bounds[1] = kInfiniteDistance;
      continue;
    }
    double s = 0.0;
    while (true) {
      const std::int64_t p = sites[k];
      const double xp = static_cast<double>(p) * step;
      s = ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
      if (s <= bounds[k]) {
        --k;  // bounds[0] is -inf, so k stays >= 0
      } else {
        break;
      }
    }
    ++k;
    sites[k] = q;
    bounds[k] = s;
    bounds[k + 1] = kInfiniteDistance;
  }
  if (k < 0) {
    std::fill(out, out + n, kInfiniteDistance);
    return;
  }
  k = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    const double xq = static_cast<double>(q) * step;
    while (bounds[k + 1] < xq) ++k;
    const double dx = xq - static_cast<double>(sites[k]) * step;
    out[q] = dx * dx + f[sites[k]];
  }
}

void transform_axis(RealGrid& grid, int axis, double step) {
  const Index3& dims = grid.dims;
  const std::int64_t n = dims[axis];
  if (n == 0) return;
  const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
  std::vector<double> line(static_cast<std::size_t>(n));
  std::vector<double> result(static_cast<std::size_t>(n));
  std::vector<std::int64_t> sites;
  std::vector<double> bounds;

  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  for (std::int64_t u = 0; u < dims[a2]; ++u) {
    for (std::int64_t t = 0; t < dims[a1]; ++t) {
      Index3 start{0, 0, 0};
      start[a1] = t;
      start[a2] = u;
      const std::size_t base = linear_index(dims, start[0], start[1], start[2]);
      for (std::int64_t q = 0; q < n; ++q) line[q] = grid.data[base + q * stride];
      envelope_1d(line.data(), result.data(), n, step, sites, bounds);
      for (std::int64_t q = 0; q < n; ++q) grid.data[base + q * stride] = result[q];
    }
  }
}

Vec3 axis_scale_for(const VolumeGeometry& geometry, DistanceUnits units) {
  return units == DistanceUnits::voxels ? Vec3{1.0, 1.0, 1.0} : geometry.spacing_mm;
}

std::string format_units(DistanceUnits units) {
  return units == DistanceUnits::voxels ? "voxels" : "millimetres";
}

}  // namespace

RealGrid squared_edt(const Mask& mask, const Vec3& axis_scale) {
  RealGrid grid(mask.dims, kInfiniteDistance);
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (mask.data[n]) grid.data[n] = 0.0;
  }
  for (int axis = 0; axis < 3; ++axis) transform_axis(grid, axis, axis_scale[axis]);
  return grid;
}

RealGrid edt(const Mask& mask, const Vec3& axis_scale) {
  RealGrid grid = squared_edt(mask, axis_scale);
  for (double& v : grid.data) v = std::sqrt(v);
  return grid;
}

ClassDistanceField class_distances(const LabelVolume& labels, DistanceUnits units) {
  const std::size_t n = labels.size();
  ClassDistanceField field;
  field.dims = labels.geometry().dims;
  field.d1.assign(n, kInfiniteDistance);
  field.d2.assign(n, kInfiniteDistance);
  field.nearest_class.assign(n, 0);
  field.second_class.assign(n, 0);

  std::vector<std::size_t> counts(static_cast<std::size_t>(labels.num_classes()), 0);
  for (const Label l : labels.labels()) ++counts[l];

  const Vec3 scale = axis_scale_for(labels.geometry(), units);
  // Ascending class order with strict comparisons: lower ids win ties.
  for (int c = 1; c < labels.num_classes(); ++c) {
    if (counts[c] == 0) continue;
    const auto cls = static_cast<Label>(c);
    const RealGrid dc = squared_edt(labels.class_mask(cls), scale);
    for (std::size_t v = 0; v < n; ++v) {
      const double d = dc.data[v];
      if (d < field.d1[v]) {
        field.d2[v] = field.d1[v];
        field.second_class[v] = field.nearest_class[v];
        field.d1[v] = d;
        field.nearest_class[v] = cls;
      } else if (d < field.d2[v]) {
        field.d2[v] = d;
        field.second_class[v] = cls;
      }
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    field.d1[v] = std::sqrt(field.d1[v]);
    field.d2[v] = std::sqrt(field.d2[v]);
  }
  return field;
}

WeightMapParams WeightMapParams::eroded_recipe() {
  WeightMapParams params;
  params.w0 = 20.0;
  params.erode_radius_vox = 3;
  return params;
}

void WeightMapParams::validate() const {
  if (!(w0 >= 0.0) || !std::isfinite(w0)) throw DataError("weight map w0 must be >= 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DataError("weight map sigma must be > 0");
  if (!(wc >= 0.0) || !std::isfinite(wc)) throw DataError("weight map wc must be >= 0");
  if (erode_radius_vox < 0) throw DataError("erosion radius must be >= 0");
}

double weight_value(double d1, double d2, const WeightMapParams& params) {
  if (!std::isfinite(d1) || !std::isfinite(d2)) return params.wc;
  const double s = d1 + d2;
  return params.wc + params.w0 * std::exp(-(s * s) / (2.0 * params.sigma * params.sigma));
}

LabelVolume erode_labels(const LabelVolume& labels, int radius_vox) {
  if (radius_vox < 0) throw DataError("erosion radius must be >= 0");
  if (radius_vox == 0) return labels;

  const Index3 dims = labels.geometry().dims;
  const Index3 padded_dims{dims[0] + 2, dims[1] + 2, dims[2] + 2};
  const double r2 = static_cast<double>(radius_vox) * static_cast<double>(radius_vox);

  std::vector<Label> out(labels.labels().begin(), labels.labels().end());
  std::vector<bool> present(static_cast<std::size_t>(labels.num_classes()), false);
  for (const Label l : labels.labels()) present[l] = true;

  for (int c = 1; c < labels.num_classes(); ++c) {
    if (!present[c]) continue;
    // Distance to the nearest not-c voxel, with a one-voxel not-c border
    // standing in for everything outside the grid.
    Mask outside(padded_dims, 1);
    for (std::int64_t k = 0; k < dims[2]; ++k) {
      for (std::int64_t j = 0; j < dims[1]; ++j) {
        for (std::int64_t i = 0; i < dims[0]; ++i) {
          outside(i + 1, j + 1, k + 1) = labels.at(i, j, k) != c;
        }
      }
    }
    const RealGrid dist = squared_edt(outside);
    for (std::int64_t k = 0; k < dims[2]; ++k) {
      for (std::int64_t j = 0; j < dims[1]; ++j) {
        for (std::int64_t i = 0; i < dims[0]; ++i) {
          const std::size_t v = linear_index(dims, i, j, k);
          if (labels[v] == c && !(dist(i + 1, j + 1, k + 1) > r2)) out[v] = 0;
        }
      }
    }
  }
  return LabelVolume(labels.geometry(), std::move(out), labels.num_classes());
}

std::string WeightMap::metadata_json() const {
  nlohmann::ordered_json node;
  node["w0"] = params.w0;
  node["sigma"] = params.sigma;
  node["wc"] = params.wc;
  node["erode_radius_vox"] = params.erode_radius_vox;
  node["units"] = format_units(params.units);
  node["emptied_classes"] = emptied_classes;
  nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
  for (const Label c : emptied_classes) {
    warnings.push_back("class " + std::to_string(c) + " eroded to empty");
  }
  node["warnings"] = warnings;
  return node.dump(2) + "\n";
}

WeightMap weight_map(const LabelVolume& labels, const WeightMapParams& params) {
  params.validate();
  const LabelVolume eroded = erode_labels(labels, params.erode_radius_vox);

  std::vector<Label> emptied;
  for (int c = 1; c < labels.num_classes(); ++c) {
    const auto cls = static_cast<Label>(c);
    if (labels.class_count(cls) > 0 && eroded.class_count(cls) == 0) emptied.push_back(cls);
  }

  const ClassDistanceField field = class_distances(eroded, params.units);
  std::vector<float> weights(labels.size());
  for (std::size_t v = 0; v < weights.size(); ++v) {
    weights[v] = static_cast<float>(weight_value(field.d1[v], field.d2[v], params));
  }
  return {Volume(labels.geometry(), std::move(weights)), params, std::move(emptied)};
}

Mask gap_region(const LabelVolume& labels, double epsilon) {
  if (!(epsilon > 0.0)) throw DataError("gap region epsilon must be > 0");
  if (epsilon == kInfiniteDistance) return Mask(labels.geometry().dims, 1);
  const ClassDistanceField field = class_distances(labels);
  Mask region(labels.geometry().dims);
  for (std::size_t v = 0; v < region.size(); ++v) {
    region.data[v] = field.d1[v] + field.d2[v] < epsilon;
  }
  return region;
}

std::string CollisionReport::to_json() const {
  nlohmann::ordered_json node;
  node["epsilon"] = epsilon;
  node["count"] = count;
  node["points_listed"] = points.size();
  node["points"] = points;
  return node.dump(2) + "\n";
}

CollisionReport detect_collisions(const LabelVolume& prediction, double epsilon,
                                  std::size_t max_points, DistanceUnits units) {
  if (!(epsilon >= 0.0)) throw DataError("collision epsilon must be >= 0");
  CollisionReport report;
  report.epsilon = epsilon;
  const ClassDistanceField field = class_distances(prediction, units);
  const Index3 dims = prediction.geometry().dims;
  for (std::size_t v = 0; v < prediction.size(); ++v) {
    if (prediction[v] == 0) continue;
    // Inside its own class d1 = 0, so d2 is the distance to the nearest
    // other foreground class.
    if (field.d2[v] <= epsilon) {
      ++report.count;
      if (report.points.size() < max_points) report.points.push_back(unravel_index(dims, v));
    }
  }
  return report;
}

}  // namespace mpseg
