#include "mpseg/multiplanar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "mpseg/error.hpp"
#include "mpseg/preprocess.hpp"
#include "mpseg/random.hpp"

namespace mpseg {

namespace {

constexpr int kMaxViewDraws = 100000;
constexpr int kDrawsPerRestart = 1000;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& a) {
  const double n = std::sqrt(dot(a, a));
  if (!(n > 0.0) || !std::isfinite(n)) throw DataError("cannot normalize a zero vector");
  return {a[0] / n, a[1] / n, a[2] / n};
}

Vec3 upper_hemisphere(Vec3 v) {
  if (v[2] < 0.0 || (v[2] == 0.0 && (v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0)))) {
    v = {-v[0], -v[1], -v[2]};
  }
  return v;
}

Vec3 random_hemisphere_direction(CounterRng& rng) {
  const double z = rng.uniform();
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

bool separated(const std::vector<Vec3>& views, const Vec3& candidate, double min_angle_deg) {
  return std::all_of(views.begin(), views.end(), [&](const Vec3& v) {
    return line_angle_deg(v, candidate) >= min_angle_deg;
  });
}

// Uniformly random rotation from a unit quaternion (Shoemake's method).
std::array<Vec3, 3> random_rotation(CounterRng& rng) {
  const double u1 = rng.uniform();
  const double u2 = 2.0 * std::numbers::pi * rng.uniform();
  const double u3 = 2.0 * std::numbers::pi * rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double w = a * std::sin(u2);
  const double x = a * std::cos(u2);
  const double y = b * std::sin(u3);
  const double z = b * std::cos(u3);
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

std::vector<Vec3> rotated_icosahedral_axes(CounterRng& rng, int n) {
  const double phi = std::numbers::phi;
  const std::array<Vec3, 6> axes{{{0, 1, phi}, {0, 1, -phi}, {1, phi, 0},
                                  {1, -phi, 0}, {phi, 0, 1}, {-phi, 0, 1}}};
  const auto rot = random_rotation(rng);
  std::vector<Vec3> views;
  for (int i = 0; i < n; ++i) {
    const Vec3 a = normalized(axes[i]);
    views.push_back(upper_hemisphere(normalized({dot(rot[0], a), dot(rot[1], a), dot(rot[2], a)})));
  }
  return views;
}

}  // namespace

double line_angle_deg(const Vec3& a, const Vec3& b) {
  const double c = std::abs(dot(a, b)) / std::sqrt(dot(a, a) * dot(b, b));
  return std::acos(std::clamp(c, 0.0, 1.0)) * 180.0 / std::numbers::pi;
}

std::string ViewSet::to_json() const {
  nlohmann::ordered_json node;
  node["seed"] = seed;
  node["min_pairwise_angle_deg"] = min_pairwise_angle_deg;
  node["canonical"] = canonical;
  node["views"] = views;
  return node.dump(2) + "\n";
}

ViewSet ViewSet::from_json(const std::string& text) {
  try {
    const auto node = nlohmann::json::parse(text);
    ViewSet set;
    set.seed = node.value("seed", std::uint64_t{0});
    set.min_pairwise_angle_deg = node.value("min_pairwise_angle_deg", 0.0);
    set.canonical = node.value("canonical", false);
    for (const auto& v : node.at("views")) {
      const Vec3 view{v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
      if (std::abs(std::sqrt(dot(view, view)) - 1.0) > 1e-9) {
        throw DataError("view vectors must have unit norm");
      }
      set.views.push_back(view);
    }
    if (set.views.empty()) throw DataError("view set is empty");
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed view set: ") + e.what());
  }
}

ViewSet generate_views(int n, std::uint64_t seed, double min_angle_deg, bool canonical) {
  if (n < 1) throw DataError("number of views must be >= 1");
  ViewSet set;
  set.seed = seed;
  set.min_pairwise_angle_deg = min_angle_deg;
  set.canonical = canonical;
  if (canonical) {
    if (n > 3) throw DataError("canonical mode supports at most 3 views");
    const std::array<Vec3, 3> axes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    set.views.assign(axes.begin(), axes.begin() + n);
    set.min_pairwise_angle_deg = std::min(min_angle_deg, 90.0);
    return set;
  }

  CounterRng rng(seed);
  int draws = 0;
  while (draws < kMaxViewDraws) {
    std::vector<Vec3> views;
    int since_restart = 0;
    while (static_cast<int>(views.size()) < n && since_restart < kDrawsPerRestart &&
           draws < kMaxViewDraws) {
      const Vec3 candidate = random_hemisphere_direction(rng);
      ++draws;
      ++since_restart;
      if (separated(views, candidate, min_angle_deg)) views.push_back(candidate);
    }
    if (static_cast<int>(views.size()) == n) {
      set.views = std::move(views);
      return set;
    }
  }
  if (n <= 6 && min_angle_deg <= kSixViewMaxAngleDeg) {
    set.views = rotated_icosahedral_axes(rng, n);
    return set;
  }
  throw DataError("cannot place " + std::to_string(n) + " views with pairwise angle >= " +
                  std::to_string(min_angle_deg) + " deg within " +
                  std::to_string(kMaxViewDraws) + " draws");
}

GridSize fit_grid(std::span<const VolumeGeometry> geometries, GridFitMode mode,
                  bool use_diagonal) {
  if (geometries.empty()) throw DataError("fit_grid needs at least one geometry");
  std::vector<double> counts;
  std::vector<double> extents;
  for (const auto& g : geometries) {
    const Vec3 extent = g.extent_mm();
    for (int a = 0; a < 3; ++a) counts.push_back(static_cast<double>(g.dims[a]));
    if (use_diagonal) {
      extents.push_back(std::sqrt(dot(extent, extent)));
    } else {
      extents.insert(extents.end(), extent.begin(), extent.end());
    }
  }
  std::sort(counts.begin(), counts.end());
  std::sort(extents.begin(), extents.end());

  GridSize size;
  if (mode == GridFitMode::infer) {
    size.pixels = static_cast<std::int64_t>(counts.back());
    size.side_mm = extents.back();
  } else {
    auto d = static_cast<std::int64_t>(std::ceil(quantile_linear(counts, 0.75)));
    if (d % 2 != 0) ++d;
    size.pixels = d;
    size.side_mm = quantile_linear(extents, 0.75);
  }
  return size;
}

ViewGrid::ViewGrid(const Vec3& normal, const Vec3& center_mm, double side_mm,
                   std::int64_t pixels)
    : normal_(normalized(normal)), center_(center_mm), side_(side_mm), pixels_(pixels) {
  if (pixels_ < 1) throw DataError("view grid needs at least one pixel per side");
  if (!(side_ > 0.0) || !std::isfinite(side_)) throw DataError("view grid side must be > 0");
  // Canonical axis least aligned with the normal; ties go to the lower axis.
  int least = 0;
  for (int a = 1; a < 3; ++a) {
    if (std::abs(normal_[a]) < std::abs(normal_[least])) least = a;
  }
  Vec3 e{0.0, 0.0, 0.0};
  e[least] = 1.0;
  basis_u_ = normalized(cross(normal_, e));
  basis_v_ = cross(normal_, basis_u_);
}

Vec3 ViewGrid::point(double a, double b, double k) const {
  const double s = pixel_spacing();
  const double h = 0.5 * static_cast<double>(pixels_ - 1);
  const double ca = (a - h) * s;
  const double cb = (b - h) * s;
  const double ck = (k - h) * s;
  Vec3 p{};
  for (int i = 0; i < 3; ++i) {
    p[i] = center_[i] + ca * basis_u_[i] + cb * basis_v_[i] + ck * normal_[i];
  }
  return p;
}

Vec3 ViewGrid::grid_coordinates(const Vec3& point_mm) const {
  const double s = pixel_spacing();
  const double h = 0.5 * static_cast<double>(pixels_ - 1);
  const Vec3 r{point_mm[0] - center_[0], point_mm[1] - center_[1], point_mm[2] - center_[2]};
  return {dot(r, basis_u_) / s + h, dot(r, basis_v_) / s + h, dot(r, normal_) / s + h};
}

SliceBatch extract_slices(const SliceInputs& inputs, const ViewGrid& grid) {
  if (inputs.image == nullptr) throw DataError("extract_slices requires an image volume");
  if (grid.pixels_per_side() < 2) throw DataError("slices need at least 2 pixels per side");
  const auto& geometry = inputs.image->geometry();
  if (inputs.labels && inputs.labels->geometry() != geometry) {
    throw DataError("label volume geometry does not match the image");
  }
  if (inputs.weights && inputs.weights->geometry() != geometry) {
    throw DataError("weight volume geometry does not match the image");
  }

  SliceBatch batch{grid, inputs.labels ? inputs.labels->num_classes() : 0, {}, {}, {}};
  const std::int64_t d = grid.pixels_per_side();
  const std::size_t total = static_cast<std::size_t>(d) * static_cast<std::size_t>(d) *
                            static_cast<std::size_t>(d);
  batch.image.resize(total);
  if (inputs.labels) batch.labels.resize(total);
  if (inputs.weights) batch.weights.resize(total);

  for (std::int64_t k = 0; k < d; ++k) {
    for (std::int64_t b = 0; b < d; ++b) {
      for (std::int64_t a = 0; a < d; ++a) {
        const std::size_t offset = grid.pixel_offset(a, b, k);
        const Vec3 p = grid.point(static_cast<double>(a), static_cast<double>(b),
                                  static_cast<double>(k));
        batch.image[offset] = static_cast<float>(sample_trilinear(*inputs.image, p, 0.0));
        if (inputs.labels) batch.labels[offset] = sample_nearest(*inputs.labels, p, 0);
        if (inputs.weights) {
          batch.weights[offset] = static_cast<float>(sample_trilinear(*inputs.weights, p, 1.0));
        }
      }
    }
  }
  return batch;
}

ProbabilityVolume reconstruct_view(const SlicePrediction& prediction, const ViewGrid& grid,
                                   const VolumeGeometry& target) {
  const std::int64_t d = grid.pixels_per_side();
  const int K = prediction.num_classes;
  if (prediction.pixels != d || K < 1 ||
      prediction.probs.size() != static_cast<std::size_t>(d * d * d) * static_cast<std::size_t>(K)) {
    throw DataError("prediction shape does not match the view grid");
  }
  const Index3 cube{d, d, d};
  std::vector<float> out(target.size() * static_cast<std::size_t>(K), 0.0f);
  std::vector<double> acc(static_cast<std::size_t>(K));
  for (std::int64_t k = 0; k < target.dims[2]; ++k) {
    for (std::int64_t j = 0; j < target.dims[1]; ++j) {
      for (std::int64_t i = 0; i < target.dims[0]; ++i) {
        const Vec3 g = grid.grid_coordinates(target.physical_position({i, j, k}));
        const auto stencil = trilinear_stencil(cube, g);
        if (!stencil) continue;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int c = 0; c < 8; ++c) {
          const double w = stencil->weights[c];
          if (w == 0.0) continue;
          const float* probs = &prediction.probs[stencil->offsets[c] * static_cast<std::size_t>(K)];
          for (int ch = 0; ch < K; ++ch) acc[ch] += w * probs[ch];
        }
        float* dst = &out[linear_index(target.dims, i, j, k) * static_cast<std::size_t>(K)];
        for (int ch = 0; ch < K; ++ch) dst[ch] = static_cast<float>(std::max(acc[ch], 0.0));
      }
    }
  }
  return ProbabilityVolume(target, K, std::move(out), false);
}

ProbabilityVolume sum_views(std::span<const ProbabilityVolume> views) {
  if (views.empty()) throw DataError("fusion needs at least one view");
  const auto& geometry = views.front().geometry();
  const int K = views.front().num_classes();
  for (const auto& v : views) {
    if (v.geometry() != geometry || v.num_classes() != K) {
      throw DataError("fused views must share geometry and class count");
    }
  }
  const std::size_t n = views.front().data().size();
  std::vector<double> acc(n, 0.0);
  for (const auto& v : views) {
    const auto data = v.data();
    for (std::size_t e = 0; e < n; ++e) acc[e] += data[e];
  }
  std::vector<float> out(acc.begin(), acc.end());
  return ProbabilityVolume(geometry, K, std::move(out), false);
}

LabelVolume argmax_labels(const ProbabilityVolume& scores) {
  const int K = scores.num_classes();
  std::vector<Label> labels(scores.geometry().size());
  for (std::size_t v = 0; v < labels.size(); ++v) {
    const auto p = scores.voxel(v);
    int best = 0;
    for (int c = 1; c < K; ++c) {
      if (p[c] > p[best]) best = c;
    }
    labels[v] = static_cast<Label>(best);
  }
  return LabelVolume(scores.geometry(), std::move(labels), K);
}

LabelVolume fuse(std::span<const ProbabilityVolume> views) {
  return argmax_labels(sum_views(views));
}

}  // namespace mpseg
