#include "mpseg/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "mpseg/distance.hpp"
#include "mpseg/error.hpp"
#include "mpseg/random.hpp"

namespace mpseg {

namespace {

using nlohmann::json;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

bool inside(const ShapeSpec& shape, const Vec3& p) {
  const Vec3 r{p[0] - shape.center_mm[0], p[1] - shape.center_mm[1], p[2] - shape.center_mm[2]};
  switch (shape.kind) {
    case ShapeKind::sphere: return dot(r, r) <= shape.radii_mm[0] * shape.radii_mm[0];
    case ShapeKind::ellipsoid: {
      double s = 0.0;
      for (int a = 0; a < 3; ++a) s += (r[a] / shape.radii_mm[a]) * (r[a] / shape.radii_mm[a]);
      return s <= 1.0;
    }
    case ShapeKind::capsule: {
      const Vec3& h = shape.half_axis_mm;
      const double hh = dot(h, h);
      const double t = hh > 0.0 ? std::clamp(dot(r, h) / hh, -1.0, 1.0) : 0.0;
      const Vec3 q{r[0] - t * h[0], r[1] - t * h[1], r[2] - t * h[2]};
      return dot(q, q) <= shape.radii_mm[0] * shape.radii_mm[0];
    }
  }
  return false;
}

std::string shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::ellipsoid: return "ellipsoid";
    case ShapeKind::capsule: return "capsule";
  }
  return "sphere";
}

ShapeKind parse_shape(const std::string& name) {
  if (name == "sphere") return ShapeKind::sphere;
  if (name == "ellipsoid") return ShapeKind::ellipsoid;
  if (name == "capsule") return ShapeKind::capsule;
  throw DataError("unknown phantom shape '" + name + "'");
}

Vec3 vec3_from(const json& node, const char* key, Vec3 fallback) {
  if (!node.contains(key)) return fallback;
  const auto& v = node.at(key);
  if (v.is_number()) {
    const double x = v.get<double>();
    return {x, x, x};
  }
  return {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
}

// Class painting order: first appearance in `shapes`, mirror classes
// directly after their source.
std::vector<Label> class_order(const PhantomSpec& spec) {
  std::vector<Label> order;
  for (const auto& s : spec.shapes) {
    if (std::find(order.begin(), order.end(), s.class_id) != order.end()) continue;
    order.push_back(s.class_id);
    for (const auto& m : spec.mirror_pairs) {
      if (m.source == s.class_id) order.push_back(m.mirror);
    }
  }
  return order;
}

}  // namespace

int PhantomSpec::num_classes() const {
  int highest = 0;
  for (const auto& s : shapes) highest = std::max<int>(highest, s.class_id);
  for (const auto& m : mirror_pairs) highest = std::max<int>(highest, m.mirror);
  return highest + 1;
}

void PhantomSpec::validate() const {
  geometry.validate();
  if (shapes.empty()) throw DataError("phantom needs at least one shape");
  if (!(gap_vox >= 0.0)) throw DataError("phantom gap must be >= 0");
  if (mirror_axis < 0 || mirror_axis > 2) throw DataError("mirror axis must be 0, 1 or 2");
  if (intensity.noise_sd < 0.0) throw DataError("noise_sd must be >= 0");
  for (const auto& s : shapes) {
    if (s.class_id == 0) throw DataError("shapes must use foreground class ids (>= 1)");
    const int used = s.kind == ShapeKind::ellipsoid ? 3 : 1;
    for (int a = 0; a < used; ++a) {
      if (!(s.radii_mm[a] > 0.0)) throw DataError("shape radii must be > 0");
    }
  }
  for (const auto& m : mirror_pairs) {
    const bool has_source = std::any_of(shapes.begin(), shapes.end(),
                                        [&](const ShapeSpec& s) { return s.class_id == m.source; });
    const bool mirror_listed = std::any_of(
        shapes.begin(), shapes.end(), [&](const ShapeSpec& s) { return s.class_id == m.mirror; });
    if (!has_source) throw DataError("mirror source class has no shapes");
    if (mirror_listed || m.mirror == 0 || m.mirror == m.source) {
      throw DataError("mirror class must be a distinct foreground class without its own shapes");
    }
  }
}

std::string PhantomSpec::to_json() const {
  nlohmann::ordered_json node;
  node["dims"] = geometry.dims;
  node["spacing_mm"] = geometry.spacing_mm;
  node["origin_mm"] = geometry.origin_mm;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto& s : shapes) {
    nlohmann::ordered_json item;
    item["class"] = s.class_id;
    item["shape"] = shape_name(s.kind);
    item["center_mm"] = s.center_mm;
    item["radii_mm"] = s.radii_mm;
    if (s.kind == ShapeKind::capsule) item["half_axis_mm"] = s.half_axis_mm;
    classes.push_back(item);
  }
  node["classes"] = classes;
  node["gap_vox"] = gap_vox;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& m : mirror_pairs) pairs.push_back({m.source, m.mirror});
  node["symmetric"] = {{"axis", mirror_axis}, {"pairs", pairs}};
  node["intensity"] = {{"bone_value", intensity.bone_value},
                       {"background_value", intensity.background_value},
                       {"noise_sd", intensity.noise_sd}};
  node["seed"] = seed;
  return node.dump(2) + "\n";
}

PhantomSpec PhantomSpec::from_json(const std::string& text) {
  try {
    const auto node = json::parse(text);
    PhantomSpec spec;
    const auto& dims = node.at("dims");
    spec.geometry.dims = {dims.at(0).get<std::int64_t>(), dims.at(1).get<std::int64_t>(),
                          dims.at(2).get<std::int64_t>()};
    spec.geometry.spacing_mm = vec3_from(node, "spacing_mm", {1.0, 1.0, 1.0});
    spec.geometry.origin_mm = vec3_from(node, "origin_mm", {0.0, 0.0, 0.0});
    for (const auto& item : node.at("classes")) {
      ShapeSpec s;
      s.class_id = static_cast<Label>(item.at("class").get<int>());
      s.kind = parse_shape(item.value("shape", std::string("sphere")));
      s.center_mm = vec3_from(item, "center_mm", {0.0, 0.0, 0.0});
      s.radii_mm = vec3_from(item, "radii_mm", {1.0, 1.0, 1.0});
      s.half_axis_mm = vec3_from(item, "half_axis_mm", {0.0, 0.0, 0.0});
      spec.shapes.push_back(s);
    }
    spec.gap_vox = node.value("gap_vox", 0.0);
    if (node.contains("symmetric")) {
      const auto& sym = node.at("symmetric");
      const auto& axis = sym.at("axis");
      if (axis.is_string()) {
        const auto name = axis.get<std::string>();
        spec.mirror_axis = name == "x" ? 0 : name == "y" ? 1 : name == "z" ? 2 : -1;
      } else {
        spec.mirror_axis = axis.get<int>();
      }
      for (const auto& p : sym.at("pairs")) {
        spec.mirror_pairs.push_back(
            {static_cast<Label>(p.at(0).get<int>()), static_cast<Label>(p.at(1).get<int>())});
      }
    }
    if (node.contains("intensity")) {
      const auto& in = node.at("intensity");
      spec.intensity.bone_value = in.value("bone_value", spec.intensity.bone_value);
      spec.intensity.background_value = in.value("background_value", spec.intensity.background_value);
      spec.intensity.noise_sd = in.value("noise_sd", spec.intensity.noise_sd);
    }
    spec.seed = node.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed phantom spec: ") + e.what());
  }
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const VolumeGeometry& geometry = spec.geometry;
  const Index3 dims = geometry.dims;
  const int K = spec.num_classes();
  if (K > 256) throw DataError("phantom class ids must be < 256");

  // Per-class rasters; mirrored classes reflect their source in index space.
  std::vector<Mask> rasters(static_cast<std::size_t>(K));
  for (const auto& shape : spec.shapes) {
    Mask& raster = rasters[shape.class_id];
    if (raster.dims != dims) raster = Mask(dims);
    for (std::int64_t k = 0; k < dims[2]; ++k) {
      for (std::int64_t j = 0; j < dims[1]; ++j) {
        for (std::int64_t i = 0; i < dims[0]; ++i) {
          if (inside(shape, geometry.physical_position({i, j, k}))) raster(i, j, k) = 1;
        }
      }
    }
  }
  const int axis = spec.mirror_axis;
  for (const auto& m : spec.mirror_pairs) {
    Mask mirrored(dims);
    const Mask& source = rasters[m.source];
    for (std::int64_t k = 0; k < dims[2]; ++k) {
      for (std::int64_t j = 0; j < dims[1]; ++j) {
        for (std::int64_t i = 0; i < dims[0]; ++i) {
          Index3 r{i, j, k};
          r[axis] = dims[axis] - 1 - r[axis];
          mirrored(i, j, k) = source(r[0], r[1], r[2]);
        }
      }
    }
    rasters[m.mirror] = std::move(mirrored);
  }

  const std::vector<Label> order = class_order(spec);
  std::vector<Label> labels(geometry.size(), 0);
  for (const Label cls : order) {
    const Mask& raster = rasters[cls];
    for (std::size_t v = 0; v < labels.size(); ++v) {
      if (raster.data[v]) labels[v] = cls;
    }
  }

  if (spec.gap_vox > 0.0) {
    const double gap2 = spec.gap_vox * spec.gap_vox;
    Mask earlier(dims);
    for (const Label cls : order) {
      if (std::any_of(earlier.data.begin(), earlier.data.end(), [](auto b) { return b; })) {
        const RealGrid dist = squared_edt(earlier);
        for (std::size_t v = 0; v < labels.size(); ++v) {
          if (labels[v] == cls && dist.data[v] < gap2) labels[v] = 0;
        }
      }
      for (std::size_t v = 0; v < labels.size(); ++v) {
        if (labels[v] == cls) earlier.data[v] = 1;
      }
    }
  }
  for (const Label cls : order) {
    if (std::find(labels.begin(), labels.end(), cls) == labels.end()) {
      throw DataError("phantom class " + std::to_string(cls) +
                      " is empty after rasterization and gap enforcement");
    }
  }

  std::vector<float> image(geometry.size());
  for (std::size_t v = 0; v < image.size(); ++v) {
    double value = labels[v] != 0 ? spec.intensity.bone_value : spec.intensity.background_value;
    if (spec.intensity.noise_sd > 0.0) value += spec.intensity.noise_sd * counter_normal(spec.seed, v);
    image[v] = static_cast<float>(value);
  }
  return {Volume(geometry, std::move(image)), LabelVolume(geometry, std::move(labels), K)};
}

PhantomSpec two_sphere_phantom_spec(double gap_vox) {
  PhantomSpec spec;
  spec.geometry.dims = {64, 64, 64};
  spec.shapes.push_back({1, ShapeKind::sphere, {18.0, 32.0, 32.0}, {12.0, 12.0, 12.0}, {}});
  spec.mirror_axis = 0;
  spec.mirror_pairs.push_back({1, 2});
  spec.gap_vox = gap_vox;
  spec.intensity = {1000.0, 0.0, 50.0};
  spec.seed = 7;
  return spec;
}

PhantomSpec joint_phantom_spec() {
  PhantomSpec spec;
  spec.geometry.dims = {64, 64, 64};
  // Hip bone (class 3): flattened ellipsoid capping the femoral head.
  spec.shapes.push_back({3, ShapeKind::ellipsoid, {17.0, 32.0, 42.0}, {10.0, 13.0, 8.0}, {}});
  // Femur (class 1): head plus neck/shaft, painted after the hip so the head
  // carves a cup into it; gap enforcement then opens the joint space.
  spec.shapes.push_back({1, ShapeKind::sphere, {17.0, 32.0, 32.0}, {8.0, 8.0, 8.0}, {}});
  spec.shapes.push_back(
      {1, ShapeKind::capsule, {15.0, 32.0, 18.0}, {4.5, 4.5, 4.5}, {-2.0, 0.0, -10.0}});
  spec.mirror_axis = 0;
  spec.mirror_pairs.push_back({3, 4});
  spec.mirror_pairs.push_back({1, 2});
  spec.gap_vox = 3.0;
  spec.intensity = {1000.0, 0.0, 50.0};
  spec.seed = 11;
  return spec;
}

}  // namespace mpseg
