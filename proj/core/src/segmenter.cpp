#include "mpseg/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "mpseg/distance.hpp"
#include "mpseg/error.hpp"
#include "mpseg/random.hpp"
#include "mpseg/volume_io.hpp"
#include "process.hpp"

namespace mpseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSwapStream = 3;

std::string slice_id(std::size_t k) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "s%05zu", k);
  return buffer;
}

void one_hot(float* dst, int num_classes, Label label) {
  std::fill(dst, dst + num_classes, 0.0f);
  dst[label] = 1.0f;
}

SlicePrediction run_oracle(const OracleSegmenter& oracle, const SliceBatch& batch) {
  const LabelVolume& reference = *oracle.reference;
  const int K = reference.num_classes();
  const std::int64_t d = batch.pixels();
  SlicePrediction out{d, K, std::vector<float>(batch.image.size() * static_cast<std::size_t>(K))};
  for (std::int64_t k = 0; k < d; ++k) {
    for (std::int64_t b = 0; b < d; ++b) {
      for (std::int64_t a = 0; a < d; ++a) {
        const std::size_t offset = batch.grid.pixel_offset(a, b, k);
        const Vec3 q = batch.grid.point(static_cast<double>(a), static_cast<double>(b),
                                        static_cast<double>(k));
        one_hot(&out.probs[offset * static_cast<std::size_t>(K)], K, sample_nearest(reference, q, 0));
      }
    }
  }
  return out;
}

SlicePrediction run_external(const ExternalSegmenter& plugin, const SliceBatch& batch,
                             const fs::path& work_dir) {
  if (plugin.num_classes < 1) throw ProtocolError("external segmenter needs num_classes >= 1");
  const fs::path input_dir = work_dir / "input";
  const fs::path output_dir = work_dir / "output";
  fs::create_directories(input_dir);
  fs::remove_all(output_dir);
  fs::create_directories(output_dir);

  const SliceManifest manifest = write_slice_batch(batch, plugin.num_classes, input_dir);
  const std::string command = plugin.command + " --input " +
                              detail::shell_quote((input_dir / "manifest.json").string()) +
                              " --output " + detail::shell_quote(output_dir.string());
  const auto result = detail::run_shell(command, plugin.timeout, work_dir);
  if (result.timed_out) {
    throw ProtocolError("plugin timed out after " + std::to_string(plugin.timeout.count()) +
                        " ms: " + plugin.command);
  }
  if (result.exit_code != 0) {
    throw ProtocolError("plugin exited with status " + std::to_string(result.exit_code) +
                        "; stderr:\n" + result.stderr_text);
  }
  validate_plugin_outputs(manifest, output_dir);

  const std::size_t K = static_cast<std::size_t>(plugin.num_classes);
  SlicePrediction out{batch.pixels(), plugin.num_classes,
                      std::vector<float>(batch.image.size() * K)};
  const std::size_t per_slice = batch.slice_size() * K;
  for (std::size_t k = 0; k < manifest.entries.size(); ++k) {
    const auto values = read_f32_file(output_dir / probability_file_name(manifest.entries[k].id),
                                      per_slice);
    std::copy(values.begin(), values.end(), out.probs.begin() + static_cast<std::ptrdiff_t>(k * per_slice));
  }
  return out;
}

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from(const json& node) {
  return {node.at(0).get<double>(), node.at(1).get<double>(), node.at(2).get<double>()};
}

}  // namespace

std::string SliceManifest::to_json() const {
  json node;
  node["protocol_version"] = protocol_version;
  node["K"] = num_classes;
  json entries_node = json::array();
  for (const auto& e : entries) {
    json item;
    item["id"] = e.id;
    item["width"] = e.width;
    item["height"] = e.height;
    item["image_path"] = e.image_path;
    if (e.plane) {
      item["plane"] = {{"origin_mm", vec3_json(e.plane->origin_mm)},
                       {"column_step_mm", vec3_json(e.plane->column_step_mm)},
                       {"row_step_mm", vec3_json(e.plane->row_step_mm)}};
    }
    if (e.label_path) item["label_path"] = *e.label_path;
    if (e.weight_path) item["weight_path"] = *e.weight_path;
    entries_node.push_back(std::move(item));
  }
  node["entries"] = std::move(entries_node);
  return node.dump(2) + "\n";
}

SliceManifest SliceManifest::from_json(const std::string& text) {
  try {
    const auto node = json::parse(text);
    SliceManifest m;
    m.protocol_version = node.at("protocol_version").get<int>();
    if (m.protocol_version != kProtocolVersion) {
      throw ProtocolError("unsupported protocol version " + std::to_string(m.protocol_version));
    }
    m.num_classes = node.at("K").get<int>();
    if (m.num_classes < 1) throw ProtocolError("manifest K must be >= 1");
    std::set<std::string> ids;
    for (const auto& item : node.at("entries")) {
      ManifestEntry e;
      e.id = item.at("id").get<std::string>();
      e.width = item.at("width").get<std::int64_t>();
      e.height = item.at("height").get<std::int64_t>();
      e.image_path = item.at("image_path").get<std::string>();
      if (e.width < 1 || e.height < 1) throw ProtocolError("entry " + e.id + " has empty shape");
      if (!ids.insert(e.id).second) throw ProtocolError("duplicate manifest id " + e.id);
      if (item.contains("plane")) {
        const auto& p = item.at("plane");
        e.plane = SlicePlane{vec3_from(p.at("origin_mm")), vec3_from(p.at("column_step_mm")),
                             vec3_from(p.at("row_step_mm"))};
      }
      if (item.contains("label_path")) e.label_path = item.at("label_path").get<std::string>();
      if (item.contains("weight_path")) e.weight_path = item.at("weight_path").get<std::string>();
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed slice manifest: ") + e.what());
  }
}

SliceManifest write_slice_batch(const SliceBatch& batch, int num_classes, const fs::path& dir) {
  fs::create_directories(dir);
  SliceManifest manifest;
  manifest.num_classes = num_classes;
  const std::int64_t d = batch.pixels();
  const std::size_t n = batch.slice_size();
  const auto& grid = batch.grid;
  const double s = grid.pixel_spacing();
  const Vec3 column_step{grid.basis_u()[0] * s, grid.basis_u()[1] * s, grid.basis_u()[2] * s};
  const Vec3 row_step{grid.basis_v()[0] * s, grid.basis_v()[1] * s, grid.basis_v()[2] * s};

  for (std::size_t k = 0; k < batch.slice_count(); ++k) {
    ManifestEntry e;
    e.id = slice_id(k);
    e.width = d;
    e.height = d;
    e.image_path = "img_" + e.id + ".bin";
    e.plane = SlicePlane{grid.point(0.0, 0.0, static_cast<double>(k)), column_step, row_step};
    write_f32_file(dir / e.image_path,
                   std::span<const float>(batch.image).subspan(k * n, n));
    if (!batch.labels.empty()) {
      e.label_path = "labels_" + e.id + ".bin";
      write_bytes(dir / *e.label_path, std::span<const Label>(batch.labels).subspan(k * n, n));
    }
    if (!batch.weights.empty()) {
      e.weight_path = "weights_" + e.id + ".bin";
      write_f32_file(dir / *e.weight_path,
                     std::span<const float>(batch.weights).subspan(k * n, n));
    }
    manifest.entries.push_back(std::move(e));
  }
  write_text(dir / "manifest.json", manifest.to_json());
  return manifest;
}

SliceManifest read_manifest(const fs::path& manifest_path) {
  SliceManifest manifest = SliceManifest::from_json(read_text(manifest_path));
  const fs::path dir = manifest_path.parent_path();
  for (const auto& e : manifest.entries) {
    const fs::path image = dir / e.image_path;
    const auto expected = static_cast<std::uintmax_t>(e.width * e.height * 4);
    if (!fs::exists(image) || fs::file_size(image) != expected) {
      throw ProtocolError("slice image for id " + e.id + " is missing or has the wrong size");
    }
  }
  return manifest;
}

std::vector<float> read_slice_image(const fs::path& manifest_dir, const ManifestEntry& entry) {
  return read_f32_file(manifest_dir / entry.image_path,
                       static_cast<std::size_t>(entry.width * entry.height));
}

std::string probability_file_name(const std::string& id) { return "probs_" + id + ".bin"; }

void validate_plugin_outputs(const SliceManifest& manifest, const fs::path& output_dir) {
  if (!fs::exists(output_dir / kDoneMarker)) {
    throw ProtocolError("plugin did not write the 'done' marker in " + output_dir.string());
  }
  const auto K = static_cast<std::size_t>(manifest.num_classes);
  for (const auto& e : manifest.entries) {
    const fs::path file = output_dir / probability_file_name(e.id);
    if (!fs::exists(file)) throw ProtocolError("plugin output missing for id " + e.id);
    const std::size_t count = static_cast<std::size_t>(e.width * e.height) * K;
    if (fs::file_size(file) != count * 4) {
      throw ProtocolError("plugin output for id " + e.id + " has " +
                          std::to_string(fs::file_size(file)) + " bytes, expected " +
                          std::to_string(count * 4));
    }
    const auto values = read_f32_file(file, count);
    for (std::size_t n = 0; n < values.size(); ++n) {
      if (!std::isfinite(values[n])) {
        throw ProtocolError("plugin output for id " + e.id + " contains a non-finite value");
      }
      if (values[n] < 0.0f) {
        throw ProtocolError("plugin output for id " + e.id + " contains a negative value");
      }
    }
  }
}

void write_plugin_output(const fs::path& output_dir, const std::string& id,
                         std::span<const float> probs) {
  write_f32_file(output_dir / probability_file_name(id), probs);
}

void mark_done(const fs::path& output_dir) { write_text(output_dir / kDoneMarker, "ok\n"); }

LabelVolume corrupt_labels(const LabelVolume& reference, const CorruptionConfig& config) {
  if (config.swap_fraction < 0.0 || config.swap_fraction > 1.0) {
    throw DataError("swap fraction must be in [0, 1]");
  }
  if (config.boundary_band_vox < 0 || config.close_gap_dilate_vox < 0 ||
      config.floater_count < 0 || config.floater_radius_vox < 0) {
    throw DataError("corruption sizes must be >= 0");
  }
  config.pairs.validate(reference.num_classes());
  const VolumeGeometry& geometry = reference.geometry();
  const Index3 dims = geometry.dims;
  std::vector<Label> labels(reference.labels().begin(), reference.labels().end());

  if (config.swap_fraction > 0.0) {
    const double band2 = static_cast<double>(config.boundary_band_vox) * config.boundary_band_vox;
    for (const auto& [a, b] : config.pairs.pairs) {
      for (const auto& [cls, other] : {std::pair{a, b}, std::pair{b, a}}) {
        Mask outside = reference.class_mask(cls);
        for (auto& m : outside.data) m = !m;
        const RealGrid dist = squared_edt(outside);
        for (std::size_t v = 0; v < labels.size(); ++v) {
          if (reference[v] != cls || dist.data[v] > band2) continue;
          if (counter_uniform(config.seed, v, kSwapStream) < config.swap_fraction) labels[v] = other;
        }
      }
    }
  }

  if (config.close_gap_dilate_vox > 0) {
    const LabelVolume current(geometry, labels, reference.num_classes());
    const ClassDistanceField field = class_distances(current);
    const auto r = static_cast<double>(config.close_gap_dilate_vox);
    for (std::size_t v = 0; v < labels.size(); ++v) {
      if (labels[v] == 0 && field.d1[v] <= r) labels[v] = field.nearest_class[v];
    }
  }

  if (config.floater_count > 0) {
    if (reference.num_classes() < 2) throw DataError("floaters need at least one foreground class");
    CounterRng rng(config.seed, 5);
    const std::int64_t radius = config.floater_radius_vox;
    const double r2 = static_cast<double>(radius * radius);
    for (int f = 0; f < config.floater_count; ++f) {
      Mask occupied(dims);
      for (std::size_t v = 0; v < labels.size(); ++v) occupied.data[v] = labels[v] != 0;
      const RealGrid clearance = edt(occupied);
      bool placed = false;
      for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
        Index3 c{};
        bool fits = true;
        for (int a = 0; a < 3; ++a) {
          const std::int64_t span = dims[a] - 2 * radius;
          if (span <= 0) {
            fits = false;
            break;
          }
          c[a] = radius + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(span));
        }
        if (!fits) break;
        if (!(clearance(c[0], c[1], c[2]) > static_cast<double>(radius) + 2.0)) continue;
        const auto cls = static_cast<Label>(
            1 + static_cast<int>(rng.uniform() * static_cast<double>(reference.num_classes() - 1)));
        for (std::int64_t dz = -radius; dz <= radius; ++dz) {
          for (std::int64_t dy = -radius; dy <= radius; ++dy) {
            for (std::int64_t dx = -radius; dx <= radius; ++dx) {
              if (static_cast<double>(dx * dx + dy * dy + dz * dz) > r2) continue;
              labels[linear_index(dims, c[0] + dx, c[1] + dy, c[2] + dz)] = cls;
            }
          }
        }
        placed = true;
      }
      if (!placed) throw DataError("could not place floater " + std::to_string(f));
    }
  }
  return LabelVolume(geometry, std::move(labels), reference.num_classes());
}

SegmenterHandle oracle_perfect(LabelVolume reference) {
  return OracleSegmenter{std::make_shared<const LabelVolume>(std::move(reference))};
}

SegmenterHandle oracle_corrupted(const LabelVolume& reference,
                                 const CorruptionConfig& corruption) {
  return oracle_perfect(corrupt_labels(reference, corruption));
}

int segmenter_classes(const SegmenterHandle& handle) {
  if (const auto* ext = std::get_if<ExternalSegmenter>(&handle)) return ext->num_classes;
  return std::get<OracleSegmenter>(handle).reference->num_classes();
}

SlicePrediction run_segmenter(const SegmenterHandle& handle, const SliceBatch& batch,
                              const fs::path& work_dir) {
  if (batch.image.empty()) throw DataError("cannot segment an empty batch");
  if (const auto* oracle = std::get_if<OracleSegmenter>(&handle)) {
    return run_oracle(*oracle, batch);
  }
  return run_external(std::get<ExternalSegmenter>(handle), batch, work_dir);
}

void serve_oracle(const LabelVolume& reference, const fs::path& manifest_path,
                  const fs::path& output_dir) {
  const SliceManifest manifest = read_manifest(manifest_path);
  if (manifest.num_classes != reference.num_classes()) {
    throw ProtocolError("manifest K=" + std::to_string(manifest.num_classes) +
                        " does not match the reference (" +
                        std::to_string(reference.num_classes()) + " classes)");
  }
  fs::create_directories(output_dir);
  const int K = reference.num_classes();
  for (const auto& e : manifest.entries) {
    if (!e.plane) throw ProtocolError("entry " + e.id + " has no plane geometry");
    std::vector<float> probs(static_cast<std::size_t>(e.width * e.height * K));
    for (std::int64_t b = 0; b < e.height; ++b) {
      for (std::int64_t a = 0; a < e.width; ++a) {
        Vec3 q{};
        for (int i = 0; i < 3; ++i) {
          q[i] = e.plane->origin_mm[i] + static_cast<double>(a) * e.plane->column_step_mm[i] +
                 static_cast<double>(b) * e.plane->row_step_mm[i];
        }
        one_hot(&probs[static_cast<std::size_t>((b * e.width + a) * K)], K,
                sample_nearest(reference, q, 0));
      }
    }
    write_plugin_output(output_dir, e.id, probs);
  }
  mark_done(output_dir);
}

}  // namespace mpseg
