#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mpseg/multiplanar.hpp"
#include "mpseg/postprocess.hpp"
#include "mpseg/volume.hpp"

namespace mpseg {

inline constexpr int kProtocolVersion = 1;

/// Physical placement of a slice: pixel (column a, row b) sits at
/// origin_mm + a * column_step_mm + b * row_step_mm.
struct SlicePlane {
  Vec3 origin_mm{};
  Vec3 column_step_mm{};
  Vec3 row_step_mm{};
};

struct ManifestEntry {
  std::string id;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::string image_path;                 // f32 LE, row-major, relative to manifest
  std::optional<SlicePlane> plane;        // lets geometry-aware plugins (oracles) work
  std::optional<std::string> label_path;  // u8 training labels, when sampled
  std::optional<std::string> weight_path; // f32 loss weights, when sampled
};

struct SliceManifest {
  int protocol_version = kProtocolVersion;
  int num_classes = 0;
  std::vector<ManifestEntry> entries;

  std::string to_json() const;
  static SliceManifest from_json(const std::string& text);
};

// Writes img_<id>.bin (plus labels/weights when present) and manifest.json
// into `dir`; returns the manifest.
SliceManifest write_slice_batch(const SliceBatch& batch, int num_classes,
                                const std::filesystem::path& dir);

// Reads and validates a manifest: unique ids, existing image files of the
// declared size.
SliceManifest read_manifest(const std::filesystem::path& manifest_path);
std::vector<float> read_slice_image(const std::filesystem::path& manifest_dir,
                                    const ManifestEntry& entry);

std::string probability_file_name(const std::string& id);
inline constexpr const char* kDoneMarker = "done";

// Black-box check of a plugin's output directory: `done` marker present and,
// for every entry, probs_<id>.bin of width*height*K float32 values that are
// finite and >= 0. Throws ProtocolError naming the offending id.
void validate_plugin_outputs(const SliceManifest& manifest,
                             const std::filesystem::path& output_dir);

// Plugin-side helpers.
void write_plugin_output(const std::filesystem::path& output_dir, const std::string& id,
                         std::span<const float> probs);
void mark_done(const std::filesystem::path& output_dir);

/// Deterministic degradations applied to a reference segmentation to
/// imitate typical multiplanar failure modes.
struct CorruptionConfig {
  // Fraction of paired-class voxels within `boundary_band_vox` of their
  // class border that take the partner label.
  double swap_fraction = 0.0;
  int boundary_band_vox = 2;
  SymmetryPairs pairs;
  // Grows every class into background by this radius (closes gaps).
  int close_gap_dilate_vox = 0;
  // Spurious balls of a seeded foreground class placed in background.
  int floater_count = 0;
  int floater_radius_vox = 1;
  std::uint64_t seed = 0;

  bool is_identity() const {
    return swap_fraction <= 0.0 && close_gap_dilate_vox <= 0 && floater_count <= 0;
  }
};

// Applies swaps, then dilation, then floaters. Throws DataError when
// floaters cannot be placed.
LabelVolume corrupt_labels(const LabelVolume& reference, const CorruptionConfig& config);

struct ExternalSegmenter {
  // Invoked as `<command> --input <manifest> --output <dir>` through /bin/sh.
  std::string command;
  int num_classes = 0;
  std::chrono::milliseconds timeout{std::chrono::seconds(600)};
};

struct OracleSegmenter {
  std::shared_ptr<const LabelVolume> reference;
};

using SegmenterHandle = std::variant<ExternalSegmenter, OracleSegmenter>;

// One-hot predictions of sample_nearest(reference, q) at every pixel q.
SegmenterHandle oracle_perfect(LabelVolume reference);
// The perfect oracle applied to corrupt_labels(reference, corruption).
SegmenterHandle oracle_corrupted(const LabelVolume& reference, const CorruptionConfig& corruption);

int segmenter_classes(const SegmenterHandle& handle);

// Runs the segmenter on every slice of the batch. External plugins exchange
// files under `work_dir` (input/, output/, plugin_stderr.txt).
SlicePrediction run_segmenter(const SegmenterHandle& handle, const SliceBatch& batch,
                              const std::filesystem::path& work_dir);

// Protocol server for the oracle executable: reads the manifest, emits
// one-hot probabilities using each entry's plane, writes `done` last.
void serve_oracle(const LabelVolume& reference, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& output_dir);

}  // namespace mpseg
