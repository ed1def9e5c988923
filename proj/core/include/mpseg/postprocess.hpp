#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpseg/volume.hpp"

namespace mpseg {

// Face (6), face+edge (18) or full (26) neighbourhood.
enum class Connectivity : int { faces = 6, edges = 18, corners = 26 };

Connectivity parse_connectivity(int value);

/// Component labelling of a mask. ids[v] is 0 for background, otherwise a
/// 1-based component id; ids are ordered by descending size with ties going
/// to the component whose smallest linear voxel index is lower.
/// sizes[id - 1] is the voxel count of component `id`.
struct Components {
  Index3 dims{};
  std::vector<std::int32_t> ids;
  std::vector<std::size_t> sizes;

  std::size_t count() const { return sizes.size(); }
};

Components connected_components(const Mask& mask, Connectivity connectivity = Connectivity::corners);

/// Unordered pairs of mirror-image foreground classes (e.g. left/right femur).
struct SymmetryPairs {
  std::vector<std::pair<Label, Label>> pairs;

  // Throws DataError when a class is 0, >= K, paired with itself, or repeated.
  void validate(int num_classes) const;
  std::optional<Label> partner(Label cls) const;
  // Parses "a:b[,c:d...]"; an empty string yields no pairs.
  static SymmetryPairs parse(std::string_view text);
};

/// Audit trail of the two filter stages.
struct ComponentStats {
  struct ClassComponents {
    Label cls = 0;
    std::vector<std::size_t> sizes;  // descending, component id = position + 1
  };
  struct Relabel {
    Label from = 0;
    Label to = 0;
    std::int32_t component = 0;
    std::size_t voxels = 0;
  };
  struct Removal {
    Label cls = 0;
    std::int32_t component = 0;
    std::size_t voxels = 0;
  };

  std::vector<ClassComponents> paired_input;  // stage 1, per paired class
  std::vector<Relabel> relabeled;
  std::vector<ClassComponents> per_class;     // stage 2, per foreground class
  std::vector<Removal> removed;

  std::string to_json() const;
};

struct FilterResult {
  LabelVolume labels;
  ComponentStats stats;
};

/// Stage 1: for each pair (a, b), components are computed on the input;
/// a's largest component stays a and every other a-component becomes b, and
/// symmetrically for b. Stage 2: every foreground class keeps only its
/// largest component; the rest becomes background.
FilterResult symmetric_cc_filter(const LabelVolume& labels, const SymmetryPairs& pairs,
                                 Connectivity connectivity = Connectivity::corners);

}  // namespace mpseg
