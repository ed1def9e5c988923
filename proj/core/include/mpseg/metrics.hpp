#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mpseg/distance.hpp"
#include "mpseg/volume.hpp"

namespace mpseg {

/// Per-class scores for foreground classes 1..K-1 (per_class[c - 1]).
struct ClassScores {
  std::vector<double> per_class;
  double macro = 1.0;
};

// 2|P∩Y| / (|P|+|Y|) per class; 1 when both sets are empty. The macro
// average runs over classes present in the ground truth (all classes when
// the ground truth has no foreground).
ClassScores dice(const LabelVolume& prediction, const LabelVolume& truth);

struct GapDiceResult {
  double epsilon = 10.0;
  std::vector<double> per_class;
  double macro = 1.0;
  // All foreground classes pooled into a single binary set.
  double binary = 1.0;
  std::size_t region_voxels = 0;
  bool empty_region = false;
};

// Dice restricted to gap_region(truth, epsilon).
GapDiceResult gap_dice(const LabelVolume& prediction, const LabelVolume& truth,
                       double epsilon = 10.0);

struct HausdorffResult {
  std::vector<double> per_class;  // +inf when exactly one side is empty
  double max = 0.0;
};

// Symmetric Hausdorff distance between per-class voxel sets, voxel units.
HausdorffResult hausdorff(const LabelVolume& prediction, const LabelVolume& truth);

struct EvaluationConfig {
  double gap_epsilon = 10.0;
  double collision_epsilon = 2.0;
};

struct MetricsReport {
  int num_classes = 0;
  std::string prediction_id;
  std::string truth_id;
  ClassScores dice;
  GapDiceResult gap_dice;
  HausdorffResult hausdorff;
  double collision_epsilon = 2.0;
  std::size_t collision_count = 0;

  // Flat JSON object with stable dotted keys, e.g. dice.macro,
  // gapdice.macro.eps10, hd.max_vox, collisions.count.eps2. Infinite
  // values are written as the string "inf".
  std::string to_text() const;
  static MetricsReport from_text(const std::string& text);
};

MetricsReport evaluate(const LabelVolume& prediction, const LabelVolume& truth,
                       const EvaluationConfig& config = {});

// "eps10", "eps2.5": the suffix used in report keys.
std::string epsilon_tag(double epsilon);

}  // namespace mpseg
