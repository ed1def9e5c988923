#include "mpseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "mpseg/error.hpp"

namespace mpseg {

namespace {

void check_compatible(const LabelVolume& p, const LabelVolume& y) {
  if (p.geometry() != y.geometry()) throw DataError("prediction and truth geometries differ");
  if (p.num_classes() != y.num_classes()) {
    throw DataError("prediction and truth class counts differ (" +
                    std::to_string(p.num_classes()) + " vs " + std::to_string(y.num_classes()) +
                    ")");
  }
}

double dice_ratio(std::size_t both, std::size_t p, std::size_t y) {
  if (p + y == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + y);
}

double macro_over(const std::vector<double>& scores, const std::vector<std::size_t>& truth_counts) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (truth_counts[c] > 0) {
      sum += scores[c];
      ++n;
    }
  }
  if (n == 0) {
    for (const double s : scores) sum += s;
    n = scores.size();
  }
  return n == 0 ? 1.0 : sum / static_cast<double>(n);
}

// Dice per class within `region` (all voxels when null).
ClassScores region_dice(const LabelVolume& p, const LabelVolume& y, const Mask* region) {
  const auto K = static_cast<std::size_t>(p.num_classes());
  std::vector<std::size_t> both(K, 0), pc(K, 0), yc(K, 0);
  for (std::size_t v = 0; v < p.size(); ++v) {
    if (region && !region->data[v]) continue;
    ++pc[p[v]];
    ++yc[y[v]];
    if (p[v] == y[v]) ++both[p[v]];
  }
  ClassScores scores;
  std::vector<std::size_t> truth_counts;
  for (std::size_t c = 1; c < K; ++c) {
    scores.per_class.push_back(dice_ratio(both[c], pc[c], yc[c]));
    truth_counts.push_back(yc[c]);
  }
  scores.macro = macro_over(scores.per_class, truth_counts);
  return scores;
}

double directed_max(const Mask& from, const RealGrid& distance_to_other) {
  double worst = 0.0;
  for (std::size_t v = 0; v < from.size(); ++v) {
    if (from.data[v]) worst = std::max(worst, distance_to_other.data[v]);
  }
  return worst;
}

nlohmann::ordered_json number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

double number_from(const nlohmann::json& node) {
  if (node.is_string()) {
    const auto s = node.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("unexpected string value '" + s + "' in report");
  }
  return node.get<double>();
}

}  // namespace

std::string epsilon_tag(double epsilon) {
  if (std::isinf(epsilon)) return "epsinf";
  std::ostringstream out;
  out.precision(15);
  out << "eps" << epsilon;
  return out.str();
}

ClassScores dice(const LabelVolume& prediction, const LabelVolume& truth) {
  check_compatible(prediction, truth);
  return region_dice(prediction, truth, nullptr);
}

GapDiceResult gap_dice(const LabelVolume& prediction, const LabelVolume& truth, double epsilon) {
  check_compatible(prediction, truth);
  const Mask region = gap_region(truth, epsilon);
  GapDiceResult result;
  result.epsilon = epsilon;
  result.region_voxels =
      static_cast<std::size_t>(std::count(region.data.begin(), region.data.end(), 1));
  result.empty_region = result.region_voxels == 0;

  const ClassScores scores = region_dice(prediction, truth, &region);
  result.per_class = scores.per_class;
  result.macro = scores.macro;

  std::size_t both = 0, pc = 0, yc = 0;
  for (std::size_t v = 0; v < region.size(); ++v) {
    if (!region.data[v]) continue;
    const bool pf = prediction[v] != 0;
    const bool yf = truth[v] != 0;
    pc += pf;
    yc += yf;
    both += pf && yf;
  }
  result.binary = dice_ratio(both, pc, yc);
  return result;
}

HausdorffResult hausdorff(const LabelVolume& prediction, const LabelVolume& truth) {
  check_compatible(prediction, truth);
  HausdorffResult result;
  for (int c = 1; c < prediction.num_classes(); ++c) {
    const auto cls = static_cast<Label>(c);
    const Mask pm = prediction.class_mask(cls);
    const Mask ym = truth.class_mask(cls);
    const bool p_empty = std::none_of(pm.data.begin(), pm.data.end(), [](auto b) { return b; });
    const bool y_empty = std::none_of(ym.data.begin(), ym.data.end(), [](auto b) { return b; });
    double hd = 0.0;
    if (p_empty && y_empty) {
      hd = 0.0;
    } else if (p_empty || y_empty) {
      hd = kInfiniteDistance;
    } else {
      hd = std::max(directed_max(pm, edt(ym)), directed_max(ym, edt(pm)));
    }
    result.per_class.push_back(hd);
    result.max = std::max(result.max, hd);
  }
  return result;
}

MetricsReport evaluate(const LabelVolume& prediction, const LabelVolume& truth,
                       const EvaluationConfig& config) {
  MetricsReport report;
  report.num_classes = prediction.num_classes();
  report.dice = dice(prediction, truth);
  report.gap_dice = gap_dice(prediction, truth, config.gap_epsilon);
  report.hausdorff = hausdorff(prediction, truth);
  report.collision_epsilon = config.collision_epsilon;
  report.collision_count = detect_collisions(prediction, config.collision_epsilon, 0).count;
  return report;
}

std::string MetricsReport::to_text() const {
  nlohmann::ordered_json node;
  const std::string g = epsilon_tag(gap_dice.epsilon);
  node["meta.num_classes"] = num_classes;
  node["meta.prediction"] = prediction_id;
  node["meta.truth"] = truth_id;
  node["dice.macro"] = number(dice.macro);
  for (std::size_t c = 0; c < dice.per_class.size(); ++c) {
    node["dice.class" + std::to_string(c + 1)] = number(dice.per_class[c]);
  }
  node["gapdice.macro." + g] = number(gap_dice.macro);
  node["gapdice.binary." + g] = number(gap_dice.binary);
  for (std::size_t c = 0; c < gap_dice.per_class.size(); ++c) {
    node["gapdice.class" + std::to_string(c + 1) + "." + g] = number(gap_dice.per_class[c]);
  }
  node["gapdice.region_voxels." + g] = gap_dice.region_voxels;
  node["gapdice.no_gap_region." + g] = gap_dice.empty_region;
  node["hd.max_vox"] = number(hausdorff.max);
  for (std::size_t c = 0; c < hausdorff.per_class.size(); ++c) {
    node["hd.class" + std::to_string(c + 1) + "_vox"] = number(hausdorff.per_class[c]);
  }
  node["collisions.count." + epsilon_tag(collision_epsilon)] = collision_count;
  node["collisions.epsilon"] = number(collision_epsilon);
  node["gapdice.epsilon"] = number(gap_dice.epsilon);
  return node.dump(2) + "\n";
}

MetricsReport MetricsReport::from_text(const std::string& text) {
  try {
    const auto node = nlohmann::json::parse(text);
    MetricsReport r;
    r.num_classes = node.at("meta.num_classes").get<int>();
    r.prediction_id = node.at("meta.prediction").get<std::string>();
    r.truth_id = node.at("meta.truth").get<std::string>();
    r.gap_dice.epsilon = number_from(node.at("gapdice.epsilon"));
    r.collision_epsilon = number_from(node.at("collisions.epsilon"));
    const std::string g = epsilon_tag(r.gap_dice.epsilon);

    r.dice.macro = number_from(node.at("dice.macro"));
    r.gap_dice.macro = number_from(node.at("gapdice.macro." + g));
    r.gap_dice.binary = number_from(node.at("gapdice.binary." + g));
    r.gap_dice.region_voxels = node.at("gapdice.region_voxels." + g).get<std::size_t>();
    r.gap_dice.empty_region = node.at("gapdice.no_gap_region." + g).get<bool>();
    r.hausdorff.max = number_from(node.at("hd.max_vox"));
    for (int c = 1; c < r.num_classes; ++c) {
      const std::string id = std::to_string(c);
      r.dice.per_class.push_back(number_from(node.at("dice.class" + id)));
      r.gap_dice.per_class.push_back(number_from(node.at("gapdice.class" + id + "." + g)));
      r.hausdorff.per_class.push_back(number_from(node.at("hd.class" + id + "_vox")));
    }
    r.collision_count =
        node.at("collisions.count." + epsilon_tag(r.collision_epsilon)).get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
}

}  // namespace mpseg
