#include "mpseg/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "mpseg/error.hpp"

namespace mpseg {

double quantile_linear(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double position = static_cast<double>(sorted.size() - 1) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(position));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = position - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string StandardizationStats::to_json() const {
  nlohmann::ordered_json node;
  node["center"] = center == CenterStatistic::mean ? "mean" : "median";
  node["mean"] = mean;
  node["median"] = median;
  node["q25"] = q25;
  node["q75"] = q75;
  node["scale"] = scale();
  return node.dump(2) + "\n";
}

Volume clip_negatives(const Volume& volume) {
  std::vector<float> out(volume.data().begin(), volume.data().end());
  for (float& v : out) v = std::max(v, 0.0f);
  return Volume(volume.geometry(), std::move(out));
}

Standardized standardize(const Volume& volume, CenterStatistic center) {
  std::vector<double> sorted(volume.data().begin(), volume.data().end());
  std::sort(sorted.begin(), sorted.end());

  StandardizationStats stats;
  stats.center = center;
  // Summing in sorted order makes the mean independent of storage order.
  stats.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
               static_cast<double>(sorted.size());
  stats.median = quantile_linear(sorted, 0.5);
  stats.q25 = quantile_linear(sorted, 0.25);
  stats.q75 = quantile_linear(sorted, 0.75);
  if (stats.scale() < 1e-9) {
    throw DataError("degenerate intensity scale: q75 - q25 = " + std::to_string(stats.scale()));
  }

  const double shift = stats.center_value();
  const double scale = stats.scale();
  std::vector<float> out(volume.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = static_cast<float>((static_cast<double>(volume[n]) - shift) / scale);
  }
  return {Volume(volume.geometry(), std::move(out)), stats};
}

}  // namespace mpseg
