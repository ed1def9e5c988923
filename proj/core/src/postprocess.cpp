#include "mpseg/postprocess.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "mpseg/error.hpp"

namespace mpseg {

namespace {

class DisjointSet {
 public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }

  std::int32_t root(std::int32_t n) {
    while (parent_[n] != n) {
      parent_[n] = parent_[parent_[n]];
      n = parent_[n];
    }
    return n;
  }

  void unite(std::int32_t a, std::int32_t b) {
    a = root(a);
    b = root(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
  }

 private:
  std::vector<std::int32_t> parent_;
};

// Neighbours already visited in a raster scan (first index fastest).
std::vector<Index3> backward_offsets(Connectivity connectivity) {
  std::vector<Index3> offsets;
  for (std::int64_t dz = -1; dz <= 0; ++dz) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
        const int manhattan = static_cast<int>(std::abs(dx) + std::abs(dy) + std::abs(dz));
        if (connectivity == Connectivity::faces && manhattan > 1) continue;
        if (connectivity == Connectivity::edges && manhattan > 2) continue;
        offsets.push_back({dx, dy, dz});
      }
    }
  }
  return offsets;
}

}  // namespace

Connectivity parse_connectivity(int value) {
  switch (value) {
    case 6: return Connectivity::faces;
    case 18: return Connectivity::edges;
    case 26: return Connectivity::corners;
    default: throw DataError("connectivity must be 6, 18 or 26, got " + std::to_string(value));
  }
}

Components connected_components(const Mask& mask, Connectivity connectivity) {
  const Index3 dims = mask.dims;
  const auto offsets = backward_offsets(connectivity);
  std::vector<std::int32_t> provisional(mask.size(), -1);
  DisjointSet sets;

  for (std::int64_t k = 0; k < dims[2]; ++k) {
    for (std::int64_t j = 0; j < dims[1]; ++j) {
      for (std::int64_t i = 0; i < dims[0]; ++i) {
        const std::size_t v = linear_index(dims, i, j, k);
        if (!mask.data[v]) continue;
        std::int32_t label = -1;
        for (const auto& o : offsets) {
          const std::int64_t ni = i + o[0], nj = j + o[1], nk = k + o[2];
          if (ni < 0 || nj < 0 || nk < 0 || ni >= dims[0] || nj >= dims[1]) continue;
          const std::int32_t neighbour = provisional[linear_index(dims, ni, nj, nk)];
          if (neighbour < 0) continue;
          if (label < 0) {
            label = neighbour;
          } else {
            sets.unite(label, neighbour);
          }
        }
        provisional[v] = label < 0 ? sets.make() : label;
      }
    }
  }

  // Roots -> dense components, with size and first (minimum) voxel index.
  struct Summary {
    std::size_t size = 0;
    std::size_t first = 0;
  };
  std::vector<std::int32_t> dense_of_root;
  std::vector<Summary> summaries;
  std::vector<std::int32_t> dense(mask.size(), -1);
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (provisional[v] < 0) continue;
    const std::int32_t r = sets.root(provisional[v]);
    if (static_cast<std::size_t>(r) >= dense_of_root.size()) dense_of_root.resize(r + 1, -1);
    if (dense_of_root[r] < 0) {
      dense_of_root[r] = static_cast<std::int32_t>(summaries.size());
      summaries.push_back({0, v});
    }
    dense[v] = dense_of_root[r];
    ++summaries[dense[v]].size;
  }

  std::vector<std::int32_t> order(summaries.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    if (summaries[a].size != summaries[b].size) return summaries[a].size > summaries[b].size;
    return summaries[a].first < summaries[b].first;
  });
  std::vector<std::int32_t> final_id(summaries.size());
  Components result;
  result.dims = dims;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    final_id[order[rank]] = static_cast<std::int32_t>(rank + 1);
    result.sizes.push_back(summaries[order[rank]].size);
  }
  result.ids.assign(mask.size(), 0);
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (dense[v] >= 0) result.ids[v] = final_id[dense[v]];
  }
  return result;
}

void SymmetryPairs::validate(int num_classes) const {
  std::vector<bool> seen(256, false);
  for (const auto& [a, b] : pairs) {
    if (a == b) throw DataError("a class cannot be paired with itself");
    for (const Label c : {a, b}) {
      if (c == 0 || c >= num_classes) {
        throw DataError("symmetry pair class " + std::to_string(c) +
                        " must be a foreground class < " + std::to_string(num_classes));
      }
      if (seen[c]) throw DataError("class " + std::to_string(c) + " appears in more than one pair");
      seen[c] = true;
    }
  }
}

std::optional<Label> SymmetryPairs::partner(Label cls) const {
  for (const auto& [a, b] : pairs) {
    if (a == cls) return b;
    if (b == cls) return a;
  }
  return std::nullopt;
}

SymmetryPairs SymmetryPairs::parse(std::string_view text) {
  SymmetryPairs result;
  auto parse_label = [&](std::string_view token) {
    int value = -1;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || value < 0 || value > 255) {
      throw DataError("invalid class id '" + std::string(token) + "' in pair list");
    }
    return static_cast<Label>(value);
  };
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw DataError("pair '" + std::string(item) + "' must look like a:b");
    }
    result.pairs.emplace_back(parse_label(item.substr(0, colon)),
                              parse_label(item.substr(colon + 1)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  result.validate(256);
  return result;
}

std::string ComponentStats::to_json() const {
  using ojson = nlohmann::ordered_json;
  auto classes = [](const std::vector<ClassComponents>& list) {
    ojson out = ojson::array();
    for (const auto& c : list) out.push_back({{"class", c.cls}, {"component_sizes", c.sizes}});
    return out;
  };
  ojson node;
  node["stage1_paired_components"] = classes(paired_input);
  ojson relabels = ojson::array();
  for (const auto& r : relabeled) {
    relabels.push_back(
        {{"component", r.component}, {"from", r.from}, {"to", r.to}, {"voxels", r.voxels}});
  }
  node["stage1_relabeled"] = relabels;
  node["stage2_components"] = classes(per_class);
  ojson removals = ojson::array();
  for (const auto& r : removed) {
    removals.push_back({{"component", r.component}, {"class", r.cls}, {"voxels", r.voxels}});
  }
  node["stage2_removed"] = removals;
  return node.dump(2) + "\n";
}

FilterResult symmetric_cc_filter(const LabelVolume& labels, const SymmetryPairs& pairs,
                                 Connectivity connectivity) {
  pairs.validate(labels.num_classes());
  ComponentStats stats;
  std::vector<Label> out(labels.labels().begin(), labels.labels().end());

  // Stage 1: both classes of a pair are decomposed on the unmodified input.
  for (const auto& [a, b] : pairs.pairs) {
    for (const auto& [cls, other] : {std::pair{a, b}, std::pair{b, a}}) {
      const Components cc = connected_components(labels.class_mask(cls), connectivity);
      stats.paired_input.push_back({cls, cc.sizes});
      for (std::size_t v = 0; v < out.size(); ++v) {
        if (cc.ids[v] > 1) out[v] = other;
      }
      for (std::size_t id = 2; id <= cc.count(); ++id) {
        stats.relabeled.push_back({cls, other, static_cast<std::int32_t>(id), cc.sizes[id - 1]});
      }
    }
  }

  // Stage 2: per-class floater removal on the stage-1 result.
  const LabelVolume stage1(labels.geometry(), out, labels.num_classes());
  for (int c = 1; c < labels.num_classes(); ++c) {
    const auto cls = static_cast<Label>(c);
    if (stage1.class_count(cls) == 0) continue;
    const Components cc = connected_components(stage1.class_mask(cls), connectivity);
    stats.per_class.push_back({cls, cc.sizes});
    for (std::size_t v = 0; v < out.size(); ++v) {
      if (cc.ids[v] > 1) out[v] = 0;
    }
    for (std::size_t id = 2; id <= cc.count(); ++id) {
      stats.removed.push_back({cls, static_cast<std::int32_t>(id), cc.sizes[id - 1]});
    }
  }
  return {LabelVolume(labels.geometry(), std::move(out), labels.num_classes()), std::move(stats)};
}

}  // namespace mpseg
