#include "algaeid/types.hpp"

#include <algorithm>
#include <cmath>

namespace algaeid {

bool ContourForest::consistent() const {
  const int n = static_cast<int>(contours.size());
  for (int i = 0; i < n; ++i) {
    const auto& c = contours[static_cast<std::size_t>(i)];
    if (c.parent) {
      if (*c.parent < 0 || *c.parent >= n) return false;
      const auto& siblings = contours[static_cast<std::size_t>(*c.parent)].children;
      if (std::find(siblings.begin(), siblings.end(), i) == siblings.end()) return false;
    }
    for (int child : c.children) {
      if (child < 0 || child >= n) return false;
      const auto& p = contours[static_cast<std::size_t>(child)].parent;
      if (!p || *p != i) return false;
    }
    // Walking up from any node must reach a root within n steps.
    int steps = 0;
    for (auto cur = c.parent; cur; cur = contours[static_cast<std::size_t>(*cur)].parent) {
      if (++steps > n) return false;
    }
  }
  return true;
}

std::string_view feature_block_of(std::size_t index) {
  for (const auto& b : kFeatureBlocks) {
    if (index >= b.begin && index < b.begin + b.size) return b.name;
  }
  return {};
}

void LabeledDataset::add(Sample s) {
  if (!ids_.insert(s.id).second) throw Error(ErrorCode::InvalidArgument, "duplicate sample id '" + s.id + "'");
  if (!std::all_of(s.features.begin(), s.features.end(), [](double v) { return std::isfinite(v); })) {
    ids_.erase(s.id);
    throw Error(ErrorCode::NonFiniteFeature, "sample '" + s.id + "'");
  }
  samples_.push_back(std::move(s));
}

std::array<std::size_t, kNumClasses> LabeledDataset::class_counts() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& s : samples_) ++counts[static_cast<std::size_t>(class_index(s.label))];
  return counts;
}

}  // namespace algaeid
