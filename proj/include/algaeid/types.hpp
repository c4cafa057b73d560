#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "algaeid/image.hpp"

namespace algaeid {

// ---------------------------------------------------------------------------
// Contours
// ---------------------------------------------------------------------------

struct Contour {
  std::vector<Point> points;  // closed polygon, last point connects to first
  std::optional<int> parent;  // index into the owning forest; nullopt = root
  std::vector<int> children;
  bool is_hole = false;
};

struct ContourForest {
  std::vector<Contour> contours;

  std::vector<int> roots() const {
    std::vector<int> r;
    for (int i = 0; i < static_cast<int>(contours.size()); ++i) {
      if (!contours[static_cast<std::size_t>(i)].parent) r.push_back(i);
    }
    return r;
  }

  /// Every child's parent points back, every parent lists the child, no cycles.
  bool consistent() const;
};

// ---------------------------------------------------------------------------
// Region patches
// ---------------------------------------------------------------------------

/// One candidate alga. `offset` and `source_size` describe the axis-aligned
/// crop in the source frame before any rotation; `image`/`mask` are the
/// (possibly rotated) pixels the descriptors see.
struct RegionPatch {
  GrayImage image;
  BinaryMask mask;
  Point offset;
  Point source_size;
  double orientation_deg = 0.0;  // rotation applied to reach `image`, in [-90, 90)
  bool low_confidence_orientation = false;
  std::string source_id;
  std::vector<PointF> outline;  // refined contour in patch coordinates (empty before refinement)

  /// Maps a point in patch coordinates back to source-frame coordinates.
  PointF to_source(PointF p) const;
};

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

enum class LabelClass : int { One = 1, Two = 2, Four = 4, Eight = 8 };

inline constexpr std::array<LabelClass, 4> kAllClasses{LabelClass::One, LabelClass::Two, LabelClass::Four,
                                                       LabelClass::Eight};
inline constexpr int kNumClasses = 4;

constexpr int cells(LabelClass c) { return static_cast<int>(c); }

constexpr int class_index(LabelClass c) {
  switch (c) {
    case LabelClass::One: return 0;
    case LabelClass::Two: return 1;
    case LabelClass::Four: return 2;
    case LabelClass::Eight: return 3;
  }
  return -1;
}

constexpr LabelClass class_from_index(int i) { return kAllClasses[static_cast<std::size_t>(i)]; }

constexpr std::optional<LabelClass> class_from_cells(int n) {
  switch (n) {
    case 1: return LabelClass::One;
    case 2: return LabelClass::Two;
    case 4: return LabelClass::Four;
    case 8: return LabelClass::Eight;
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Feature vectors
// ---------------------------------------------------------------------------

struct FeatureBlock {
  std::string_view name;
  std::size_t begin;
  std::size_t size;
};

inline constexpr std::size_t kFeatureDim = 215;
inline constexpr std::array<FeatureBlock, 5> kFeatureBlocks{{
    {"hu", 0, 7},
    {"hog", 7, 81},
    {"zernike", 88, 40},
    {"lbp", 128, 59},
    {"haralick", 187, 28},
}};

static_assert(kFeatureBlocks.back().begin + kFeatureBlocks.back().size == kFeatureDim);

using FeatureVector = std::array<double, kFeatureDim>;

/// Name of the block a feature index belongs to.
std::string_view feature_block_of(std::size_t index);

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct Sample {
  std::string id;
  FeatureVector features{};
  LabelClass label = LabelClass::One;
};

class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::string provenance) : provenance_(std::move(provenance)) {}

  /// Throws InvalidArgument on duplicate id or non-finite features.
  void add(Sample s);

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::string& provenance() const noexcept { return provenance_; }

  std::array<std::size_t, kNumClasses> class_counts() const;

 private:
  std::string provenance_;
  std::vector<Sample> samples_;
  std::unordered_set<std::string> ids_;
};

}  // namespace algaeid
