#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "algaeid/types.hpp"

namespace algaeid {

// Hu ------------------------------------------------------------------------

/// Raw Hu invariants phi1..phi7 of the masked intensities.
std::array<double, 7> hu_invariants(const GrayImage& img, const BinaryMask& mask);
/// sign(phi) * log10(|phi| + 1e-30) of the raw invariants.
std::array<double, 7> hu_moments(const RegionPatch& patch);

// HOG -----------------------------------------------------------------------

inline constexpr int kHogSize = 48;
inline constexpr int kHogCell = 16;
inline constexpr int kHogBins = 9;

/// 48x48 resample of the mask-zeroed patch, 3x3 cells of 16 px, 9 unsigned
/// orientation bins centered at 0, 20, ..., 160 degrees with linear voting,
/// L2 normalization per cell.
std::array<double, 81> hog_descriptor(const RegionPatch& patch);

// Zernike -------------------------------------------------------------------

/// The 40 (n, m) orders used, n ascending then m ascending, from (1,1).
const std::vector<std::pair<int, int>>& zernike_orders();
std::array<double, 40> zernike_moments(const RegionPatch& patch);

// LBP -----------------------------------------------------------------------

/// 8-neighbor code, bit k set when neighbor k >= center; neighbors start east
/// and run counterclockwise as displayed.
std::uint8_t lbp_code(const GrayImage& img, int x, int y);
/// Uniform-pattern bin (0..57) or 58 for non-uniform codes.
int lbp_uniform_bin(std::uint8_t code);
std::array<double, 59> lbp_histogram(const RegionPatch& patch);

// Haralick ------------------------------------------------------------------

inline constexpr int kGlcmLevels = 8;
using Glcm = std::array<std::array<double, kGlcmLevels>, kGlcmLevels>;

/// Direction offsets (dx, dy) for 0, 45, 90 and 135 degrees.
inline constexpr std::array<std::pair<int, int>, 4> kGlcmOffsets{{{1, 0}, {1, -1}, {0, -1}, {-1, -1}}};

std::uint8_t glcm_level(std::uint8_t v);
/// Symmetric normalized co-occurrence matrix at one offset over masked pairs.
/// Returns false when no valid pair exists.
bool glcm(const GrayImage& img, const BinaryMask& mask, std::pair<int, int> offset, Glcm& out);
/// Haralick's 14 statistics of one normalized matrix, in the classic order:
/// ASM, contrast, correlation, variance, IDM, sum average, sum variance,
/// sum entropy, entropy, difference variance, difference entropy, IMC1, IMC2, MCC.
std::array<double, 14> haralick_statistics(const Glcm& p);
/// 14 means over the four directions followed by 14 ranges.
std::array<double, 28> haralick_features(const RegionPatch& patch);

// Assembly ------------------------------------------------------------------

/// Concatenation Hu | HOG | Zernike | LBP | Haralick. Throws FeatureError naming the failing block.
FeatureVector extract_all(const RegionPatch& patch);

struct BatchResult {
  std::vector<FeatureVector> features;
  std::vector<std::string> errors;  // empty string on success
};

/// OpenMP over patches.
BatchResult extract_batch(const std::vector<RegionPatch>& patches);
/// Serial reference; identical output to extract_batch.
BatchResult extract_batch_serial(const std::vector<RegionPatch>& patches);

}  // namespace algaeid
