#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "algaeid/image.hpp"

namespace algaeid {

struct ClaheConfig {
  int tiles_x = 8;
  int tiles_y = 8;
  /// Multiple of the uniform bin height (tile pixels / 256) at which tile histograms are clipped.
  double clip_limit = 2.0;
};

/// Number of quantization steps; the output alphabet has steps + 1 levels.
struct QuantizationLevels {
  int steps = 3;
};

/// Per-tile intensity transfer functions, exposed for inspection and tests.
struct ClaheTables {
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::array<std::uint8_t, 256>> maps;  // row-major over tiles
  std::vector<int> x_bounds;                        // tiles_x + 1 tile edges
  std::vector<int> y_bounds;                        // tiles_y + 1 tile edges
};

ClaheTables clahe_tables(const GrayImage& img, const ClaheConfig& cfg);

GrayImage clahe(const GrayImage& img, const ClaheConfig& cfg);
/// Serial reference for the interpolation pass; bit-identical to clahe().
GrayImage clahe_serial(const GrayImage& img, const ClaheConfig& cfg);

/// Clipped-and-redistributed histogram equalization map for one histogram.
std::array<std::uint8_t, 256> equalization_map(const std::array<std::uint32_t, 256>& hist, double clip_limit);

std::uint8_t posterize_value(std::uint8_t v, QuantizationLevels q);
GrayImage posterize(const GrayImage& img, QuantizationLevels q);

std::array<std::uint32_t, 256> histogram(const GrayImage& img);

/// Threshold in [0, 254] maximizing between-class variance; ties go to the smallest.
/// Comparisons are exact (integer arithmetic), so equal variances are detected as ties.
int otsu_threshold(const GrayImage& img);

/// Foreground = pixels <= t (algae are darker than the background).
BinaryMask binarize(const GrayImage& img, int t);

}  // namespace algaeid
