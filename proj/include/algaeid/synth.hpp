#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "algaeid/image.hpp"
#include "algaeid/io.hpp"
#include "algaeid/types.hpp"

namespace algaeid {

struct SynthConfig {
  int width = 128;
  int height = 128;
  LabelClass cls = LabelClass::One;
  // Cell ellipse semi-axes in pixels: long axis across the colony row, short axis along it.
  double long_axis_min = 10.0;
  double long_axis_max = 13.0;
  double short_axis_min = 4.5;
  double short_axis_max = 6.0;
  double body = 145.0;
  double wall = 60.0;
  double background = 180.0;
  double texture = 8.0;  // amplitude of the smooth body texture
  double noise_sigma = 6.0;
  double wall_width = 2.0;
  bool grid_lines = false;
  bool random_rotation = true;
  double max_offset = 8.0;  // colony center jitter from the frame center
  std::uint64_t seed = 1;
};

struct SynthFrame {
  GrayImage image;
  BinaryMask truth;
  LabelClass label = LabelClass::One;
};

/// Throws ConfigOutOfRange on invalid sizes, axes or intensities.
SynthFrame generate_coenobium(const SynthConfig& cfg);

/// 4 * n_per_class frames; frame i has class kAllClasses[i % 4] and seed
/// derive_seed(seed, "synth", i).
std::vector<SynthFrame> generate_frames(int n_per_class, const SynthConfig& base, std::uint64_t seed);

/// Writes img_NNNN.pgm, gt_NNNN.pgm and manifest.csv (path,label) into dir.
std::vector<ManifestRow> write_dataset(const std::vector<SynthFrame>& frames, const std::filesystem::path& dir);

/// gt_NNNN.pgm next to img_NNNN.pgm, if the image follows that naming.
std::filesystem::path truth_path_for(const std::filesystem::path& image_path);

}  // namespace algaeid
