#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "algaeid/image.hpp"
#include "algaeid/types.hpp"

namespace algaeid {

/// Reads PGM (P5, maxval 255) or 8-bit PNG. Color PNGs are reduced to gray with
/// BT.601 weights, rounded half up.
GrayImage load_image(const std::filesystem::path& path);

/// Writes binary PGM (P5, maxval 255).
void save_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Masks are written as 0/255 PGM and read back with any nonzero value as foreground.
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask load_mask(const std::filesystem::path& path);

/// BT.601 luminance with round-half-up.
std::uint8_t luminance_bt601(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct ManifestRow {
  std::filesystem::path path;
  std::optional<LabelClass> label;
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// CSV with header `path,label`. Relative paths are resolved against the
/// manifest's directory.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// Paths are written relative to the manifest directory when they live below it.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);

/// Splits one CSV line on commas (no quoting; the formats here never need it).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace algaeid
