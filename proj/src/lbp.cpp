#include <bit>

#include "algaeid/features.hpp"

namespace algaeid {

namespace {

// Neighbor k at angle 45k degrees counterclockwise from east, image y down.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

std::array<int, 256> build_uniform_table() {
  std::array<int, 256> t{};
  int next = 0;
  for (int code = 0; code < 256; ++code) {
    const auto c = static_cast<std::uint8_t>(code);
    const auto rot = static_cast<std::uint8_t>((c >> 1) | (c << 7));
    t[static_cast<std::size_t>(code)] = std::popcount(static_cast<unsigned>(c ^ rot)) <= 2 ? next++ : -1;
  }
  for (auto& v : t) {
    if (v < 0) v = next;
  }
  return t;
}

}  // namespace

std::uint8_t lbp_code(const GrayImage& img, int x, int y) {
  const std::uint8_t center = img(x, y);
  unsigned code = 0;
  for (int k = 0; k < 8; ++k) {
    if (img(x + kDx[k], y + kDy[k]) >= center) code |= 1u << k;
  }
  return static_cast<std::uint8_t>(code);
}

int lbp_uniform_bin(std::uint8_t code) {
  static const std::array<int, 256> table = build_uniform_table();
  return table[code];
}

std::array<double, 59> lbp_histogram(const RegionPatch& patch) {
  const GrayImage& img = patch.image;
  const BinaryMask& mask = patch.mask;
  if (img.empty() || img.width() != mask.width() || img.height() != mask.height()) {
    throw Error(ErrorCode::DimensionMismatch, "patch image and mask differ in size");
  }
  if (img.width() < 3 || img.height() < 3) throw Error(ErrorCode::PatchTooSmall, "LBP needs at least 3x3");
  std::array<double, 59> hist{};
  double total = 0.0;
  for (int y = 1; y + 1 < img.height(); ++y) {
    for (int x = 1; x + 1 < img.width(); ++x) {
      if (!mask(x, y)) continue;
      hist[static_cast<std::size_t>(lbp_uniform_bin(lbp_code(img, x, y)))] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) throw Error(ErrorCode::EmptyMask, "no masked pixel has a full neighborhood");
  for (auto& v : hist) v /= total;
  return hist;
}

}  // namespace algaeid
