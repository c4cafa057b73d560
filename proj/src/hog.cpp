#include <cmath>

#include "algaeid/features.hpp"
#include "algaeid/geometry.hpp"

namespace algaeid {

std::array<double, 81> hog_descriptor(const RegionPatch& patch) {
  const GrayImage& img = patch.image;
  const BinaryMask& mask = patch.mask;
  if (img.empty() || img.width() != mask.width() || img.height() != mask.height()) {
    throw Error(ErrorCode::DimensionMismatch, "patch image and mask differ in size");
  }
  RealImage masked(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) masked(x, y) = mask(x, y) ? img(x, y) : 0.0;
  }

  // Pixel-center aligned bilinear resample to 48x48.
  RealImage r(kHogSize, kHogSize);
  const double kx = static_cast<double>(img.width()) / kHogSize;
  const double ky = static_cast<double>(img.height()) / kHogSize;
  for (int y = 0; y < kHogSize; ++y) {
    for (int x = 0; x < kHogSize; ++x) r(x, y) = sample_bilinear(masked, (x + 0.5) * kx - 0.5, (y + 0.5) * ky - 0.5);
  }

  std::array<double, 81> out{};
  constexpr double kBinWidth = 180.0 / kHogBins;
  for (int y = 0; y < kHogSize; ++y) {
    for (int x = 0; x < kHogSize; ++x) {
      const double gx = r.clamped(x + 1, y) - r.clamped(x - 1, y);
      const double gy = r.clamped(x, y + 1) - r.clamped(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx) * 180.0 / M_PI;
      theta = std::fmod(theta + 360.0, 180.0);
      const double pos = theta / kBinWidth;
      const int lo = static_cast<int>(std::floor(pos)) % kHogBins;
      const int hi = (lo + 1) % kHogBins;
      const double frac = pos - std::floor(pos);
      const int cell = (y / kHogCell) * 3 + (x / kHogCell);
      out[static_cast<std::size_t>(cell * kHogBins + lo)] += mag * (1.0 - frac);
      out[static_cast<std::size_t>(cell * kHogBins + hi)] += mag * frac;
    }
  }
  constexpr double kEps = 1e-6;
  for (int cell = 0; cell < 9; ++cell) {
    double ss = 0.0;
    for (int b = 0; b < kHogBins; ++b) ss += out[static_cast<std::size_t>(cell * kHogBins + b)] * out[static_cast<std::size_t>(cell * kHogBins + b)];
    const double norm = std::sqrt(ss + kEps * kEps);
    for (int b = 0; b < kHogBins; ++b) out[static_cast<std::size_t>(cell * kHogBins + b)] /= norm;
  }
  return out;
}

}  // namespace algaeid
