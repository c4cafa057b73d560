#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "algaeid/geometry.hpp"
#include "algaeid/segment.hpp"

namespace algaeid {

namespace {

// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

RealImage sobel_magnitude(const GrayImage& img) {
  RealImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      auto I = [&](int dx, int dy) { return static_cast<double>(img.clamped(x + dx, y + dy)); };
      const double gx = (I(1, -1) + 2 * I(1, 0) + I(1, 1)) - (I(-1, -1) + 2 * I(-1, 0) + I(-1, 1));
      const double gy = (I(-1, 1) + 2 * I(0, 1) + I(1, 1)) - (I(-1, -1) + 2 * I(0, -1) + I(1, -1));
      out(x, y) = std::hypot(gx, gy);
    }
  }
  return out;
}

// 2-D DFT magnitude of a real image zero-padded to n x n.
std::vector<double> dft_magnitude(const RealImage& src, int n) {
  std::vector<double> in(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) in[static_cast<std::size_t>(y * n + x)] = src(x, y);
  }
  const int half = n / 2 + 1;
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n * half)));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_2d(n, n, in.data(), out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::vector<double> mag(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < half; ++c) {
      const auto& z = out[r * half + c];
      const double m = std::hypot(z[0], z[1]);
      mag[static_cast<std::size_t>(r * n + c)] = m;
      // Hermitian symmetry fills the other half.
      const int r2 = (n - r) % n;
      const int c2 = (n - c) % n;
      mag[static_cast<std::size_t>(r2 * n + c2)] = m;
    }
  }
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  return mag;
}

}  // namespace

double wrap_half_turn(double deg) {
  double r = std::fmod(deg + 90.0, 180.0);
  if (r < 0.0) r += 180.0;
  r -= 90.0;
  // fmod can land exactly on the excluded upper bound after rounding.
  if (r >= 90.0) r -= 180.0;
  return r;
}

OrientationEstimate estimate_orientation(const GrayImage& img, const BinaryMask& mask) {
  if (img.width() < 8 || img.height() < 8) throw Error(ErrorCode::PatchTooSmall, "orientation needs at least 8x8");
  RealImage grad = sobel_magnitude(img);
  if (!mask.empty()) {
    // Keep gradients on and just around the region.
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        bool near = false;
        for (int dy = -1; dy <= 1 && !near; ++dy) {
          for (int dx = -1; dx <= 1 && !near; ++dx) {
            near = mask.contains(x + dx, y + dy) && mask(x + dx, y + dy);
          }
        }
        if (!near) grad(x, y) = 0.0;
      }
    }
  }
  const int n = next_pow2(std::max(img.width(), img.height()));
  std::vector<double> mag = dft_magnitude(grad, n);
  mag[0] = 0.0;  // DC

  std::vector<double> sorted(mag.begin() + 1, mag.end());
  const std::size_t k = static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double gate = sorted[k];

  double suu = 0.0, svv = 0.0, suv = 0.0;
  int used = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (r == 0 && c == 0) continue;
      const double m = mag[static_cast<std::size_t>(r * n + c)];
      if (!(m > gate) || m <= 0.0) continue;
      // Centered frequency coordinates, v pointing up.
      const double u = c < n / 2 ? c : c - n;
      const double v = -(r < n / 2 ? r : r - n);
      suu += u * u;
      svv += v * v;
      suv += u * v;
      ++used;
    }
  }
  if (used < 3) throw Error(ErrorCode::DegenerateSpectrum, "fewer than 3 spectral points above the gate");

  // Orthogonal least-squares line through the origin = major axis of the scatter.
  const double tr = suu + svv;
  const double det = suu * svv - suv * suv;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double l1 = 0.5 * tr + disc;
  const double l2 = 0.5 * tr - disc;
  if (!(l1 > 0.0)) throw Error(ErrorCode::DegenerateSpectrum, "rank-deficient spectral scatter");
  OrientationEstimate est;
  est.points_used = used;
  est.anisotropy = 1.0 - std::max(0.0, l2) / l1;
  constexpr double kMinAnisotropy = 0.4;
  if (est.anisotropy < kMinAnisotropy) {
    throw Error(ErrorCode::DegenerateSpectrum, "spectral cloud has no dominant direction");
  }
  const double spectral = 0.5 * std::atan2(2.0 * suv, suu - svv) * 180.0 / M_PI;
  est.angle_deg = wrap_half_turn(spectral + 90.0);
  return est;
}

OrientationEstimate estimate_orientation(const RegionPatch& patch) { return estimate_orientation(patch.image, patch.mask); }

RegionPatch rotate_patch(const RegionPatch& patch, double angle_deg) {
  double s, c;
  sincos_deg(angle_deg, s, c);
  const int w = patch.image.width();
  const int h = patch.image.height();
  constexpr double kSlack = 1e-9;
  const int w2 = std::max(1, static_cast<int>(std::ceil(w * std::abs(c) + h * std::abs(s) - kSlack)));
  const int h2 = std::max(1, static_cast<int>(std::ceil(w * std::abs(s) + h * std::abs(c) - kSlack)));
  const double cx_in = 0.5 * (w - 1);
  const double cy_in = 0.5 * (h - 1);
  const double cx_out = 0.5 * (w2 - 1);
  const double cy_out = 0.5 * (h2 - 1);
  const std::uint8_t fill = median_border(patch.image);
  const RealImage src = to_real(patch.image);

  RegionPatch out;
  out.image = GrayImage(w2, h2, fill);
  out.mask = BinaryMask(w2, h2);
  for (int y = 0; y < h2; ++y) {
    for (int x = 0; x < w2; ++x) {
      const double dx = x - cx_out;
      const double dy = y - cy_out;
      const double sx = c * dx + s * dy + cx_in;
      const double sy = -s * dx + c * dy + cy_in;
      if (sx >= -0.5 && sx < w - 0.5 && sy >= -0.5 && sy < h - 0.5) {
        out.image(x, y) =
            static_cast<std::uint8_t>(std::clamp(std::floor(sample_bilinear(src, sx, sy) + 0.5), 0.0, 255.0));
        const int nx = static_cast<int>(std::floor(sx + 0.5));
        const int ny = static_cast<int>(std::floor(sy + 0.5));
        if (patch.mask.contains(nx, ny)) out.mask(x, y) = patch.mask(nx, ny);
      }
    }
  }
  out.offset = patch.offset;
  out.source_size = patch.source_size;
  // Rotations about canvas centers compose into one rotation about the original center.
  out.orientation_deg = patch.orientation_deg + angle_deg;
  out.low_confidence_orientation = patch.low_confidence_orientation;
  out.source_id = patch.source_id;
  for (const auto& p : patch.outline) {
    const double dx = p.x - cx_in;
    const double dy = p.y - cy_in;
    out.outline.push_back({c * dx - s * dy + cx_out, s * dx + c * dy + cy_out});
  }
  return out;
}

}  // namespace algaeid
