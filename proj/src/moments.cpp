#include <cmath>
#include <complex>

#include "algaeid/features.hpp"

namespace algaeid {

namespace {

void check_patch(const GrayImage& img, const BinaryMask& mask) {
  if (img.empty() || mask.empty() || img.width() != mask.width() || img.height() != mask.height()) {
    throw Error(ErrorCode::DimensionMismatch, "patch image and mask differ in size");
  }
  if (foreground_count(mask) == 0) throw Error(ErrorCode::EmptyMask, "patch mask is empty");
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

std::array<double, 7> hu_invariants(const GrayImage& img, const BinaryMask& mask) {
  check_patch(img, mask);
  double m00 = 0.0, m10 = 0.0, m01 = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!mask(x, y)) continue;
      const double f = img(x, y);
      m00 += f;
      m10 += f * x;
      m01 += f * y;
    }
  }
  if (!(m00 > 0.0)) throw Error(ErrorCode::EmptyMask, "masked intensities carry no mass");
  const double cx = m10 / m00;
  const double cy = m01 / m00;
  double mu[4][4] = {};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!mask(x, y)) continue;
      const double f = img(x, y);
      const double dx = x - cx;
      const double dy = y - cy;
      const double px[4] = {1.0, dx, dx * dx, dx * dx * dx};
      const double py[4] = {1.0, dy, dy * dy, dy * dy * dy};
      for (int p = 0; p <= 3; ++p) {
        for (int q = 0; p + q <= 3; ++q) mu[p][q] += f * px[p] * py[q];
      }
    }
  }
  auto eta = [&](int p, int q) { return mu[p][q] / std::pow(m00, 1.0 + 0.5 * (p + q)); };
  const double n20 = eta(2, 0), n02 = eta(0, 2), n11 = eta(1, 1);
  const double n30 = eta(3, 0), n03 = eta(0, 3), n21 = eta(2, 1), n12 = eta(1, 2);
  const double a = n30 + n12;
  const double b = n21 + n03;
  std::array<double, 7> phi{};
  phi[0] = n20 + n02;
  phi[1] = (n20 - n02) * (n20 - n02) + 4.0 * n11 * n11;
  phi[2] = (n30 - 3.0 * n12) * (n30 - 3.0 * n12) + (3.0 * n21 - n03) * (3.0 * n21 - n03);
  phi[3] = a * a + b * b;
  phi[4] = (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b) + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b);
  phi[5] = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
  phi[6] = (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b) - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b);
  return phi;
}

std::array<double, 7> hu_moments(const RegionPatch& patch) {
  auto phi = hu_invariants(patch.image, patch.mask);
  for (auto& v : phi) {
    const double s = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    v = s * std::log10(std::abs(v) + 1e-30);
  }
  return phi;
}

const std::vector<std::pair<int, int>>& zernike_orders() {
  static const std::vector<std::pair<int, int>> orders = [] {
    std::vector<std::pair<int, int>> o;
    for (int n = 1; o.size() < 40; ++n) {
      for (int m = n % 2; m <= n && o.size() < 40; m += 2) {
        if (m == 0 && n == 0) continue;
        o.emplace_back(n, m);
      }
    }
    return o;
  }();
  return orders;
}

std::array<double, 40> zernike_moments(const RegionPatch& patch) {
  check_patch(patch.image, patch.mask);
  const GrayImage& img = patch.image;
  const BinaryMask& mask = patch.mask;
  double sx = 0.0, sy = 0.0, count = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      sx += x;
      sy += y;
      count += 1.0;
    }
  }
  const double cx = sx / count;
  const double cy = sy / count;
  double radius = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y)) radius = std::max(radius, std::hypot(x - cx, y - cy));
    }
  }
  radius = std::max(radius, 1.0);

  const auto& orders = zernike_orders();
  int max_n = 0;
  for (const auto& [n, m] : orders) max_n = std::max(max_n, n);

  // Radial polynomial coefficients: R_nm(rho) = sum_s c[s] * rho^(n - 2s).
  struct Radial {
    int n, m;
    std::vector<double> coeff;
  };
  std::vector<Radial> radial;
  for (const auto& [n, m] : orders) {
    Radial r{n, m, {}};
    for (int s = 0; s <= (n - m) / 2; ++s) {
      const double sign = (s % 2 == 0) ? 1.0 : -1.0;
      r.coeff.push_back(sign * factorial(n - s) /
                        (factorial(s) * factorial((n + m) / 2 - s) * factorial((n - m) / 2 - s)));
    }
    radial.push_back(std::move(r));
  }

  std::vector<std::complex<double>> acc(orders.size());
  std::vector<double> rho_pow(static_cast<std::size_t>(max_n) + 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!mask(x, y)) continue;
      const double dx = (x - cx) / radius;
      const double dy = (cy - y) / radius;
      const double rho = std::hypot(dx, dy);
      if (rho > 1.0 + 1e-12) continue;
      const double theta = std::atan2(dy, dx);
      const double f = img(x, y);
      rho_pow[0] = 1.0;
      for (int k = 1; k <= max_n; ++k) rho_pow[static_cast<std::size_t>(k)] = rho_pow[static_cast<std::size_t>(k) - 1] * rho;
      for (std::size_t i = 0; i < radial.size(); ++i) {
        const Radial& r = radial[i];
        double value = 0.0;
        for (std::size_t s = 0; s < r.coeff.size(); ++s) {
          value += r.coeff[s] * rho_pow[static_cast<std::size_t>(r.n) - 2 * s];
        }
        acc[i] += f * value * std::polar(1.0, -r.m * theta);
      }
    }
  }
  std::array<double, 40> out{};
  const double area = 1.0 / (radius * radius);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const int n = orders[i].first;
    out[i] = std::abs(acc[i]) * (n + 1) / M_PI * area;
  }
  return out;
}

}  // namespace algaeid
