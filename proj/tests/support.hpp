#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "algaeid/classifier.hpp"
#include "algaeid/image.hpp"
#include "algaeid/rng.hpp"
#include "algaeid/types.hpp"

namespace testing_support {

using namespace algaeid;

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("algaeid_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline GrayImage random_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
  Rng rng(seed);
  GrayImage img(w, h);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.uniform_int(lo, hi));
  return img;
}

/// Filled ellipse with semi-axes a (along angle_deg, y up) and b.
inline BinaryMask ellipse_mask(int w, int h, double cx, double cy, double a, double b, double angle_deg = 0.0) {
  BinaryMask m(w, h);
  const double t = angle_deg * M_PI / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx, dy = -(y - cy);
      const double u = dx * c + dy * s, v = -dx * s + dy * c;
      m(x, y) = (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
    }
  }
  return m;
}

inline RegionPatch make_patch(GrayImage img, BinaryMask mask) {
  RegionPatch p;
  p.image = std::move(img);
  p.mask = std::move(mask);
  p.source_size = {p.image.width(), p.image.height()};
  p.source_id = "test";
  return p;
}

/// Mask-limited patch with a smooth, non-symmetric texture: a random ellipse
/// with semi-major axis in [a_lo, a_hi], or a chain of 1..4 such ellipses
/// when `lobes` is set. Background is 220 and never masked.
inline RegionPatch textured_patch(Rng& rng, double a_lo, double a_hi, bool lobes = false) {
  const double a = rng.uniform(a_lo, a_hi);
  const int k = lobes ? 1 + static_cast<int>(rng.below(4)) : 1;
  const double b = a * rng.uniform(0.4, 0.8) / (lobes ? 1.6 : 1.0);
  const double span = lobes ? (k - 1) * 1.7 * b : 0.0;
  const int w = static_cast<int>(2 * a + span + 16);
  const double theta = rng.uniform(0.0, 180.0);
  const double cx = (w - 1) / 2.0 + rng.uniform(-2.0, 2.0);
  const double cy = (w - 1) / 2.0 + rng.uniform(-2.0, 2.0);
  const double t = theta * M_PI / 180.0;
  BinaryMask mask(w, w);
  for (int i = 0; i < k; ++i) {
    const double off = (i - (k - 1) / 2.0) * 1.7 * b;
    const BinaryMask e = ellipse_mask(w, w, cx - off * std::sin(t), cy - off * std::cos(t), b, a / (lobes ? 1.6 : 1.0),
                                      theta + rng.uniform(-10.0, 10.0) + 90.0);
    for (std::size_t j = 0; j < mask.size(); ++j) mask.pixels()[j] |= e.pixels()[j];
  }
  double wave[3][3];
  for (auto& q : wave) {
    q[0] = rng.uniform(-3.0, 3.0);
    q[1] = rng.uniform(-3.0, 3.0);
    q[2] = rng.uniform(0.0, 6.0);
  }
  GrayImage img(w, w, 220);
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      double v = 120.0;
      for (const auto& q : wave) v += 20.0 * std::sin(q[0] * (x - cx) / a + q[1] * (y - cy) / a + q[2]);
      img(x, y) = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return make_patch(std::move(img), std::move(mask));
}

/// The same content placed at (dx, dy) inside a larger canvas.
inline RegionPatch translated(const RegionPatch& p, int dx, int dy, int extra_w, int extra_h) {
  GrayImage img(p.image.width() + extra_w, p.image.height() + extra_h, 0);
  BinaryMask mask(img.width(), img.height());
  for (int y = 0; y < p.image.height(); ++y) {
    for (int x = 0; x < p.image.width(); ++x) {
      img(x + dx, y + dy) = p.image(x, y);
      mask(x + dx, y + dy) = p.mask(x, y);
    }
  }
  return make_patch(std::move(img), std::move(mask));
}

/// Exact quarter turn of the pixel grid, counterclockwise as displayed.
inline RegionPatch quarter_turn(const RegionPatch& p) {
  const int w = p.image.width(), h = p.image.height();
  GrayImage img(h, w);
  BinaryMask mask(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img(y, w - 1 - x) = p.image(x, y);
      mask(y, w - 1 - x) = p.mask(x, y);
    }
  }
  return make_patch(std::move(img), std::move(mask));
}

/// max_k |a_k - b_k| / max(|a_k|, |b_k|), with exact zeros on both sides ignored.
template <std::size_t N>
double max_relative_deviation(const std::array<double, N>& a, const std::array<double, N>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const double scale = std::max(std::abs(a[k]), std::abs(b[k]));
    if (scale > 0.0) worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

/// ||a - b|| / ||a||.
template <std::size_t N>
double vector_relative_deviation(const std::array<double, N>& a, const std::array<double, N>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += a[k] * a[k];
  }
  return std::sqrt(num / den);
}

/// Otsu by definition: maximize w0 w1 (mu0 - mu1)^2 over t in [0, 254] in
/// long double, foreground = v <= t, first maximum wins.
inline int otsu_brute_force(const GrayImage& img) {
  std::array<long double, 256> h{};
  for (auto v : img.pixels()) h[v] += 1;
  const long double n = static_cast<long double>(img.size());
  int best_t = -1;
  long double best = -1;
  for (int t = 0; t < 255; ++t) {
    long double w0 = 0, s0 = 0, w1 = 0, s1 = 0;
    for (int v = 0; v < 256; ++v) {
      if (v <= t) {
        w0 += h[v];
        s0 += h[v] * v;
      } else {
        w1 += h[v];
        s1 += h[v] * v;
      }
    }
    if (w0 == 0 || w1 == 0) continue;
    const long double d = s0 / w0 - s1 / w1;
    const long double var = (w0 / n) * (w1 / n) * d * d;
    if (var > best * (1 + 1e-15L) + 1e-30L) {
      best = var;
      best_t = t;
    }
  }
  return best_t;
}

/// Linear soft-margin primal at (w, b) and the dual at alpha, computed directly.
struct Objectives {
  double primal;
  double dual;
};

inline Objectives svm_objectives(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                                 double bias, double c) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) w += alpha(i) * y(i) * x.row(i).transpose();
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) hinge += std::max(0.0, 1.0 - y(i) * (x.row(i).dot(w) + bias));
  const double primal = 0.5 * w.squaredNorm() + c * hinge;
  const double dual = alpha.sum() - 0.5 * w.squaredNorm();
  return {primal, dual};
}

}  // namespace testing_support
