#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "algaeid/features.hpp"

namespace algaeid {

namespace {

constexpr int L = kGlcmLevels;

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

std::uint8_t glcm_level(std::uint8_t v) { return static_cast<std::uint8_t>(v >> 5); }

bool glcm(const GrayImage& img, const BinaryMask& mask, std::pair<int, int> offset, Glcm& out) {
  for (auto& row : out) row.fill(0.0);
  double total = 0.0;
  const auto [ox, oy] = offset;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int x2 = x + ox;
      const int y2 = y + oy;
      if (!mask(x, y) || !img.contains(x2, y2) || !mask(x2, y2)) continue;
      const int a = glcm_level(img(x, y));
      const int b = glcm_level(img(x2, y2));
      out[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += 1.0;
      out[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] += 1.0;
      total += 2.0;
    }
  }
  if (total == 0.0) return false;
  for (auto& row : out) {
    for (auto& v : row) v /= total;
  }
  return true;
}

std::array<double, 14> haralick_statistics(const Glcm& p) {
  std::array<double, L> px{}, py{};
  std::array<double, 2 * L - 1> psum{};  // index i + j
  std::array<double, L> pdiff{};         // index |i - j|
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      const double v = p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      px[static_cast<std::size_t>(i)] += v;
      py[static_cast<std::size_t>(j)] += v;
      psum[static_cast<std::size_t>(i + j)] += v;
      pdiff[static_cast<std::size_t>(std::abs(i - j))] += v;
    }
  }
  // Gray levels are numbered from 1.
  double mux = 0.0, muy = 0.0;
  for (int i = 0; i < L; ++i) {
    mux += (i + 1) * px[static_cast<std::size_t>(i)];
    muy += (i + 1) * py[static_cast<std::size_t>(i)];
  }
  double vx = 0.0, vy = 0.0;
  for (int i = 0; i < L; ++i) {
    vx += (i + 1 - mux) * (i + 1 - mux) * px[static_cast<std::size_t>(i)];
    vy += (i + 1 - muy) * (i + 1 - muy) * py[static_cast<std::size_t>(i)];
  }

  double asm_ = 0.0, contrast = 0.0, sum_ij = 0.0, variance = 0.0, idm = 0.0, entropy = 0.0;
  double hxy1 = 0.0, hxy2 = 0.0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      const double v = p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      const double d = i - j;
      asm_ += v * v;
      contrast += d * d * v;
      sum_ij += (i + 1) * (j + 1) * v;
      variance += (i + 1 - mux) * (i + 1 - mux) * v;
      idm += v / (1.0 + d * d);
      entropy -= xlogx(v);
      const double q = px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)];
      if (q > 0.0) {
        if (v > 0.0) hxy1 -= v * std::log(q);
        hxy2 -= q * std::log(q);
      }
    }
  }
  const double sdev = std::sqrt(vx * vy);
  const double correlation = sdev > 0.0 ? (sum_ij - mux * muy) / sdev : 0.0;

  double sum_avg = 0.0, sum_ent = 0.0;
  for (int k = 0; k < 2 * L - 1; ++k) {
    sum_avg += (k + 2) * psum[static_cast<std::size_t>(k)];
    sum_ent -= xlogx(psum[static_cast<std::size_t>(k)]);
  }
  double sum_var = 0.0;
  for (int k = 0; k < 2 * L - 1; ++k) sum_var += (k + 2 - sum_avg) * (k + 2 - sum_avg) * psum[static_cast<std::size_t>(k)];

  double diff_mean = 0.0, diff_ent = 0.0;
  for (int k = 0; k < L; ++k) {
    diff_mean += k * pdiff[static_cast<std::size_t>(k)];
    diff_ent -= xlogx(pdiff[static_cast<std::size_t>(k)]);
  }
  double diff_var = 0.0;
  for (int k = 0; k < L; ++k) diff_var += (k - diff_mean) * (k - diff_mean) * pdiff[static_cast<std::size_t>(k)];

  double hx = 0.0, hy = 0.0;
  for (int i = 0; i < L; ++i) {
    hx -= xlogx(px[static_cast<std::size_t>(i)]);
    hy -= xlogx(py[static_cast<std::size_t>(i)]);
  }
  const double hmax = std::max(hx, hy);
  const double imc1 = hmax > 0.0 ? (entropy - hxy1) / hmax : 0.0;
  const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - entropy))));

  // Q = S^2 with S = D^-1/2 P D^-1/2 over occupied levels, so eig(Q) = eig(S)^2.
  std::vector<int> occ;
  for (int i = 0; i < L; ++i) {
    if (px[static_cast<std::size_t>(i)] > 0.0) occ.push_back(i);
  }
  double mcc = 0.0;
  if (occ.size() >= 2) {
    const auto k = static_cast<Eigen::Index>(occ.size());
    Eigen::MatrixXd s(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        const auto i = static_cast<std::size_t>(occ[static_cast<std::size_t>(a)]);
        const auto j = static_cast<std::size_t>(occ[static_cast<std::size_t>(b)]);
        s(a, b) = p[i][j] / std::sqrt(px[i] * py[j]);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    std::vector<double> sq;
    for (Eigen::Index a = 0; a < k; ++a) sq.push_back(es.eigenvalues()(a) * es.eigenvalues()(a));
    std::sort(sq.begin(), sq.end(), std::greater<>());
    mcc = std::sqrt(std::max(0.0, sq[1]));
  }

  return {asm_, contrast, correlation, variance, idm, sum_avg, sum_var, sum_ent, entropy, diff_var, diff_ent, imc1, imc2, mcc};
}

std::array<double, 28> haralick_features(const RegionPatch& patch) {
  const GrayImage& img = patch.image;
  const BinaryMask& mask = patch.mask;
  if (img.empty() || img.width() != mask.width() || img.height() != mask.height()) {
    throw Error(ErrorCode::DimensionMismatch, "patch image and mask differ in size");
  }
  if (img.width() < 2 || img.height() < 2) throw Error(ErrorCode::PatchTooSmall, "Haralick needs at least 2x2");
  std::vector<std::array<double, 14>> per_dir;
  Glcm p;
  for (const auto& off : kGlcmOffsets) {
    if (glcm(img, mask, off, p)) per_dir.push_back(haralick_statistics(p));
  }
  if (per_dir.empty()) throw Error(ErrorCode::NoValidPairs, "no masked pixel pair in any direction");
  std::array<double, 28> out{};
  for (std::size_t f = 0; f < 14; ++f) {
    double sum = 0.0, lo = per_dir[0][f], hi = per_dir[0][f];
    for (const auto& s : per_dir) {
      sum += s[f];
      lo = std::min(lo, s[f]);
      hi = std::max(hi, s[f]);
    }
    out[f] = sum / static_cast<double>(per_dir.size());
    out[14 + f] = hi - lo;
  }
  return out;
}

}  // namespace algaeid
