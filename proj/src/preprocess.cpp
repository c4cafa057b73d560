#include "algaeid/preprocess.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>

namespace algaeid {

namespace {

std::vector<int> tile_bounds(int extent, int tiles) {
  std::vector<int> b(static_cast<std::size_t>(tiles) + 1);
  for (int i = 0; i <= tiles; ++i) {
    b[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long long>(i) * extent / tiles);
  }
  return b;
}

// Tile index pair and weight of the upper tile for bilinear blending along one axis.
struct AxisBlend {
  int lo;
  int hi;
  double w_hi;
};

std::vector<AxisBlend> axis_blend(const std::vector<int>& bounds, int extent) {
  const int tiles = static_cast<int>(bounds.size()) - 1;
  std::vector<double> centers(static_cast<std::size_t>(tiles));
  for (int i = 0; i < tiles; ++i) {
    centers[static_cast<std::size_t>(i)] =
        0.5 * (bounds[static_cast<std::size_t>(i)] + bounds[static_cast<std::size_t>(i) + 1] - 1);
  }
  std::vector<AxisBlend> out(static_cast<std::size_t>(extent));
  for (int p = 0; p < extent; ++p) {
    AxisBlend a{0, 0, 0.0};
    if (p <= centers.front()) {
      a = {0, 0, 0.0};
    } else if (p >= centers.back()) {
      a = {tiles - 1, tiles - 1, 0.0};
    } else {
      int i = 0;
      while (centers[static_cast<std::size_t>(i) + 1] < p) ++i;
      const double c0 = centers[static_cast<std::size_t>(i)];
      const double c1 = centers[static_cast<std::size_t>(i) + 1];
      a = {i, i + 1, (p - c0) / (c1 - c0)};
    }
    out[static_cast<std::size_t>(p)] = a;
  }
  return out;
}

inline std::uint8_t blend_pixel(const ClaheTables& t, const AxisBlend& bx, const AxisBlend& by, std::uint8_t v) {
  const auto& m00 = t.maps[static_cast<std::size_t>(by.lo * t.tiles_x + bx.lo)];
  const auto& m01 = t.maps[static_cast<std::size_t>(by.lo * t.tiles_x + bx.hi)];
  const auto& m10 = t.maps[static_cast<std::size_t>(by.hi * t.tiles_x + bx.lo)];
  const auto& m11 = t.maps[static_cast<std::size_t>(by.hi * t.tiles_x + bx.hi)];
  const double top = (1.0 - bx.w_hi) * m00[v] + bx.w_hi * m01[v];
  const double bottom = (1.0 - bx.w_hi) * m10[v] + bx.w_hi * m11[v];
  const double r = (1.0 - by.w_hi) * top + by.w_hi * bottom;
  return static_cast<std::uint8_t>(std::clamp(std::floor(r + 0.5), 0.0, 255.0));
}

void check_clahe(const GrayImage& img, const ClaheConfig& cfg) {
  if (cfg.tiles_x < 1 || cfg.tiles_y < 1 || !(cfg.clip_limit > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "CLAHE needs tiles >= 1 and clip_limit > 0");
  }
  if (img.width() < cfg.tiles_x || img.height() < cfg.tiles_y) {
    throw Error(ErrorCode::ImageSmallerThanTile, "image " + std::to_string(img.width()) + "x" +
                                                     std::to_string(img.height()) + " is smaller than the tiling");
  }
}

}  // namespace

std::array<std::uint8_t, 256> equalization_map(const std::array<std::uint32_t, 256>& hist, double clip_limit) {
  double total = 0.0;
  for (auto h : hist) total += h;
  const double clip = clip_limit * total / 256.0;
  std::array<double, 256> clipped{};
  double excess = 0.0;
  for (int v = 0; v < 256; ++v) {
    const double h = hist[static_cast<std::size_t>(v)];
    if (h > clip) {
      excess += h - clip;
      clipped[static_cast<std::size_t>(v)] = clip;
    } else {
      clipped[static_cast<std::size_t>(v)] = h;
    }
  }
  const double residue = excess / 256.0;
  std::array<double, 256> cdf{};
  double acc = 0.0;
  for (int v = 0; v < 256; ++v) {
    acc += clipped[static_cast<std::size_t>(v)] + residue;
    cdf[static_cast<std::size_t>(v)] = acc;
  }
  // cdf_min is the first nonzero cumulative value.
  double cdf_min = 0.0;
  for (double c : cdf) {
    if (c > 0.0) {
      cdf_min = c;
      break;
    }
  }
  std::array<std::uint8_t, 256> map{};
  const double denom = acc - cdf_min;
  for (int v = 0; v < 256; ++v) {
    if (denom <= 0.0) {
      map[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(v);
      continue;
    }
    const double r = 255.0 * std::max(0.0, cdf[static_cast<std::size_t>(v)] - cdf_min) / denom;
    map[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(std::clamp(std::floor(r + 0.5), 0.0, 255.0));
  }
  return map;
}

ClaheTables clahe_tables(const GrayImage& img, const ClaheConfig& cfg) {
  check_clahe(img, cfg);
  ClaheTables t;
  t.tiles_x = cfg.tiles_x;
  t.tiles_y = cfg.tiles_y;
  t.x_bounds = tile_bounds(img.width(), cfg.tiles_x);
  t.y_bounds = tile_bounds(img.height(), cfg.tiles_y);
  t.maps.resize(static_cast<std::size_t>(cfg.tiles_x * cfg.tiles_y));
  for (int ty = 0; ty < cfg.tiles_y; ++ty) {
    for (int tx = 0; tx < cfg.tiles_x; ++tx) {
      std::array<std::uint32_t, 256> hist{};
      for (int y = t.y_bounds[static_cast<std::size_t>(ty)]; y < t.y_bounds[static_cast<std::size_t>(ty) + 1]; ++y) {
        for (int x = t.x_bounds[static_cast<std::size_t>(tx)]; x < t.x_bounds[static_cast<std::size_t>(tx) + 1];
             ++x) {
          ++hist[img(x, y)];
        }
      }
      t.maps[static_cast<std::size_t>(ty * cfg.tiles_x + tx)] = equalization_map(hist, cfg.clip_limit);
    }
  }
  return t;
}

GrayImage clahe(const GrayImage& img, const ClaheConfig& cfg) {
  const ClaheTables t = clahe_tables(img, cfg);
  const auto bx = axis_blend(t.x_bounds, img.width());
  const auto by = axis_blend(t.y_bounds, img.height());
  GrayImage out(img.width(), img.height());
  const int h = img.height();
  const int w = img.width();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = blend_pixel(t, bx[static_cast<std::size_t>(x)], by[static_cast<std::size_t>(y)], img(x, y));
    }
  }
  return out;
}

GrayImage clahe_serial(const GrayImage& img, const ClaheConfig& cfg) {
  const ClaheTables t = clahe_tables(img, cfg);
  const auto bx = axis_blend(t.x_bounds, img.width());
  const auto by = axis_blend(t.y_bounds, img.height());
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out(x, y) = blend_pixel(t, bx[static_cast<std::size_t>(x)], by[static_cast<std::size_t>(y)], img(x, y));
    }
  }
  return out;
}

std::uint8_t posterize_value(std::uint8_t v, QuantizationLevels q) {
  // round(round(v * n / 255) * 255 / n), half away from zero, in exact integer form.
  const int n = q.steps;
  const int level = (2 * v * n + 255) / 510;
  return static_cast<std::uint8_t>((2 * level * 255 + n) / (2 * n));
}

GrayImage posterize(const GrayImage& img, QuantizationLevels q) {
  if (q.steps < 1 || q.steps > 255) throw Error(ErrorCode::InvalidArgument, "quantization steps must be in [1, 255]");
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) lut[static_cast<std::size_t>(v)] = posterize_value(static_cast<std::uint8_t>(v), q);
  GrayImage out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return out;
}

std::array<std::uint32_t, 256> histogram(const GrayImage& img) {
  std::array<std::uint32_t, 256> h{};
  for (auto v : img.pixels()) ++h[v];
  return h;
}

int otsu_threshold(const GrayImage& img) {
  using boost::multiprecision::int256_t;
  const auto hist = histogram(img);
  const int distinct = static_cast<int>(std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; }));
  if (distinct < 2) throw Error(ErrorCode::AllSameIntensity, "Otsu needs at least two distinct intensities");

  std::int64_t total_n = 0;
  std::int64_t total_s = 0;
  for (int v = 0; v < 256; ++v) {
    total_n += hist[static_cast<std::size_t>(v)];
    total_s += static_cast<std::int64_t>(v) * hist[static_cast<std::size_t>(v)];
  }
  // sigma_B^2(t) = (N*S0 - N0*S)^2 / (N^2 * N0 * N1); compare numerator/denominator pairs exactly.
  int best_t = -1;
  int256_t best_num = 0;
  int256_t best_den = 1;
  std::int64_t n0 = 0;
  std::int64_t s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += hist[static_cast<std::size_t>(t)];
    s0 += static_cast<std::int64_t>(t) * hist[static_cast<std::size_t>(t)];
    const std::int64_t n1 = total_n - n0;
    int256_t num = 0;
    int256_t den = 1;
    if (n0 > 0 && n1 > 0) {
      const int256_t d = int256_t(total_n) * s0 - int256_t(n0) * total_s;
      num = d * d;
      den = int256_t(n0) * n1;
    }
    if (best_t < 0 || num * best_den > best_num * den) {
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }
  return best_t;
}

BinaryMask binarize(const GrayImage& img, int t) {
  BinaryMask out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] <= t;
  return out;
}

}  // namespace algaeid
