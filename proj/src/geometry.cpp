#include "algaeid/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace algaeid {

namespace {

template <typename P>
double shoelace(std::span<const P> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    acc += static_cast<double>(a.x) * b.y - static_cast<double>(b.x) * a.y;
  }
  // Image rows grow downward; flip so counterclockwise-with-y-up is positive.
  return -0.5 * acc;
}

}  // namespace

double signed_area(std::span<const Point> poly) { return shoelace(poly); }
double signed_area(std::span<const PointF> poly) { return shoelace(poly); }

std::vector<PointF> to_float(std::span<const Point> poly) {
  std::vector<PointF> out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
  return out;
}

BinaryMask fill_interior(std::span<const PointF> poly, int width, int height) {
  BinaryMask mask(width, height);
  const std::size_t n = poly.size();
  if (n < 3) return mask;
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    xs.clear();
    const double yc = y;
    for (std::size_t i = 0; i < n; ++i) {
      const PointF& a = poly[i];
      const PointF& b = poly[(i + 1) % n];
      // Half-open rule keeps vertex crossings counted once.
      if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y)) {
        xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Centers strictly between the two crossings.
      int x0 = static_cast<int>(std::floor(xs[k])) + 1;
      int x1 = static_cast<int>(std::ceil(xs[k + 1])) - 1;
      x0 = std::max(x0, 0);
      x1 = std::min(x1, width - 1);
      for (int x = x0; x <= x1; ++x) mask(x, y) = 1;
    }
  }
  return mask;
}

void draw_outline(std::span<const PointF> poly, BinaryMask& mask) {
  const std::size_t n = poly.size();
  auto plot = [&](int x, int y) {
    if (mask.contains(x, y)) mask(x, y) = 1;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const PointF& a = poly[i];
    const PointF& b = poly[(i + 1) % n];
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy))));
    if (steps == 0) {
      plot(static_cast<int>(std::lround(a.x)), static_cast<int>(std::lround(a.y)));
      continue;
    }
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      plot(static_cast<int>(std::lround(a.x + t * dx)), static_cast<int>(std::lround(a.y + t * dy)));
    }
  }
}

BinaryMask fill_polygon(std::span<const PointF> poly, int width, int height) {
  BinaryMask mask = fill_interior(poly, width, height);
  draw_outline(poly, mask);
  return mask;
}

std::vector<PointF> resample_closed(std::span<const PointF> poly, int n) {
  std::vector<PointF> out;
  if (poly.empty() || n <= 0) return out;
  const std::size_t m = poly.size();
  std::vector<double> cum(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const PointF& a = poly[i];
    const PointF& b = poly[(i + 1) % m];
    cum[i + 1] = cum[i] + std::hypot(b.x - a.x, b.y - a.y);
  }
  const double perimeter = cum[m];
  out.reserve(static_cast<std::size_t>(n));
  if (perimeter <= 0.0) {
    out.assign(static_cast<std::size_t>(n), poly[0]);
    return out;
  }
  std::size_t seg = 0;
  for (int k = 0; k < n; ++k) {
    const double s = perimeter * k / n;
    while (seg + 1 < m && cum[seg + 1] <= s) ++seg;
    const PointF& a = poly[seg];
    const PointF& b = poly[(seg + 1) % m];
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
    out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
  }
  return out;
}

double sample_bilinear(const RealImage& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * img(x0, y0) + fx * img(x1, y0);
  const double bottom = (1.0 - fx) * img(x0, y1) + fx * img(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

std::uint8_t median_border(const GrayImage& img) {
  std::vector<std::uint8_t> ring;
  const int w = img.width();
  const int h = img.height();
  for (int x = 0; x < w; ++x) {
    ring.push_back(img(x, 0));
    if (h > 1) ring.push_back(img(x, h - 1));
  }
  for (int y = 1; y + 1 < h; ++y) {
    ring.push_back(img(0, y));
    if (w > 1) ring.push_back(img(w - 1, y));
  }
  std::nth_element(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(ring.size() / 2), ring.end());
  return ring[ring.size() / 2];
}

void sincos_deg(double deg, double& s, double& c) {
  const double q = deg / 90.0;
  if (q == std::floor(q)) {
    const long k = ((static_cast<long>(q) % 4) + 4) % 4;
    static constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
    static constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
    s = kSin[k];
    c = kCos[k];
    return;
  }
  const double r = deg * M_PI / 180.0;
  s = std::sin(r);
  c = std::cos(r);
}

double hausdorff(std::span<const PointF> a, std::span<const PointF> b) {
  auto directed = [](std::span<const PointF> p, std::span<const PointF> q) {
    double worst = 0.0;
    for (const auto& u : p) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& v : q) best = std::min(best, std::hypot(u.x - v.x, u.y - v.y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

PointF RegionPatch::to_source(PointF p) const {
  double s, c;
  sincos_deg(orientation_deg, s, c);
  const double cx_out = 0.5 * (image.width() - 1);
  const double cy_out = 0.5 * (image.height() - 1);
  const double cx_in = 0.5 * (source_size.x - 1);
  const double cy_in = 0.5 * (source_size.y - 1);
  const double dx = p.x - cx_out;
  const double dy = p.y - cy_out;
  // Angles are counterclockwise as displayed (y up), so the inverse map is R(-angle) in row/column space.
  return {c * dx + s * dy + cx_in + offset.x, -s * dx + c * dy + cy_in + offset.y};
}

}  // namespace algaeid
