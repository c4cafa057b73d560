#include <algorithm>
#include <cmath>

#include "algaeid/geometry.hpp"
#include "algaeid/segment.hpp"

namespace algaeid {

namespace {

RealImage gaussian_blur(const RealImage& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  RealImage tmp(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * img.clamped(x + i, y);
      tmp(x, y) = acc;
    }
  }
  RealImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * tmp.clamped(x, y + i);
      out(x, y) = acc;
    }
  }
  return out;
}

struct EnergyModel {
  const RealImage& field;
  double alpha_n;  // alpha / d0^2
  double beta_n;   // beta / d0^2
  double external;
  int n;
};

double dist(const PointF& a, const PointF& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double curv2(const PointF& a, const PointF& b, const PointF& c) {
  const double x = a.x - 2.0 * b.x + c.x;
  const double y = a.y - 2.0 * b.y + c.y;
  return x * x + y * y;
}

double total_energy(const EnergyModel& m, const std::vector<PointF>& v) {
  const int n = m.n;
  double s1 = 0.0, s2 = 0.0, curv = 0.0, ext = 0.0;
  for (int i = 0; i < n; ++i) {
    const PointF& prev = v[static_cast<std::size_t>((i + n - 1) % n)];
    const PointF& cur = v[static_cast<std::size_t>(i)];
    const PointF& next = v[static_cast<std::size_t>((i + 1) % n)];
    const double d = dist(prev, cur);
    s1 += d;
    s2 += d * d;
    curv += curv2(prev, cur, next);
    ext += sample_bilinear(m.field, cur.x, cur.y);
  }
  return m.alpha_n * (s2 - s1 * s1 / n) + m.beta_n * curv - m.external * ext;
}

}  // namespace

RealImage external_field(const RealImage& img, double sigma) {
  const RealImage smooth = gaussian_blur(img, sigma);
  RealImage g(img.width(), img.height());
  double peak = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double gx = 0.5 * (smooth.clamped(x + 1, y) - smooth.clamped(x - 1, y));
      const double gy = 0.5 * (smooth.clamped(x, y + 1) - smooth.clamped(x, y - 1));
      const double v = gx * gx + gy * gy;
      g(x, y) = v;
      peak = std::max(peak, v);
    }
  }
  // At peak 1 a one-pixel kink costs more internal energy than any edge can pay
  // back and the contour never leaves its start; peak 20 lets it travel ~3 px.
  if (peak > 0.0) {
    for (auto& v : g.pixels()) v *= kExternalPeak / peak;
  }
  return g;
}

SnakeResult snake_refine(const RealImage& img, std::vector<PointF> init, const SnakeParams& params) {
  if (params.max_iters < 1 || !(params.converge_eps > 0.0) || !(params.gamma_step > 0.0) || params.n_points < 3) {
    throw Error(ErrorCode::InvalidArgument, "invalid snake parameters");
  }
  const int n = params.n_points;
  std::vector<PointF> v = resample_closed(init, n);
  if (v.size() != static_cast<std::size_t>(n)) throw Error(ErrorCode::ContourCollapsed, "empty initial contour");
  double perimeter = 0.0;
  for (int i = 0; i < n; ++i) perimeter += dist(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>((i + 1) % n)]);
  const double d0 = perimeter / n;
  if (!(d0 > 0.0)) throw Error(ErrorCode::ContourCollapsed, "initial contour has zero length");

  const RealImage field = external_field(img, params.smoothing_sigma);
  const EnergyModel model{field, params.alpha / (d0 * d0), params.beta / (d0 * d0), params.external, n};

  SnakeResult result;
  double energy = total_energy(model, v);
  result.energy.push_back(energy);

  // Running sums of neighbor spacings for the continuity term.
  std::vector<double> d(static_cast<std::size_t>(n));  // d[i] = |v_i - v_{i-1}|
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    d[static_cast<std::size_t>(i)] = dist(v[static_cast<std::size_t>((i + n - 1) % n)], v[static_cast<std::size_t>(i)]);
    s1 += d[static_cast<std::size_t>(i)];
    s2 += d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
  }

  const double step = params.gamma_step;
  const double xmax = img.width() - 1;
  const double ymax = img.height() - 1;
  const double accept_margin = 1e-12 * (1.0 + std::abs(energy));
  auto at = [&](int i) -> PointF& { return v[static_cast<std::size_t>(((i % n) + n) % n)]; };

  for (int iter = 0; iter < params.max_iters; ++iter) {
    int moved = 0;
    for (int i = 0; i < n; ++i) {
      const PointF cur = at(i);
      const PointF& pm2 = at(i - 2);
      const PointF& pm1 = at(i - 1);
      const PointF& pp1 = at(i + 1);
      const PointF& pp2 = at(i + 2);
      const std::size_t ia = static_cast<std::size_t>(i);
      const std::size_t ib = static_cast<std::size_t>((i + 1) % n);
      const double da = d[ia];
      const double db = d[ib];
      const double base_curv = curv2(pm2, pm1, cur) + curv2(pm1, cur, pp1) + curv2(cur, pp1, pp2);
      const double base_ext = sample_bilinear(field, cur.x, cur.y);
      const double base_cont = s2 - s1 * s1 / n;

      double best_delta = 0.0;
      PointF best = cur;
      double best_da = da, best_db = db;
      for (int oy = -1; oy <= 1; ++oy) {
        for (int ox = -1; ox <= 1; ++ox) {
          if (ox == 0 && oy == 0) continue;
          const PointF cand{cur.x + ox * step, cur.y + oy * step};
          if (cand.x < 0.0 || cand.y < 0.0 || cand.x > xmax || cand.y > ymax) continue;
          const double na = dist(pm1, cand);
          const double nb = dist(cand, pp1);
          const double t1 = s1 - da - db + na + nb;
          const double t2 = s2 - da * da - db * db + na * na + nb * nb;
          const double cont = t2 - t1 * t1 / n;
          const double curv = curv2(pm2, pm1, cand) + curv2(pm1, cand, pp1) + curv2(cand, pp1, pp2);
          const double ext = sample_bilinear(field, cand.x, cand.y);
          const double delta = model.alpha_n * (cont - base_cont) + model.beta_n * (curv - base_curv) -
                               model.external * (ext - base_ext);
          if (delta < best_delta - accept_margin) {
            best_delta = delta;
            best = cand;
            best_da = na;
            best_db = nb;
          }
        }
      }
      if (!(best == cur)) {
        s1 += best_da + best_db - da - db;
        s2 += best_da * best_da + best_db * best_db - da * da - db * db;
        d[ia] = best_da;
        d[ib] = best_db;
        at(i) = best;
        ++moved;
      }
    }
    ++result.iterations;
    // Recompute from scratch so accumulated rounding never leaks into the record.
    energy = total_energy(model, v);
    result.energy.push_back(energy);
    // Refresh running sums as well.
    s1 = s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      d[static_cast<std::size_t>(i)] = dist(at(i - 1), at(i));
      s1 += d[static_cast<std::size_t>(i)];
      s2 += d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
    }
    if (moved < params.converge_eps * n) break;
  }

  if (std::abs(signed_area(std::span<const PointF>(v))) < 4.0) {
    throw Error(ErrorCode::ContourCollapsed, "refined contour encloses less than 4 px");
  }
  result.points = v;
  result.contour.points.reserve(v.size());
  for (const auto& p : v) {
    const Point q{static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
    if (result.contour.points.empty() || !(result.contour.points.back() == q)) result.contour.points.push_back(q);
  }
  while (result.contour.points.size() > 1 && result.contour.points.front() == result.contour.points.back()) {
    result.contour.points.pop_back();
  }
  return result;
}

SnakeResult snake_refine(const RegionPatch& patch, const SnakeParams& params) {
  const ContourForest forest = find_contours(patch.mask);
  const Contour* outer = nullptr;
  double best_area = -1.0;
  for (const auto& c : forest.contours) {
    if (c.parent || c.is_hole) continue;
    const double a = std::abs(signed_area(std::span<const Point>(c.points)));
    if (a > best_area) {
      best_area = a;
      outer = &c;
    }
  }
  if (!outer || outer->points.size() < 3) throw Error(ErrorCode::ContourCollapsed, "patch mask has no usable boundary");
  return snake_refine(to_real(patch.image), to_float(outer->points), params);
}

}  // namespace algaeid
