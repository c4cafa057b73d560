#include <algorithm>
#include <array>
#include <climits>
#include <cstdlib>

#include "algaeid/geometry.hpp"
#include "algaeid/segment.hpp"

namespace algaeid {

namespace {

// Neighbor directions, counterclockwise as displayed: E, NE, N, NW, W, SW, S, SE.
constexpr std::array<int, 8> kDx{1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy{0, -1, -1, -1, 0, 1, 1, 1};

int direction_of(int dx, int dy) {
  for (int d = 0; d < 8; ++d) {
    if (kDx[static_cast<std::size_t>(d)] == dx && kDy[static_cast<std::size_t>(d)] == dy) return d;
  }
  return -1;
}

// Padded label plane used by the border follower: 0 background, 1 unvisited
// foreground, +/-NBD for visited border pixels.
class Plane {
 public:
  Plane(const BinaryMask& mask) : w_(mask.width() + 2), h_(mask.height() + 2), v_(static_cast<std::size_t>(w_ * h_), 0) {
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) at(x + 1, y + 1) = mask(x, y) ? 1 : 0;
    }
  }
  int& at(int x, int y) { return v_[static_cast<std::size_t>(y * w_ + x)]; }
  int width() const { return w_; }
  int height() const { return h_; }

 private:
  int w_, h_;
  std::vector<int> v_;
};

struct BorderInfo {
  bool is_hole;
  int contour;  // index in forest, -1 for the image frame
};

std::vector<Point> follow_border(Plane& f, int x, int y, int x2, int y2, int nbd) {
  std::vector<Point> pts;
  // (3.1) clockwise search around (x, y) starting at (x2, y2).
  const int start_dir = direction_of(x2 - x, y2 - y);
  int found = -1;
  for (int k = 0; k < 8; ++k) {
    const int d = ((start_dir - k) % 8 + 8) % 8;
    if (f.at(x + kDx[static_cast<std::size_t>(d)], y + kDy[static_cast<std::size_t>(d)]) != 0) {
      found = d;
      break;
    }
  }
  if (found < 0) {
    f.at(x, y) = -nbd;
    pts.push_back({x - 1, y - 1});
    return pts;
  }
  const int x1 = x + kDx[static_cast<std::size_t>(found)];
  const int y1 = y + kDy[static_cast<std::size_t>(found)];
  int px = x1, py = y1;  // previous pixel (i2, j2)
  int cx = x, cy = y;    // current pixel (i3, j3)
  for (;;) {
    pts.push_back({cx - 1, cy - 1});
    // (3.3) counterclockwise search starting after the previous pixel.
    const int back = direction_of(px - cx, py - cy);
    bool east_examined_zero = false;
    int nx = cx, ny = cy;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back + k) % 8;
      const int tx = cx + kDx[static_cast<std::size_t>(d)];
      const int ty = cy + kDy[static_cast<std::size_t>(d)];
      if (f.at(tx, ty) != 0) {
        nx = tx;
        ny = ty;
        break;
      }
      if (d == 0) east_examined_zero = true;
    }
    // (3.4)
    if (east_examined_zero) {
      f.at(cx, cy) = -nbd;
    } else if (f.at(cx, cy) == 1) {
      f.at(cx, cy) = nbd;
    }
    // (3.5)
    if (nx == x && ny == y && cx == x1 && cy == y1) break;
    px = cx;
    py = cy;
    cx = nx;
    cy = ny;
  }
  return pts;
}

}  // namespace

ContourForest find_contours(const BinaryMask& mask) {
  ContourForest forest;
  Plane f(mask);
  // Border number 1 is the frame, a hole-type border.
  std::vector<BorderInfo> borders{{true, -1}, {true, -1}};
  int nbd = 1;
  for (int y = 1; y < f.height() - 1; ++y) {
    int lnbd = 1;
    for (int x = 1; x < f.width() - 1; ++x) {
      const int v = f.at(x, y);
      if (v == 0) continue;
      bool start = false;
      bool hole = false;
      int x2 = 0;
      if (v == 1 && f.at(x - 1, y) == 0) {
        start = true;
        x2 = x - 1;
      } else if (v >= 1 && f.at(x + 1, y) == 0) {
        start = true;
        hole = true;
        x2 = x + 1;
        if (v > 1) lnbd = v;
      }
      if (start) {
        ++nbd;
        const BorderInfo& prev = borders[static_cast<std::size_t>(lnbd)];
        int parent_contour;
        if (!hole) {
          parent_contour = prev.is_hole ? prev.contour
                                        : (prev.contour >= 0 ? forest.contours[static_cast<std::size_t>(prev.contour)]
                                                                   .parent.value_or(-1)
                                                             : -1);
        } else {
          parent_contour = prev.is_hole ? (prev.contour >= 0 ? forest.contours[static_cast<std::size_t>(prev.contour)]
                                                                   .parent.value_or(-1)
                                                             : -1)
                                        : prev.contour;
        }
        Contour c;
        c.is_hole = hole;
        c.points = follow_border(f, x, y, x2, y, nbd);
        const int id = static_cast<int>(forest.contours.size());
        if (parent_contour >= 0) {
          c.parent = parent_contour;
          forest.contours[static_cast<std::size_t>(parent_contour)].children.push_back(id);
        }
        // Normalize orientation: outer counterclockwise, holes clockwise.
        const double a = signed_area(std::span<const Point>(c.points));
        if ((!hole && a < 0.0) || (hole && a > 0.0)) std::reverse(c.points.begin(), c.points.end());
        forest.contours.push_back(std::move(c));
        borders.push_back({hole, id});
      }
      const int after = f.at(x, y);
      if (after != 1) lnbd = std::abs(after);
    }
  }
  return forest;
}

namespace {

struct Box {
  int x0, y0, x1, y1;  // inclusive
};

Box bounds_of(const std::vector<Point>& pts) {
  Box b{INT_MAX, INT_MAX, INT_MIN, INT_MIN};
  for (const auto& p : pts) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

// Fill of an outer contour in a local window whose origin is (ox, oy).
BinaryMask fill_local(const Contour& c, int ox, int oy, int w, int h) {
  std::vector<PointF> local;
  local.reserve(c.points.size());
  for (const auto& p : c.points) local.push_back({static_cast<double>(p.x - ox), static_cast<double>(p.y - oy)});
  return fill_polygon(local, w, h);
}

}  // namespace

BinaryMask filled_region(const Contour& c, int width, int height) { return fill_local(c, 0, 0, width, height); }

BinaryMask hole_interior(const Contour& c, int width, int height) {
  const auto pts = to_float(c.points);
  BinaryMask inside = fill_interior(pts, width, height);
  BinaryMask outline(width, height);
  draw_outline(pts, outline);
  auto a = inside.pixels();
  auto b = outline.pixels();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] && !b[i];
  return inside;
}

CandidateResult select_candidates(const ContourForest& forest, const CandidateFilter& filter, const GrayImage& src,
                                  const std::string& source_id) {
  CandidateResult out;
  int region_index = 0;
  for (int id = 0; id < static_cast<int>(forest.contours.size()); ++id) {
    const Contour& c = forest.contours[static_cast<std::size_t>(id)];
    if (c.parent || c.is_hole) continue;
    if (c.points.size() < 3) {
      ++out.rejected["degenerate"];
      continue;
    }
    const Box b = bounds_of(c.points);
    const int x0 = std::max(0, b.x0 - kPatchMargin);
    const int y0 = std::max(0, b.y0 - kPatchMargin);
    const int x1 = std::min(src.width() - 1, b.x1 + kPatchMargin);
    const int y1 = std::min(src.height() - 1, b.y1 + kPatchMargin);
    const int w = x1 - x0 + 1;
    const int h = y1 - y0 + 1;
    BinaryMask mask = fill_local(c, x0, y0, w, h);
    const double area = static_cast<double>(foreground_count(mask));
    if (area < filter.min_area || area > filter.max_area) {
      ++out.rejected["size"];
      continue;
    }
    if (filter.require_child && c.children.empty()) {
      ++out.rejected["no_child"];
      continue;
    }
    RegionPatch p;
    p.image = GrayImage(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) p.image(x, y) = src(x0 + x, y0 + y);
    }
    p.mask = std::move(mask);
    p.offset = {x0, y0};
    p.source_size = {w, h};
    p.source_id = source_id + "#" + std::to_string(region_index++);
    out.patches.push_back(std::move(p));
    out.contour_ids.push_back(id);
  }
  return out;
}

}  // namespace algaeid
