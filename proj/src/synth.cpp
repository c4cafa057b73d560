#include "algaeid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "algaeid/error.hpp"
#include "algaeid/geometry.hpp"
#include "algaeid/rng.hpp"

namespace algaeid {

namespace {

struct Cell {
  double cx, cy;  // frame coordinates
  double a, b;    // semi-axes along the cell's local v (long) and u (short)
};

void validate(const SynthConfig& c) {
  auto bad = [](const char* what) { throw Error(ErrorCode::ConfigOutOfRange, what); };
  if (c.width < 16 || c.height < 16) bad("frame must be at least 16x16");
  if (!class_from_cells(cells(c.cls))) bad("cell class must be 1, 2, 4 or 8");
  if (!(c.short_axis_min > 0.0) || c.short_axis_max < c.short_axis_min) bad("short axis range invalid");
  if (!(c.long_axis_min > 0.0) || c.long_axis_max < c.long_axis_min) bad("long axis range invalid");
  for (double v : {c.body, c.wall, c.background}) {
    if (!(v >= 0.0 && v <= 255.0)) bad("intensities must lie in [0, 255]");
  }
  if (!(c.body < c.background)) bad("cell body must be darker than the background");
  if (c.noise_sigma < 0.0 || c.texture < 0.0 || !(c.wall_width > 0.0) || c.max_offset < 0.0) bad("negative amplitude");
}

// Value noise on a coarse lattice, bilinearly interpolated; roughly in [-1, 1].
class Texture {
 public:
  Texture(int w, int h, int step, Rng& rng) : step_(step), nx_(w / step + 2), ny_(h / step + 2) {
    v_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (auto& x : v_) x = rng.uniform(-1.0, 1.0);
  }
  double at(double x, double y) const {
    const double fx = std::clamp(x / step_, 0.0, nx_ - 1.001);
    const double fy = std::clamp(y / step_, 0.0, ny_ - 1.001);
    const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
    const double tx = fx - ix, ty = fy - iy;
    auto g = [&](int i, int j) { return v_[static_cast<std::size_t>(j * nx_ + i)]; };
    return (1 - ty) * ((1 - tx) * g(ix, iy) + tx * g(ix + 1, iy)) + ty * ((1 - tx) * g(ix, iy + 1) + tx * g(ix + 1, iy + 1));
  }

 private:
  int step_, nx_, ny_;
  std::vector<double> v_;
};

}  // namespace

SynthFrame generate_coenobium(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const double a = rng.uniform(cfg.long_axis_min, cfg.long_axis_max);
  const double b = rng.uniform(cfg.short_axis_min, cfg.short_axis_max);
  const double angle = cfg.random_rotation ? rng.uniform(0.0, 180.0) : 0.0;
  const double ox = rng.uniform(-cfg.max_offset, cfg.max_offset);
  const double oy = rng.uniform(-cfg.max_offset, cfg.max_offset);

  // Layout in colony coordinates: columns step along u (cells side by side), rows along v.
  int cols = 1, rows = 1;
  switch (cfg.cls) {
    case LabelClass::One: break;
    case LabelClass::Two: cols = 2; break;
    case LabelClass::Four:
      if (rng.uniform() < 0.5) cols = 4;
      else cols = rows = 2;
      break;
    case LabelClass::Eight: cols = 4; rows = 2; break;
  }
  // Neighbors overlap slightly so the colony is one connected piece.
  const double du = 2.0 * b * 0.9;
  const double dv = 2.0 * a * 0.92;
  double s, c;
  sincos_deg(angle, s, c);
  const double fcx = 0.5 * (cfg.width - 1) + ox;
  const double fcy = 0.5 * (cfg.height - 1) + oy;
  std::vector<Cell> cells_;
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < cols; ++k) {
      const double u = (k - 0.5 * (cols - 1)) * du;
      const double v = (r - 0.5 * (rows - 1)) * dv;
      // Counterclockwise as displayed: y grows downward.
      cells_.push_back({fcx + c * u + s * v, fcy - s * u + c * v, a, b});
    }
  }

  Texture tex(cfg.width, cfg.height, 4, rng);
  SynthFrame f;
  f.label = cfg.cls;
  f.image = GrayImage(cfg.width, cfg.height);
  f.truth = BinaryMask(cfg.width, cfg.height);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      bool inside = false;
      bool wall = false;
      for (const Cell& cell : cells_) {
        const double dx = x - cell.cx;
        const double dy = y - cell.cy;
        const double lu = c * dx - s * dy;  // inverse of the placement rotation
        const double lv = s * dx + c * dy;
        const double r = std::hypot(lu / cell.b, lv / cell.a);
        if (r > 1.0) continue;
        inside = true;
        // Distance to the ellipse boundary, first-order.
        const double gu = lu / (cell.b * cell.b), gv = lv / (cell.a * cell.a);
        const double grad = r > 1e-9 ? std::hypot(gu, gv) / r : 1.0 / std::min(cell.a, cell.b);
        const double dist = (1.0 - r) / grad;
        if (dist < cfg.wall_width) wall = true;
      }
      double v = cfg.background;
      if (inside) {
        f.truth(x, y) = 1;
        v = wall ? cfg.wall : cfg.body + cfg.texture * tex.at(x, y);
      } else if (cfg.grid_lines && (x % 32 == 0 || y % 32 == 0)) {
        v = cfg.background - 20.0;
      }
      v += cfg.noise_sigma * rng.normal();
      f.image(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return f;
}

std::vector<SynthFrame> generate_frames(int n_per_class, const SynthConfig& base, std::uint64_t seed) {
  if (n_per_class < 1) throw Error(ErrorCode::ConfigOutOfRange, "need at least one frame per class");
  const std::size_t n = 4 * static_cast<std::size_t>(n_per_class);
  std::vector<SynthFrame> frames(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    SynthConfig cfg = base;
    cfg.cls = kAllClasses[static_cast<std::size_t>(i) % kAllClasses.size()];
    cfg.seed = derive_seed(seed, "synth", static_cast<std::uint64_t>(i));
    try {
      frames[static_cast<std::size_t>(i)] = generate_coenobium(cfg);
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::ConfigOutOfRange, e);
  }
  return frames;
}

std::vector<ManifestRow> write_dataset(const std::vector<SynthFrame>& frames, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.pgm", i);
    const auto img = dir / name;
    save_pgm(img, frames[i].image);
    save_mask(truth_path_for(img), frames[i].truth);
    rows.push_back({img, frames[i].label});
  }
  write_manifest(dir / "manifest.csv", rows);
  return rows;
}

std::filesystem::path truth_path_for(const std::filesystem::path& image_path) {
  const std::string name = image_path.filename().string();
  if (name.rfind("img_", 0) != 0) return {};
  return image_path.parent_path() / ("gt_" + name.substr(4));
}

}  // namespace algaeid
