#include <cmath>

#include "algaeid/geometry.hpp"
#include "algaeid/segment.hpp"

namespace algaeid {

namespace {

std::vector<PointF> mask_outline(const BinaryMask& mask) {
  const ContourForest forest = find_contours(mask);
  const Contour* outer = nullptr;
  double best = -1.0;
  for (const auto& c : forest.contours) {
    if (c.parent || c.is_hole) continue;
    const double a = std::abs(signed_area(std::span<const Point>(c.points)));
    if (a > best) {
      best = a;
      outer = &c;
    }
  }
  return outer ? to_float(outer->points) : std::vector<PointF>{};
}

}  // namespace

SegmentResult segment_image(const GrayImage& img, const SegmentConfig& cfg, const std::string& source_id) {
  SegmentResult result;
  const GrayImage equalized = cfg.use_clahe ? clahe(img, cfg.clahe) : img;
  const GrayImage poster = posterize(equalized, cfg.levels);
  try {
    result.threshold = otsu_threshold(poster);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllSameIntensity) throw;
    return result;  // nothing to separate
  }
  const BinaryMask fg = binarize(poster, result.threshold);
  const ContourForest forest = find_contours(fg);
  CandidateResult cands = select_candidates(forest, cfg.filter, img, source_id);
  result.drops = cands.rejected;

  for (auto& patch : cands.patches) {
    try {
      RegionPatch p = std::move(patch);
      if (cfg.align) {
        double angle = 0.0;
        try {
          angle = estimate_orientation(p).angle_deg;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateSpectrum && e.code() != ErrorCode::PatchTooSmall) throw;
          p.low_confidence_orientation = true;
        }
        if (angle != 0.0) p = rotate_patch(p, angle);
      }
      if (foreground_count(p.mask) == 0) {
        ++result.drops["empty_mask"];
        continue;
      }
      if (cfg.refine) {
        const SnakeResult snake = snake_refine(p, cfg.snake);
        // The snake settles on the edge between pixels, so only pixel centers
        // inside it belong to the alga.
        p.outline = snake.points;
        p.mask = fill_interior(p.outline, p.image.width(), p.image.height());
        if (foreground_count(p.mask) == 0) throw Error(ErrorCode::ContourCollapsed, "refined outline covers no pixel");
      }
      result.patches.push_back(std::move(p));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ContourCollapsed) {
        ++result.drops["collapsed"];
      } else {
        ++result.drops[std::string(to_string(e.code()))];
      }
    }
  }
  return result;
}

LabelMap patches_to_label_map(const std::vector<RegionPatch>& patches, int width, int height) {
  LabelMap labels(width, height, 0);
  for (std::size_t k = 0; k < patches.size(); ++k) {
    const RegionPatch& p = patches[k];
    std::vector<PointF> src;
    const bool refined = !p.outline.empty();
    for (const auto& q : refined ? p.outline : mask_outline(p.mask)) src.push_back(p.to_source(q));
    // A mask outline runs through boundary pixel centers; a refined one between pixels.
    const BinaryMask m = refined ? fill_interior(src, width, height) : fill_polygon(src, width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (m(x, y) && labels(x, y) == 0) labels(x, y) = static_cast<std::int32_t>(k + 1);
      }
    }
  }
  return labels;
}

}  // namespace algaeid
