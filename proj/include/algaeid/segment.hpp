#pragma once

#include <map>
#include <string>
#include <vector>

#include "algaeid/image.hpp"
#include "algaeid/preprocess.hpp"
#include "algaeid/types.hpp"

namespace algaeid {

// ---------------------------------------------------------------------------
// Contour hierarchy
// ---------------------------------------------------------------------------

/// Border following over 8-connected foreground. Contours are discovered in
/// row-major raster order. Outer borders are counterclockwise and hole borders
/// clockwise (as displayed, y up). Specks of one or two pixels yield contours
/// with fewer than three points; they stay in the forest so areas still add up.
ContourForest find_contours(const BinaryMask& mask);

/// Pixels covered by an outer contour, holes included.
BinaryMask filled_region(const Contour& c, int width, int height);
/// Background pixels strictly enclosed by a hole contour.
BinaryMask hole_interior(const Contour& c, int width, int height);

// ---------------------------------------------------------------------------
// Candidate selection
// ---------------------------------------------------------------------------

struct CandidateFilter {
  double min_area = 80.0;
  double max_area = 20000.0;
  bool require_child = true;
};

/// Fixed margin around each contour's bounding box when cropping.
inline constexpr int kPatchMargin = 4;

struct CandidateResult {
  std::vector<RegionPatch> patches;
  std::vector<int> contour_ids;  // forest index of each kept contour
  std::map<std::string, int> rejected;  // reason -> count ("size", "no_child", "degenerate")
};

CandidateResult select_candidates(const ContourForest& forest, const CandidateFilter& filter, const GrayImage& src,
                                  const std::string& source_id);

// ---------------------------------------------------------------------------
// Orientation
// ---------------------------------------------------------------------------

struct OrientationEstimate {
  double angle_deg = 0.0;  // dominant spatial direction, [-90, 90), counterclockwise as displayed
  int points_used = 0;
  double anisotropy = 0.0;  // 1 - minor/major eigenvalue ratio of the selected frequency cloud
};

/// Sobel magnitude, zero-padded DFT magnitude with DC removed, 99th-percentile
/// frequency points, least-squares line through the spectrum origin.
/// Throws DegenerateSpectrum when no dominant direction exists.
OrientationEstimate estimate_orientation(const RegionPatch& patch);
OrientationEstimate estimate_orientation(const GrayImage& img, const BinaryMask& mask);

/// Wraps any angle into [-90, 90).
double wrap_half_turn(double deg);

/// Rotates the content by -angle about the patch center, growing the canvas.
/// Gray values use bilinear interpolation with the median border value as fill;
/// the mask uses nearest neighbor. The returned patch's orientation_deg
/// accumulates the applied angle.
RegionPatch rotate_patch(const RegionPatch& patch, double angle_deg);

// ---------------------------------------------------------------------------
// Active contour
// ---------------------------------------------------------------------------

struct SnakeParams {
  double alpha = 0.4;      // continuity (spacing uniformity)
  double beta = 0.2;       // curvature
  double gamma_step = 1.0; // search window step, pixels
  int max_iters = 300;
  double converge_eps = 0.05;  // stop when fewer than eps * N points move in a sweep
  double external = 1.0;   // weight of the normalized squared gradient magnitude
  int n_points = 100;
  double smoothing_sigma = 1.0;  // Gaussian pre-smoothing for the external field
};

struct SnakeResult {
  Contour contour;                 // rounded points, closed
  std::vector<PointF> points;      // sub-pixel points
  std::vector<double> energy;      // total energy before the first sweep and after every sweep
  int iterations = 0;
};

/// Greedy active contour: every point in turn moves to the position in its
/// 3x3 window (step gamma_step) with the lowest total energy. The energy is
///   alpha * sum_i (|v_i - v_{i-1}| - mean spacing)^2 / d0^2
/// + beta  * sum_i |v_{i-1} - 2 v_i + v_{i+1}|^2 / d0^2
/// - external * sum_i G(v_i)
/// with d0 the initial mean spacing and G the squared gradient magnitude of the
/// smoothed patch scaled to [0, 1]. Each accepted move lowers the total, so the
/// recorded energy never increases.
SnakeResult snake_refine(const RegionPatch& patch, const SnakeParams& params);
SnakeResult snake_refine(const RealImage& img, std::vector<PointF> init, const SnakeParams& params);

inline constexpr double kExternalPeak = 20.0;

/// Squared gradient magnitude of the Gaussian-smoothed image scaled to peak kExternalPeak (all zero if flat).
RealImage external_field(const RealImage& img, double sigma);

// ---------------------------------------------------------------------------
// Whole-frame segmentation
// ---------------------------------------------------------------------------

struct SegmentConfig {
  ClaheConfig clahe;
  bool use_clahe = true;
  QuantizationLevels levels;
  CandidateFilter filter;
  bool align = true;
  bool refine = true;
  SnakeParams snake;
};

struct SegmentResult {
  std::vector<RegionPatch> patches;
  std::map<std::string, int> drops;  // reason -> count
  int threshold = -1;
};

SegmentResult segment_image(const GrayImage& img, const SegmentConfig& cfg, const std::string& source_id);

/// Refined patch outlines mapped back to the source frame, one label per patch (1-based).
LabelMap patches_to_label_map(const std::vector<RegionPatch>& patches, int width, int height);

}  // namespace algaeid
