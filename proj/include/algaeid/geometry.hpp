#pragma once

#include <span>
#include <vector>

#include "algaeid/image.hpp"
#include "algaeid/types.hpp"

namespace algaeid {

/// Shoelace area in Cartesian orientation: positive when counterclockwise with y pointing up.
double signed_area(std::span<const Point> poly);
double signed_area(std::span<const PointF> poly);

std::vector<PointF> to_float(std::span<const Point> poly);

/// Pixels whose centers lie strictly inside the polygon (even-odd rule).
BinaryMask fill_interior(std::span<const PointF> poly, int width, int height);

/// Interior plus every pixel the closed outline passes through.
BinaryMask fill_polygon(std::span<const PointF> poly, int width, int height);

/// Marks the pixels visited by the closed outline (rounded, 8-connected line steps).
void draw_outline(std::span<const PointF> poly, BinaryMask& mask);

/// Resamples a closed polygon to n points equally spaced in arc length.
std::vector<PointF> resample_closed(std::span<const PointF> poly, int n);

/// Bilinear sample with clamped borders.
double sample_bilinear(const RealImage& img, double x, double y);

/// Median of the outermost ring of pixels.
std::uint8_t median_border(const GrayImage& img);

/// Sine and cosine of an angle in degrees, snapped exactly at multiples of 90.
void sincos_deg(double deg, double& s, double& c);

/// Largest distance between a point of `a` and its nearest point of `b` and vice versa.
double hausdorff(std::span<const PointF> a, std::span<const PointF> b);

}  // namespace algaeid
