#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "random.hpp"

namespace curvecaptcha {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
  friend Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2D operator*(double s, Point2D p) { return {s * p.x, s * p.y}; }
};

inline double distance(Point2D a, Point2D b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Ordered point samples, either from a curve or from a drawn stroke.
using PointSeries = std::vector<Point2D>;

struct CanvasSpec {
  int width = 480;
  int height = 800;

  friend bool operator==(const CanvasSpec&, const CanvasSpec&) = default;

  double diagonal() const { return std::hypot(double(width), double(height)); }
  bool contains(Point2D p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height;
  }
  void validate() const {
    detail::require(width >= 64 && height >= 64, "canvas must be at least 64x64");
  }
};

struct CubicBezier {
  Point2D p0, p1, p2, p3;

  friend bool operator==(const CubicBezier&, const CubicBezier&) = default;

  std::array<Point2D, 4> control_points() const { return {p0, p1, p2, p3}; }
  CubicBezier reversed() const { return {p3, p2, p1, p0}; }
};

inline constexpr int kMinSamples = 31;
inline constexpr int kDefaultLongSamples = 64;
inline constexpr int kDefaultSegmentSamples = 40;
inline constexpr int kDefaultSegments = 3;
inline constexpr double kDefaultSegmentGap = 0.05;

namespace detail {

inline Point2D eval_unchecked(const CubicBezier& b, double t) {
  const double u = 1.0 - t;
  const double b0 = u * u * u;
  const double b1 = 3.0 * u * u * t;
  const double b2 = 3.0 * u * t * t;
  const double b3 = t * t * t;
  return {b0 * b.p0.x + b1 * b.p1.x + b2 * b.p2.x + b3 * b.p3.x,
          b0 * b.p0.y + b1 * b.p1.y + b2 * b.p2.y + b3 * b.p3.y};
}

// Samples t uniformly over [t0, t1], endpoints included.
inline PointSeries sample_range(const CubicBezier& b, double t0, double t1, int n) {
  PointSeries out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = (i == n - 1) ? t1 : t0 + (t1 - t0) * (double(i) / double(n - 1));
    out.push_back(eval_unchecked(b, t));
  }
  return out;
}

}  // namespace detail

// Cubic Bernstein form, evaluated per axis. Endpoints are returned exactly.
inline Point2D eval_bezier(const CubicBezier& b, double t) {
  detail::require(t >= 0.0 && t <= 1.0, "t must lie in [0,1]");
  if (t == 0.0) return b.p0;
  if (t == 1.0) return b.p3;
  return detail::eval_unchecked(b, t);
}

// Uniform-parameter sampling at t = i/(n-1).
inline PointSeries sample_curve(const CubicBezier& b, int n_samples = kDefaultLongSamples) {
  detail::require(n_samples >= kMinSamples, "sample_curve needs at least 31 samples");
  PointSeries s = detail::sample_range(b, 0.0, 1.0, n_samples);
  s.front() = b.p0;
  s.back() = b.p3;
  return s;
}

struct ParamInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// k equal-span parameter intervals separated by gaps of gap_fraction.
inline std::vector<ParamInterval> segment_intervals(int k, double gap_fraction) {
  detail::require(k >= 2, "segment count must be at least 2");
  detail::require(gap_fraction > 0.0 && gap_fraction < 1.0 / (2.0 * k),
                  "gap fraction must lie in (0, 1/(2k))");
  const double span = (1.0 - (k - 1) * gap_fraction) / k;
  std::vector<ParamInterval> out;
  for (int i = 0; i < k; ++i) {
    const double lo = i * (span + gap_fraction);
    const double hi = (i == k - 1) ? 1.0 : lo + span;
    out.push_back({lo, hi});
  }
  return out;
}

inline std::vector<PointSeries> segment_curve(const CubicBezier& b, int k = kDefaultSegments,
                                              double gap_fraction = kDefaultSegmentGap,
                                              int samples_per_segment = kDefaultSegmentSamples) {
  detail::require(samples_per_segment >= kMinSamples, "each segment needs at least 31 samples");
  std::vector<PointSeries> out;
  for (const auto& iv : segment_intervals(k, gap_fraction)) {
    out.push_back(detail::sample_range(b, iv.lo, iv.hi, samples_per_segment));
  }
  return out;
}

inline double polyline_length(const PointSeries& s) {
  detail::require(s.size() >= 2, "polyline needs at least two points");
  double len = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) len += distance(s[i - 1], s[i]);
  return len;
}

struct BoundingBox {
  double min_x, min_y, max_x, max_y;
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

inline BoundingBox bounding_box(const PointSeries& s) {
  detail::require(!s.empty(), "bounding box of empty series");
  BoundingBox bb{s[0].x, s[0].y, s[0].x, s[0].y};
  for (const auto& p : s) {
    bb.min_x = std::min(bb.min_x, p.x);
    bb.max_x = std::max(bb.max_x, p.x);
    bb.min_y = std::min(bb.min_y, p.y);
    bb.max_y = std::max(bb.max_y, p.y);
  }
  return bb;
}

// Drawability filter for generated curves: the sampled curve must span at least
// 25% of the canvas width and 15% of its height, and its length must lie within
// [0.5, 2.5] canvas widths.
inline bool accept_non_degenerate(const CubicBezier& b, const CanvasSpec& canvas) {
  if (b.p0 == b.p3) return false;
  const PointSeries s = sample_curve(b, kDefaultLongSamples);
  const BoundingBox bb = bounding_box(s);
  if (bb.width() < 0.25 * canvas.width || bb.height() < 0.15 * canvas.height) return false;
  const double len = polyline_length(s);
  return len >= 0.5 * canvas.width && len <= 2.5 * canvas.width;
}

inline CubicBezier gen_control_points(Rng& rng, const CanvasSpec& canvas, double margin = 40.0) {
  canvas.validate();
  detail::require(margin >= 0.0 && margin < std::min(canvas.width, canvas.height) / 4.0,
                  "margin must lie in [0, min(width,height)/4)");
  auto draw = [&] {
    return Point2D{rng.uniform(margin, canvas.width - margin),
                   rng.uniform(margin, canvas.height - margin)};
  };
  for (;;) {
    CubicBezier b;
    b.p0 = draw();
    b.p1 = draw();
    b.p2 = draw();
    b.p3 = draw();
    if (accept_non_degenerate(b, canvas)) return b;
  }
}

}  // namespace curvecaptcha
