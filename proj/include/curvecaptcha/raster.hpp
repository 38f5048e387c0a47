#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"

namespace curvecaptcha {

inline constexpr std::uint8_t kInk = 0;
inline constexpr std::uint8_t kBlank = 255;

// 8-bit single-channel raster, row-major. Challenge rasters are restricted to
// the two values kInk and kBlank.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(int w, int h, std::uint8_t fill = kBlank)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    detail::require(w >= 0 && h >= 0, "raster dimensions must be non-negative");
  }

  friend bool operator==(const Raster&, const Raster&) = default;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool is_ink(int x, int y) const { return at(x, y) == kInk; }

  bool is_monochrome() const {
    return std::all_of(pixels.begin(), pixels.end(),
                       [](std::uint8_t v) { return v == kInk || v == kBlank; });
  }

  std::size_t ink_count() const {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), kInk));
  }

  double ink_fraction() const {
    return pixels.empty() ? 0.0 : double(ink_count()) / double(pixels.size());
  }
};

inline Raster complement(const Raster& r) {
  Raster out = r;
  for (auto& v : out.pixels) v = (v == kInk) ? kBlank : kInk;
  return out;
}

// Distance from p to the closed segment [a, b].
inline double point_segment_distance(Point2D p, Point2D a, Point2D b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

inline double point_polyline_distance(Point2D p, const PointSeries& s) {
  if (s.size() == 1) return distance(p, s[0]);
  double best = INFINITY;
  for (std::size_t i = 1; i < s.size(); ++i)
    best = std::min(best, point_segment_distance(p, s[i - 1], s[i]));
  return best;
}

// Binary stroke: a pixel is inked when its centre lies within stroke_width/2 of
// the polyline. No anti-aliasing.
inline void draw_polyline(Raster& r, const PointSeries& s, double stroke_width) {
  if (s.empty()) return;
  const double radius = stroke_width / 2.0;
  auto stamp_segment = [&](Point2D a, Point2D b) {
    const int x0 = std::max(0, int(std::floor(std::min(a.x, b.x) - radius - 1)));
    const int x1 = std::min(r.width - 1, int(std::ceil(std::max(a.x, b.x) + radius + 1)));
    const int y0 = std::max(0, int(std::floor(std::min(a.y, b.y) - radius - 1)));
    const int y1 = std::min(r.height - 1, int(std::ceil(std::max(a.y, b.y) + radius + 1)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (point_segment_distance({x + 0.5, y + 0.5}, a, b) <= radius) r.at(x, y) = kInk;
  };
  if (s.size() == 1) {
    stamp_segment(s[0], s[0]);
    return;
  }
  for (std::size_t i = 1; i < s.size(); ++i) stamp_segment(s[i - 1], s[i]);
}

}  // namespace curvecaptcha
