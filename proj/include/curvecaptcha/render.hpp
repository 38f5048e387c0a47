#pragma once

#include <algorithm>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "image_io.hpp"
#include "raster.hpp"

namespace curvecaptcha {

inline constexpr int kDefaultStrokeWidth = 4;

struct ChallengeImage {
  Raster raster;
  Bytes encoded;  // PNG
  int stroke_width = kDefaultStrokeWidth;
};

// Challenge images are PNG, 1-bit grayscale.
inline Bytes encode_challenge(const Raster& img) {
  detail::require(img.is_monochrome(), "challenge raster must be monochrome");
  return encode_png(img);
}

inline Raster decode_challenge(const Bytes& bytes) { return decode_png(bytes); }

// Overlays each series as a binary polyline of the given width.
inline ChallengeImage render_challenge(const Raster& background, const std::vector<PointSeries>& curves,
                                       int stroke_width) {
  detail::require(stroke_width >= 1, "stroke width must be at least 1");
  detail::require(background.is_monochrome(), "background must be monochrome");
  const CanvasSpec canvas{background.width, background.height};
  for (const auto& c : curves)
    for (const auto& p : c)
      detail::require(canvas.contains(p), "curve leaves the canvas");
  ChallengeImage out{background, {}, stroke_width};
  for (const auto& c : curves) draw_polyline(out.raster, c, stroke_width);
  out.encoded = encode_challenge(out.raster);
  return out;
}

// True iff every curve is strictly shorter than the longest glyph stroke and
// strictly longer than the shortest one.
inline bool extreme_line_guard(const std::vector<PointSeries>& curves,
                               const std::vector<double>& glyph_stroke_lengths) {
  if (curves.empty() || glyph_stroke_lengths.empty()) return false;
  const auto [lo, hi] = std::minmax_element(glyph_stroke_lengths.begin(), glyph_stroke_lengths.end());
  return std::all_of(curves.begin(), curves.end(), [&](const PointSeries& c) {
    if (c.size() < 2) return false;
    const double len = polyline_length(c);
    return len > *lo && len < *hi;
  });
}

inline bool extreme_line_guard(const std::vector<double>& curve_lengths,
                               const std::vector<double>& glyph_stroke_lengths) {
  if (curve_lengths.empty() || glyph_stroke_lengths.empty()) return false;
  const auto [lo, hi] = std::minmax_element(glyph_stroke_lengths.begin(), glyph_stroke_lengths.end());
  return std::all_of(curve_lengths.begin(), curve_lengths.end(),
                     [&](double len) { return len > *lo && len < *hi; });
}

}  // namespace curvecaptcha
