#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "background.hpp"
#include "curve.hpp"
#include "errors.hpp"
#include "random.hpp"
#include "render.hpp"
#include "verify.hpp"

namespace curvecaptcha {

enum class Variant { Long, Short };

inline std::string_view to_string(Variant v) { return v == Variant::Long ? "long" : "short"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "long") return Variant::Long;
  if (s == "short") return Variant::Short;
  throw ParameterError("variant must be \"long\" or \"short\"");
}

inline GlyphStyle glyph_style_for(Variant v) {
  return v == Variant::Long ? GlyphStyle::Long : GlyphStyle::Short;
}

struct ChallengeParams {
  Variant variant = Variant::Long;
  CanvasSpec canvas;
  int rows = 4;
  int cols = 2;
  int stroke_width = kDefaultStrokeWidth;
  double margin = 40.0;
  int long_samples = kDefaultLongSamples;
  int segments = kDefaultSegments;
  double segment_gap = kDefaultSegmentGap;
  int segment_samples = kDefaultSegmentSamples;
  int max_curve_attempts = 100000;

  GridLayout layout(const GlyphDatabase& db) const {
    return {rows, cols, db.tile_width(), db.tile_height()};
  }
};

inline constexpr int kDefaultDatabaseSize = 12;

// Synthetic tile database sized so that rows x cols tiles cover the canvas.
inline GlyphDatabase make_database_for(const ChallengeParams& p, std::uint64_t seed,
                                       int count = kDefaultDatabaseSize) {
  p.canvas.validate();
  return make_synthetic_database(seed, count, p.canvas.width / p.cols, p.canvas.height / p.rows,
                                 p.stroke_width, glyph_style_for(p.variant));
}

struct Challenge {
  Variant variant = Variant::Long;
  CanvasSpec canvas;
  CubicBezier bezier;
  std::vector<PointSeries> curves;  // one series (long) or one per segment (short)
  std::vector<int> tile_ids;
  ChallengeImage image;
};

// Background first, then curves redrawn until none of them is the longest or
// the shortest line in the image.
inline Challenge assemble_challenge(Rng& rng, const GlyphDatabase& db, const ChallengeParams& p) {
  p.canvas.validate();
  detail::require(db.stroke_width() == p.stroke_width, "curve and glyph stroke widths differ");
  const GridLayout layout = p.layout(db);
  detail::require(layout.raster_width() <= p.canvas.width && layout.raster_height() <= p.canvas.height,
                  "tile grid does not fit the canvas");

  Challenge c;
  c.variant = p.variant;
  c.canvas = p.canvas;
  const auto tiles = select_tiles(rng, db, layout.slots());
  std::vector<double> glyph_lengths;
  for (const auto* t : tiles) {
    c.tile_ids.push_back(t->id);
    glyph_lengths.insert(glyph_lengths.end(), t->stroke_lengths.begin(), t->stroke_lengths.end());
  }
  Raster background = compose_grid(tiles, layout);
  if (background.width != p.canvas.width || background.height != p.canvas.height) {
    Raster full(p.canvas.width, p.canvas.height);
    for (int y = 0; y < background.height; ++y)
      std::copy_n(&background.pixels[std::size_t(y) * background.width], background.width, &full.at(0, y));
    background = std::move(full);
  }

  for (int attempt = 0;; ++attempt) {
    if (attempt >= p.max_curve_attempts)
      throw ResourceExhausted("no curve satisfied the extreme-line guard");
    c.bezier = gen_control_points(rng, p.canvas, p.margin);
    if (p.variant == Variant::Long) {
      c.curves = {sample_curve(c.bezier, p.long_samples)};
    } else {
      c.curves = segment_curve(c.bezier, p.segments, p.segment_gap, p.segment_samples);
    }
    if (extreme_line_guard(c.curves, glyph_lengths)) break;
  }
  c.image = render_challenge(background, c.curves, p.stroke_width);
  return c;
}

inline Verdict verify_challenge(const Challenge& c, const Trace& trace, const VerifyConfig& cfg) {
  if (c.variant == Variant::Long) return evaluate(c.curves.front(), trace, cfg, c.canvas);
  return evaluate_short(c.curves, trace, cfg, c.canvas);
}

inline Verdict verify_geometry(Variant variant, const std::vector<PointSeries>& curves,
                               const CanvasSpec& canvas, const Trace& trace, const VerifyConfig& cfg) {
  detail::require(!curves.empty(), "no curve geometry");
  if (variant == Variant::Long) return evaluate(curves.front(), trace, cfg, canvas);
  return evaluate_short(curves, trace, cfg, canvas);
}

// Offline metadata: trusted-side document that carries the curve geometry.
struct ChallengeMeta {
  Variant variant = Variant::Long;
  CanvasSpec canvas;
  std::uint64_t seed = 0;
  std::int64_t generated_at_ms = 0;
  int stroke_width = kDefaultStrokeWidth;
  CubicBezier bezier;
  std::vector<PointSeries> curves;
};

inline nlohmann::json meta_to_json(const ChallengeMeta& m) {
  auto pt = [](Point2D p) { return nlohmann::json::array({p.x, p.y}); };
  auto series = [&](const PointSeries& s) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : s) a.push_back(pt(p));
    return a;
  };
  nlohmann::json doc = {
      {"schema", "curvecaptcha.meta/1"},
      {"variant", std::string(to_string(m.variant))},
      {"width", m.canvas.width},
      {"height", m.canvas.height},
      {"seed", m.seed},
      {"generated_at", m.generated_at_ms},
      {"stroke_width", m.stroke_width},
      {"control_points", {pt(m.bezier.p0), pt(m.bezier.p1), pt(m.bezier.p2), pt(m.bezier.p3)}},
  };
  if (m.variant == Variant::Long) {
    doc["samples"] = series(m.curves.front());
  } else {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : m.curves) segs.push_back(series(s));
    doc["segments"] = std::move(segs);
  }
  return doc;
}

inline ChallengeMeta meta_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != "curvecaptcha.meta/1")
      throw ProtocolError("unknown metadata schema");
    ChallengeMeta m;
    m.variant = parse_variant(doc.at("variant").get<std::string>());
    m.canvas = {doc.at("width").get<int>(), doc.at("height").get<int>()};
    m.seed = doc.value("seed", std::uint64_t{0});
    m.generated_at_ms = doc.value("generated_at", std::int64_t{0});
    m.stroke_width = doc.value("stroke_width", kDefaultStrokeWidth);
    auto pt = [](const nlohmann::json& j) { return Point2D{j.at(0).get<double>(), j.at(1).get<double>()}; };
    auto series = [&](const nlohmann::json& a) {
      PointSeries s;
      for (const auto& j : a) s.push_back(pt(j));
      if (s.size() < 2) throw ProtocolError("curve series needs at least two points");
      return s;
    };
    const auto& cp = doc.at("control_points");
    m.bezier = {pt(cp.at(0)), pt(cp.at(1)), pt(cp.at(2)), pt(cp.at(3))};
    if (m.variant == Variant::Long) {
      m.curves = {series(doc.at("samples"))};
    } else {
      for (const auto& s : doc.at("segments")) m.curves.push_back(series(s));
      if (m.curves.empty()) throw ProtocolError("short metadata has no segments");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed metadata: ") + e.what());
  } catch (const ParameterError& e) {
    throw ProtocolError(std::string("malformed metadata: ") + e.what());
  }
}

}  // namespace curvecaptcha
