#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "image_io.hpp"
#include "random.hpp"
#include "raster.hpp"

namespace curvecaptcha {

// Fragment scale of synthetic glyphs. Long challenges get long, winding
// fragments; short challenges get pieces sized like the curve segments.
enum class GlyphStyle { Long, Short };

struct GlyphTile {
  int id = 0;
  Raster bitmap;
  int stroke_width = 4;
  // Centre-line length of every stroke fragment drawn into the tile.
  std::vector<double> stroke_lengths;
};

struct GridLayout {
  int rows = 4;
  int cols = 2;
  int tile_width = 240;
  int tile_height = 200;

  int slots() const { return rows * cols; }
  int raster_width() const { return cols * tile_width; }
  int raster_height() const { return rows * tile_height; }
};

inline constexpr double kMinInkFraction = 0.02;
inline constexpr double kMaxInkFraction = 0.25;

class GlyphDatabase {
 public:
  GlyphDatabase() = default;
  explicit GlyphDatabase(std::vector<GlyphTile> tiles) : tiles_(std::move(tiles)) {
    detail::require(!tiles_.empty(), "glyph database is empty");
    const auto& first = tiles_.front();
    for (const auto& t : tiles_) {
      detail::require(t.bitmap.width == first.bitmap.width && t.bitmap.height == first.bitmap.height,
                      "glyph tiles must share dimensions");
      detail::require(t.stroke_width == first.stroke_width, "glyph tiles must share stroke width");
      detail::require(t.bitmap.is_monochrome(), "glyph tiles must be monochrome");
    }
  }

  const std::vector<GlyphTile>& tiles() const { return tiles_; }
  std::size_t size() const { return tiles_.size(); }
  int tile_width() const { return tiles_.empty() ? 0 : tiles_.front().bitmap.width; }
  int tile_height() const { return tiles_.empty() ? 0 : tiles_.front().bitmap.height; }
  int stroke_width() const { return tiles_.empty() ? 0 : tiles_.front().stroke_width; }

 private:
  std::vector<GlyphTile> tiles_;
};

namespace detail {

inline PointSeries arc_points(Point2D c, double r, double start, double sweep, double growth = 0.0) {
  const int n = std::max(8, int(std::abs(sweep) * (r + growth) / 3.0));
  PointSeries s;
  for (int i = 0; i <= n; ++i) {
    const double f = double(i) / n;
    const double a = start + sweep * f;
    const double rr = r + growth * f;
    s.push_back({c.x + rr * std::cos(a), c.y + rr * std::sin(a)});
  }
  return s;
}

// One character-like stroke fragment kept inside [m, w-m] x [m, h-m].
inline PointSeries glyph_fragment(Rng& rng, int w, int h, double m, GlyphStyle style) {
  const double L = std::min(w, h);
  const bool long_style = style == GlyphStyle::Long;
  const auto kind = rng.below(long_style ? 4 : 3);
  if (kind == 0) {  // straight bar
    const double len = L * (long_style ? rng.uniform(0.15, 0.6) : rng.uniform(0.08, 0.35));
    for (;;) {
      const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Point2D a{rng.uniform(m, w - m), rng.uniform(m, h - m)};
      const Point2D b{a.x + len * std::cos(ang), a.y + len * std::sin(ang)};
      if (b.x >= m && b.x <= w - m && b.y >= m && b.y <= h - m) return {a, b};
    }
  }
  if (kind == 1) {  // circular arc, like the bowl of a letter
    const double r = L * (long_style ? rng.uniform(0.12, 0.4) : rng.uniform(0.06, 0.22));
    const Point2D c{rng.uniform(m + r, w - m - r), rng.uniform(m + r, h - m - r)};
    const double sweep = rng.uniform(0.5, 1.7) * std::numbers::pi * (rng.coin() ? 1 : -1);
    return arc_points(c, r, rng.uniform(0.0, 2.0 * std::numbers::pi), sweep);
  }
  if (kind == 2) {  // free cubic stroke
    const double box = long_style ? 1.0 : 0.5;
    const double bw = (w - 2 * m) * box, bh = (h - 2 * m) * box;
    const double ox = rng.uniform(m, w - m - bw), oy = rng.uniform(m, h - m - bh);
    CubicBezier b;
    for (Point2D* p : {&b.p0, &b.p1, &b.p2, &b.p3}) *p = {ox + rng.uniform(0, bw), oy + rng.uniform(0, bh)};
    return sample_range(b, 0.0, 1.0, 48);
  }
  // spiral scroll; the longest fragments in long-style tiles
  const double r1 = L * rng.uniform(0.3, 0.45);
  const double r0 = r1 * rng.uniform(0.15, 0.4);
  const Point2D c{rng.uniform(m + r1, w - m - r1), rng.uniform(m + r1, h - m - r1)};
  const double turns = rng.uniform(1.0, 2.2);
  return arc_points(c, r0, rng.uniform(0.0, 2.0 * std::numbers::pi),
                    2.0 * std::numbers::pi * turns * (rng.coin() ? 1 : -1), r1 - r0);
}

}  // namespace detail

// Procedural character-fragment tile: 2-4 strokes drawn at exactly stroke_width,
// redrawn until the ink fraction lies in [2%, 25%].
inline GlyphTile gen_glyph_tile(Rng& rng, int width, int height, int stroke_width,
                                GlyphStyle style = GlyphStyle::Long, int id = 0) {
  detail::require(width >= 32 && height >= 32, "glyph tile must be at least 32x32");
  detail::require(stroke_width >= 1, "stroke width must be at least 1");
  const double margin = stroke_width / 2.0 + 1.0;
  for (;;) {
    GlyphTile tile{id, Raster(width, height), stroke_width, {}};
    const int fragments = 2 + int(rng.below(3));
    for (int i = 0; i < fragments; ++i) {
      const PointSeries s = detail::glyph_fragment(rng, width, height, margin, style);
      draw_polyline(tile.bitmap, s, stroke_width);
      tile.stroke_lengths.push_back(polyline_length(s));
    }
    const double ink = tile.bitmap.ink_fraction();
    if (ink >= kMinInkFraction && ink <= kMaxInkFraction) return tile;
  }
}

inline GlyphDatabase make_synthetic_database(std::uint64_t seed, int count, int tile_width,
                                             int tile_height, int stroke_width,
                                             GlyphStyle style = GlyphStyle::Long) {
  detail::require(count >= 1, "database needs at least one tile");
  std::vector<GlyphTile> tiles;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, std::uint64_t(i)));
    tiles.push_back(gen_glyph_tile(rng, tile_width, tile_height, stroke_width, style, i));
  }
  return GlyphDatabase(std::move(tiles));
}

// Ordered selection without replacement (partial Fisher-Yates): every ordered
// arrangement of `slots` distinct tiles is equally likely.
inline std::vector<const GlyphTile*> select_tiles(Rng& rng, const GlyphDatabase& db, int slots) {
  detail::require(slots >= 0 && std::size_t(slots) <= db.size(),
                  "cannot select more tiles than the database holds");
  std::vector<const GlyphTile*> pool;
  for (const auto& t : db.tiles()) pool.push_back(&t);
  for (int i = 0; i < slots; ++i) {
    const auto j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(slots);
  return pool;
}

// Row-major tiling with zero padding.
inline Raster compose_grid(const std::vector<const GlyphTile*>& tiles, const GridLayout& layout) {
  detail::require(layout.rows >= 1 && layout.cols >= 1, "layout needs at least one cell");
  detail::require(int(tiles.size()) == layout.slots(), "tile count must equal rows*cols");
  Raster out(layout.raster_width(), layout.raster_height());
  for (int i = 0; i < layout.slots(); ++i) {
    const Raster& t = tiles[i]->bitmap;
    detail::require(t.width == layout.tile_width && t.height == layout.tile_height,
                    "tile dimensions do not match layout");
    const int ox = (i % layout.cols) * layout.tile_width;
    const int oy = (i / layout.cols) * layout.tile_height;
    for (int y = 0; y < t.height; ++y)
      std::copy_n(&t.pixels[std::size_t(y) * t.width], t.width, &out.at(ox, oy + y));
  }
  return out;
}

// Number of distinct ordered backgrounds: n! / (n-k)!.
inline std::uint64_t layout_count(std::uint64_t db_size, std::uint64_t slots) {
  detail::require(slots <= db_size, "slots must not exceed database size");
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < slots; ++i) {
    const std::uint64_t f = db_size - i;
    detail::require(out <= std::numeric_limits<std::uint64_t>::max() / f, "layout count overflows");
    out *= f;
  }
  return out;
}

// Stroke-length estimate for tiles without stroke records: each 8-connected ink
// component contributes area / stroke_width.
inline std::vector<double> estimate_stroke_lengths(const Raster& r, int stroke_width) {
  std::vector<int> label(r.pixels.size(), -1);
  std::vector<double> lengths;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < r.pixels.size(); ++start) {
    if (r.pixels[start] != kInk || label[start] >= 0) continue;
    const int id = int(lengths.size());
    std::size_t area = 0;
    stack.push_back(start);
    label[start] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++area;
      const int x = int(p % r.width), y = int(p / r.width);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= r.width || ny >= r.height) continue;
          const std::size_t q = std::size_t(ny) * r.width + nx;
          if (r.pixels[q] == kInk && label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
    }
    lengths.push_back(double(area) / stroke_width);
  }
  return lengths;
}

// Loads every .pbm/.pgm file in `dir` (sorted by name) as one tile.
inline GlyphDatabase load_tile_directory(const std::filesystem::path& dir, int stroke_width) {
  detail::require(stroke_width >= 1, "stroke width must be at least 1");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pbm" || ext == ".pgm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  detail::require(!files.empty(), "no .pbm/.pgm tiles in " + dir.string());
  std::vector<GlyphTile> tiles;
  for (const auto& f : files) {
    GlyphTile t;
    t.id = int(tiles.size());
    t.bitmap = read_pnm(f);
    t.stroke_width = stroke_width;
    t.stroke_lengths = estimate_stroke_lengths(t.bitmap, stroke_width);
    if (!tiles.empty())
      detail::require(t.bitmap.width == tiles[0].bitmap.width &&
                          t.bitmap.height == tiles[0].bitmap.height,
                      "mixed tile sizes in " + dir.string());
    tiles.push_back(std::move(t));
  }
  return GlyphDatabase(std::move(tiles));
}

}  // namespace curvecaptcha
