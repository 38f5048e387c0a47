#include <curvecaptcha/challenge.hpp>
#include <curvecaptcha/render.hpp>

#include <gtest/gtest.h>

#include <cmath>

namespace cap = curvecaptcha;

namespace {

cap::Raster default_background(std::uint64_t seed) {
  const auto db = cap::make_synthetic_database(seed, 12, 240, 200, 4);
  cap::Rng rng(seed);
  return cap::compose_grid(cap::select_tiles(rng, db, 8), {4, 2, 240, 200});
}

}  // namespace

TEST(RenderChallenge, EmptyOverlayIsIdentity) {
  const auto bg = default_background(1);
  const auto img = cap::render_challenge(bg, {}, 4);
  EXPECT_EQ(img.raster, bg);
}

TEST(RenderChallenge, CurveAddsInkAndStaysMonochrome) {
  const auto bg = default_background(2);
  cap::Rng rng(2);
  const auto curve = cap::sample_curve(cap::gen_control_points(rng, {}));
  const auto img = cap::render_challenge(bg, {curve}, 4);
  EXPECT_GT(img.raster.ink_count(), bg.ink_count());
  EXPECT_TRUE(img.raster.is_monochrome());
}

TEST(RenderChallenge, RejectsCurveOutsideCanvas) {
  const auto bg = default_background(3);
  EXPECT_THROW(cap::render_challenge(bg, {{{10, 10}, {481, 10}}}, 4), cap::ParameterError);
}

TEST(RenderChallenge, OverlayLocality) {
  const auto bg = default_background(4);
  cap::Rng rng(4);
  const auto curve = cap::sample_curve(cap::gen_control_points(rng, {}));
  const auto img = cap::render_challenge(bg, {curve}, 4);
  for (int y = 0; y < bg.height; ++y)
    for (int x = 0; x < bg.width; ++x)
      if (cap::point_polyline_distance({x + 0.5, y + 0.5}, curve) > 4.0) ASSERT_EQ(img.raster.at(x, y), bg.at(x, y));
}

// Oracle: ink run length measured across the centre line, away from self-crossings.
TEST(RenderChallenge, StrokeWidthMatchesGlyphWidth) {
  const cap::Raster blank(480, 800);
  cap::Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto curve = cap::sample_curve(cap::gen_control_points(rng, {}));
    const auto img = cap::render_challenge(blank, {curve}, 4).raster;
    std::vector<double> widths;
    for (std::size_t i = 5; i + 5 < curve.size(); i += 4) {
      const cap::Point2D a = curve[i], b = curve[i + 1];
      const double len = cap::distance(a, b);
      if (len < 1e-6) continue;
      const cap::Point2D mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
      const cap::Point2D n{-(b.y - a.y) / len, (b.x - a.x) / len};
      // skip places where the curve comes back near itself
      bool isolated = true;
      for (std::size_t j = 0; j < curve.size(); ++j)
        if ((j + 6 < i || j > i + 7) && cap::distance(curve[j], mid) < 20) isolated = false;
      if (!isolated) continue;
      int run = 0;
      for (double s = -8; s <= 8; s += 0.05) {
        const int x = int(std::floor(mid.x + s * n.x)), y = int(std::floor(mid.y + s * n.y));
        if (x >= 0 && y >= 0 && x < 480 && y < 800 && img.is_ink(x, y)) ++run;
      }
      widths.push_back(run * 0.05);
    }
    ASSERT_FALSE(widths.empty());
    std::sort(widths.begin(), widths.end());
    const double median = widths[widths.size() / 2];
    EXPECT_NEAR(median, 4.0, 1.0);
  }
}

TEST(EncodeChallenge, BlankRoundTrip) {
  const cap::Raster blank(480, 800);
  EXPECT_EQ(cap::decode_challenge(cap::encode_challenge(blank)), blank);
}

TEST(EncodeChallenge, CorruptBytesAreRejected) {
  auto png = cap::encode_challenge(cap::Raster(64, 64));
  EXPECT_THROW(cap::decode_challenge({}), cap::ParameterError);
  EXPECT_THROW(cap::decode_challenge(cap::Bytes(png.begin(), png.begin() + 20)), cap::ParameterError);
  png[1] = 'X';
  EXPECT_THROW(cap::decode_challenge(png), cap::ParameterError);
}

TEST(EncodeChallenge, RejectsGray) {
  cap::Raster r(10, 10);
  r.at(3, 3) = 128;
  EXPECT_THROW(cap::encode_challenge(r), cap::ParameterError);
}

TEST(EncodeChallenge, LosslessAndWithinBudget) {
  cap::ChallengeParams p;
  const auto db = cap::make_database_for(p, 10);
  std::size_t largest = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    cap::Rng rng(seed);
    const auto c = cap::assemble_challenge(rng, db, p);
    largest = std::max(largest, c.image.encoded.size());
    if (seed < 100) {
      const auto decoded = cap::decode_challenge(c.image.encoded);
      ASSERT_EQ(decoded, c.image.raster);
      ASSERT_EQ(cap::encode_challenge(decoded), c.image.encoded);
    }
  }
  EXPECT_LE(largest, 50u * 1024u);
}

TEST(ExtremeLineGuard, StrictBetweenness) {
  EXPECT_TRUE(cap::extreme_line_guard(std::vector<double>{300}, {100, 500}));
  EXPECT_FALSE(cap::extreme_line_guard(std::vector<double>{600}, {100, 500}));
  EXPECT_FALSE(cap::extreme_line_guard(std::vector<double>{500}, {100, 500}));
  EXPECT_FALSE(cap::extreme_line_guard(std::vector<double>{100}, {100, 500}));
  EXPECT_FALSE(cap::extreme_line_guard(std::vector<double>{50}, {100, 500}));
  const std::vector<cap::PointSeries> curves{{{0, 0}, {300, 0}}};
  EXPECT_TRUE(cap::extreme_line_guard(curves, {100, 500}));
}

TEST(ExtremeLineGuard, HoldsForAssembledChallenges) {
  for (auto variant : {cap::Variant::Long, cap::Variant::Short}) {
    cap::ChallengeParams p;
    p.variant = variant;
    const auto db = cap::make_database_for(p, 12);
    for (std::uint64_t seed = 0; seed < (variant == cap::Variant::Long ? 1000u : 300u); ++seed) {
      cap::Rng rng(seed);
      const auto c = cap::assemble_challenge(rng, db, p);
      std::vector<double> glyph;
      for (int id : c.tile_ids)
        glyph.insert(glyph.end(), db.tiles()[id].stroke_lengths.begin(), db.tiles()[id].stroke_lengths.end());
      ASSERT_TRUE(cap::extreme_line_guard(c.curves, glyph)) << seed;
      ASSERT_TRUE(c.image.raster.is_monochrome());
    }
  }
}

TEST(Challenge, DeterministicPerSeed) {
  cap::ChallengeParams p;
  p.variant = cap::Variant::Short;
  const auto db = cap::make_database_for(p, 1);
  cap::Rng a(99), b(99);
  const auto ca = cap::assemble_challenge(a, db, p);
  const auto cb = cap::assemble_challenge(b, db, p);
  EXPECT_EQ(ca.image.encoded, cb.image.encoded);
  EXPECT_EQ(ca.bezier, cb.bezier);
  EXPECT_EQ(ca.curves.size(), 3u);
}
