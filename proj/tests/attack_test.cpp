#include <curvecaptcha/attack.hpp>
#include <curvecaptcha/challenge.hpp>

#include <gtest/gtest.h>

#include <numeric>

namespace cap = curvecaptcha;

namespace {

cap::Challenge make_challenge(std::uint64_t seed, cap::Variant v = cap::Variant::Long) {
  cap::ChallengeParams p;
  p.variant = v;
  static const auto long_db = cap::make_database_for(p, 99);
  p.variant = cap::Variant::Short;
  static const auto short_db = cap::make_database_for(p, 98);
  p.variant = v;
  cap::Rng rng(seed);
  return cap::assemble_challenge(rng, v == cap::Variant::Long ? long_db : short_db, p);
}

cap::Raster random_blob_image(std::uint64_t seed) {
  cap::Rng rng(seed);
  cap::Raster r(120, 90);
  for (int i = 0; i < 12; ++i) {
    const int cx = int(rng.below(120)), cy = int(rng.below(90)), rad = 1 + int(rng.below(10));
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rad * rad) r.at(x, y) = cap::kInk;
  }
  return r;
}

}  // namespace

TEST(HonestSolver, NoJitterReproducesSamples) {
  const auto c = make_challenge(1);
  cap::Rng rng(1);
  const auto t = cap::honest_solver(c.curves, rng, 0.0);
  ASSERT_EQ(t.strokes.size(), 1u);
  cap::PointSeries pts;
  for (const auto& p : t.strokes[0]) pts.push_back({p.x, p.y});
  cap::PointSeries rev(pts.rbegin(), pts.rend());
  EXPECT_TRUE(pts == c.curves[0] || rev == c.curves[0]);
  EXPECT_TRUE(cap::verify_challenge(c, t, {}).passed);
}

TEST(HonestSolver, NegativeSigmaRejected) {
  cap::Rng rng(1);
  EXPECT_THROW(cap::honest_solver({{{0, 0}, {1, 1}}}, rng, -1), cap::ParameterError);
}

TEST(RandomLine, StaysOnCanvas) {
  cap::Rng rng(2);
  const cap::CanvasSpec canvas;
  for (int i = 0; i < 1000; ++i) {
    const auto t = cap::random_line_attacker(rng, canvas);
    ASSERT_EQ(t.point_count(), std::size_t(cap::kAttackStrokePoints));
    for (const auto& p : t.strokes[0]) ASSERT_TRUE(canvas.contains({p.x, p.y}));
  }
}

TEST(CentroidCheat, MeanEqualsImageCentroid) {
  const auto c = make_challenge(3);
  double sx = 0, sy = 0, n = 0;
  for (int y = 0; y < c.image.raster.height; ++y)
    for (int x = 0; x < c.image.raster.width; ++x)
      if (c.image.raster.is_ink(x, y)) sx += x + 0.5, sy += y + 0.5, ++n;
  cap::Rng rng(3);
  const auto t = cap::centroid_cheat_attacker(rng, c.canvas, c.image.encoded);
  double tx = 0, ty = 0;
  for (const auto& p : t.strokes[0]) tx += p.x, ty += p.y;
  EXPECT_NEAR(tx / t.point_count(), sx / n, 1e-9);
  EXPECT_NEAR(ty / t.point_count(), sy / n, 1e-9);
  for (const auto& p : t.strokes[0]) EXPECT_TRUE(c.canvas.contains({p.x, p.y}));
}

TEST(Morphology, BlankImageIsFixed) {
  const cap::Raster blank(50, 40);
  EXPECT_EQ(cap::erode(blank, 2), blank);
  EXPECT_EQ(cap::dilate(blank, 2), blank);
}

TEST(Morphology, SinglePixelDilatesToSquare) {
  cap::Raster r(21, 21);
  r.at(10, 10) = cap::kInk;
  const auto d = cap::dilate(r, 3);
  EXPECT_EQ(d.ink_count(), 49u);
  EXPECT_TRUE(d.is_ink(7, 7));
  EXPECT_FALSE(d.is_ink(6, 10));
  EXPECT_EQ(cap::erode(d, 3), r);
}

TEST(Morphology, DualityAndMonotonicity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = random_blob_image(seed);
    for (int r = 1; r <= 4; ++r) {
      const auto e = cap::erode(img, r), d = cap::dilate(img, r);
      EXPECT_EQ(e, cap::complement(cap::dilate(cap::complement(img), r)));
      EXPECT_EQ(d, cap::complement(cap::erode(cap::complement(img), r)));
      EXPECT_LE(e.ink_count(), img.ink_count());
      EXPECT_GE(d.ink_count(), img.ink_count());
      EXPECT_GE(cap::dilate(img, r + 1).ink_count(), d.ink_count());
      for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        if (img.pixels[i] == cap::kInk) ASSERT_EQ(d.pixels[i], cap::kInk);
        if (e.pixels[i] == cap::kInk) ASSERT_EQ(img.pixels[i], cap::kInk);
      }
    }
  }
}

TEST(Morphology, BadArgumentsRejected) {
  cap::Raster r(5, 5);
  EXPECT_THROW(cap::erode(r, 0), cap::ParameterError);
  r.at(1, 1) = 128;
  EXPECT_THROW(cap::dilate(r, 1), cap::ParameterError);
}

TEST(Morphology, ErosionAtStrokeWidthClearsChallenge) {
  const auto c = make_challenge(4);
  const auto e = cap::erode(c.image.raster, c.image.stroke_width / 2);
  EXPECT_LE(double(e.ink_count()), 0.05 * double(c.image.raster.ink_count()));
}

TEST(Wilson, KnownValues) {
  const auto w = cap::wilson_interval(0, 100);
  EXPECT_EQ(w.lo, 0.0);
  EXPECT_NEAR(w.hi, 0.036994, 1e-5);
  const auto h = cap::wilson_interval(50, 100);
  EXPECT_NEAR(h.lo, 0.403832, 1e-5);
  EXPECT_NEAR(h.hi, 0.596168, 1e-5);
  const auto f = cap::wilson_interval(100, 100);
  EXPECT_NEAR(f.lo, 0.963006, 1e-5);
  EXPECT_EQ(f.hi, 1.0);
  EXPECT_THROW(cap::wilson_interval(0, 0), cap::ParameterError);
}

TEST(Breakability, DeterministicAcrossThreadCounts) {
  cap::AttackerSpec a{cap::AttackerKind::Honest, 8.0, 120};
  const auto r1 = cap::measure_breakability(a, cap::Variant::Long, {}, 42, {}, 1);
  const auto r2 = cap::measure_breakability(a, cap::Variant::Long, {}, 42, {}, 3);
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(cap::report_to_json(r1).dump(), cap::report_to_json(r2).dump());
  std::size_t total = 0;
  for (const auto& [reason, n] : r1.per_reason) total += n;
  EXPECT_EQ(total, 120u);
}

TEST(Breakability, RequiresEnoughTrials) {
  EXPECT_THROW(cap::measure_breakability({cap::AttackerKind::Honest, 3, 99}, cap::Variant::Long, {}, 1),
               cap::ParameterError);
}

TEST(Breakability, ExactHonestAlwaysPasses) {
  const auto r = cap::measure_breakability({cap::AttackerKind::Honest, 0.0, 200}, cap::Variant::Long, {}, 7);
  EXPECT_EQ(r.pass_rate, 1.0);
  const auto s = cap::measure_breakability({cap::AttackerKind::Honest, 0.0, 200}, cap::Variant::Short, {}, 7);
  EXPECT_EQ(s.pass_rate, 1.0);
}

TEST(Breakability, PassRateFallsWithJitter) {
  std::vector<cap::BreakabilityReport> reports;
  for (double sigma : {0.0, 3.0, 8.0, 20.0, 40.0})
    reports.push_back(cap::measure_breakability({cap::AttackerKind::Honest, sigma, 300}, cap::Variant::Long, {}, 11));
  for (std::size_t i = 1; i < reports.size(); ++i)
    EXPECT_LE(reports[i].wilson.lo, reports[i - 1].wilson.hi) << i;
  EXPECT_LT(reports.back().pass_rate, reports.front().pass_rate);
}

TEST(Breakability, CentroidCheatNeedsThePreCheck) {
  cap::AttackerSpec a{cap::AttackerKind::CentroidCheat, 0, 300};
  const auto with = cap::measure_breakability(a, cap::Variant::Long, {}, 13);
  cap::VerifyConfig z_only;
  z_only.precheck_enabled = false;
  const auto without = cap::measure_breakability(a, cap::Variant::Long, z_only, 13);
  EXPECT_LE(with.pass_rate, 0.01);
  EXPECT_GE(without.pass_rate, 0.5);
}

TEST(Breakability, ShortIsNoEasierThanLong) {
  cap::AttackerSpec a{cap::AttackerKind::RandomCurve, 0, 400};
  const auto l = cap::measure_breakability(a, cap::Variant::Long, {}, 17);
  const auto s = cap::measure_breakability(a, cap::Variant::Short, {}, 17);
  EXPECT_LE(s.pass_rate, l.pass_rate + 2 * (l.wilson.hi - l.wilson.lo));
}

TEST(Report, JsonAndTable) {
  const auto r = cap::measure_breakability({cap::AttackerKind::RandomLine, 0, 100}, cap::Variant::Long, {}, 19);
  const auto j = cap::report_to_json(r);
  EXPECT_EQ(j["schema"], "curvecaptcha.report/1");
  EXPECT_EQ(j["trials"], 100);
  std::size_t sum = 0;
  for (const auto& [k, v] : j["reasons"].items()) sum += v.get<std::size_t>();
  EXPECT_EQ(sum, 100u);
  EXPECT_NE(cap::report_table(r).find("random-line"), std::string::npos);
}

TEST(Attacker, NamesRoundTrip) {
  for (auto k : {cap::AttackerKind::Honest, cap::AttackerKind::RandomLine, cap::AttackerKind::RandomCurve,
                 cap::AttackerKind::CentroidCheat})
    EXPECT_EQ(cap::parse_attacker(cap::to_string(k)), k);
  EXPECT_THROW(cap::parse_attacker("nobody"), cap::ParameterError);
}
