#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "challenge.hpp"
#include "errors.hpp"
#include "image_io.hpp"
#include "random.hpp"
#include "raster.hpp"
#include "verify.hpp"

namespace curvecaptcha {

enum class AttackerKind { Honest, RandomLine, RandomCurve, CentroidCheat };

inline std::string_view to_string(AttackerKind k) {
  switch (k) {
    case AttackerKind::Honest: return "honest";
    case AttackerKind::RandomLine: return "random-line";
    case AttackerKind::RandomCurve: return "random-curve";
    case AttackerKind::CentroidCheat: return "centroid-cheat";
  }
  return "unknown";
}

inline AttackerKind parse_attacker(std::string_view s) {
  for (auto k : {AttackerKind::Honest, AttackerKind::RandomLine, AttackerKind::RandomCurve,
                 AttackerKind::CentroidCheat})
    if (s == to_string(k)) return k;
  throw ParameterError("unknown attacker \"" + std::string(s) + "\"");
}

struct AttackerSpec {
  AttackerKind kind = AttackerKind::Honest;
  double jitter_sigma = 3.0;
  int trials = 1000;
};

// ---- simulated solvers -----------------------------------------------------

// Stand-in for a human: one stroke per curve (or segment), drawn in a random
// direction, with i.i.d. Gaussian noise on each coordinate.
inline Trace honest_solver(const std::vector<PointSeries>& curves, Rng& rng, double jitter_sigma) {
  detail::require(jitter_sigma >= 0.0, "jitter sigma must be non-negative");
  Trace trace;
  for (const auto& c : curves) {
    PointSeries pts = c;
    if (rng.coin()) std::reverse(pts.begin(), pts.end());
    Stroke s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double x = pts[i].x, y = pts[i].y;
      if (jitter_sigma > 0.0) {
        x += rng.normal(0.0, jitter_sigma);
        y += rng.normal(0.0, jitter_sigma);
      }
      s.push_back({x, y, 16.0 * double(i)});
    }
    trace.strokes.push_back(std::move(s));
  }
  return trace;
}

inline constexpr int kAttackStrokePoints = 40;
inline constexpr double kAttackJitter = 1.5;

namespace detail {
inline TracePoint clamp_to(const CanvasSpec& c, double x, double y, double t) {
  return {std::clamp(x, 0.0, double(c.width)), std::clamp(y, 0.0, double(c.height)), t};
}
}  // namespace detail

// No-effort guess: a straight stroke between two uniform canvas points.
inline Trace random_line_attacker(Rng& rng, const CanvasSpec& canvas) {
  const Point2D a{rng.uniform(0.0, canvas.width), rng.uniform(0.0, canvas.height)};
  const Point2D b{rng.uniform(0.0, canvas.width), rng.uniform(0.0, canvas.height)};
  Stroke s;
  for (int i = 0; i < kAttackStrokePoints; ++i) {
    const double f = double(i) / (kAttackStrokePoints - 1);
    s.push_back(detail::clamp_to(canvas, a.x + (b.x - a.x) * f + rng.normal(0.0, kAttackJitter),
                                 a.y + (b.y - a.y) * f + rng.normal(0.0, kAttackJitter), 16.0 * i));
  }
  return Trace{{std::move(s)}};
}

// No-effort guess shaped like a challenge: an unrelated random cubic, segmented
// like the challenge variant.
inline Trace random_curve_attacker(Rng& rng, const CanvasSpec& canvas, Variant variant) {
  const double margin = std::min(40.0, std::min(canvas.width, canvas.height) / 4.0 - 1.0);
  const CubicBezier b = gen_control_points(rng, canvas, margin);
  std::vector<PointSeries> parts = variant == Variant::Long ? std::vector<PointSeries>{sample_curve(b)}
                                                            : segment_curve(b);
  Trace t;
  for (const auto& p : parts) t.strokes.push_back(trace_from_series(p).strokes.front());
  return t;
}

// Sees only the encoded image. Estimates the ink centroid and emits a point
// cloud whose mean is exactly that centroid, spread wide around it: the mean
// comparison alone cannot tell this from a faithful trace.
inline Trace centroid_cheat_attacker(Rng& rng, const CanvasSpec& canvas, const Bytes& challenge_png) {
  const Raster img = decode_challenge(challenge_png);
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.is_ink(x, y)) sx += x + 0.5, sy += y + 0.5, ++n;
  const Point2D c = n ? Point2D{sx / n, sy / n} : Point2D{canvas.width / 2.0, canvas.height / 2.0};
  const double rx = std::min(c.x, canvas.width - c.x);
  const double ry = std::min(c.y, canvas.height - c.y);
  Stroke s;
  for (int i = 0; i < kAttackStrokePoints / 2; ++i) {
    const double dx = rx * rng.uniform(0.7, 1.0) * (rng.coin() ? 1 : -1);
    const double dy = ry * rng.uniform(0.7, 1.0) * (rng.coin() ? 1 : -1);
    s.push_back({c.x + dx, c.y + dy, 32.0 * i});
    s.push_back({c.x - dx, c.y - dy, 32.0 * i + 16.0});
  }
  return Trace{{std::move(s)}};
}

// ---- binary morphology -----------------------------------------------------
// Square structuring element of side 2r+1, clipped at the image border, so that
// erode(x) == complement(dilate(complement(x))) holds exactly.

namespace detail {
// Keeps `keep`-valued pixels only where the whole clipped window has that value.
inline Raster morph(const Raster& in, int radius, std::uint8_t keep) {
  require(in.is_monochrome(), "morphology needs a monochrome raster");
  require(radius >= 1, "kernel radius must be at least 1");
  const std::uint8_t other = keep == kInk ? kBlank : kInk;
  auto pass = [&](const Raster& src, bool horizontal) {
    Raster out(src.width, src.height, keep);
    const int len = horizontal ? src.width : src.height;
    const int lines = horizontal ? src.height : src.width;
    std::vector<int> prefix(len + 1);
    for (int l = 0; l < lines; ++l) {
      for (int i = 0; i < len; ++i) {
        const auto v = horizontal ? src.at(i, l) : src.at(l, i);
        prefix[i + 1] = prefix[i] + (v == other ? 1 : 0);
      }
      for (int i = 0; i < len; ++i) {
        const int lo = std::max(0, i - radius), hi = std::min(len - 1, i + radius);
        if (prefix[hi + 1] - prefix[lo] > 0) (horizontal ? out.at(i, l) : out.at(l, i)) = other;
      }
    }
    return out;
  };
  return pass(pass(in, true), false);
}
}  // namespace detail

inline Raster erode(const Raster& img, int radius) { return detail::morph(img, radius, kInk); }
inline Raster dilate(const Raster& img, int radius) { return detail::morph(img, radius, kBlank); }

// ---- breakability harness --------------------------------------------------

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  detail::require(trials > 0, "wilson interval needs trials");
  const double n = double(trials);
  const double p = double(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

struct BreakabilityReport {
  AttackerSpec attacker;
  Variant variant = Variant::Long;
  VerifyConfig config;
  std::uint64_t seed = 0;
  std::size_t passes = 0;
  double pass_rate = 0.0;
  WilsonInterval wilson;
  std::map<VerdictReason, std::size_t> per_reason;

  friend bool operator==(const BreakabilityReport& a, const BreakabilityReport& b) {
    return a.passes == b.passes && a.per_reason == b.per_reason && a.seed == b.seed &&
           a.variant == b.variant && a.attacker.kind == b.attacker.kind &&
           a.attacker.trials == b.attacker.trials;
  }
};

inline Trace run_attacker(const AttackerSpec& a, const Challenge& c, Rng& rng) {
  switch (a.kind) {
    case AttackerKind::Honest: return honest_solver(c.curves, rng, a.jitter_sigma);
    case AttackerKind::RandomLine: return random_line_attacker(rng, c.canvas);
    case AttackerKind::RandomCurve: return random_curve_attacker(rng, c.canvas, c.variant);
    case AttackerKind::CentroidCheat: return centroid_cheat_attacker(rng, c.canvas, c.image.encoded);
  }
  return {};
}

// One fresh challenge per trial; trial i draws everything from
// derive_seed(seed, i + 1), so the report does not depend on scheduling.
inline BreakabilityReport measure_breakability(const AttackerSpec& attacker, Variant variant,
                                               const VerifyConfig& cfg, std::uint64_t seed,
                                               ChallengeParams params = {}, unsigned threads = 0) {
  detail::require(attacker.trials >= 100, "breakability needs at least 100 trials");
  detail::require(attacker.jitter_sigma >= 0.0, "jitter sigma must be non-negative");
  cfg.validate();
  params.variant = variant;
  const GlyphDatabase db = make_database_for(params, derive_seed(seed, 0xD8ULL << 40));

  std::vector<VerdictReason> outcome(static_cast<std::size_t>(attacker.trials));
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < outcome.size(); i += step) {
      Rng rng(derive_seed(seed, i + 1));
      const Challenge c = assemble_challenge(rng, db, params);
      outcome[i] = verify_challenge(c, run_attacker(attacker, c, rng), cfg).reason;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  BreakabilityReport r;
  r.attacker = attacker;
  r.variant = variant;
  r.config = cfg;
  r.seed = seed;
  for (auto reason : outcome) {
    ++r.per_reason[reason];
    if (reason == VerdictReason::Ok) ++r.passes;
  }
  r.pass_rate = double(r.passes) / attacker.trials;
  r.wilson = wilson_interval(r.passes, attacker.trials);
  return r;
}

inline constexpr const char* kReportAssumptions =
    "no-effort attacker model: random straight strokes (assumed model for the breakability target); "
    "honest solver (curve samples + Gaussian jitter) stands in for human solvers";

inline nlohmann::json report_to_json(const BreakabilityReport& r) {
  nlohmann::json reasons = nlohmann::json::object();
  for (auto reason : kAllReasons) {
    auto it = r.per_reason.find(reason);
    reasons[std::string(to_string(reason))] = it == r.per_reason.end() ? 0 : it->second;
  }
  return {{"schema", "curvecaptcha.report/1"},
          {"assumptions", kReportAssumptions},
          {"attacker", std::string(to_string(r.attacker.kind))},
          {"jitter_sigma", r.attacker.jitter_sigma},
          {"trials", r.attacker.trials},
          {"variant", std::string(to_string(r.variant))},
          {"confidence", r.config.confidence},
          {"precheck_enabled", r.config.precheck_enabled},
          {"seed", r.seed},
          {"passes", r.passes},
          {"pass_rate", r.pass_rate},
          {"wilson95", {r.wilson.lo, r.wilson.hi}},
          {"reasons", reasons}};
}

inline std::string report_table(const BreakabilityReport& r) {
  std::ostringstream os;
  os << "# " << kReportAssumptions << "\n";
  os << std::left << std::setw(16) << "attacker" << std::setw(8) << "variant" << std::setw(8) << "conf"
     << std::setw(8) << "trials" << std::setw(8) << "passes" << std::setw(10) << "rate"
     << "wilson95\n";
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(16) << to_string(r.attacker.kind) << std::setw(8) << to_string(r.variant)
     << std::setw(8) << std::setprecision(2) << r.config.confidence << std::setw(8) << r.attacker.trials
     << std::setw(8) << r.passes << std::setprecision(4) << std::setw(10) << r.pass_rate << "["
     << r.wilson.lo << ", " << r.wilson.hi << "]\n";
  os << "reasons:";
  for (const auto& [reason, count] : r.per_reason) os << ' ' << to_string(reason) << '=' << count;
  os << '\n';
  return os.str();
}

}  // namespace curvecaptcha
