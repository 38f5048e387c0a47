#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "stats.hpp"

namespace curvecaptcha {

struct TracePoint {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;  // ms since stroke start; recorded, not used for the verdict

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

using Stroke = std::vector<TracePoint>;

struct Trace {
  std::vector<Stroke> strokes;

  friend bool operator==(const Trace&, const Trace&) = default;

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& s : strokes) n += s.size();
    return n;
  }
};

inline Trace trace_from_series(const PointSeries& s, double dt_ms = 16.0) {
  Stroke stroke;
  for (std::size_t i = 0; i < s.size(); ++i) stroke.push_back({s[i].x, s[i].y, dt_ms * double(i)});
  return Trace{{std::move(stroke)}};
}

struct VerifyConfig {
  double confidence = 0.99;
  double precheck_mean_dist_max = 0.05;  // fraction of the canvas diagonal
  double coverage_radius = 20.0;         // px
  double coverage_min = 0.80;
  int min_trace_points = 31;
  bool normality_gating = false;
  double normality_alpha = 0.01;
  // Switching the pre-check off leaves only the z stage; used for ablation.
  bool precheck_enabled = true;
  // Curve samples dropped at each end before comparison.
  int endpoint_trim = 0;

  void validate() const {
    detail::require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0,1)");
    detail::require(precheck_mean_dist_max > 0.0 && precheck_mean_dist_max < 1.0,
                    "precheck distance fraction must lie in (0,1)");
    detail::require(coverage_min > 0.0 && coverage_min < 1.0, "coverage minimum must lie in (0,1)");
    detail::require(normality_alpha > 0.0 && normality_alpha < 1.0, "normality alpha must lie in (0,1)");
    detail::require(coverage_radius > 0.0, "coverage radius must be positive");
    detail::require(min_trace_points >= 2, "minimum trace points must be at least 2");
    detail::require(endpoint_trim >= 0, "endpoint trim must be non-negative");
  }
};

enum class VerdictReason {
  Ok,
  TooFewPoints,
  PrecheckDistance,
  PrecheckCoverage,
  NormalityReject,
  ZRejectX,
  ZRejectY,
  SegmentUnmatched,
  Expired,
  Consumed,
};

inline std::string_view to_string(VerdictReason r) {
  switch (r) {
    case VerdictReason::Ok: return "ok";
    case VerdictReason::TooFewPoints: return "too-few-points";
    case VerdictReason::PrecheckDistance: return "precheck-distance";
    case VerdictReason::PrecheckCoverage: return "precheck-coverage";
    case VerdictReason::NormalityReject: return "normality-reject";
    case VerdictReason::ZRejectX: return "z-reject-x";
    case VerdictReason::ZRejectY: return "z-reject-y";
    case VerdictReason::SegmentUnmatched: return "segment-unmatched";
    case VerdictReason::Expired: return "expired";
    case VerdictReason::Consumed: return "consumed";
  }
  return "unknown";
}

inline constexpr VerdictReason kAllReasons[] = {
    VerdictReason::Ok,          VerdictReason::TooFewPoints,     VerdictReason::PrecheckDistance,
    VerdictReason::PrecheckCoverage, VerdictReason::NormalityReject, VerdictReason::ZRejectX,
    VerdictReason::ZRejectY,    VerdictReason::SegmentUnmatched, VerdictReason::Expired,
    VerdictReason::Consumed};

struct Verdict {
  bool passed = false;
  VerdictReason reason = VerdictReason::TooFewPoints;
  double z_x = 0.0;
  double z_y = 0.0;
  double mean_dist = 0.0;
  double coverage = 0.0;

  friend bool operator==(const Verdict&, const Verdict&) = default;

  static Verdict fail(VerdictReason r) { return Verdict{false, r}; }
};

struct PreCheckResult {
  double mean_dist = 0.0;
  double coverage = 0.0;
  bool ok = false;
};

namespace detail {

// Finite trace points in a canonical (sorted) order, so every statistic below is
// independent of drawing order and direction.
inline PointSeries canonical_points(const Trace& trace) {
  PointSeries pts;
  for (const auto& s : trace.strokes)
    for (const auto& p : s)
      if (std::isfinite(p.x) && std::isfinite(p.y)) pts.push_back({p.x, p.y});
  std::sort(pts.begin(), pts.end(),
            [](Point2D a, Point2D b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return pts;
}

inline double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline Point2D centroid(const PointSeries& pts) {
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  const double n = double(pts.size());
  return {sorted_sum(std::move(xs)) / n, sorted_sum(std::move(ys)) / n};
}

inline PointSeries trimmed(const PointSeries& curve, int trim) {
  if (trim <= 0 || curve.size() <= std::size_t(2 * trim + 2)) return curve;
  return PointSeries(curve.begin() + trim, curve.end() - trim);
}

inline PreCheckResult pre_check_points(const PointSeries& curve, const PointSeries& pts,
                                       const VerifyConfig& cfg, const CanvasSpec& canvas) {
  std::vector<double> nearest;
  nearest.reserve(pts.size());
  std::vector<char> covered(curve.size(), 0);
  const double r2 = cfg.coverage_radius * cfg.coverage_radius;
  for (const auto& p : pts) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < curve.size(); ++j) {
      const double dx = p.x - curve[j].x, dy = p.y - curve[j].y;
      const double d2 = dx * dx + dy * dy;
      best = std::min(best, d2);
      if (d2 <= r2) covered[j] = 1;
    }
    nearest.push_back(std::sqrt(best));
  }
  PreCheckResult r;
  r.mean_dist = pts.empty() ? std::numeric_limits<double>::infinity()
                            : sorted_sum(std::move(nearest)) / double(pts.size());
  r.coverage = double(std::count(covered.begin(), covered.end(), 1)) / double(curve.size());
  r.ok = r.mean_dist <= cfg.precheck_mean_dist_max * canvas.diagonal() && r.coverage >= cfg.coverage_min;
  return r;
}

// Shapiro-Wilk on the per-axis offsets to the nearest curve sample. Samples that
// are degenerate or outside the test's size range are not gated.
inline bool normality_rejects(const PointSeries& curve, const PointSeries& pts, double alpha) {
  std::vector<double> dx, dy;
  for (const auto& p : pts) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < curve.size(); ++j) {
      const double d = std::hypot(p.x - curve[j].x, p.y - curve[j].y);
      if (d < bd) bd = d, best = j;
    }
    dx.push_back(p.x - curve[best].x);
    dy.push_back(p.y - curve[best].y);
  }
  for (const auto* v : {&dx, &dy}) {
    if (v->size() < 3 || v->size() > 5000) continue;
    try {
      if (shapiro_wilk(*v).p_value < alpha) return true;
    } catch (const DegenerateInputError&) {
    }
  }
  return false;
}

}  // namespace detail

// Cheap geometric gate: mean nearest-sample distance and curve coverage.
inline PreCheckResult pre_check(const PointSeries& curve, const Trace& trace, const VerifyConfig& cfg,
                                const CanvasSpec& canvas) {
  const PointSeries pts = detail::canonical_points(trace);
  detail::require(!curve.empty(), "curve is empty");
  detail::require(pts.size() >= std::size_t(cfg.min_trace_points), "trace has too few points");
  return detail::pre_check_points(detail::trimmed(curve, cfg.endpoint_trim), pts, cfg, canvas);
}

// Full acceptance pipeline for one curve: point floor, pre-check, optional
// normality gate, then per-axis two-sample z tests against critical_z.
inline Verdict evaluate(const PointSeries& curve_in, const Trace& trace, const VerifyConfig& cfg,
                        const CanvasSpec& canvas) {
  detail::require(curve_in.size() >= 2, "curve needs at least two samples");
  const PointSeries curve = detail::trimmed(curve_in, cfg.endpoint_trim);
  const PointSeries pts = detail::canonical_points(trace);
  if (pts.size() < std::size_t(std::max(2, cfg.min_trace_points)))
    return Verdict::fail(VerdictReason::TooFewPoints);

  Verdict v;
  const PreCheckResult pc = detail::pre_check_points(curve, pts, cfg, canvas);
  v.mean_dist = pc.mean_dist;
  v.coverage = pc.coverage;
  if (cfg.precheck_enabled) {
    if (pc.mean_dist > cfg.precheck_mean_dist_max * canvas.diagonal()) {
      v.reason = VerdictReason::PrecheckDistance;
      return v;
    }
    if (pc.coverage < cfg.coverage_min) {
      v.reason = VerdictReason::PrecheckCoverage;
      return v;
    }
  }
  if (cfg.normality_gating && detail::normality_rejects(curve, pts, cfg.normality_alpha)) {
    v.reason = VerdictReason::NormalityReject;
    return v;
  }

  std::vector<double> cx, cy, tx, ty;
  for (const auto& p : curve) cx.push_back(p.x), cy.push_back(p.y);
  for (const auto& p : pts) tx.push_back(p.x), ty.push_back(p.y);
  v.z_x = two_sample_z(summarize(cx), summarize(tx)).z;
  v.z_y = two_sample_z(summarize(cy), summarize(ty)).z;
  const double crit = critical_z(cfg.confidence);
  if (!(std::abs(v.z_x) <= crit)) {
    v.reason = VerdictReason::ZRejectX;
    return v;
  }
  if (!(std::abs(v.z_y) <= crit)) {
    v.reason = VerdictReason::ZRejectY;
    return v;
  }
  v.passed = true;
  v.reason = VerdictReason::Ok;
  return v;
}

// Short variant: each stroke goes to the segment with the nearest centroid,
// every segment needs at least one stroke, and every segment must pass.
inline Verdict evaluate_short(const std::vector<PointSeries>& segments, const Trace& trace,
                              const VerifyConfig& cfg, const CanvasSpec& canvas) {
  detail::require(!segments.empty(), "no segments");
  std::vector<Point2D> seg_centroids;
  for (const auto& s : segments) {
    detail::require(s.size() >= 2, "segment needs at least two samples");
    seg_centroids.push_back(detail::centroid(s));
  }
  std::vector<Trace> assigned(segments.size());
  for (const auto& stroke : trace.strokes) {
    const PointSeries pts = detail::canonical_points(Trace{{stroke}});
    if (pts.empty()) continue;
    const Point2D c = detail::centroid(pts);
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < seg_centroids.size(); ++i) {
      const double d = distance(c, seg_centroids[i]);
      if (d < bd) bd = d, best = i;
    }
    assigned[best].strokes.push_back(stroke);
  }
  if (std::any_of(assigned.begin(), assigned.end(), [](const Trace& t) { return t.strokes.empty(); }))
    return Verdict::fail(VerdictReason::SegmentUnmatched);

  Verdict combined{true, VerdictReason::Ok, 0.0, 0.0, 0.0, 1.0};
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Verdict v = evaluate(segments[i], assigned[i], cfg, canvas);
    if (!v.passed) return v;
    if (std::abs(v.z_x) > std::abs(combined.z_x)) combined.z_x = v.z_x;
    if (std::abs(v.z_y) > std::abs(combined.z_y)) combined.z_y = v.z_y;
    combined.mean_dist = std::max(combined.mean_dist, v.mean_dist);
    combined.coverage = std::min(combined.coverage, v.coverage);
  }
  return combined;
}

}  // namespace curvecaptcha
