#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"

namespace curvecaptcha {

struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample estimate, divisor n-1
  std::size_t n = 0;
};

// Mean and sample standard deviation. Values are summed in sorted order, so
// the result does not depend on the order of the input.
inline SampleStats summarize(std::span<const double> sample) {
  detail::require(sample.size() >= 2, "summarize needs at least two values");
  std::vector<double> v(sample.begin(), sample.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / double(v.size());
  std::vector<double> dev2;
  dev2.reserve(v.size());
  for (double x : v) dev2.push_back((x - mean) * (x - mean));
  std::sort(dev2.begin(), dev2.end());
  double ss = 0.0;
  for (double d : dev2) ss += d;
  return {mean, std::sqrt(ss / double(v.size() - 1)), v.size()};
}

struct ZTestResult {
  double z = 0.0;
  double d0 = 0.0;

  bool within(double critical) const { return std::abs(z) <= critical; }
};

// Two-sample z statistic with sample standard deviations standing in for the
// population values. When both variances are zero the statistic is 0 for
// matching means and an infinite sentinel (signed like the mean difference)
// otherwise.
inline ZTestResult two_sample_z(const SampleStats& a, const SampleStats& b, double d0 = 0.0) {
  detail::require(a.n >= 2 && b.n >= 2, "z test needs n >= 2 on both sides");
  const double num = (a.mean - b.mean) - d0;
  const double var = a.stddev * a.stddev / double(a.n) + b.stddev * b.stddev / double(b.n);
  if (var == 0.0) {
    if (num == 0.0) return {0.0, d0};
    return {std::copysign(std::numeric_limits<double>::infinity(), num), d0};
  }
  return {num / std::sqrt(var), d0};
}

// Upper tail of the standard normal.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Standard normal quantile, Wichura's AS 241 (PPND16), ~1e-16 relative accuracy.
inline double normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "quantile probability must lie in (0,1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852854561 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
            1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734) /
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
             0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
            0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772) /
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
             7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -x : x;
}

// Two-sided critical value of the standard normal at the given confidence.
inline double critical_z(double confidence) {
  detail::require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0,1)");
  return normal_quantile(1.0 - (1.0 - confidence) / 2.0);
}

struct NormalityResult {
  double w = 1.0;
  double p_value = 1.0;
};

namespace detail {

// c[0] + c[1] x + ... + c[n-1] x^(n-1)
inline double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
  return r;
}

}  // namespace detail

// Shapiro-Wilk W with Royston's extension to 3 <= n <= 5000: coefficients from
// normal order-statistic approximations with polynomial corrections for the two
// extreme weights, and a normalizing transform of log(1-W) for the p-value
// (exact for n = 3).
inline NormalityResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  detail::require(n >= 3 && n <= 5000, "Shapiro-Wilk needs 3 <= n <= 5000");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 0.0)) throw DegenerateInputError("Shapiro-Wilk on a constant sample");

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const std::size_t half = n / 2;
  const double an = double(n);
  std::vector<double> a(half);  // weights for the upper half, a[0] largest
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((double(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = detail::poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first = 1;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + detail::poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W as the squared correlation between the ordered data and the full
  // antisymmetric coefficient vector; computed as 1-W to limit rounding.
  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    coef[i] = -a[i];
    coef[n - 1 - i] = a[i];
  }
  double sa = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += coef[i];
    sx += x[i] / range;
  }
  sa /= an;
  sx /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef[i] - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = std::max(0.0, (ssassx - sax) * (ssassx + sax) / (ssa * ssx));
  const double w = 1.0 - w1;

  if (n == 3) {
    const double p = 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::numbers::pi / 3.0);
    return {w, std::clamp(p, 0.0, 1.0)};
  }
  if (w1 == 0.0) return {w, 1.0};
  double y = std::log(w1);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = detail::poly(g, an);
    if (y >= gamma) return {w, 1e-99};
    y = -std::log(gamma - y);
    mu = detail::poly(c3, an);
    sigma = std::exp(detail::poly(c4, an));
  } else {
    const double ln = std::log(an);
    mu = detail::poly(c5, ln);
    sigma = std::exp(detail::poly(c6, ln));
  }
  return {w, normal_sf((y - mu) / sigma)};
}

}  // namespace curvecaptcha
