#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "image_io.hpp"
#include "verify.hpp"

namespace curvecaptcha {

inline constexpr std::size_t kMaxTracePoints = 20000;

// {"strokes": [[{"x":..,"y":..,"t":..}, ...], ...]}; "t" may be omitted.
inline Trace trace_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("strokes") || !doc["strokes"].is_array())
    throw ProtocolError("trace document needs a \"strokes\" array");
  Trace trace;
  std::size_t total = 0;
  for (const auto& js : doc["strokes"]) {
    if (!js.is_array()) throw ProtocolError("each stroke must be an array of points");
    Stroke stroke;
    for (const auto& jp : js) {
      if (!jp.is_object() || !jp.contains("x") || !jp.contains("y") || !jp["x"].is_number() ||
          !jp["y"].is_number())
        throw ProtocolError("trace point needs numeric x and y");
      TracePoint p{jp["x"].get<double>(), jp["y"].get<double>(), 0.0};
      if (jp.contains("t")) {
        if (!jp["t"].is_number()) throw ProtocolError("trace point t must be numeric");
        p.t = jp["t"].get<double>();
      }
      if (++total > kMaxTracePoints) throw ProtocolError("trace has too many points");
      stroke.push_back(p);
    }
    trace.strokes.push_back(std::move(stroke));
  }
  return trace;
}

inline Trace parse_trace(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("trace is not valid JSON: ") + e.what());
  }
  return trace_from_json(doc);
}

inline nlohmann::json trace_to_json(const Trace& trace) {
  nlohmann::json strokes = nlohmann::json::array();
  for (const auto& s : trace.strokes) {
    nlohmann::json js = nlohmann::json::array();
    for (const auto& p : s) js.push_back({{"x", p.x}, {"y", p.y}, {"t", p.t}});
    strokes.push_back(std::move(js));
  }
  return {{"strokes", std::move(strokes)}};
}

inline nlohmann::json verdict_to_json(const Verdict& v) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
  };
  return {{"passed", v.passed},          {"reason", std::string(to_string(v.reason))},
          {"z_x", num(v.z_x)},           {"z_y", num(v.z_y)},
          {"mean_dist", num(v.mean_dist)}, {"coverage", num(v.coverage)}};
}

// Packed trace: "CTR1", u16 stroke count, then per stroke a u16 point count and
// per point x, y in quarter pixels (u16, clamped to [0, 16383.75]) and the
// millisecond delta to the previous point (u16, saturating). Little endian.
// Six bytes per point.
namespace detail {
inline void put_u16(Bytes& b, std::uint16_t v) {
  b.push_back(std::uint8_t(v));
  b.push_back(std::uint8_t(v >> 8));
}
inline std::uint16_t quantize(double v, double scale) {
  const double q = std::round(v * scale);
  if (!(q >= 0.0)) return 0;
  return std::uint16_t(std::min(q, 65535.0));
}
}  // namespace detail

inline Bytes pack_trace(const Trace& trace) {
  detail::require(trace.strokes.size() <= 65535, "too many strokes to pack");
  Bytes out{'C', 'T', 'R', '1'};
  detail::put_u16(out, std::uint16_t(trace.strokes.size()));
  for (const auto& s : trace.strokes) {
    detail::require(s.size() <= 65535, "stroke too long to pack");
    detail::put_u16(out, std::uint16_t(s.size()));
    double prev_t = s.empty() ? 0.0 : s.front().t;
    for (const auto& p : s) {
      detail::put_u16(out, detail::quantize(p.x, 4.0));
      detail::put_u16(out, detail::quantize(p.y, 4.0));
      detail::put_u16(out, detail::quantize(p.t - prev_t, 1.0));
      prev_t = p.t;
    }
  }
  return out;
}

inline Trace unpack_trace(const Bytes& in) {
  std::size_t pos = 0;
  auto u16 = [&]() -> std::uint16_t {
    if (pos + 2 > in.size()) throw ProtocolError("packed trace truncated");
    const std::uint16_t v = std::uint16_t(in[pos] | (in[pos + 1] << 8));
    pos += 2;
    return v;
  };
  if (in.size() < 6 || !std::equal(in.begin(), in.begin() + 4, "CTR1"))
    throw ProtocolError("packed trace has a bad header");
  pos = 4;
  Trace trace;
  const int strokes = u16();
  for (int i = 0; i < strokes; ++i) {
    Stroke s;
    const int n = u16();
    double t = 0.0;
    for (int j = 0; j < n; ++j) {
      const double x = u16() / 4.0;
      const double y = u16() / 4.0;
      t += u16();
      s.push_back({x, y, t});
    }
    trace.strokes.push_back(std::move(s));
  }
  if (pos != in.size()) throw ProtocolError("trailing bytes after packed trace");
  return trace;
}

}  // namespace curvecaptcha
