#pragma once

// JSON encodings of the domain types. Every numeric field carries its unit in
// the key ("_mm" or "_px"). Decoders report the offending field path.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fluoroplan/anatomy.hpp"
#include "fluoroplan/core.hpp"
#include "fluoroplan/geometry.hpp"
#include "fluoroplan/planning.hpp"
#include "fluoroplan/sync.hpp"

namespace fluoroplan {

using json = nlohmann::json;

inline constexpr std::string_view kSchemaVersion = "1";

namespace jsonio {

[[noreturn]] inline void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ValidationError, path + ": " + what);
}

inline const json& field(const json& obj, std::string_view key, const std::string& path) {
  if (!obj.is_object()) invalid(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) invalid(path + "." + std::string(key), "missing field");
  return *it;
}

inline double number(const json& obj, std::string_view key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number()) invalid(path + "." + std::string(key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) invalid(path + "." + std::string(key), "expected a finite number");
  return d;
}

inline double number_or(const json& obj, std::string_view key, const std::string& path,
                        double fallback) {
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

/// Non-negative integers arrive as either signed or unsigned JSON numbers.
inline bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline std::string string(const json& obj, std::string_view key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) invalid(path + "." + std::string(key), "expected a string");
  return v.get<std::string>();
}

/// Parses an enum-like string field, re-raising parse failures with the path.
template <typename F>
auto enumerated(const json& obj, std::string_view key, const std::string& path, F parse) {
  const std::string s = string(obj, key, path);
  try {
    return parse(s);
  } catch (const Error& e) {
    invalid(path + "." + std::string(key), e.what());
  }
}

inline json point(Point3 p) { return json::array({p.x, p.y, p.z}); }
inline json point(Point2 p) { return json::array({p.u, p.v}); }

inline Point3 point3(const json& obj, std::string_view key, const std::string& path) {
  const json& v = field(obj, key, path);
  const std::string here = path + "." + std::string(key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number())
    invalid(here, "expected [x, y, z]");
  Point3 p{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  if (!is_finite(p)) invalid(here, "coordinates must be finite");
  return p;
}

inline Point2 point2(const json& obj, std::string_view key, const std::string& path) {
  const json& v = field(obj, key, path);
  const std::string here = path + "." + std::string(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    invalid(here, "expected [u, v]");
  Point2 p{v[0].get<double>(), v[1].get<double>()};
  if (!is_finite(p)) invalid(here, "coordinates must be finite");
  return p;
}

}  // namespace jsonio

// -- calibration ------------------------------------------------------------

inline json to_json_value(const ViewCalibration& c) {
  json j{{"view", to_string(c.view)},
         {"mm_per_px_u", c.mm_per_px_u},
         {"mm_per_px_v", c.mm_per_px_v},
         {"origin_u_px", c.origin_px.u},
         {"origin_v_px", c.origin_px.v},
         {"width_px", c.width_px},
         {"height_px", c.height_px}};
  if (c.view == ViewKind::LP) j["anterior_at"] = to_string(c.anterior_at);
  return j;
}

inline ViewCalibration calibration_from_json(const json& j, ViewKind view, const std::string& path) {
  using namespace jsonio;
  ViewCalibration c;
  c.view = view;
  c.mm_per_px_u = number(j, "mm_per_px_u", path);
  c.mm_per_px_v = number(j, "mm_per_px_v", path);
  c.origin_px = {number_or(j, "origin_u_px", path, 0.0), number_or(j, "origin_v_px", path, 0.0)};
  c.width_px = number(j, "width_px", path);
  c.height_px = number(j, "height_px", path);
  if (view == ViewKind::LP && j.contains("anterior_at"))
    c.anterior_at = enumerated(j, "anterior_at", path, parse_anterior_at);
  try {
    validate(c);
  } catch (const Error& e) {
    invalid(path, e.what());
  }
  return c;
}

inline json to_json_value(const CalibrationPair& c) {
  return {{"ap", to_json_value(c.ap)}, {"lp", to_json_value(c.lp)}};
}

inline CalibrationPair calibrations_from_json(const json& j, const std::string& path) {
  return {calibration_from_json(jsonio::field(j, "ap", path), ViewKind::AP, path + ".ap"),
          calibration_from_json(jsonio::field(j, "lp", path), ViewKind::LP, path + ".lp")};
}

// -- boxes ------------------------------------------------------------------

inline json to_json_value(const BBox2D& b) {
  return {{"view", to_string(b.view)},   {"label", to_string(b.label)},
          {"x_min_px", b.x_min},         {"y_min_px", b.y_min},
          {"x_max_px", b.x_max},         {"y_max_px", b.y_max},
          {"confidence", b.confidence}};
}

inline BBox2D bbox_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  BBox2D b;
  b.view = enumerated(j, "view", path, parse_view);
  b.label = enumerated(j, "label", path, parse_label);
  b.x_min = number(j, "x_min_px", path);
  b.y_min = number(j, "y_min_px", path);
  b.x_max = number(j, "x_max_px", path);
  b.y_max = number(j, "y_max_px", path);
  b.confidence = number_or(j, "confidence", path, 1.0);
  try {
    validate(b);
  } catch (const Error& e) {
    invalid(path, e.what());
  }
  return b;
}

// -- screws -----------------------------------------------------------------

inline json to_json_value(const Screw3D& s) {
  return {{"id", s.id},
          {"label", to_string(s.label)},
          {"side", to_string(s.side)},
          {"target_c1_mm", jsonio::point(s.target_c1)},
          {"entry_c2_mm", jsonio::point(s.entry_c2)},
          {"radius_mm", s.radius}};
}

inline Screw3D screw_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  Screw3D s;
  s.id = string(j, "id", path);
  s.label = enumerated(j, "label", path, parse_label);
  s.side = enumerated(j, "side", path, parse_side);
  s.target_c1 = point3(j, "target_c1_mm", path);
  s.entry_c2 = point3(j, "entry_c2_mm", path);
  s.radius = number(j, "radius_mm", path);
  try {
    validate(s);
  } catch (const Error& e) {
    invalid(path, e.what());
  }
  return s;
}

inline json to_json_value(const ScrewSpec& s) {
  return {{"length_mm", s.length_mm},
          {"diameter_mm", s.diameter_mm},
          {"catalog_length_mm", s.catalog_length_mm},
          {"catalog_diameter_mm", s.catalog_diameter_mm}};
}

inline ScrewSpec spec_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  return {number(j, "length_mm", path), number(j, "diameter_mm", path),
          number(j, "catalog_length_mm", path), number(j, "catalog_diameter_mm", path)};
}

inline json to_json_value(const ScrewProjection2D& p) {
  return {{"view", to_string(p.view)},
          {"target_px", jsonio::point(p.target_px)},
          {"entry_px", jsonio::point(p.entry_px)},
          {"radius_px", p.radius_px}};
}

inline ScrewProjection2D projection_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  ScrewProjection2D p;
  p.view = enumerated(j, "view", path, parse_view);
  p.target_px = point2(j, "target_px", path);
  p.entry_px = point2(j, "entry_px", path);
  p.radius_px = number(j, "radius_px", path);
  return p;
}

inline json to_json_value(const Warning& w) { return {{"code", w.code}, {"detail", w.detail}}; }

inline json to_json_value(const std::vector<Warning>& ws) {
  json arr = json::array();
  for (const auto& w : ws) arr.push_back(to_json_value(w));
  return arr;
}

inline std::vector<Warning> warnings_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) jsonio::invalid(path, "expected an array");
  std::vector<Warning> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string here = path + "[" + std::to_string(i) + "]";
    out.push_back({jsonio::string(j[i], "code", here), jsonio::string(j[i], "detail", here)});
  }
  return out;
}

inline json to_json_value(const DiscrepancyModel& m) {
  return {{"gain_a", m.gain_a}, {"offset_b_mm", m.offset_b}};
}

inline DiscrepancyModel discrepancy_from_json(const json& j, const std::string& path) {
  return {jsonio::number(j, "gain_a", path), jsonio::number(j, "offset_b_mm", path)};
}

// -- edits ------------------------------------------------------------------

inline json to_json_value(const EditOp& op) {
  struct Encoder {
    json operator()(const Translate& t) const {
      return {{"kind", "translate"}, {"view", to_string(t.view)}, {"du_px", t.du_px},
              {"dv_px", t.dv_px}};
    }
    json operator()(const MoveEndpoint& m) const {
      return {{"kind", "move_endpoint"}, {"view", to_string(m.view)},
              {"endpoint", to_string(m.endpoint)}, {"new_px", jsonio::point(m.new_px)}};
    }
    json operator()(const Resize& r) const {
      return {{"kind", "resize"}, {"new_radius_mm", r.new_radius_mm}};
    }
  };
  return std::visit(Encoder{}, op);
}

inline EditOp edit_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  const std::string kind = string(j, "kind", path);
  if (kind == "translate")
    return Translate{enumerated(j, "view", path, parse_view), number(j, "du_px", path),
                     number(j, "dv_px", path)};
  if (kind == "move_endpoint")
    return MoveEndpoint{enumerated(j, "view", path, parse_view),
                        enumerated(j, "endpoint", path, parse_endpoint),
                        point2(j, "new_px", path)};
  if (kind == "resize") return Resize{number(j, "new_radius_mm", path)};
  invalid(path + ".kind", "unknown edit kind '" + kind + "'");
}

}  // namespace fluoroplan
