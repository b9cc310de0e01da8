#pragma once

// Per-view calibration and the orthographic projection model between world
// millimetres and AP/LP pixel space.
//
// AP observes (y, z); LP observes (x, z). z is the only shared axis, so the
// vertical pixel coordinate is where the two views are reconciled.

#include <cmath>
#include <string>

#include "fluoroplan/core.hpp"

namespace fluoroplan {

/// Which image edge the anterior side of the patient faces in the LP view.
enum class AnteriorAt { Left, Right };

inline std::string_view to_string(AnteriorAt a) { return a == AnteriorAt::Left ? "left" : "right"; }

inline AnteriorAt parse_anterior_at(std::string_view s) {
  if (s == "left") return AnteriorAt::Left;
  if (s == "right") return AnteriorAt::Right;
  throw Error(ErrorCode::InvalidArgument, "anterior_at must be 'left' or 'right'");
}

/// Axis-aligned affine map between world mm and image pixels for one view.
struct ViewCalibration {
  ViewKind view = ViewKind::AP;
  double mm_per_px_u = 1.0;
  double mm_per_px_v = 1.0;
  Point2 origin_px;
  double width_px = 512.0;
  double height_px = 512.0;
  AnteriorAt anterior_at = AnteriorAt::Left;  // LP only

  friend bool operator==(const ViewCalibration&, const ViewCalibration&) = default;

  static ViewCalibration identity(ViewKind view, double width = 512.0, double height = 512.0) {
    ViewCalibration c;
    c.view = view;
    c.width_px = width;
    c.height_px = height;
    return c;
  }

  /// Orientation sign of the world axis seen horizontally (+1 unless LP is mirrored).
  double u_sign() const {
    return (view == ViewKind::LP && anterior_at == AnteriorAt::Right) ? -1.0 : 1.0;
  }
};

inline void validate(const ViewCalibration& c) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(c.mm_per_px_u) || !positive(c.mm_per_px_v))
    throw Error(ErrorCode::InvalidArgument, "calibration scales must be strictly positive");
  if (!positive(c.width_px) || !positive(c.height_px))
    throw Error(ErrorCode::InvalidArgument, "calibration image size must be strictly positive");
  if (!is_finite(c.origin_px))
    throw Error(ErrorCode::InvalidArgument, "calibration origin must be finite");
}

/// Value of the world axis this view cannot see (x for AP, y for LP).
inline double hidden_coordinate(const Point3& p, ViewKind view) {
  return view == ViewKind::AP ? p.x : p.y;
}

/// Value of the world axis this view shows horizontally (y for AP, x for LP).
inline double horizontal_coordinate(const Point3& p, ViewKind view) {
  return view == ViewKind::AP ? p.y : p.x;
}

/// World mm along the horizontal axis -> pixel u.
inline double world_to_u(double w, const ViewCalibration& c) {
  const double u = c.origin_px.u + w / c.mm_per_px_u;
  return c.u_sign() > 0 ? u : c.width_px - u;
}

inline double u_to_world(double u, const ViewCalibration& c) {
  const double unmirrored = c.u_sign() > 0 ? u : c.width_px - u;
  return (unmirrored - c.origin_px.u) * c.mm_per_px_u;
}

inline double world_to_v(double z, const ViewCalibration& c) {
  return c.origin_px.v + z / c.mm_per_px_v;
}

inline double v_to_world(double v, const ViewCalibration& c) {
  return (v - c.origin_px.v) * c.mm_per_px_v;
}

inline Point2 project_point(const Point3& p, const ViewCalibration& calib) {
  return {world_to_u(horizontal_coordinate(p, calib.view), calib), world_to_v(p.z, calib)};
}

/// Inverse of project_point given the coordinate the view does not observe.
inline Point3 backproject_point(const Point2& q, const ViewCalibration& calib, double hidden) {
  const double h = u_to_world(q.u, calib);
  const double z = v_to_world(q.v, calib);
  if (calib.view == ViewKind::AP) return {hidden, h, z};
  return {h, hidden, z};
}

struct ScrewProjection2D {
  ViewKind view = ViewKind::AP;
  Point2 target_px;
  Point2 entry_px;
  double radius_px = 0.0;

  friend bool operator==(const ScrewProjection2D&, const ScrewProjection2D&) = default;
};

/// radius_px uses the horizontal scale; the glyph stays circular under
/// anisotropic calibration.
inline ScrewProjection2D project_screw(const Screw3D& s, const ViewCalibration& calib) {
  validate(s);
  ScrewProjection2D out;
  out.view = calib.view;
  out.target_px = project_point(s.target_c1, calib);
  out.entry_px = project_point(s.entry_c2, calib);
  out.radius_px = s.radius / calib.mm_per_px_u;
  if (out.target_px == out.entry_px)
    throw Error(ErrorCode::DegenerateProjection,
                "screw " + s.id + " is viewed end-on in " + std::string(to_string(calib.view)));
  return out;
}

/// Both calibrations of a biplanar case.
struct CalibrationPair {
  ViewCalibration ap = ViewCalibration::identity(ViewKind::AP);
  ViewCalibration lp = ViewCalibration::identity(ViewKind::LP);

  const ViewCalibration& of(ViewKind v) const { return v == ViewKind::AP ? ap : lp; }

  friend bool operator==(const CalibrationPair&, const CalibrationPair&) = default;
};

}  // namespace fluoroplan
