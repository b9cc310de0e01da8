#pragma once

// Synchronized biplanar editing. Every gesture is lifted onto the single 3D
// screw, so both projections are recomputed from one state and the shared z
// axis can never disagree between views.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fluoroplan/anatomy.hpp"
#include "fluoroplan/core.hpp"
#include "fluoroplan/geometry.hpp"

namespace fluoroplan {

enum class Endpoint { Target, Entry };

inline std::string_view to_string(Endpoint e) { return e == Endpoint::Target ? "target" : "entry"; }

inline Endpoint parse_endpoint(std::string_view s) {
  if (s == "target") return Endpoint::Target;
  if (s == "entry") return Endpoint::Entry;
  throw Error(ErrorCode::InvalidArgument, "endpoint must be 'target' or 'entry'");
}

struct Translate {
  ViewKind view = ViewKind::AP;
  double du_px = 0.0;
  double dv_px = 0.0;

  friend bool operator==(const Translate&, const Translate&) = default;
};

struct MoveEndpoint {
  ViewKind view = ViewKind::AP;
  Endpoint endpoint = Endpoint::Target;
  Point2 new_px;

  friend bool operator==(const MoveEndpoint&, const MoveEndpoint&) = default;
};

struct Resize {
  double new_radius_mm = 0.0;

  friend bool operator==(const Resize&, const Resize&) = default;
};

using EditOp = std::variant<Translate, MoveEndpoint, Resize>;

enum class HitRegion { None, Body, TargetEndpoint, EntryEndpoint };

inline std::string_view to_string(HitRegion h) {
  switch (h) {
    case HitRegion::None: return "None";
    case HitRegion::Body: return "Body";
    case HitRegion::TargetEndpoint: return "TargetEndpoint";
    case HitRegion::EntryEndpoint: return "EntryEndpoint";
  }
  return "None";
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const double du = b.u - a.u, dv = b.v - a.v;
  const double len2 = du * du + dv * dv;
  double t = len2 > 0.0 ? ((p.u - a.u) * du + (p.v - a.v) * dv) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, {a.u + t * du, a.v + t * dv});
}

/// Endpoint discs (radius grab_px) take priority over the capsule body.
inline HitRegion hit_test_screw(Point2 click, const ScrewProjection2D& proj, double grab_px) {
  if (!(grab_px > 0.0)) throw Error(ErrorCode::InvalidArgument, "grab radius must be positive");
  const double dt = distance(click, proj.target_px);
  const double de = distance(click, proj.entry_px);
  if (dt <= grab_px || de <= grab_px)
    return dt <= de ? HitRegion::TargetEndpoint : HitRegion::EntryEndpoint;
  if (point_segment_distance(click, proj.target_px, proj.entry_px) <= proj.radius_px)
    return HitRegion::Body;
  return HitRegion::None;
}

namespace detail {

inline Screw3D apply(Screw3D s, const Translate& t, const CalibrationPair& calibs) {
  const auto& c = calibs.of(t.view);
  const double dh = c.u_sign() * t.du_px * c.mm_per_px_u;
  const double dz = t.dv_px * c.mm_per_px_v;
  for (Point3* p : {&s.target_c1, &s.entry_c2}) {
    (t.view == ViewKind::AP ? p->y : p->x) += dh;
    p->z += dz;
  }
  return s;
}

inline Screw3D apply(Screw3D s, const MoveEndpoint& m, const CalibrationPair& calibs) {
  Point3& p = m.endpoint == Endpoint::Target ? s.target_c1 : s.entry_c2;
  if (!is_finite(m.new_px)) throw Error(ErrorCode::InvalidArgument, "endpoint position must be finite");
  p = backproject_point(m.new_px, calibs.of(m.view), hidden_coordinate(p, m.view));
  return s;
}

inline Screw3D apply(Screw3D s, const Resize& r, const CalibrationPair&) {
  if (!(r.new_radius_mm > 0.0) || !std::isfinite(r.new_radius_mm))
    throw Error(ErrorCode::InvalidArgument, "resize radius must be positive");
  s.radius = r.new_radius_mm;
  return s;
}

}  // namespace detail

/// Applies a pixel-space gesture from one view to the 3D screw. The axis the
/// edited view cannot see is left untouched; the other view follows because
/// both are projections of the returned screw.
inline Screw3D apply_edit(const Screw3D& s, const EditOp& op, const CalibrationPair& calibs) {
  validate(s);
  Screw3D out = std::visit([&](const auto& o) { return detail::apply(s, o, calibs); }, op);
  if (out.target_c1 == out.entry_c2)
    throw Error(ErrorCode::DegenerateScrew, "edit collapses screw " + s.id + " to zero length");
  if (!is_finite(out.target_c1) || !is_finite(out.entry_c2))
    throw Error(ErrorCode::InvalidArgument, "edit produced non-finite coordinates");
  return out;
}

/// z_AP = gain_a * z_LP + offset_b, reconciling LP's craniocaudal readings with AP.
struct DiscrepancyModel {
  double gain_a = 1.0;
  double offset_b = 0.0;  // mm

  double correct(double z_lp) const { return gain_a * z_lp + offset_b; }

  friend bool operator==(const DiscrepancyModel&, const DiscrepancyModel&) = default;
};

struct ZCorrespondence {
  double z_ap_mm = 0.0;
  double z_lp_mm = 0.0;
};

/// Least-squares line through (z_LP, z_AP); exact interpolation for two points.
inline DiscrepancyModel fit_discrepancy(const std::vector<ZCorrespondence>& pts) {
  if (pts.size() < 2)
    throw Error(ErrorCode::InsufficientCorrespondences,
                "discrepancy fit needs at least 2 correspondences");
  const double n = static_cast<double>(pts.size());
  double mean_lp = 0.0, mean_ap = 0.0;
  for (const auto& p : pts) mean_lp += p.z_lp_mm, mean_ap += p.z_ap_mm;
  mean_lp /= n;
  mean_ap /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    const double dx = p.z_lp_mm - mean_lp;
    sxx += dx * dx;
    sxy += dx * (p.z_ap_mm - mean_ap);
  }
  const bool all_equal = std::all_of(pts.begin(), pts.end(), [&](const ZCorrespondence& p) {
    return p.z_lp_mm == pts.front().z_lp_mm;
  });
  if (all_equal || sxx == 0.0)
    throw Error(ErrorCode::DegenerateFit, "all LP z readings are equal");
  const double a = sxy / sxx;
  if (!(a > 0.0))
    throw Error(ErrorCode::NonPositiveGain, "fitted discrepancy gain is not positive");
  return {a, mean_ap - a * mean_lp};
}

/// Top and bottom box edges of every paired vertebra, as world z in each view.
inline std::vector<ZCorrespondence> box_edge_correspondences(const std::vector<VertebraPair>& pairs,
                                                             const CalibrationPair& calibs) {
  std::vector<ZCorrespondence> out;
  for (const auto& p : pairs) {
    out.push_back({v_to_world(p.ap_box.y_min, calibs.ap), v_to_world(p.lp_box.y_min, calibs.lp)});
    out.push_back({v_to_world(p.ap_box.y_max, calibs.ap), v_to_world(p.lp_box.y_max, calibs.lp)});
  }
  return out;
}

/// Rewrites LP boxes' vertical bounds through the correction; other views and
/// horizontal bounds pass through unchanged.
inline std::vector<BBox2D> apply_discrepancy(const DiscrepancyModel& model,
                                             const std::vector<BBox2D>& boxes,
                                             const ViewCalibration& calib_lp) {
  if (!(model.gain_a > 0.0))
    throw Error(ErrorCode::NonPositiveGain, "discrepancy gain must be positive");
  std::vector<BBox2D> out = boxes;
  for (auto& b : out) {
    if (b.view != ViewKind::LP) continue;
    b.y_min = world_to_v(model.correct(v_to_world(b.y_min, calib_lp)), calib_lp);
    b.y_max = world_to_v(model.correct(v_to_world(b.y_max, calib_lp)), calib_lp);
  }
  return out;
}

}  // namespace fluoroplan
