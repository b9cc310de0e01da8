#pragma once

// Screw initialization from a vertebra's AP/LP boxes, screw sizing against a
// catalog, and containment checks of a screw against its vertebra.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fluoroplan/anatomy.hpp"
#include "fluoroplan/core.hpp"
#include "fluoroplan/geometry.hpp"

namespace fluoroplan {

enum class ZPolicy {
  TrimmedEdges,  // target on the trimmed top edge, entry on the trimmed bottom edge
  Centered,      // both endpoints at mid-height of the box
};

inline std::string_view to_string(ZPolicy p) {
  return p == ZPolicy::TrimmedEdges ? "paper_literal" : "centered";
}

inline ZPolicy parse_z_policy(std::string_view s) {
  if (s == "paper_literal") return ZPolicy::TrimmedEdges;
  if (s == "centered") return ZPolicy::Centered;
  throw Error(ErrorCode::InvalidArgument, "z_policy must be 'paper_literal' or 'centered'");
}

struct PaddingConfig {
  double pad_target = 5.0;  // mm
  double pad_entry = 5.0;   // mm
  ZPolicy z_policy = ZPolicy::TrimmedEdges;
  double default_radius = 3.25;  // mm

  friend bool operator==(const PaddingConfig&, const PaddingConfig&) = default;
};

inline void validate(const PaddingConfig& cfg) {
  if (!(cfg.pad_target >= 0.0) || !(cfg.pad_entry >= 0.0))
    throw Error(ErrorCode::ValidationError, "paddings must be non-negative");
  if (!(cfg.default_radius > 0.0) || !std::isfinite(cfg.default_radius))
    throw Error(ErrorCode::ValidationError, "default radius must be positive");
}

struct ScrewCatalog {
  std::vector<double> diameters_mm{4.5, 5.5, 6.5, 7.5};
  std::vector<double> lengths_mm{30, 35, 40, 45, 50, 55};

  friend bool operator==(const ScrewCatalog&, const ScrewCatalog&) = default;
};

inline void validate(const ScrewCatalog& c) {
  for (const auto* list : {&c.diameters_mm, &c.lengths_mm}) {
    if (list->empty()) throw Error(ErrorCode::ValidationError, "screw catalog lists must be non-empty");
    if (!std::is_sorted(list->begin(), list->end()))
      throw Error(ErrorCode::ValidationError, "screw catalog lists must be sorted ascending");
    for (double v : *list)
      if (!(v > 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::ValidationError, "screw catalog entries must be positive");
  }
}

struct ScrewSpec {
  double length_mm = 0.0;
  double diameter_mm = 0.0;
  double catalog_length_mm = 0.0;
  double catalog_diameter_mm = 0.0;

  friend bool operator==(const ScrewSpec&, const ScrewSpec&) = default;
};

/// World-space extents of a vertebra's boxes.
struct VertebraExtents {
  double y0, y1;  // mediolateral, from AP
  double z0, z1;  // craniocaudal, from AP
  double x0, x1;  // anteroposterior, from LP; x0 is the anterior edge
};

inline VertebraExtents world_extents(const VertebraPair& pair, const CalibrationPair& calibs) {
  const auto& ap = calibs.ap;
  const auto& lp = calibs.lp;
  const double ya = u_to_world(pair.ap_box.x_min, ap), yb = u_to_world(pair.ap_box.x_max, ap);
  const double za = v_to_world(pair.ap_box.y_min, ap), zb = v_to_world(pair.ap_box.y_max, ap);
  const double xa = u_to_world(pair.lp_box.x_min, lp), xb = u_to_world(pair.lp_box.x_max, lp);
  return {std::min(ya, yb), std::max(ya, yb), std::min(za, zb),
          std::max(za, zb), std::min(xa, xb), std::max(xa, xb)};
}

inline double side_sign(Side side) { return side == Side::L ? -1.0 : 1.0; }

/// Places a screw in one half of the vertebra from its AP and LP boxes.
///
/// The target C1 sits pad_target inside the anterior LP edge and pad_target
/// off the AP midline; the entry C2 sits pad_entry inside the posterior LP
/// edge and pad_entry inside the lateral AP edge. Heights come from the AP
/// box, trimmed by the IVDL at both ends.
inline Screw3D init_screw(const VertebraPair& pair, Side side, double ivdl_mm,
                          const PaddingConfig& cfg, const CalibrationPair& calibs) {
  validate(cfg);
  validate(calibs.ap);
  validate(calibs.lp);
  if (!(ivdl_mm >= 0.0)) throw Error(ErrorCode::InvalidArgument, "IVDL must be non-negative");

  // Degenerate trims surface in pixel terms for both views.
  trim_box(pair.ap_box, ivdl_mm / calibs.ap.mm_per_px_v);
  trim_box(pair.lp_box, ivdl_mm / calibs.lp.mm_per_px_v);

  const VertebraExtents e = world_extents(pair, calibs);
  const double half_width = (e.y1 - e.y0) / 2.0;
  const double depth = e.x1 - e.x0;
  if (cfg.pad_target > half_width || cfg.pad_entry >= half_width || cfg.pad_target > depth ||
      cfg.pad_entry > depth)
    throw Error(ErrorCode::PadTooLarge,
                "paddings do not fit inside the " + std::string(to_string(pair.label)) +
                    " half-box");

  const double yc = (e.y0 + e.y1) / 2.0;
  const double s = side_sign(side);

  Screw3D screw;
  screw.id = screw_id(pair.label, side);
  screw.label = pair.label;
  screw.side = side;
  screw.radius = cfg.default_radius;
  screw.target_c1 = {e.x0 + cfg.pad_target, yc + s * cfg.pad_target, 0.0};
  screw.entry_c2 = {e.x1 - cfg.pad_entry, yc + s * (half_width - cfg.pad_entry), 0.0};
  if (cfg.z_policy == ZPolicy::TrimmedEdges) {
    screw.target_c1.z = e.z0 + ivdl_mm;
    screw.entry_c2.z = e.z1 - ivdl_mm;
  } else {
    screw.target_c1.z = screw.entry_c2.z = (e.z0 + e.z1) / 2.0;
  }
  validate(screw);
  return screw;
}

/// Largest catalog entry not exceeding raw (within a sub-micron slack).
inline std::optional<double> snap_down(const std::vector<double>& sorted, double raw) {
  const double slack = 1e-9 * std::max(1.0, std::abs(raw));
  std::optional<double> best;
  for (double v : sorted)
    if (v <= raw + slack) best = v;
  return best;
}

/// Raw screw dimensions and their catalog snap (rounded down). Appends an
/// OutOfRange warning when a raw dimension exceeds the catalog maximum.
inline ScrewSpec compute_screw_spec(const Screw3D& s, const ScrewCatalog& catalog,
                                    std::vector<Warning>* warnings = nullptr) {
  validate(catalog);
  ScrewSpec spec;
  spec.length_mm = distance(s.target_c1, s.entry_c2);
  spec.diameter_mm = 2.0 * s.radius;

  const auto length = snap_down(catalog.lengths_mm, spec.length_mm);
  const auto diameter = snap_down(catalog.diameters_mm, spec.diameter_mm);
  if (!length || !diameter)
    throw Error(ErrorCode::CatalogUnderflow,
                "screw " + s.id + " is smaller than every catalog " +
                    (length ? std::string("diameter") : std::string("length")));
  spec.catalog_length_mm = *length;
  spec.catalog_diameter_mm = *diameter;

  if (warnings) {
    if (spec.length_mm > catalog.lengths_mm.back())
      warnings->push_back({"OutOfRange", "length " + std::to_string(spec.length_mm) +
                                             " mm exceeds catalog maximum"});
    if (spec.diameter_mm > catalog.diameters_mm.back())
      warnings->push_back({"OutOfRange", "diameter " + std::to_string(spec.diameter_mm) +
                                             " mm exceeds catalog maximum"});
  }
  return spec;
}

/// Pixel slack for containment checks; absorbs calibration round-off only.
inline constexpr double kContainmentSlackPx = 1e-9;

/// Reports each screw endpoint that leaves its allowed region: the IVDL-trimmed
/// half box in AP and the IVDL-trimmed box in LP.
inline std::vector<Warning> validate_containment(const Screw3D& s, const VertebraPair& pair,
                                                 double ivdl_mm, const CalibrationPair& calibs) {
  std::vector<Warning> out;

  auto trimmed = [&](const BBox2D& b, const ViewCalibration& c) {
    const double ivdl_px = ivdl_mm / c.mm_per_px_v;
    if (2.0 * ivdl_px < b.height()) return trim_box(b, ivdl_px);
    BBox2D collapsed = b;
    collapsed.y_min = collapsed.y_max = b.center().v;
    return collapsed;
  };
  const BBox2D ap_region = split_half(trimmed(pair.ap_box, calibs.ap), s.side);
  const BBox2D lp_region = trimmed(pair.lp_box, calibs.lp);

  auto check = [&](const BBox2D& region, const ViewCalibration& c, const char* code) {
    const std::pair<const char*, Point3> endpoints[] = {{"target", s.target_c1},
                                                        {"entry", s.entry_c2}};
    for (const auto& [name, p] : endpoints)
      if (!region.contains(project_point(p, c), kContainmentSlackPx))
        out.push_back({code, name});
  };
  check(ap_region, calibs.ap, "APOutOfBox");
  check(lp_region, calibs.lp, "LPOutOfBox");
  return out;
}

}  // namespace fluoroplan
