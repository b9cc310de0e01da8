#pragma once

// Vertebral bounding boxes: AP/LP pairing, click hit-testing, and the
// intervertebral disk length (IVDL) derived from overlapping neighbours.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fluoroplan/core.hpp"
#include "fluoroplan/geometry.hpp"

namespace fluoroplan {

/// Maximum number of vertebrae a single biplanar case may plan on.
inline constexpr std::size_t kMaxVertebrae = 3;

struct BBox2D {
  ViewKind view = ViewKind::AP;
  VertebraLabel label = VertebraLabel::L4;
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  double confidence = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  Point2 center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }

  /// Closed containment with a slack in pixels.
  bool contains(Point2 p, double slack = 0.0) const {
    return p.u >= x_min - slack && p.u <= x_max + slack && p.v >= y_min - slack &&
           p.v <= y_max + slack;
  }

  friend bool operator==(const BBox2D&, const BBox2D&) = default;
};

inline void validate(const BBox2D& b) {
  for (double v : {b.x_min, b.y_min, b.x_max, b.y_max})
    if (!std::isfinite(v))
      throw Error(ErrorCode::ValidationError, "bounding box coordinates must be finite");
  if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max))
    throw Error(ErrorCode::ValidationError, "bounding box requires x_min < x_max and y_min < y_max");
  if (!(b.confidence >= 0.0 && b.confidence <= 1.0))
    throw Error(ErrorCode::ValidationError, "bounding box confidence must lie in [0,1]");
}

struct VertebraPair {
  VertebraLabel label = VertebraLabel::L4;
  BBox2D ap_box;
  BBox2D lp_box;

  friend bool operator==(const VertebraPair&, const VertebraPair&) = default;
};

enum class IvdlMode { Fixed, Overlap };

struct IvdlPolicy {
  IvdlMode mode = IvdlMode::Overlap;
  double fixed_mm = 0.0;

  friend bool operator==(const IvdlPolicy&, const IvdlPolicy&) = default;
};

/// Matches AP and LP boxes by label, ordered cranio-caudally by AP y_min.
inline std::vector<VertebraPair> pair_views(const std::vector<BBox2D>& boxes) {
  std::map<VertebraLabel, BBox2D> ap, lp;
  for (const auto& b : boxes) {
    validate(b);
    auto& bucket = b.view == ViewKind::AP ? ap : lp;
    if (!bucket.emplace(b.label, b).second)
      throw Error(ErrorCode::DuplicateLabel, "label " + std::string(to_string(b.label)) +
                                                 " appears twice in " +
                                                 std::string(to_string(b.view)));
  }

  std::string unpaired;
  auto collect = [&](const auto& mine, const auto& other) {
    for (const auto& [label, box] : mine)
      if (!other.contains(label)) {
        if (!unpaired.empty()) unpaired += ", ";
        unpaired += std::string(to_string(label)) + " (" + std::string(to_string(box.view)) +
                    " only)";
      }
  };
  collect(ap, lp);
  collect(lp, ap);
  if (!unpaired.empty()) throw Error(ErrorCode::UnpairedLabel, "unpaired labels: " + unpaired);

  std::vector<VertebraPair> pairs;
  for (const auto& [label, box] : ap) pairs.push_back({label, box, lp.at(label)});
  if (pairs.size() > kMaxVertebrae)
    throw Error(ErrorCode::TooManyVertebrae,
                std::to_string(pairs.size()) + " paired vertebrae; at most 3 are supported");

  std::sort(pairs.begin(), pairs.end(), [](const VertebraPair& a, const VertebraPair& b) {
    if (a.ap_box.y_min != b.ap_box.y_min) return a.ap_box.y_min < b.ap_box.y_min;
    return a.label < b.label;
  });
  return pairs;
}

/// Label of the box under the click; overlapping hits go to the nearest centre.
inline VertebraLabel hit_test_vertebra(Point2 click, ViewKind view,
                                       const std::vector<BBox2D>& boxes) {
  const BBox2D* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& b : boxes) {
    if (b.view != view || !b.contains(click)) continue;
    const double d = distance(click, b.center());
    if (d < best_d || (d == best_d && best && b.label < best->label)) {
      best = &b;
      best_d = d;
    }
  }
  if (!best)
    throw Error(ErrorCode::NoHit, "no " + std::string(to_string(view)) + " vertebra at (" +
                                      std::to_string(click.u) + ", " + std::to_string(click.v) +
                                      ")");
  return best->label;
}

/// Vertical overlap of two same-view boxes in pixels (may be <= 0).
inline double vertical_overlap_px(const BBox2D& upper, const BBox2D& lower) {
  return std::min(upper.y_max, lower.y_max) - std::max(upper.y_min, lower.y_min);
}

/// IVDL in mm from the shared vertical band of a cranial and a caudal box.
inline double ivdl_from_overlap(const BBox2D& upper, const BBox2D& lower,
                                const ViewCalibration& calib) {
  if (upper.view != lower.view || upper.view != calib.view)
    throw Error(ErrorCode::InvalidArgument, "IVDL boxes and calibration must share one view");
  if (!(upper.y_min < lower.y_min))
    throw Error(ErrorCode::InvalidArgument, "upper box must start cranially of the lower box");
  const double overlap_px = vertical_overlap_px(upper, lower);
  if (overlap_px <= 0.0)
    throw Error(ErrorCode::NoOverlap, std::string(to_string(upper.label)) + "/" +
                                          std::string(to_string(lower.label)) +
                                          " boxes do not overlap vertically");
  return overlap_px * calib.mm_per_px_v;
}

/// Shrinks the box vertically by ivdl_px at both ends.
inline BBox2D trim_box(const BBox2D& box, double ivdl_px) {
  if (!(ivdl_px >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "IVDL trim must be non-negative");
  if (!(2.0 * ivdl_px < box.height()))
    throw Error(ErrorCode::DegenerateTrim,
                "IVDL trim consumes the whole " + std::string(to_string(box.label)) + " box");
  BBox2D out = box;
  out.y_min += ivdl_px;
  out.y_max -= ivdl_px;
  return out;
}

inline BBox2D split_half(const BBox2D& ap_box, Side side) {
  if (ap_box.view != ViewKind::AP)
    throw Error(ErrorCode::InvalidArgument, "split_half applies to AP boxes");
  const double center = (ap_box.x_min + ap_box.x_max) / 2.0;
  BBox2D out = ap_box;
  if (side == Side::L)
    out.x_max = center;
  else
    out.x_min = center;
  return out;
}

/// IVDL in mm for each pair (same order). Overlap mode averages the
/// overlaps with both neighbours and falls back to fixed_mm with a warning.
inline std::vector<double> resolve_ivdl(const std::vector<VertebraPair>& pairs,
                                        const IvdlPolicy& policy, const ViewCalibration& ap_calib,
                                        std::vector<Warning>* warnings = nullptr) {
  std::vector<double> out(pairs.size(), policy.fixed_mm);
  if (policy.mode == IvdlMode::Fixed) return out;

  std::vector<std::optional<double>> gaps;  // gaps[i] is between pairs[i] and pairs[i+1]
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
    try {
      gaps.push_back(ivdl_from_overlap(pairs[i].ap_box, pairs[i + 1].ap_box, ap_calib));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOverlap) throw;
      gaps.push_back(std::nullopt);
    }
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double sum = 0.0;
    int n = 0;
    if (i > 0 && gaps[i - 1]) sum += *gaps[i - 1], ++n;
    if (i < gaps.size() && gaps[i]) sum += *gaps[i], ++n;
    if (n > 0) {
      out[i] = sum / n;
    } else if (warnings) {
      warnings->push_back({"IvdlFallback", std::string(to_string(pairs[i].label)) +
                                               ": no overlapping neighbour, using fixed_mm"});
    }
  }
  return out;
}

}  // namespace fluoroplan
