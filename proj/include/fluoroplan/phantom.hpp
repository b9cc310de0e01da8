#pragma once

// Synthetic lumbar phantoms with known pedicle corridors, and plan-vs-truth
// error metrics.
//
// A phantom is a vertical stack of box-shaped vertebrae. Neighbouring boxes
// overlap by exactly the disk height. Images are schematic: bright
// rectangles on a dark background plus Gaussian noise. The seed only
// drives the noise; boxes and truth depend on the geometry alone.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fluoroplan/io/case_file.hpp"
#include "fluoroplan/io/plan.hpp"

namespace fluoroplan {

struct PhantomSpec {
  int levels = 2;
  double body_width_mm = 50.0;   // mediolateral, AP box width
  double body_height_mm = 30.0;  // craniocaudal
  double body_depth_mm = 45.0;   // anteroposterior, LP box width
  double disk_height_mm = 8.0;
  double corridor_radius_mm = 8.0;

  double mm_per_px = 1.0;
  int image_width_px = 256;
  int image_height_px = 256;
  AnteriorAt anterior_at = AnteriorAt::Left;

  // Simulated LP craniocaudal mismatch: LP reads z_LP = (z - offset) / gain.
  double lp_gain = 1.0;
  double lp_offset_mm = 0.0;

  double noise_sigma = 6.0;  // gray levels
  std::uint64_t seed = 0;
};

/// One ground-truth pedicle corridor (a cylinder about entry-target axis).
struct TruthCorridor {
  VertebraLabel label = VertebraLabel::L4;
  Side side = Side::L;
  Point3 entry_mm;
  Point3 target_mm;
  double corridor_radius_mm = 0.0;

  friend bool operator==(const TruthCorridor&, const TruthCorridor&) = default;
};

struct Phantom {
  CaseFile case_file;  // resolved, images in memory
  std::vector<TruthCorridor> truth;
};

/// Labels of an n-level phantom, cranial first, ending at L5.
inline std::vector<VertebraLabel> phantom_labels(int levels) {
  std::vector<VertebraLabel> out;
  for (int i = 0; i < levels; ++i)
    out.push_back(static_cast<VertebraLabel>(static_cast<int>(VertebraLabel::L5) - levels + 1 + i));
  return out;
}

inline void validate(const PhantomSpec& s) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (s.levels < 1 || s.levels > static_cast<int>(kMaxVertebrae))
    throw Error(ErrorCode::SpecError, "phantom levels must be 1..3");
  if (!positive(s.body_width_mm) || !positive(s.body_height_mm) || !positive(s.body_depth_mm))
    throw Error(ErrorCode::SpecError, "vertebral body dimensions must be positive");
  if (!positive(s.disk_height_mm)) throw Error(ErrorCode::SpecError, "disk height must be positive");
  if (!(2.0 * s.disk_height_mm < s.body_height_mm))
    throw Error(ErrorCode::SpecError, "disk height must be less than half the body height");
  if (!positive(s.corridor_radius_mm))
    throw Error(ErrorCode::SpecError, "corridor radius must be positive");
  if (!positive(s.mm_per_px) || s.image_width_px <= 0 || s.image_height_px <= 0)
    throw Error(ErrorCode::SpecError, "calibration parameters must be positive");
  if (!positive(s.lp_gain)) throw Error(ErrorCode::SpecError, "LP gain must be positive");
  if (!(s.noise_sigma >= 0.0)) throw Error(ErrorCode::SpecError, "noise sigma must be non-negative");
}

namespace detail {

inline void fill_rect(GrayImage& img, const BBox2D& b, std::uint16_t value) {
  const int u0 = std::max(0, static_cast<int>(std::floor(b.x_min)));
  const int u1 = std::min(img.width, static_cast<int>(std::ceil(b.x_max)));
  const int v0 = std::max(0, static_cast<int>(std::floor(b.y_min)));
  const int v1 = std::min(img.height, static_cast<int>(std::ceil(b.y_max)));
  for (int v = v0; v < v1; ++v)
    for (int u = u0; u < u1; ++u) {
      auto& px = img.pixels[static_cast<std::size_t>(v) * img.width + u];
      px = std::min<std::uint16_t>(255, px + value);
    }
}

inline GrayImage render_view(const PhantomSpec& spec, const std::vector<BBox2D>& boxes,
                             ViewKind view, std::mt19937_64& rng) {
  GrayImage img;
  img.width = spec.image_width_px;
  img.height = spec.image_height_px;
  img.bit_depth = 8;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 40);
  for (const auto& b : boxes)
    if (b.view == view) fill_rect(img, b, 110);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  for (auto& px : img.pixels) {
    const double v = spec.noise_sigma > 0.0 ? px + noise(rng) : px;
    px = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return img;
}

}  // namespace detail

inline Phantom generate_phantom(const PhantomSpec& spec) {
  validate(spec);

  CalibrationPair calibs;
  for (ViewCalibration* c : {&calibs.ap, &calibs.lp}) {
    c->mm_per_px_u = c->mm_per_px_v = spec.mm_per_px;
    c->width_px = spec.image_width_px;
    c->height_px = spec.image_height_px;
    c->origin_px = {spec.image_width_px / 2.0, spec.image_height_px / 2.0};
  }
  calibs.lp.anterior_at = spec.anterior_at;

  const int n = spec.levels;
  const double stack = n * spec.body_height_mm - (n - 1) * spec.disk_height_mm;
  const double x0 = -spec.body_depth_mm / 2.0, x1 = spec.body_depth_mm / 2.0;
  const double half_w = spec.body_width_mm / 2.0;
  const auto labels = phantom_labels(n);

  Phantom out;
  CaseFile& c = out.case_file;
  c.ap_image = "ap.png";
  c.lp_image = "lp.png";
  c.calibrations = calibs;
  c.ivdl = {IvdlMode::Overlap, spec.disk_height_mm};

  for (int i = 0; i < n; ++i) {
    const double z_top = -stack / 2.0 + i * (spec.body_height_mm - spec.disk_height_mm);
    const double z_bot = z_top + spec.body_height_mm;

    BBox2D ap{ViewKind::AP, labels[i], world_to_u(-half_w, calibs.ap), world_to_v(z_top, calibs.ap),
              world_to_u(half_w, calibs.ap), world_to_v(z_bot, calibs.ap), 1.0};
    const double ua = world_to_u(x0, calibs.lp), ub = world_to_u(x1, calibs.lp);
    const double lp_top = (z_top - spec.lp_offset_mm) / spec.lp_gain;
    const double lp_bot = (z_bot - spec.lp_offset_mm) / spec.lp_gain;
    BBox2D lp{ViewKind::LP, labels[i], std::min(ua, ub), world_to_v(lp_top, calibs.lp),
              std::max(ua, ub), world_to_v(lp_bot, calibs.lp), 1.0};
    for (const BBox2D& b : {ap, lp})
      if (b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > spec.image_width_px ||
          b.y_max > spec.image_height_px)
        throw Error(ErrorCode::SpecError, "phantom geometry exceeds the image bounds");
    c.raw_annotations.push_back(ap);
    c.raw_annotations.push_back(lp);

    // Corridor from the posterolateral pedicle entry into the anterior body.
    for (Side side : {Side::L, Side::R}) {
      const double s = side_sign(side);
      TruthCorridor t;
      t.label = labels[i];
      t.side = side;
      t.target_mm = {x0 + 0.15 * spec.body_depth_mm, s * 0.1 * spec.body_width_mm,
                     z_top + 0.3 * spec.body_height_mm};
      t.entry_mm = {x1 - 0.1 * spec.body_depth_mm, s * 0.4 * spec.body_width_mm,
                    z_bot - 0.3 * spec.body_height_mm};
      t.corridor_radius_mm = spec.corridor_radius_mm;
      out.truth.push_back(t);
    }
  }

  resolve_case(c);
  std::mt19937_64 rng(spec.seed);
  c.ap_pixels = detail::render_view(spec, c.raw_annotations, ViewKind::AP, rng);
  c.lp_pixels = detail::render_view(spec, c.raw_annotations, ViewKind::LP, rng);
  return out;
}

inline json truth_to_json(const std::vector<TruthCorridor>& truth) {
  json screws = json::array();
  for (const auto& t : truth)
    screws.push_back({{"label", to_string(t.label)},
                      {"side", to_string(t.side)},
                      {"entry_mm", jsonio::point(t.entry_mm)},
                      {"target_mm", jsonio::point(t.target_mm)},
                      {"corridor_radius_mm", t.corridor_radius_mm}});
  return {{"screws", screws}};
}

inline std::vector<TruthCorridor> truth_from_json(const json& j) {
  using namespace jsonio;
  const json& screws = field(j, "screws", "truth");
  if (!screws.is_array()) invalid("truth.screws", "expected an array");
  std::vector<TruthCorridor> out;
  for (std::size_t i = 0; i < screws.size(); ++i) {
    const std::string p = "truth.screws[" + std::to_string(i) + "]";
    TruthCorridor t;
    t.label = enumerated(screws[i], "label", p, parse_label);
    t.side = enumerated(screws[i], "side", p, parse_side);
    t.entry_mm = point3(screws[i], "entry_mm", p);
    t.target_mm = point3(screws[i], "target_mm", p);
    t.corridor_radius_mm = number(screws[i], "corridor_radius_mm", p);
    if (!(t.corridor_radius_mm > 0.0)) invalid(p + ".corridor_radius_mm", "must be positive");
    if (t.entry_mm == t.target_mm) invalid(p, "corridor axis has zero length");
    out.push_back(t);
  }
  return out;
}

/// Writes ap.png, lp.png, case.json and truth.json into dir.
inline void write_phantom(const Phantom& ph, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_png(dir / ph.case_file.ap_image, ph.case_file.ap_pixels);
  write_png(dir / ph.case_file.lp_image, ph.case_file.lp_pixels);
  write_text_file(dir / "case.json", case_to_json(ph.case_file).dump(2) + "\n");
  write_text_file(dir / "truth.json", truth_to_json(ph.truth).dump(2) + "\n");
}

struct PlanError {
  std::string screw_id;
  double entry_error_mm = 0.0;
  double target_error_mm = 0.0;
  bool contained = false;
};

inline Point3 cross(Point3 a, Point3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Distance from p to the infinite line through a and b.
inline double distance_to_axis(Point3 p, Point3 a, Point3 b) {
  const Point3 d = b - a;
  return norm(cross(p - a, d)) / norm(d);
}

inline std::vector<PlanError> evaluate_plan(const PlanDocument& plan,
                                            const std::vector<TruthCorridor>& truth) {
  std::vector<PlanError> out;
  for (const auto& ps : plan.screws) {
    const Screw3D& s = ps.screw;
    auto it = std::find_if(truth.begin(), truth.end(), [&](const TruthCorridor& t) {
      return t.label == s.label && t.side == s.side;
    });
    if (it == truth.end())
      throw Error(ErrorCode::MissingTruth, "no truth corridor for screw " + s.id);
    PlanError e;
    e.screw_id = s.id;
    e.entry_error_mm = distance(s.entry_c2, it->entry_mm);
    e.target_error_mm = distance(s.target_c1, it->target_mm);
    e.contained =
        distance_to_axis(s.entry_c2, it->entry_mm, it->target_mm) <= it->corridor_radius_mm &&
        distance_to_axis(s.target_c1, it->entry_mm, it->target_mm) <= it->corridor_radius_mm;
    out.push_back(e);
  }
  return out;
}

}  // namespace fluoroplan
