#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "fluoroplan/fluoroplan.hpp"

namespace fluoroplan::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "fluoroplan-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ViewCalibration random_calibration(ViewKind view, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> scale(0.05, 2.0), origin(-300.0, 300.0),
      size(64.0, 2048.0);
  ViewCalibration c;
  c.view = view;
  c.mm_per_px_u = scale(rng);
  c.mm_per_px_v = scale(rng);
  c.origin_px = {origin(rng), origin(rng)};
  c.width_px = std::round(size(rng));
  c.height_px = std::round(size(rng));
  const bool right = rng() & 1;
  c.anterior_at = (view == ViewKind::LP && right) ? AnteriorAt::Right : AnteriorAt::Left;
  return c;
}

/// Two calibrations sharing the vertical mapping, as the shared z axis requires.
inline CalibrationPair random_calibration_pair(std::mt19937_64& rng) {
  CalibrationPair p{random_calibration(ViewKind::AP, rng), random_calibration(ViewKind::LP, rng)};
  p.lp.mm_per_px_v = p.ap.mm_per_px_v;
  p.lp.origin_px.v = p.ap.origin_px.v;
  return p;
}

inline Point3 random_point(std::mt19937_64& rng, double extent = 500.0) {
  std::uniform_real_distribution<double> d(-extent, extent);
  return {d(rng), d(rng), d(rng)};
}

inline BBox2D box(ViewKind view, VertebraLabel label, double x0, double y0, double x1, double y1) {
  return {view, label, x0, y0, x1, y1, 1.0};
}

/// The worked example: L4 with AP box y in [100,180] z in [50,110] and LP box
/// x in [200,280] under identity calibrations.
inline VertebraPair worked_pair() {
  return {VertebraLabel::L4, box(ViewKind::AP, VertebraLabel::L4, 100, 50, 180, 110),
          box(ViewKind::LP, VertebraLabel::L4, 200, 50, 280, 110)};
}

inline GrayImage blank_image(int w, int h, std::uint16_t value = 0) {
  GrayImage g;
  g.width = w;
  g.height = h;
  g.pixels.assign(static_cast<std::size_t>(w) * h, value);
  return g;
}

/// Writes a case with L4 (the worked pair) and L5 below it, 8 px overlap,
/// identity calibrations on 512x512 images, pads 6 mm.
inline std::filesystem::path write_worked_case(const std::filesystem::path& dir,
                                               json overrides = json::object()) {
  write_png(dir / "ap.png", blank_image(512, 512, 30));
  write_png(dir / "lp.png", blank_image(512, 512, 30));
  CaseFile c;
  c.ap_image = "ap.png";
  c.lp_image = "lp.png";
  c.calibrations = {ViewCalibration::identity(ViewKind::AP), ViewCalibration::identity(ViewKind::LP)};
  const VertebraPair l4 = worked_pair();
  c.raw_annotations = {l4.ap_box, l4.lp_box,
                       box(ViewKind::AP, VertebraLabel::L5, 100, 102, 180, 162),
                       box(ViewKind::LP, VertebraLabel::L5, 200, 102, 280, 162)};
  c.ivdl = {IvdlMode::Overlap, 8.0};
  c.padding.pad_target = 6.0;
  c.padding.pad_entry = 6.0;
  json j = case_to_json(c);
  j.merge_patch(overrides);
  const auto path = dir / "case.json";
  write_text_file(path, j.dump(2));
  return path;
}

}  // namespace fluoroplan::testing
