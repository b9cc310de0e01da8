#pragma once

// Case files: the two images, their calibrations, vertebral annotations and
// planning configuration. Loading validates everything and applies the LP
// discrepancy correction so downstream code sees reconciled boxes.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fluoroplan/anatomy.hpp"
#include "fluoroplan/io/image.hpp"
#include "fluoroplan/io/codec.hpp"
#include "fluoroplan/planning.hpp"
#include "fluoroplan/sync.hpp"

namespace fluoroplan {

struct CaseFile {
  // As written in the file.
  std::filesystem::path source;
  std::string ap_image;
  std::string lp_image;
  CalibrationPair calibrations;
  std::vector<BBox2D> raw_annotations;
  IvdlPolicy ivdl;
  PaddingConfig padding;
  std::optional<std::string> catalog_path;
  bool discrepancy_correction = true;

  // Derived at load time.
  ScrewCatalog catalog;
  std::optional<DiscrepancyModel> discrepancy;
  std::vector<BBox2D> annotations;  // LP boxes corrected when discrepancy is set
  std::vector<VertebraPair> pairs;
  std::vector<double> ivdl_mm;  // parallel to pairs
  std::vector<Warning> warnings;
  GrayImage ap_pixels;
  GrayImage lp_pixels;

  const VertebraPair* find_pair(VertebraLabel label) const {
    for (const auto& p : pairs)
      if (p.label == label) return &p;
    return nullptr;
  }

  double ivdl_for(VertebraLabel label) const {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (pairs[i].label == label) return ivdl_mm[i];
    throw Error(ErrorCode::UnknownLabel,
                "vertebra " + std::string(to_string(label)) + " is not paired in this case");
  }
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

inline json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

inline void check_schema(const json& j, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::ValidationError, what + ": expected a JSON object");
  if (!j.contains("schema"))
    throw Error(ErrorCode::ValidationError, what + ": missing \"schema\" field");
  const json& s = j["schema"];
  if (!s.is_string() || s.get<std::string>() != kSchemaVersion)
    throw Error(ErrorCode::SchemaVersionError,
                what + ": unsupported schema " + s.dump() + " (expected \"1\")");
}

inline ScrewCatalog catalog_from_json(const json& j, const std::string& path) {
  ScrewCatalog c;
  auto list = [&](std::string_view key) {
    const json& arr = jsonio::field(j, key, path);
    if (!arr.is_array()) jsonio::invalid(path + "." + std::string(key), "expected an array");
    std::vector<double> out;
    for (const auto& v : arr) {
      if (!v.is_number()) jsonio::invalid(path + "." + std::string(key), "expected numbers");
      out.push_back(v.get<double>());
    }
    return out;
  };
  c.diameters_mm = list("diameters_mm");
  c.lengths_mm = list("lengths_mm");
  try {
    validate(c);
  } catch (const Error& e) {
    jsonio::invalid(path, e.what());
  }
  return c;
}

inline json to_json_value(const ScrewCatalog& c) {
  return {{"diameters_mm", c.diameters_mm}, {"lengths_mm", c.lengths_mm}};
}

inline ScrewCatalog load_catalog(const std::filesystem::path& path) {
  return catalog_from_json(parse_json_file(path), path.filename().string());
}

inline json case_to_json(const CaseFile& c) {
  json anns = json::array();
  for (const auto& b : c.raw_annotations) anns.push_back(to_json_value(b));
  json j{{"schema", kSchemaVersion},
         {"ap_image", c.ap_image},
         {"lp_image", c.lp_image},
         {"calibration", to_json_value(c.calibrations)},
         {"annotations", anns},
         {"ivdl", {{"mode", c.ivdl.mode == IvdlMode::Fixed ? "fixed" : "overlap"},
                   {"fixed_mm", c.ivdl.fixed_mm}}},
         {"padding",
          {{"pad_target_mm", c.padding.pad_target},
           {"pad_entry_mm", c.padding.pad_entry},
           {"z_policy", to_string(c.padding.z_policy)},
           {"default_radius_mm", c.padding.default_radius}}},
         {"discrepancy_correction", c.discrepancy_correction}};
  if (c.catalog_path) j["catalog"] = *c.catalog_path;
  return j;
}

/// Fills the derived fields of a case from its as-written fields: pairing,
/// LP discrepancy correction and per-vertebra IVDL.
inline void resolve_case(CaseFile& c) {
  const std::string root = "case";
  // Pairing errors are validation failures of the case as a whole.
  try {
    c.pairs = pair_views(c.raw_annotations);
  } catch (const Error& e) {
    jsonio::invalid(root + ".annotations", std::string(to_string(e.code())) + ": " + e.what());
  }

  c.warnings.clear();
  c.discrepancy.reset();
  c.annotations = c.raw_annotations;
  if (c.discrepancy_correction && !c.pairs.empty()) {
    try {
      c.discrepancy = fit_discrepancy(box_edge_correspondences(c.pairs, c.calibrations));
    } catch (const Error& e) {
      jsonio::invalid(root + ".annotations", std::string("discrepancy fit failed: ") + e.what());
    }
    c.annotations = apply_discrepancy(*c.discrepancy, c.raw_annotations, c.calibrations.lp);
    c.pairs = pair_views(c.annotations);
  }
  c.ivdl_mm = resolve_ivdl(c.pairs, c.ivdl, c.calibrations.ap, &c.warnings);
}

struct LoadCaseOptions {
  bool decode_images = true;
};

/// Parses and validates a case. Relative file references resolve against the
/// case file's directory.
inline CaseFile load_case(const std::filesystem::path& path, LoadCaseOptions opts = {}) {
  using namespace jsonio;
  const json j = parse_json_file(path);
  check_schema(j, path.filename().string());
  const std::string root = "case";

  CaseFile c;
  c.source = path;
  c.ap_image = string(j, "ap_image", root);
  c.lp_image = string(j, "lp_image", root);
  c.calibrations = calibrations_from_json(field(j, "calibration", root), root + ".calibration");

  const json& anns = field(j, "annotations", root);
  if (!anns.is_array()) invalid(root + ".annotations", "expected an array");
  for (std::size_t i = 0; i < anns.size(); ++i)
    c.raw_annotations.push_back(bbox_from_json(anns[i], root + ".annotations[" + std::to_string(i) + "]"));

  if (j.contains("ivdl")) {
    const json& iv = j["ivdl"];
    const std::string ip = root + ".ivdl";
    const std::string mode = string(iv, "mode", ip);
    if (mode == "fixed")
      c.ivdl.mode = IvdlMode::Fixed;
    else if (mode == "overlap")
      c.ivdl.mode = IvdlMode::Overlap;
    else
      invalid(ip + ".mode", "expected 'fixed' or 'overlap'");
    c.ivdl.fixed_mm = number_or(iv, "fixed_mm", ip, 0.0);
    if (c.ivdl.fixed_mm < 0.0) invalid(ip + ".fixed_mm", "must be non-negative");
  }

  if (j.contains("padding")) {
    const json& pd = j["padding"];
    const std::string pp = root + ".padding";
    c.padding.pad_target = number_or(pd, "pad_target_mm", pp, c.padding.pad_target);
    c.padding.pad_entry = number_or(pd, "pad_entry_mm", pp, c.padding.pad_entry);
    c.padding.default_radius = number_or(pd, "default_radius_mm", pp, c.padding.default_radius);
    if (pd.contains("z_policy")) c.padding.z_policy = enumerated(pd, "z_policy", pp, parse_z_policy);
    try {
      validate(c.padding);
    } catch (const Error& e) {
      invalid(pp, e.what());
    }
  }

  if (j.contains("discrepancy_correction")) {
    const json& d = j["discrepancy_correction"];
    if (!d.is_boolean()) invalid(root + ".discrepancy_correction", "expected a boolean");
    c.discrepancy_correction = d.get<bool>();
  }

  const auto base = path.parent_path();
  if (j.contains("catalog")) {
    c.catalog_path = string(j, "catalog", root);
    c.catalog = load_catalog(base / *c.catalog_path);
  }

  resolve_case(c);

  if (opts.decode_images) {
    auto load = [&](const std::string& rel, const ViewCalibration& calib, GrayImage& out) {
      out = read_png(base / rel);
      if (out.width != calib.width_px || out.height != calib.height_px)
        invalid(root + ".calibration." + (calib.view == ViewKind::AP ? "ap" : "lp"),
                "image " + rel + " is " + std::to_string(out.width) + "x" +
                    std::to_string(out.height) + ", calibration declares " +
                    std::to_string(static_cast<long>(calib.width_px)) + "x" +
                    std::to_string(static_cast<long>(calib.height_px)));
    };
    load(c.ap_image, c.calibrations.ap, c.ap_pixels);
    load(c.lp_image, c.calibrations.lp, c.lp_pixels);
  }
  return c;
}

}  // namespace fluoroplan
