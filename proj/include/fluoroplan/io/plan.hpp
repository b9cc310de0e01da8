#pragma once

// Plan documents: the screws of a case with their sizes, cached per-view
// projections and warnings. Projections are a cache; loading recomputes them
// from the 3D screws and flags disagreements.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fluoroplan/io/case_file.hpp"
#include "fluoroplan/io/codec.hpp"

namespace fluoroplan {

struct PlannedScrew {
  Screw3D screw;
  std::optional<ScrewSpec> spec;  // empty when the screw underflows the catalog
  ScrewProjection2D ap;
  ScrewProjection2D lp;
  std::vector<Warning> warnings;

  friend bool operator==(const PlannedScrew&, const PlannedScrew&) = default;
};

struct PlanDocument {
  std::string case_ref;
  CalibrationPair calibrations;
  std::optional<DiscrepancyModel> discrepancy;
  std::vector<PlannedScrew> screws;
  std::uint64_t revision = 0;
  std::string created_at;

  friend bool operator==(const PlanDocument&, const PlanDocument&) = default;
};

/// Projections, catalog size and containment findings for one screw.
inline PlannedScrew describe_screw(const Screw3D& screw, const CaseFile& c) {
  PlannedScrew out;
  out.screw = screw;
  out.ap = project_screw(screw, c.calibrations.ap);
  out.lp = project_screw(screw, c.calibrations.lp);
  try {
    out.spec = compute_screw_spec(screw, c.catalog, &out.warnings);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CatalogUnderflow) throw;
    out.warnings.push_back({"CatalogUnderflow", e.what()});
  }
  if (const VertebraPair* pair = c.find_pair(screw.label)) {
    auto contained = validate_containment(screw, *pair, c.ivdl_for(screw.label), c.calibrations);
    out.warnings.insert(out.warnings.end(), contained.begin(), contained.end());
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json to_json_value(const PlannedScrew& p) {
  return {{"screw", to_json_value(p.screw)},
          {"spec", p.spec ? to_json_value(*p.spec) : json(nullptr)},
          {"projections", {{"ap", to_json_value(p.ap)}, {"lp", to_json_value(p.lp)}}},
          {"warnings", to_json_value(p.warnings)}};
}

inline json plan_to_json(const PlanDocument& doc) {
  json screws = json::array();
  for (const auto& s : doc.screws) screws.push_back(to_json_value(s));
  return {{"schema", kSchemaVersion},
          {"case", doc.case_ref},
          {"calibration", to_json_value(doc.calibrations)},
          {"discrepancy", doc.discrepancy ? to_json_value(*doc.discrepancy) : json(nullptr)},
          {"screws", screws},
          {"revision", doc.revision},
          {"created_at", doc.created_at}};
}

/// Projections that drift from a fresh recomputation by more than this are stale.
inline constexpr double kStaleProjectionPx = 1e-6;

inline PlanDocument plan_from_json(const json& j, const std::string& what = "plan") {
  using namespace jsonio;
  check_schema(j, what);
  const std::string root = "plan";
  PlanDocument doc;
  doc.case_ref = string(j, "case", root);
  doc.calibrations = calibrations_from_json(field(j, "calibration", root), root + ".calibration");
  const json& disc = field(j, "discrepancy", root);
  if (!disc.is_null()) doc.discrepancy = discrepancy_from_json(disc, root + ".discrepancy");
  const json& rev = field(j, "revision", root);
  if (!is_count(rev)) invalid(root + ".revision", "expected a non-negative integer");
  doc.revision = rev.get<std::uint64_t>();
  doc.created_at = string(j, "created_at", root);

  const json& screws = field(j, "screws", root);
  if (!screws.is_array()) invalid(root + ".screws", "expected an array");
  for (std::size_t i = 0; i < screws.size(); ++i) {
    const std::string sp = root + ".screws[" + std::to_string(i) + "]";
    const json& sj = screws[i];
    PlannedScrew p;
    p.screw = screw_from_json(field(sj, "screw", sp), sp + ".screw");
    const json& spec = field(sj, "spec", sp);
    if (!spec.is_null()) p.spec = spec_from_json(spec, sp + ".spec");
    const json& proj = field(sj, "projections", sp);
    p.ap = projection_from_json(field(proj, "ap", sp + ".projections"), sp + ".projections.ap");
    p.lp = projection_from_json(field(proj, "lp", sp + ".projections"), sp + ".projections.lp");
    p.warnings = warnings_from_json(field(sj, "warnings", sp), sp + ".warnings");

    // The 3D screw is authoritative.
    for (auto [cached, calib] : {std::pair{&p.ap, &doc.calibrations.ap},
                                 std::pair{&p.lp, &doc.calibrations.lp}}) {
      const ScrewProjection2D fresh = project_screw(p.screw, *calib);
      const double drift = std::max({distance(fresh.target_px, cached->target_px),
                                     distance(fresh.entry_px, cached->entry_px),
                                     std::abs(fresh.radius_px - cached->radius_px)});
      if (cached->view != fresh.view || !(drift <= kStaleProjectionPx)) {
        p.warnings.push_back({"StaleProjection", p.screw.id + " " +
                                                     std::string(to_string(fresh.view)) +
                                                     " projection recomputed"});
        *cached = fresh;
      }
    }
    doc.screws.push_back(std::move(p));
  }
  return doc;
}

inline void save_plan(const PlanDocument& doc, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string());
  }
  write_text_file(path, plan_to_json(doc).dump(2) + "\n");
}

inline PlanDocument load_plan(const std::filesystem::path& path) {
  return plan_from_json(parse_json_file(path), path.filename().string());
}

}  // namespace fluoroplan
