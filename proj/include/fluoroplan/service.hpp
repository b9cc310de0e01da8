#pragma once

// Stateful planning sessions behind a JSON message catalog.
//
// Request:  {"req": <any>, "type": "<message>", "expected_revision"?: n, ...}
// Reply:    {"req": <echo>, "ok": true,  "revision": n, "result": {...}}
//           {"req": <echo>, "ok": false, "revision": n, "error": {"code", "message"}}
//
// Every state-changing message bumps the revision by exactly one. Failed
// messages leave the session untouched.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "fluoroplan/io/case_file.hpp"
#include "fluoroplan/io/plan.hpp"
#include "fluoroplan/sync.hpp"

namespace fluoroplan {

inline constexpr const char* kCaseRootEnv = "FLUOROPLAN_CASE_ROOT";

struct ServiceOptions {
  /// open_case and export_plan paths must resolve inside this directory.
  std::optional<std::filesystem::path> case_root;

  /// Options with case_root taken from FLUOROPLAN_CASE_ROOT when set.
  static ServiceOptions from_environment() {
    ServiceOptions o;
    if (const char* root = std::getenv(kCaseRootEnv); root && *root) o.case_root = root;
    return o;
  }
};

class Session {
 public:
  explicit Session(ServiceOptions opts = ServiceOptions::from_environment())
      : opts_(std::move(opts)) {}

  /// Handles one request object. Never throws; failures become error replies.
  json handle(const json& msg) {
    std::lock_guard lock(mu_);
    json reply{{"req", msg.is_object() && msg.contains("req") ? msg["req"] : json(nullptr)}};
    try {
      if (!msg.is_object()) throw Error(ErrorCode::ParseError, "message must be a JSON object");
      json result = dispatch(msg);
      reply["ok"] = true;
      reply["result"] = std::move(result);
    } catch (const Error& e) {
      reply["ok"] = false;
      reply["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    } catch (const std::exception& e) {
      reply["ok"] = false;
      reply["error"] = {{"code", "InternalError"}, {"message", e.what()}};
    }
    reply["revision"] = revision_;
    return reply;
  }

  /// Newline-delimited transport helper: one request line in, one reply line out.
  std::string handle_line(std::string_view line) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error& e) {
      std::lock_guard lock(mu_);
      json reply{{"req", nullptr},
                 {"ok", false},
                 {"error", {{"code", "ParseError"}, {"message", e.what()}}},
                 {"revision", revision_}};
      return reply.dump();
    }
    return handle(msg).dump();
  }

  std::uint64_t revision() const {
    std::lock_guard lock(mu_);
    return revision_;
  }

 private:
  struct Selection {
    Point2 point_px;
    VertebraLabel label;
  };

  json dispatch(const json& msg) {
    const std::string type = jsonio::string(msg, "type", "message");
    if (msg.contains("expected_revision") && !msg["expected_revision"].is_null()) {
      const json& er = msg["expected_revision"];
      if (!jsonio::is_count(er) || er.get<std::uint64_t>() != revision_)
        throw Error(ErrorCode::StaleRevision, "expected revision " + er.dump() +
                                                  ", session is at " + std::to_string(revision_));
    }

    if (type == "open_case") return open_case(msg);
    if (type == "get_state") return snapshot();
    if (!case_)
      throw Error(ErrorCode::NoCase, "no case is open; send open_case first");
    if (type == "select_vertebra") return select_vertebra(msg);
    if (type == "init_screw") return init_screw(msg);
    if (type == "edit") return edit(msg);
    if (type == "delete_screw") return delete_screw(msg);
    if (type == "export_plan") return export_plan(msg);
    throw Error(ErrorCode::UnknownMessage, "unknown message type '" + type + "'");
  }

  std::filesystem::path resolve_path(const std::string& requested,
                                     const std::filesystem::path& base) const {
    namespace fs = std::filesystem;
    fs::path p(requested);
    if (p.is_relative()) p = base / p;
    p = fs::weakly_canonical(p);
    if (opts_.case_root) {
      const fs::path root = fs::weakly_canonical(*opts_.case_root);
      auto [r, q] = std::mismatch(root.begin(), root.end(), p.begin(), p.end());
      if (r != root.end())
        throw Error(ErrorCode::PathNotAllowed, requested + " is outside the case root");
    }
    return p;
  }

  std::filesystem::path default_base() const {
    return opts_.case_root ? *opts_.case_root : std::filesystem::current_path();
  }

  json open_case(const json& msg) {
    const std::string path = jsonio::string(msg, "path", "open_case");
    CaseFile loaded = load_case(resolve_path(path, default_base()));
    case_ = std::move(loaded);
    case_ref_ = path;
    screws_.clear();
    selection_.clear();
    ++revision_;
    return case_summary();
  }

  json case_summary() const {
    json labels = json::array(), pairs = json::array();
    for (std::size_t i = 0; i < case_->pairs.size(); ++i) {
      const auto& p = case_->pairs[i];
      labels.push_back(to_string(p.label));
      pairs.push_back({{"label", to_string(p.label)},
                       {"ap_box", to_json_value(p.ap_box)},
                       {"lp_box", to_json_value(p.lp_box)},
                       {"ivdl_mm", case_->ivdl_mm[i]}});
    }
    auto image = [](const GrayImage& g) {
      return json{{"width_px", g.width}, {"height_px", g.height}, {"bit_depth", g.bit_depth}};
    };
    return {{"case", case_ref_},
            {"labels", labels},
            {"pairs", pairs},
            {"calibration", to_json_value(case_->calibrations)},
            {"images", {{"ap", image(case_->ap_pixels)}, {"lp", image(case_->lp_pixels)}}},
            {"discrepancy",
             case_->discrepancy ? to_json_value(*case_->discrepancy) : json(nullptr)},
            {"warnings", to_json_value(case_->warnings)}};
  }

  json select_vertebra(const json& msg) {
    const ViewKind view = jsonio::enumerated(msg, "view", "select_vertebra", parse_view);
    const Point2 click = jsonio::point2(msg, "point_px", "select_vertebra");
    const VertebraLabel label = hit_test_vertebra(click, view, case_->annotations);
    selection_[view] = {click, label};
    ++revision_;
    return {{"label", to_string(label)}};
  }

  json screw_reply(const PlannedScrew& p) const {
    json j = to_json_value(p);
    j["screw_id"] = p.screw.id;
    return j;
  }

  json init_screw(const json& msg) {
    const std::string label_s = jsonio::string(msg, "label", "init_screw");
    const VertebraLabel label = parse_label(label_s);
    const Side side = jsonio::enumerated(msg, "side", "init_screw", parse_side);
    const VertebraPair* pair = case_->find_pair(label);
    if (!pair) throw Error(ErrorCode::UnknownLabel, label_s + " is not a paired vertebra of this case");
    const std::string id = screw_id(label, side);
    if (screws_.contains(id)) throw Error(ErrorCode::ScrewExists, "screw " + id + " already exists");

    const Screw3D screw =
        fluoroplan::init_screw(*pair, side, case_->ivdl_for(label), case_->padding, case_->calibrations);
    PlannedScrew planned = describe_screw(screw, *case_);
    screws_.emplace(id, planned);
    ++revision_;
    return screw_reply(planned);
  }

  Screw3D& find_screw(const json& msg, const char* where) {
    const std::string id = jsonio::string(msg, "screw_id", where);
    auto it = screws_.find(id);
    if (it == screws_.end()) throw Error(ErrorCode::UnknownScrew, "no screw with id '" + id + "'");
    return it->second.screw;
  }

  json edit(const json& msg) {
    Screw3D& current = find_screw(msg, "edit");
    const EditOp op = edit_from_json(jsonio::field(msg, "op", "edit"), "edit.op");
    const Screw3D next = apply_edit(current, op, case_->calibrations);
    PlannedScrew planned = describe_screw(next, *case_);
    screws_[next.id] = planned;
    ++revision_;
    return screw_reply(planned);
  }

  json delete_screw(const json& msg) {
    const std::string id = find_screw(msg, "delete_screw").id;
    screws_.erase(id);
    ++revision_;
    return json::object();
  }

  PlanDocument plan() const {
    PlanDocument doc;
    doc.case_ref = case_ref_;
    doc.calibrations = case_->calibrations;
    doc.discrepancy = case_->discrepancy;
    doc.revision = revision_;
    for (const auto& [id, p] : screws_) doc.screws.push_back(p);
    return doc;
  }

  json export_plan(const json& msg) {
    const std::string path = jsonio::string(msg, "path", "export_plan");
    const auto resolved = resolve_path(path, case_->source.parent_path());
    PlanDocument doc = plan();
    doc.created_at = utc_timestamp();
    save_plan(doc, resolved);
    return {{"path", path}};
  }

  json snapshot() const {
    json state{{"revision", revision_}};
    if (!case_) {
      state["case"] = nullptr;
      return state;
    }
    state["case"] = case_summary();
    json sel = json::object();
    for (const auto& [view, s] : selection_)
      sel[std::string(to_string(view))] = {{"point_px", jsonio::point(s.point_px)},
                                           {"label", to_string(s.label)}};
    state["selection"] = sel;
    json screws = json::array();
    for (const auto& [id, p] : screws_) screws.push_back(screw_reply(p));
    state["screws"] = screws;
    return state;
  }

  ServiceOptions opts_;
  mutable std::mutex mu_;
  std::uint64_t revision_ = 0;
  std::optional<CaseFile> case_;
  std::string case_ref_;
  std::map<std::string, PlannedScrew> screws_;
  std::map<ViewKind, Selection> selection_;
};

}  // namespace fluoroplan
