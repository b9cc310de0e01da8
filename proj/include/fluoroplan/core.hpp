#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fluoroplan {

/// Machine-readable failure categories. The name of each enumerator is the
/// wire code reported by the service and mapped to a CLI exit code.
enum class ErrorCode {
  InvalidArgument,
  DegenerateProjection,
  DegenerateScrew,
  UnpairedLabel,
  TooManyVertebrae,
  DuplicateLabel,
  NoHit,
  NoOverlap,
  DegenerateTrim,
  PadTooLarge,
  CatalogUnderflow,
  InsufficientCorrespondences,
  DegenerateFit,
  NonPositiveGain,
  ParseError,
  ValidationError,
  ImageError,
  IoError,
  SchemaVersionError,
  UnknownScrew,
  UnknownLabel,
  UnknownMessage,
  StaleRevision,
  NoCase,
  ScrewExists,
  PathNotAllowed,
  SpecError,
  MissingTruth,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::DegenerateScrew: return "DegenerateScrew";
    case ErrorCode::UnpairedLabel: return "UnpairedLabel";
    case ErrorCode::TooManyVertebrae: return "TooManyVertebrae";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::NoHit: return "NoHit";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::DegenerateTrim: return "DegenerateTrim";
    case ErrorCode::PadTooLarge: return "PadTooLarge";
    case ErrorCode::CatalogUnderflow: return "CatalogUnderflow";
    case ErrorCode::InsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::NonPositiveGain: return "NonPositiveGain";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::ImageError: return "ImageError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaVersionError: return "SchemaVersionError";
    case ErrorCode::UnknownScrew: return "UnknownScrew";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownMessage: return "UnknownMessage";
    case ErrorCode::StaleRevision: return "StaleRevision";
    case ErrorCode::NoCase: return "NoCase";
    case ErrorCode::ScrewExists: return "ScrewExists";
    case ErrorCode::PathNotAllowed: return "PathNotAllowed";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::MissingTruth: return "MissingTruth";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A non-fatal finding attached to a screw or a case (e.g. "APOutOfBox").
struct Warning {
  std::string code;
  std::string detail;

  friend bool operator==(const Warning&, const Warning&) = default;
};

enum class ViewKind { AP, LP };
enum class Side { L, R };

inline std::string_view to_string(ViewKind v) { return v == ViewKind::AP ? "AP" : "LP"; }
inline std::string_view to_string(Side s) { return s == Side::L ? "L" : "R"; }

inline ViewKind parse_view(std::string_view s) {
  if (s == "AP") return ViewKind::AP;
  if (s == "LP") return ViewKind::LP;
  throw Error(ErrorCode::InvalidArgument, "unknown view '" + std::string(s) + "'");
}

inline Side parse_side(std::string_view s) {
  if (s == "L") return Side::L;
  if (s == "R") return Side::R;
  throw Error(ErrorCode::InvalidArgument, "unknown side '" + std::string(s) + "'");
}

/// Supported vertebral levels, ordered cranial to caudal.
enum class VertebraLabel { T12, L1, L2, L3, L4, L5, S1 };

inline constexpr std::array<std::string_view, 7> kLabelNames{"T12", "L1", "L2", "L3",
                                                             "L4",  "L5", "S1"};

inline std::string_view to_string(VertebraLabel l) {
  return kLabelNames[static_cast<std::size_t>(l)];
}

inline std::optional<VertebraLabel> try_parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i)
    if (kLabelNames[i] == s) return static_cast<VertebraLabel>(i);
  return std::nullopt;
}

inline VertebraLabel parse_label(std::string_view s) {
  if (auto l = try_parse_label(s)) return *l;
  throw Error(ErrorCode::UnknownLabel, "unsupported vertebra label '" + std::string(s) + "'");
}

/// World-space point in millimetres. x is anteroposterior (seen in LP),
/// y mediolateral (seen in AP), z craniocaudal (seen in both).
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
  friend Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point3 operator*(double k, Point3 a) { return {k * a.x, k * a.y, k * a.z}; }
};

inline double dot(Point3 a, Point3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Point3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Point3 a, Point3 b) { return norm(a - b); }
inline bool is_finite(Point3 p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Pixel-space point; u grows rightward, v grows downward.
struct Point2 {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.u - b.u, a.v - b.v); }
inline bool is_finite(Point2 p) { return std::isfinite(p.u) && std::isfinite(p.v); }

/// Simulated pedicle screw: a cylinder from target C1 to entry C2.
struct Screw3D {
  std::string id;
  VertebraLabel label = VertebraLabel::L4;
  Side side = Side::L;
  Point3 target_c1;
  Point3 entry_c2;
  double radius = 0.0;  // mm

  friend bool operator==(const Screw3D&, const Screw3D&) = default;
};

inline std::string screw_id(VertebraLabel label, Side side) {
  return std::string(to_string(label)) + "-" + std::string(to_string(side));
}

inline void validate(const Screw3D& s) {
  if (!is_finite(s.target_c1) || !is_finite(s.entry_c2))
    throw Error(ErrorCode::InvalidArgument, "screw endpoints must be finite");
  if (!(s.radius > 0.0) || !std::isfinite(s.radius))
    throw Error(ErrorCode::InvalidArgument, "screw radius must be positive");
  if (s.target_c1 == s.entry_c2)
    throw Error(ErrorCode::DegenerateScrew, "screw " + s.id + " has zero length");
}

}  // namespace fluoroplan
