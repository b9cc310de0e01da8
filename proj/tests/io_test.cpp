#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <random>

#include "fluoroplan/fluoroplan.hpp"
#include "test_support.hpp"

using namespace fluoroplan;
using fluoroplan::testing::TempDir;
using fluoroplan::testing::write_worked_case;

namespace {

template <typename F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(ErrorCode::InvalidArgument, "none");
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

PlanDocument random_plan(std::mt19937_64& rng, int n_screws) {
  std::uniform_real_distribution<double> d(-300, 300), r(0.5, 5), sz(20, 60);
  PlanDocument doc;
  doc.case_ref = "cases/a b/case.json";
  doc.calibrations = fluoroplan::testing::random_calibration_pair(rng);
  doc.discrepancy = DiscrepancyModel{1.0 + d(rng) / 3000.0, d(rng) / 30.0};
  doc.revision = rng() % 1000;
  doc.created_at = "2026-01-02T03:04:05Z";
  const VertebraLabel labels[] = {VertebraLabel::L3, VertebraLabel::L4, VertebraLabel::L5};
  for (int i = 0; i < n_screws; ++i) {
    PlannedScrew p;
    p.screw.label = labels[i % 3];
    p.screw.side = (i / 3) % 2 ? Side::R : Side::L;
    p.screw.id = screw_id(p.screw.label, p.screw.side);
    p.screw.target_c1 = {d(rng), d(rng), d(rng)};
    p.screw.entry_c2 = {d(rng), d(rng), d(rng)};
    p.screw.radius = r(rng);
    if (i % 2 == 0) p.spec = ScrewSpec{sz(rng), r(rng) * 2, 40.0, 5.5};
    p.ap = project_screw(p.screw, doc.calibrations.ap);
    p.lp = project_screw(p.screw, doc.calibrations.lp);
    if (i % 3 == 1) p.warnings.push_back({"APOutOfBox", "entry"});
    doc.screws.push_back(p);
  }
  return doc;
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST(LoadCase, TwoPairedVertebrae) {
  TempDir dir;
  const CaseFile c = load_case(write_worked_case(dir.path()));
  ASSERT_EQ(c.pairs.size(), 2u);
  EXPECT_EQ(c.pairs[0].label, VertebraLabel::L4);
  EXPECT_EQ(c.pairs[1].label, VertebraLabel::L5);
  EXPECT_EQ(c.ap_pixels.width, 512);
  EXPECT_EQ(c.lp_pixels.height, 512);
  ASSERT_TRUE(c.discrepancy.has_value());
  EXPECT_DOUBLE_EQ(c.discrepancy->gain_a, 1.0);
  EXPECT_NEAR(c.discrepancy->offset_b, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(c.ivdl_for(VertebraLabel::L4), 8.0);
  EXPECT_DOUBLE_EQ(c.ivdl_for(VertebraLabel::L5), 8.0);
}

TEST(LoadCase, ApOnlyLabelIsNamed) {
  TempDir dir;
  json extra = json::parse(read_text_file(write_worked_case(dir.path())));
  extra["annotations"].push_back(
      to_json_value(fluoroplan::testing::box(ViewKind::AP, VertebraLabel::L3, 100, 0, 180, 55)));
  write_text_file(dir / "case.json", extra.dump());
  const Error e = error_of([&] { load_case(dir / "case.json"); });
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_TRUE(contains(e.what(), "L3")) << e.what();
}

TEST(LoadCase, InvertedBoxNamesItsIndex) {
  TempDir dir;
  json j = json::parse(read_text_file(write_worked_case(dir.path())));
  j["annotations"][2]["x_min_px"] = 500;
  write_text_file(dir / "case.json", j.dump());
  const Error e = error_of([&] { load_case(dir / "case.json"); });
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_TRUE(contains(e.what(), "annotations[2]")) << e.what();
}

TEST(LoadCase, MalformedJsonIsParseError) {
  TempDir dir;
  write_text_file(dir / "case.json", "{\"schema\": \"1\", ");
  EXPECT_EQ(error_of([&] { load_case(dir / "case.json"); }).code(), ErrorCode::ParseError);
}

TEST(LoadCase, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_EQ(error_of([&] { load_case(dir / "nope.json"); }).code(), ErrorCode::IoError);
}

TEST(LoadCase, UnknownSchema) {
  TempDir dir;
  write_worked_case(dir.path(), {{"schema", "99"}});
  EXPECT_EQ(error_of([&] { load_case(dir / "case.json"); }).code(), ErrorCode::SchemaVersionError);
}

TEST(LoadCase, MissingImageIsImageError) {
  TempDir dir;
  write_worked_case(dir.path(), {{"lp_image", "absent.png"}});
  EXPECT_EQ(error_of([&] { load_case(dir / "case.json"); }).code(), ErrorCode::ImageError);
}

TEST(LoadCase, NonPngImageIsImageError) {
  TempDir dir;
  write_worked_case(dir.path());
  write_text_file(dir / "ap.png", "not a png");
  EXPECT_EQ(error_of([&] { load_case(dir / "case.json"); }).code(), ErrorCode::ImageError);
}

TEST(LoadCase, ImageSizeMustMatchCalibration) {
  TempDir dir;
  write_worked_case(dir.path());
  write_png(dir / "ap.png", fluoroplan::testing::blank_image(100, 100));
  const Error e = error_of([&] { load_case(dir / "case.json"); });
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_TRUE(contains(e.what(), "calibration.ap")) << e.what();
}

TEST(LoadCase, BadCalibrationFieldPath) {
  TempDir dir;
  write_worked_case(dir.path(), {{"calibration", {{"lp", {{"mm_per_px_v", -1}}}}}});
  const Error e = error_of([&] { load_case(dir / "case.json"); });
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_TRUE(contains(e.what(), "calibration.lp")) << e.what();
}

TEST(LoadCase, DiscrepancyCorrectsLateralBoxes) {
  TempDir dir;
  // LP boxes read 2 mm low.
  json j = json::parse(read_text_file(write_worked_case(dir.path())));
  for (int i : {1, 3}) {
    j["annotations"][i]["y_min_px"] = j["annotations"][i]["y_min_px"].get<double>() + 2;
    j["annotations"][i]["y_max_px"] = j["annotations"][i]["y_max_px"].get<double>() + 2;
  }
  write_text_file(dir / "case.json", j.dump());
  const CaseFile c = load_case(dir / "case.json");
  ASSERT_TRUE(c.discrepancy);
  EXPECT_NEAR(c.discrepancy->gain_a, 1.0, 1e-12);
  EXPECT_NEAR(c.discrepancy->offset_b, -2.0, 1e-9);
  EXPECT_NEAR(c.pairs[0].lp_box.y_min, 50.0, 1e-9);
  EXPECT_NEAR(c.pairs[1].lp_box.y_max, 162.0, 1e-9);
  EXPECT_EQ(c.raw_annotations[1].y_min, 52.0);

  j["discrepancy_correction"] = false;
  write_text_file(dir / "case.json", j.dump());
  const CaseFile raw = load_case(dir / "case.json");
  EXPECT_FALSE(raw.discrepancy);
  EXPECT_EQ(raw.pairs[0].lp_box.y_min, 52.0);
}

TEST(LoadCase, FixedIvdlAndCustomCatalog) {
  TempDir dir;
  write_text_file(dir / "catalog.json",
                  R"({"schema":"1","diameters_mm":[5.0,6.0],"lengths_mm":[35,45]})");
  write_worked_case(dir.path(), {{"ivdl", {{"mode", "fixed"}, {"fixed_mm", 3}}},
                                 {"catalog", "catalog.json"}});
  const CaseFile c = load_case(dir / "case.json");
  EXPECT_EQ(c.ivdl_for(VertebraLabel::L4), 3.0);
  EXPECT_EQ(c.catalog.diameters_mm, (std::vector<double>{5.0, 6.0}));
  EXPECT_EQ(c.catalog.lengths_mm, (std::vector<double>{35, 45}));
}

TEST(LoadCase, Deterministic) {
  TempDir dir;
  // A lone vertebra falls back to the fixed IVDL and warns about it.
  json j = json::parse(read_text_file(write_worked_case(dir.path())));
  j["annotations"].erase(3);
  j["annotations"].erase(2);
  write_text_file(dir / "case.json", j.dump());
  const CaseFile a = load_case(dir / "case.json"), b = load_case(dir / "case.json");
  EXPECT_FALSE(a.warnings.empty());
  EXPECT_EQ(a.warnings, b.warnings);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.annotations, b.annotations);
  EXPECT_EQ(a.ivdl_mm, b.ivdl_mm);
  EXPECT_EQ(a.ap_pixels, b.ap_pixels);
  EXPECT_EQ(case_to_json(a).dump(), case_to_json(b).dump());
}

TEST(Png, EightBitRoundTrip) {
  TempDir dir;
  GrayImage g = fluoroplan::testing::blank_image(37, 23);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) g.pixels[i] = static_cast<std::uint16_t>(i % 256);
  write_png(dir / "g.png", g);
  EXPECT_EQ(read_png(dir / "g.png"), g);
}

TEST(Png, SixteenBitRoundTrip) {
  TempDir dir;
  GrayImage g = fluoroplan::testing::blank_image(19, 11);
  g.bit_depth = 16;
  for (std::size_t i = 0; i < g.pixels.size(); ++i)
    g.pixels[i] = static_cast<std::uint16_t>(i * 331 + 258);
  write_png(dir / "g.png", g);
  const GrayImage back = read_png(dir / "g.png");
  EXPECT_EQ(back.bit_depth, 16);
  EXPECT_EQ(back, g);
}

TEST(Png, ColourImageRejected) {
  TempDir dir;
  // Hand-rolled RGB PNG via libpng.
  const auto path = dir / "rgb.png";
  std::FILE* f = std::fopen(path.c_str(), "wb");
  ASSERT_TRUE(f);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, 2, 1, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_byte row[6] = {1, 2, 3, 4, 5, 6};
  png_write_row(png, row);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
  EXPECT_EQ(error_of([&] { read_png(path); }).code(), ErrorCode::ImageError);
}

TEST(Plan, SaveLoadTwoScrews) {
  TempDir dir;
  std::mt19937_64 rng(1);
  const PlanDocument doc = random_plan(rng, 2);
  save_plan(doc, dir / "plan.json");
  EXPECT_EQ(load_plan(dir / "plan.json"), doc);
}

TEST(Plan, RoundTripIsLosslessProperty) {
  TempDir dir;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const PlanDocument doc = random_plan(rng, 1 + trial % 6);
    save_plan(doc, dir / "plan.json");
    const PlanDocument back = load_plan(dir / "plan.json");
    ASSERT_EQ(back.screws.size(), doc.screws.size());
    for (std::size_t i = 0; i < doc.screws.size(); ++i) {
      const auto &a = doc.screws[i].screw, &b = back.screws[i].screw;
      for (auto [x, y] : {std::pair{a.target_c1.x, b.target_c1.x}, {a.target_c1.z, b.target_c1.z},
                          {a.entry_c2.y, b.entry_c2.y}, {a.radius, b.radius}})
        ASSERT_TRUE(rel_close(x, y, 1e-12));
    }
    ASSERT_EQ(back, doc);
  }
}

TEST(Plan, StaleProjectionIsRecomputed) {
  TempDir dir;
  std::mt19937_64 rng(4);
  PlanDocument doc = random_plan(rng, 2);
  const PlanDocument original = doc;
  doc.screws[1].lp.entry_px.u += 1e-3;
  save_plan(doc, dir / "plan.json");
  const PlanDocument back = load_plan(dir / "plan.json");
  EXPECT_EQ(back.screws[0], original.screws[0]);
  EXPECT_EQ(back.screws[1].lp, original.screws[1].lp);
  ASSERT_FALSE(back.screws[1].warnings.empty());
  EXPECT_EQ(back.screws[1].warnings.back().code, "StaleProjection");
}

TEST(Plan, DriftBelowThresholdIsKept) {
  TempDir dir;
  std::mt19937_64 rng(5);
  PlanDocument doc = random_plan(rng, 1);
  doc.screws[0].ap.target_px.v += 1e-9;
  save_plan(doc, dir / "plan.json");
  EXPECT_EQ(load_plan(dir / "plan.json"), doc);
}

TEST(Plan, UnknownSchema) {
  TempDir dir;
  std::mt19937_64 rng(6);
  json j = plan_to_json(random_plan(rng, 1));
  j["schema"] = "99";
  write_text_file(dir / "plan.json", j.dump());
  EXPECT_EQ(error_of([&] { load_plan(dir / "plan.json"); }).code(), ErrorCode::SchemaVersionError);
}

TEST(Plan, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_EQ(error_of([&] { load_plan(dir / "missing.json"); }).code(), ErrorCode::IoError);
}

TEST(Plan, UnitsInFieldNames) {
  std::mt19937_64 rng(7);
  const json j = plan_to_json(random_plan(rng, 1));
  const json& s = j["screws"][0];
  EXPECT_TRUE(s["screw"].contains("target_c1_mm"));
  EXPECT_TRUE(s["screw"].contains("radius_mm"));
  EXPECT_TRUE(s["projections"]["ap"].contains("radius_px"));
  EXPECT_EQ(j["schema"], "1");
}

TEST(EditCodec, RoundTrip) {
  const std::vector<EditOp> ops{Translate{ViewKind::AP, 5, -3},
                                MoveEndpoint{ViewKind::LP, Endpoint::Entry, {1.5, 2.25}},
                                Resize{4.0}};
  for (const auto& op : ops) EXPECT_EQ(edit_from_json(to_json_value(op), "op"), op);
  EXPECT_EQ(error_of([] { edit_from_json({{"kind", "spin"}}, "op"); }).code(),
            ErrorCode::ValidationError);
}

TEST(Plan, RevisionRange) {
  TempDir dir;
  std::mt19937_64 rng(8);
  PlanDocument doc = random_plan(rng, 1);
  doc.revision = std::numeric_limits<std::uint64_t>::max();
  save_plan(doc, dir / "plan.json");
  EXPECT_EQ(load_plan(dir / "plan.json").revision, doc.revision);
  json j = plan_to_json(doc);
  j["revision"] = 12;  // signed in nlohmann terms
  write_text_file(dir / "plan.json", j.dump());
  EXPECT_EQ(load_plan(dir / "plan.json").revision, 12u);
  j["revision"] = -1;
  write_text_file(dir / "plan.json", j.dump());
  EXPECT_EQ(error_of([&] { load_plan(dir / "plan.json"); }).code(), ErrorCode::ValidationError);
}
