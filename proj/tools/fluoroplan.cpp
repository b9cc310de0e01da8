// fluoroplan: batch planning, phantom generation, plan evaluation and the
// session service.

#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "fluoroplan/fluoroplan.hpp"
#include "fluoroplan/server.hpp"

namespace fp = fluoroplan;

namespace {

enum Exit { kOk = 0, kValidation = 2, kIo = 3, kGeometry = 4 };

int exit_code_for(fp::ErrorCode code) {
  using fp::ErrorCode;
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::ImageError:
      return kIo;
    case ErrorCode::DegenerateProjection:
    case ErrorCode::DegenerateScrew:
    case ErrorCode::DegenerateTrim:
    case ErrorCode::NoOverlap:
    case ErrorCode::PadTooLarge:
    case ErrorCode::DegenerateFit:
    case ErrorCode::NonPositiveGain:
      return kGeometry;
    default:
      return kValidation;
  }
}

void print_warnings(const std::vector<fp::Warning>& ws, const std::string& indent) {
  for (const auto& w : ws) std::cout << indent << "warning " << w.code << ": " << w.detail << "\n";
}

int run_plan(const std::string& case_path, const std::vector<std::string>& vertebrae,
             const std::vector<std::string>& sides, const std::string& out) {
  const fp::CaseFile c = fp::load_case(case_path);
  print_warnings(c.warnings, "");

  fp::PlanDocument doc;
  doc.case_ref = case_path;
  doc.calibrations = c.calibrations;
  doc.discrepancy = c.discrepancy;
  doc.created_at = fp::utc_timestamp();

  for (const auto& v : vertebrae) {
    const fp::VertebraLabel label = fp::parse_label(v);
    const fp::VertebraPair* pair = c.find_pair(label);
    if (!pair) throw fp::Error(fp::ErrorCode::UnknownLabel, v + " is not paired in " + case_path);
    for (const auto& s : sides) {
      const fp::Side side = fp::parse_side(s);
      const fp::Screw3D screw =
          fp::init_screw(*pair, side, c.ivdl_for(label), c.padding, c.calibrations);
      doc.screws.push_back(fp::describe_screw(screw, c));
      ++doc.revision;
    }
  }

  for (const auto& p : doc.screws) {
    std::printf("%-6s target=(%.2f, %.2f, %.2f) entry=(%.2f, %.2f, %.2f) mm\n", p.screw.id.c_str(),
                p.screw.target_c1.x, p.screw.target_c1.y, p.screw.target_c1.z, p.screw.entry_c2.x,
                p.screw.entry_c2.y, p.screw.entry_c2.z);
    if (p.spec)
      std::printf("       length=%.2f mm diameter=%.2f mm catalog=%g x %g mm\n", p.spec->length_mm,
                  p.spec->diameter_mm, p.spec->catalog_length_mm, p.spec->catalog_diameter_mm);
    std::fflush(stdout);
    print_warnings(p.warnings, "       ");
  }
  if (!out.empty()) fp::save_plan(doc, out);
  return kOk;
}

int run_phantom(fp::PhantomSpec spec, const std::string& out) {
  const fp::Phantom ph = fp::generate_phantom(spec);
  fp::write_phantom(ph, out);
  std::cout << "wrote " << spec.levels << "-level phantom to " << out << "\n";
  return kOk;
}

int run_evaluate(const std::string& plan_path, const std::string& truth_path) {
  const fp::PlanDocument plan = fp::load_plan(plan_path);
  const auto truth = fp::truth_from_json(fp::parse_json_file(truth_path));
  const auto errors = fp::evaluate_plan(plan, truth);
  std::printf("%-8s %14s %15s %10s\n", "screw", "entry_err_mm", "target_err_mm", "contained");
  int contained = 0;
  for (const auto& e : errors) {
    std::printf("%-8s %14.4f %15.4f %10s\n", e.screw_id.c_str(), e.entry_error_mm,
                e.target_error_mm, e.contained ? "yes" : "no");
    contained += e.contained;
  }
  std::printf("contained %d/%zu\n", contained, errors.size());
  return kOk;
}

int run_serve(int port, int http_port, const std::string& case_root, const std::string& static_dir) {
  fp::ServiceOptions opts = fp::ServiceOptions::from_environment();
  if (!case_root.empty()) opts.case_root = case_root;

  std::unique_ptr<httplib::Server> http;
  std::thread http_thread;
  if (http_port > 0) {
    http = std::make_unique<httplib::Server>();
    fp::mount_http_rpc(*http, opts);
    if (!static_dir.empty() && !http->set_mount_point("/", static_dir))
      throw fp::Error(fp::ErrorCode::IoError, "static directory " + static_dir + " not found");
    if (!http->bind_to_port("127.0.0.1", http_port))
      throw fp::Error(fp::ErrorCode::IoError, "cannot bind HTTP port " + std::to_string(http_port));
    http_thread = std::thread([&] { http->listen_after_bind(); });
    std::cerr << "http rpc on 127.0.0.1:" << http_port << "/rpc\n";
  }

  fp::NdjsonServer server(opts);
  const int bound = server.bind(port);
  std::cerr << "ndjson sessions on 127.0.0.1:" << bound << "\n";
  server.run();

  if (http) {
    http->stop();
    http_thread.join();
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biplanar pedicle screw planning"};
  app.require_subcommand(1);

  std::string case_path, out;
  std::vector<std::string> vertebrae, sides;
  auto* plan = app.add_subcommand("plan", "Initialize screws from a case and print their sizes");
  plan->add_option("--case", case_path, "Case file")->required();
  plan->add_option("--vertebra", vertebrae, "Vertebra label (repeatable)")->required();
  plan->add_option("--side", sides, "L or R (repeatable)")
      ->required()
      ->check(CLI::IsMember({"L", "R"}));
  plan->add_option("--out", out, "Write the plan document here");

  fp::PhantomSpec spec;
  std::string phantom_out;
  auto* phantom = app.add_subcommand("phantom", "Write a synthetic case with ground truth");
  phantom->add_option("--levels", spec.levels, "Number of vertebrae")
      ->required()
      ->check(CLI::Range(1, 3));
  phantom->add_option("--seed", spec.seed, "Noise seed")->required();
  phantom->add_option("--out", phantom_out, "Output directory")->required();
  phantom->add_option("--disk-mm", spec.disk_height_mm, "Disk height");
  phantom->add_option("--mm-per-px", spec.mm_per_px, "Isotropic pixel spacing");
  phantom->add_option("--lp-gain", spec.lp_gain, "Simulated LP craniocaudal gain");
  phantom->add_option("--lp-offset-mm", spec.lp_offset_mm, "Simulated LP craniocaudal offset");

  std::string plan_path, truth_path;
  auto* evaluate = app.add_subcommand("evaluate", "Compare a plan against phantom truth");
  evaluate->add_option("--plan", plan_path, "Plan document")->required();
  evaluate->add_option("--truth", truth_path, "Truth file")->required();

  int port = 7800, http_port = 0;
  std::string case_root;
  auto* serve = app.add_subcommand("serve", "Run the planning session service");
  serve->add_option("--port", port, "NDJSON TCP port")->required();
  serve->add_option("--case-root", case_root, "Directory open_case paths must stay within");
  serve->add_option("--http-port", http_port, "Also serve POST /rpc over HTTP");
  std::string static_dir;
  serve->add_option("--static-dir", static_dir, "UI asset bundle served over HTTP at /")
      ->needs(serve->get_option("--http-port"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kValidation;
  }

  try {
    if (*plan) return run_plan(case_path, vertebrae, sides, out);
    if (*phantom) return run_phantom(spec, phantom_out);
    if (*evaluate) return run_evaluate(plan_path, truth_path);
    if (*serve) return run_serve(port, http_port, case_root, static_dir);
  } catch (const fp::Error& e) {
    std::cerr << "error " << fp::to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  return kOk;
}
