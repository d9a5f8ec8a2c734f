// Command-line front end: mesh generation, standalone cell / micro solves,
// single-model runs, and the full three-model benchmark with CSV/JSON export.
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slipflow/bench.hpp"
#include "slipflow/cell.hpp"
#include "slipflow/coupling.hpp"
#include "slipflow/errors.hpp"
#include "slipflow/micro.hpp"

namespace {

using namespace slipflow;
using Json = nlohmann::ordered_json;

// ------------------------------------------------------- case selection ----

struct CaseArgs {
  std::string case_name;
  std::string config_path;
  double eps = 0, nu = 0, tol = 0; // 0 = keep the case value
  std::vector<double> sites;
  int threads = 0;
};

void add_case_flags(CLI::App* sub, CaseArgs& a, bool required) {
  auto* c = sub->add_option("--case", a.case_name,
                            "benchmark case (periodic_channel, sawtooth_wavy, "
                            "modulated_channel, quasi_periodic_channel, "
                            "backward_facing_step)");
  auto* f = sub->add_option("--config", a.config_path,
                            "JSON case configuration file");
  c->excludes(f);
  f->excludes(c);
  if (required) {
    // exactly one of the two
    sub->callback([sub, &a] {
      if (a.case_name.empty() && a.config_path.empty())
        throw CLI::RequiredError("--case or --config");
    });
  }
  sub->add_option("--eps", a.eps, "roughness scale override")
      ->check(CLI::PositiveNumber);
  sub->add_option("--nu", a.nu, "kinematic viscosity override")
      ->check(CLI::PositiveNumber);
  sub->add_option("--sites", a.sites, "micro site abscissae override")
      ->delimiter(',');
  sub->add_option("--tol", a.tol, "outer-iteration tolerance override")
      ->check(CLI::PositiveNumber);
  sub->add_option("--threads", a.threads, "concurrent micro solves")
      ->check(CLI::PositiveNumber);
}

ExperimentCase build_case(const CaseArgs& a) {
  ExperimentCase c = !a.config_path.empty()
                         ? load_case(a.config_path)
                         : make_case(case_from_string(
                               a.case_name.empty() ? "periodic_channel"
                                                   : a.case_name));
  if (a.eps > 0)
    c.eps = a.eps;
  if (a.nu > 0)
    c.nu = a.nu;
  if (!a.sites.empty())
    c.sites = a.sites;
  if (a.tol > 0)
    c.tolerance = a.tol;
  if (a.threads > 0)
    c.threads = a.threads;
  return c;
}

UnitCellShape shape_from_name(const std::string& name, double depth) {
  if (name == "flat")
    return unit_cell_flat();
  if (name == "constant")
    return unit_cell_constant(depth);
  if (name == "sinusoidal")
    return depth == 1.0 ? unit_cell_sinusoidal()
                        : unit_cell_sinusoidal_scaled(depth);
  if (name == "sawtooth")
    return unit_cell_sawtooth();
  throw ConfigError("unknown cell shape '" + name +
                    "' (known: flat, constant, sinusoidal, sawtooth)");
}

void ensure_parent_dir(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path();
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
  }
}

void print_json(const Json& j) { std::printf("%s\n", j.dump(2).c_str()); }

// ----------------------------------------------------------- subcommands ----

struct MeshgenArgs {
  CaseArgs case_args;
  std::string kind = "dns";
  std::string out;
  double site = std::nan("");
  double height = 8;
  double depth = 1.0;
  int res = 0;
  std::string cell_shape = "sinusoidal";
};

void run_meshgen(const MeshgenArgs& a) {
  TriangleMesh mesh;
  if (a.kind == "cell") {
    mesh = mesh_cell_domain(shape_from_name(a.cell_shape, a.depth), a.height,
                            a.res > 0 ? a.res : 48);
  } else {
    const ExperimentCase c = resolve_case(build_case(a.case_args));
    const RoughnessProfile profile = case_profile(c);
    const bool bfs = c.id == CaseId::BackwardFacingStep;
    if (a.kind == "macro") {
      mesh = case_macro(c).mesh;
    } else if (a.kind == "dns") {
      if (bfs) {
        mesh = mesh_bfs_dns(profile, c.dns_bfs);
      } else {
        DnsChannelSpec spec;
        spec.top_fn = c.top_fn;
        spec.seam_blend = c.dns_seam_blend;
        spec.wall_resolution = c.dns_wall_resolution;
        spec.ny = c.dns_ny;
        spec.grade_band = c.dns_grade_band;
        mesh = mesh_rough_dns(profile, spec);
      }
    } else if (a.kind == "micro") {
      MicroMeshSpec spec;
      spec.site = std::isnan(a.site) ? c.sites.front() : a.site;
      spec.width = c.micro_width;
      spec.height = c.micro_height;
      spec.nx = a.res > 0 ? a.res : c.micro_resolution;
      spec.periodic_sides = c.bc_mode == MicroBcMode::PeriodicFreeStream;
      mesh = mesh_micro(profile, spec);
    } else {
      throw ConfigError("unknown mesh kind '" + a.kind +
                        "' (known: macro, dns, micro, cell)");
    }
  }
  ensure_parent_dir(a.out);
  save_mesh_json(mesh, a.out);
  Json j;
  j["kind"] = a.kind;
  j["vertices"] = mesh.vertices.size();
  j["cells"] = mesh.cell_count();
  j["out"] = a.out;
  print_json(j);
}

struct CellArgs {
  std::string profile = "sinusoidal";
  double height = 8;
  double depth = 1.0;
  int res = 48;
  std::string csv;
};

void run_cell(const CellArgs& a) {
  const CellSolution sol =
      solve_cell_problem(shape_from_name(a.profile, a.depth), a.height, a.res);
  Json j;
  j["shape"] = sol.shape.name;
  j["truncation_height"] = sol.truncation_height;
  j["resolution"] = a.res;
  j["cells"] = sol.cells;
  j["chibar"] = sol.chibar;
  j["H"] = sol.shape.height;
  j["chibar_plus_H"] = sol.chibar + sol.shape.height;
  try {
    const DecayReport decay = decay_check(sol);
    j["decay_rate"] = decay.rate;
    j["decay_fit_residual"] = decay.fit_residual;
    j["no_decay_needed"] = decay.no_decay_needed;
  } catch (const InsufficientSamples& e) {
    j["decay_rate"] = nullptr;
    j["decay_note"] = e.what();
  }
  if (!a.csv.empty()) {
    ensure_parent_dir(a.csv);
    std::ofstream out(a.csv);
    if (!out)
      throw ConfigError("cannot open '" + a.csv + "' for writing");
    out << "y2,mean_chi1,oscillation\n";
    char line[120];
    for (const auto& s : sol.decay_samples) {
      std::snprintf(line, sizeof line, "%.15g,%.15g,%.15g\n", s.y2,
                    s.mean_chi1, s.oscillation);
      out << line;
    }
    j["csv"] = a.csv;
  }
  print_json(j);
}

struct RunArgs {
  CaseArgs case_args;
  std::string out;
};

void run_dns(const RunArgs& a) {
  const ExperimentCase c = resolve_case(build_case(a.case_args));
  const RoughnessProfile profile = case_profile(c);
  TriangleMesh mesh;
  const FlowSolution sol = solve_case_dns(c, profile, mesh);
  const auto bb = mesh.bounding_box();
  const ProfileTable table =
      sample_profiles(sol, c.heights, {bb[0], bb[1]}, c.profile_samples);
  Json j;
  j["case"] = c.name;
  j["cells"] = mesh.cell_count();
  j["heights"] = c.heights;
  j["rows"] = table.rows.size();
  if (!a.out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    const auto path = std::filesystem::path(a.out) / "dns_profiles.csv";
    save_table_csv(table, path.string());
    j["out"] = path.string();
  }
  print_json(j);
}

struct MicroArgs {
  std::string profile = "sinusoidal";
  double eps = 0.025;
  double nu = 1.0;
  double site = 0;
  double width = 0;  // 0: one roughness period
  double height = 0; // 0: 4*eps
  int res = 16;
  std::string mode = "free_stream";
  double shear = 1.0;
  std::string out;
};

void run_micro(const MicroArgs& a) {
  const RoughnessProfile profile =
      make_profile(profile_kind_from_string(a.profile), a.eps);
  MicroDomainSpec spec;
  spec.site = a.site;
  spec.width = a.width > 0 ? a.width : profile.wavelength();
  spec.height = a.height > 0 ? a.height : 4 * a.eps;
  spec.resolution = a.res;
  if (a.mode == "free_stream")
    spec.bc_mode = MicroBcMode::PeriodicFreeStream;
  else if (a.mode == "quadratic")
    spec.bc_mode = MicroBcMode::QuadraticDirichlet;
  else
    throw ConfigError("unknown micro mode '" + a.mode +
                      "' (known: free_stream, quadratic)");

  // Standalone runs use a uniform-shear macro field; the slip amount is the
  // window's response to that shear.
  const double shear = a.shear;
  const auto macro = [shear](double, double y) -> std::array<double, 2> {
    return {shear * y, 0.0};
  };
  const MicroBC bc = spec.bc_mode == MicroBcMode::PeriodicFreeStream
                         ? build_free_stream_bc(macro, spec)
                         : build_quadratic_bc(macro, spec, profile);
  FluidParams fluid;
  fluid.nu = a.nu;
  const FlowSolution sol = solve_micro(spec, bc, profile, fluid);
  const double alpha = extract_slip(sol, spec);

  Json j;
  j["profile"] = a.profile;
  j["site"] = spec.site;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["mode"] = a.mode;
  j["cells"] = sol.mesh().cell_count();
  j["alpha"] = alpha;
  if (!a.out.empty()) {
    const ProfileTable table = sample_profiles(
        sol, {0.0}, {spec.site, spec.site + spec.width}, 200);
    ensure_parent_dir(a.out);
    save_table_csv(table, a.out);
    j["out"] = a.out;
  }
  print_json(j);
}

void run_hmm_cmd(const RunArgs& a) {
  const ExperimentCase c = resolve_case(build_case(a.case_args));
  const RoughnessProfile profile = case_profile(c);
  const MacroDescriptor macro = case_macro(c);
  const HMMResult result = run_hmm(case_hmm_config(c), macro, profile);

  Json j;
  j["case"] = c.name;
  j["sites"] = c.sites;
  j["alpha"] = result.law.values;
  j["alpha_raw"] = result.report.alpha_raw;
  j["iterations"] = result.report.iterations;
  j["micro_sweeps"] = result.report.micro_sweeps;
  j["tolerance"] = result.report.tolerance;
  j["final_diff"] = result.report.final_diff;
  Json cells;
  cells["macro"] = result.report.macro_cells;
  cells["micro"] = result.report.micro_cells;
  cells["micro_total"] = result.report.micro_cells_total;
  j["cells"] = cells;
  if (!a.out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    const std::filesystem::path dir(a.out);
    const auto bb = macro.mesh.bounding_box();
    const ProfileTable table = sample_profiles(
        result.macro, c.heights, {bb[0], bb[1]}, c.profile_samples);
    save_table_csv(table, (dir / "hmm_profiles.csv").string());
    std::ofstream rep(dir / "hmm_report.json");
    if (!rep)
      throw ConfigError("cannot open '" + (dir / "hmm_report.json").string() +
                        "' for writing");
    rep << j.dump(2) << "\n";
    j["out"] = a.out;
  }
  print_json(j);
}

void run_compare(const std::string& ref_path, const std::string& cand_path) {
  const ProfileTable ref = load_table_csv(ref_path);
  const ProfileTable cand = load_table_csv(cand_path);
  std::printf("height,u1,du1dx2\n");
  for (const auto& e : field_error(ref, cand))
    std::printf("%.15g,%.15g,%.15g\n", e.height, e.u1, e.du1dx2);
}

void run_full(const RunArgs& a) {
  const ExperimentResult result = run_experiment(build_case(a.case_args));
  if (!a.out.empty())
    export_profiles(result, a.out);
  std::printf("%s", report_json(result.report).c_str());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navier-slip wall laws for rough channels: mesh generation, "
               "cell/micro solves, DNS and HMM runs, profile comparison"};
  app.require_subcommand(1);

  MeshgenArgs mesh_args;
  auto* sub_mesh = app.add_subcommand("meshgen", "generate a mesh file");
  add_case_flags(sub_mesh, mesh_args.case_args, false);
  sub_mesh->add_option("--kind", mesh_args.kind,
                       "mesh flavor: macro, dns, micro, cell");
  sub_mesh->add_option("--out", mesh_args.out, "output mesh path")->required();
  sub_mesh->add_option("--site", mesh_args.site, "micro window left edge");
  sub_mesh->add_option("--height", mesh_args.height, "cell truncation height");
  sub_mesh->add_option("--depth", mesh_args.depth, "cell shape depth");
  sub_mesh->add_option("--res", mesh_args.res, "resolution override");
  sub_mesh->add_option("--cell-shape", mesh_args.cell_shape,
                       "flat, constant, sinusoidal, sawtooth");

  CellArgs cell_args;
  auto* sub_cell =
      app.add_subcommand("cell", "solve the homogenization cell problem");
  sub_cell->add_option("--profile", cell_args.profile,
                       "flat, constant, sinusoidal, sawtooth");
  sub_cell->add_option("--height", cell_args.height, "truncation height Y2top");
  sub_cell->add_option("--depth", cell_args.depth,
                       "shape depth (constant / scaled sinusoidal)");
  sub_cell->add_option("--res", cell_args.res, "cells across the period");
  sub_cell->add_option("--csv", cell_args.csv, "slice decay CSV path");

  RunArgs dns_args;
  auto* sub_dns = app.add_subcommand("dns", "resolved reference solve");
  add_case_flags(sub_dns, dns_args.case_args, true);
  sub_dns->add_option("--out", dns_args.out, "output directory");

  MicroArgs micro_args;
  auto* sub_micro =
      app.add_subcommand("micro", "standalone micro solve under uniform shear");
  sub_micro->add_option("--profile", micro_args.profile, "roughness kind");
  sub_micro->add_option("--eps", micro_args.eps, "roughness scale")
      ->check(CLI::PositiveNumber);
  sub_micro->add_option("--nu", micro_args.nu, "kinematic viscosity")
      ->check(CLI::PositiveNumber);
  sub_micro->add_option("--site", micro_args.site, "window left edge");
  sub_micro->add_option("--width", micro_args.width, "window width");
  sub_micro->add_option("--height", micro_args.height, "window height");
  sub_micro->add_option("--res", micro_args.res, "cells across the window");
  sub_micro->add_option("--mode", micro_args.mode, "free_stream or quadratic");
  sub_micro->add_option("--shear", micro_args.shear, "macro shear rate");
  sub_micro->add_option("--out", micro_args.out, "near-wall profile CSV path");

  RunArgs hmm_args;
  auto* sub_hmm = app.add_subcommand("hmm", "multiscale wall-law solve");
  add_case_flags(sub_hmm, hmm_args.case_args, true);
  sub_hmm->add_option("--out", hmm_args.out, "output directory");

  std::string cmp_ref, cmp_cand;
  auto* sub_cmp = app.add_subcommand(
      "compare", "per-height relative L2 differences of two profile tables");
  sub_cmp->add_option("reference", cmp_ref, "reference CSV")->required();
  sub_cmp->add_option("candidate", cmp_cand, "candidate CSV")->required();

  RunArgs run_args;
  auto* sub_run = app.add_subcommand(
      "run", "full benchmark: DNS, no-slip, HMM, comparison report");
  add_case_flags(sub_run, run_args.case_args, true);
  sub_run->add_option("--out", run_args.out, "output directory");

  try {
    app.parse(argc, argv);
    if (sub_mesh->parsed())
      run_meshgen(mesh_args);
    else if (sub_cell->parsed())
      run_cell(cell_args);
    else if (sub_dns->parsed())
      run_dns(dns_args);
    else if (sub_micro->parsed())
      run_micro(micro_args);
    else if (sub_hmm->parsed())
      run_hmm_cmd(hmm_args);
    else if (sub_cmp->parsed())
      run_compare(cmp_ref, cmp_cand);
    else if (sub_run->parsed())
      run_full(run_args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0)
      return app.exit(e); // --help and friends
    Json err;
    err["error"] = "CliUsage";
    err["detail"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return e.get_exit_code();
  } catch (const slipflow::Error& e) {
    std::string detail = e.what();
    const std::string prefix = e.code() + ": ";
    if (detail.rfind(prefix, 0) == 0)
      detail = detail.substr(prefix.size());
    Json err;
    err["error"] = e.code();
    err["detail"] = detail;
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  } catch (const std::exception& e) {
    Json err;
    err["error"] = "Internal";
    err["detail"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 2;
  }
  return 0;
}
