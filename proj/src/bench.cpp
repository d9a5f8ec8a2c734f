#include "slipflow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slipflow/errors.hpp"
#include "slipflow/fem.hpp"
#include "slipflow/micro.hpp"

namespace slipflow {

using Json = nlohmann::ordered_json;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

// ------------------------------------------------------------- case ids ----

std::string to_string(CaseId id) {
  switch (id) {
  case CaseId::PeriodicChannel:
    return "periodic_channel";
  case CaseId::SawtoothWavy:
    return "sawtooth_wavy";
  case CaseId::ModulatedChannel:
    return "modulated_channel";
  case CaseId::QuasiPeriodicChannel:
    return "quasi_periodic_channel";
  case CaseId::BackwardFacingStep:
    return "backward_facing_step";
  }
  return "periodic_channel";
}

CaseId case_from_string(const std::string& name) {
  for (CaseId id : {CaseId::PeriodicChannel, CaseId::SawtoothWavy,
                    CaseId::ModulatedChannel, CaseId::QuasiPeriodicChannel,
                    CaseId::BackwardFacingStep})
    if (to_string(id) == name)
      return id;
  throw ConfigError(
      "unknown case '" + name +
      "' (known: periodic_channel, sawtooth_wavy, modulated_channel, "
      "quasi_periodic_channel, backward_facing_step)");
}

// ------------------------------------------------------------- defaults ----

ExperimentCase make_case(CaseId id) {
  ExperimentCase c;
  c.id = id;
  c.name = to_string(id);
  switch (id) {
  case CaseId::PeriodicChannel:
    break; // the struct defaults are this case

  case CaseId::SawtoothWavy:
    c.roughness = ProfileKind::Sawtooth;
    c.sites = {0.0, 0.25, 0.5, 0.75, 1.0};
    // The groove flow separates, so both scales need more cells than the
    // gentler walls: the reference most of all, vertically.
    c.micro_resolution = 24;
    c.macro_nx = 44;
    c.macro_ny = 21;
    c.top_fn = [](double x1) { return 0.5 - 0.125 * std::sin(2 * kPi * x1); };
    c.dns_wall_resolution = 24;
    c.dns_ny = 60;
    break;

  case CaseId::ModulatedChannel:
    c.roughness = ProfileKind::ModulatedSinusoidal;
    c.sites = {0.0, 0.15, 0.35, 0.525, 0.675, 0.875, 0.975};
    c.micro_resolution = 12;
    c.dns_wall_resolution = 14;
    c.dns_ny = 40;
    break;

  case CaseId::QuasiPeriodicChannel:
    c.roughness = ProfileKind::QuasiPeriodic;
    c.sites = {0.481561};
    c.bc_mode = MicroBcMode::QuadraticDirichlet;
    c.micro_resolution = 60; // 12 per period across the five-period window
    c.dns_wall_resolution = 18;
    c.dns_ny = 38;
    c.dns_seam_blend = true;
    c.macro_ny = 41;
    break;

  case CaseId::BackwardFacingStep:
    c.eps = 0.1;
    c.nu = 0.1;
    c.body_force = {0.0, 0.0};
    c.roughness = ProfileKind::BfsPatch;
    c.sites = {7.5, 13.5};
    // Dirichlet windows carry each site's local profile shape into the micro
    // solve.  A free-stream top would scale both micros by a single number,
    // and the slip extraction divides that number right back out -- the two
    // sites would then be distinguished by nothing but their tiny convective
    // difference.  Three periods keeps the side-wall bias mild while staying
    // inside the cell budget.
    c.bc_mode = MicroBcMode::QuadraticDirichlet;
    c.micro_width = 0.75;
    c.micro_resolution = 36;
    c.window = {{6.0, 16.0}};
    break;
  }
  return c;
}

namespace {

void validate_case(const ExperimentCase& c) {
  if (!(c.eps > 0))
    throw ConfigError("eps must be positive");
  if (!(c.nu > 0))
    throw ConfigError("nu must be positive");
  if (c.sites.empty())
    throw ConfigError("at least one micro site is required");
  if (c.profile_samples < 2)
    throw ConfigError("profile_samples must be at least 2");
  if (c.micro_resolution < 2)
    throw ConfigError("micro_resolution must be at least 2");
  if (c.max_iterations < 1)
    throw ConfigError("max_iterations must be at least 1");
  if (c.threads < 1)
    throw ConfigError("threads must be at least 1");
}

bool is_bfs(const ExperimentCase& c) {
  return c.id == CaseId::BackwardFacingStep;
}

} // namespace

RoughnessProfile case_profile(const ExperimentCase& c) {
  return make_profile(c.roughness, c.eps, c.roughness_params);
}

ExperimentCase resolve_case(const ExperimentCase& input) {
  validate_case(input);
  ExperimentCase c = input;
  if (c.micro_width <= 0) {
    // One period suffices with periodic micro sides; the Dirichlet box needs
    // several so its side layers stop polluting the crest-plane averages.
    const double periods =
        c.bc_mode == MicroBcMode::QuadraticDirichlet ? 5.0 : 1.0;
    c.micro_width = periods * case_profile(c).wavelength();
  }
  if (c.micro_height <= 0)
    c.micro_height = 4 * c.eps;
  if (c.tolerance <= 0)
    c.tolerance = c.eps * c.eps;
  if (c.slip_floor <= 0)
    c.slip_floor = 1e-4 * c.eps;
  if (c.heights.empty()) {
    c.heights = {c.eps / 4, c.eps / 2, c.eps, 2 * c.eps, 4 * c.eps};
    if (is_bfs(c))
      c.heights.push_back(0.55);
  }
  return c;
}

// ------------------------------------------------------------- sampling ----

ProfileTable sample_profiles(const FlowSolution& sol,
                             const std::vector<double>& heights,
                             std::array<double, 2> x_range, int samples) {
  if (samples < 2)
    throw ConfigError("need at least two samples per height");
  ProfileTable table;
  table.heights = heights;
  const double dx = (x_range[1] - x_range[0]) / (samples - 1);
  for (double h : heights) {
    for (int i = 0; i < samples; ++i) {
      ProfileRow row;
      row.x1 = x_range[0] + i * dx;
      row.height = h;
      try {
        row.u1 = eval_field(sol, Field::U1, row.x1, h);
        row.du1dx2 = eval_field(sol, Field::DU1DX2, row.x1, h);
      } catch (const PointOutsideMesh&) {
        continue;
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

std::vector<ProfileError> field_error(const ProfileTable& reference,
                                      const ProfileTable& candidate) {
  if (reference.heights != candidate.heights)
    throw GridMismatch("tables sample different height sets");
  const auto& R = reference.rows;
  const auto& C = candidate.rows;
  std::vector<ProfileError> out;
  size_t ir = 0, ic = 0;
  for (double h : reference.heights) {
    double nu = 0, du = 0, ng = 0, dg = 0;
    while (true) {
      const bool rin = ir < R.size() && R[ir].height == h;
      const bool cin = ic < C.size() && C[ic].height == h;
      if (!rin && !cin)
        break;
      if (rin != cin)
        throw GridMismatch("row counts differ at height " + std::to_string(h));
      if (std::abs(R[ir].x1 - C[ic].x1) > 1e-12)
        throw GridMismatch("x1 grids differ at height " + std::to_string(h));
      nu += (C[ic].u1 - R[ir].u1) * (C[ic].u1 - R[ir].u1);
      du += R[ir].u1 * R[ir].u1;
      ng += (C[ic].du1dx2 - R[ir].du1dx2) * (C[ic].du1dx2 - R[ir].du1dx2);
      dg += R[ir].du1dx2 * R[ir].du1dx2;
      ++ir;
      ++ic;
    }
    ProfileError e;
    e.height = h;
    // absolute residual when the reference vanishes identically
    e.u1 = du > 0 ? std::sqrt(nu / du) : std::sqrt(nu);
    e.du1dx2 = dg > 0 ? std::sqrt(ng / dg) : std::sqrt(ng);
    out.push_back(e);
  }
  return out;
}

double recirculation_length(const FlowSolution& sol,
                            std::array<double, 2> step_corner,
                            double probe_height, double smooth_window) {
  if (!(probe_height > 0))
    throw ConfigError("probe height must be positive");
  if (smooth_window < 0)
    throw ConfigError("smoothing window must be nonnegative");
  const auto bb = sol.mesh().bounding_box();
  const double y = step_corner[1] + probe_height;
  const double w = smooth_window;
  const double margin =
      std::max(w / 2, (bb[1] - step_corner[0]) * 5e-4);
  const double xa = step_corner[0] + margin;
  const double xb = bb[1] - margin;
  if (!(xb > xa))
    throw ConfigError("probe line leaves no room past the step corner");

  auto shear = [&](double x) {
    if (w > 0)
      return line_average(sol, Field::DU1DX2, x - w / 2, y, w);
    return eval_field(sol, Field::DU1DX2, x, y);
  };

  const int n = 1200;
  double xprev = xa, sprev = shear(xa);
  for (int i = 1; i < n; ++i) {
    const double x = xa + i * (xb - xa) / (n - 1);
    const double s = shear(x);
    if (sprev < 0 && s >= 0) {
      double lo = xprev, hi = x;
      for (int it = 0; it < 60; ++it) {
        const double mid = (lo + hi) / 2;
        (shear(mid) < 0 ? lo : hi) = mid;
      }
      return (lo + hi) / 2 - step_corner[0];
    }
    xprev = x;
    sprev = s;
  }
  throw NoReattachment(
      "wall shear never recovers between the corner and the outflow");
}

// ------------------------------------------------------------ execution ----

namespace {

template <typename F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    std::string detail = e.what();
    const std::string prefix = e.code() + ": ";
    if (detail.rfind(prefix, 0) == 0)
      detail = detail.substr(prefix.size());
    throw Error(e.code(), "stage " + std::string(stage) + ": " + detail);
  }
}

std::function<std::array<double, 2>(double, double)>
bfs_inflow(const ExperimentCase& c) {
  const double s = c.macro_bfs.step_y;
  const double H = c.macro_bfs.height;
  const double peak = c.inflow_peak;
  const double span = H - s;
  return [=](double, double y) -> std::array<double, 2> {
    const double t = (y - s) * (H - y);
    return {peak * 4 * std::max(t, 0.0) / (span * span), 0.0};
  };
}

} // namespace

FlowSolution solve_case_dns(const ExperimentCase& c,
                            const RoughnessProfile& profile,
                            TriangleMesh& mesh_out) {
  FlowProblem pb;
  SolverOptions opts;
  if (is_bfs(c)) {
    mesh_out = mesh_bfs_dns(profile, c.dns_bfs);
    pb.bcs = {dirichlet_bc(BoundaryTag::Inflow, bfs_inflow(c)),
              noslip_bc(BoundaryTag::NoSlipWall), noslip_bc(BoundaryTag::Top),
              zero_stress_bc(BoundaryTag::Outflow)};
    pb.gauge = PressureGauge::None;
    opts.continuation_start = 4;
  } else {
    DnsChannelSpec spec;
    spec.top_fn = c.top_fn;
    spec.seam_blend = c.dns_seam_blend;
    spec.wall_resolution = c.dns_wall_resolution;
    spec.ny = c.dns_ny;
    spec.grade_band = c.dns_grade_band;
    mesh_out = mesh_rough_dns(profile, spec);
    pb.bcs = {noslip_bc(BoundaryTag::NoSlipWall), noslip_bc(BoundaryTag::Top),
              periodic_bc()};
  }
  pb.mesh = &mesh_out;
  pb.nu = c.nu;
  pb.body_force = c.body_force;
  return solve_stationary(pb, opts);
}

MacroDescriptor case_macro(const ExperimentCase& c) {
  MacroDescriptor m;
  if (is_bfs(c)) {
    m.mesh = mesh_macro_bfs(c.macro_bfs);
    m.slip_range = {c.macro_bfs.slip_begin, c.macro_bfs.slip_end};
    m.far_bcs = {dirichlet_bc(BoundaryTag::Inflow, bfs_inflow(c)),
                 noslip_bc(BoundaryTag::Top),
                 noslip_bc(BoundaryTag::NoSlipWall),
                 zero_stress_bc(BoundaryTag::Outflow)};
    m.gauge = PressureGauge::None;
    m.options.continuation_start = 4;
  } else {
    MacroChannelSpec spec;
    spec.top_fn = c.top_fn;
    spec.nx = c.macro_nx;
    spec.ny = c.macro_ny;
    m.mesh = mesh_macro_channel(spec);
    m.slip_range = {0.0, 1.0};
    m.far_bcs = {noslip_bc(BoundaryTag::Top), periodic_bc()};
  }
  m.fluid.nu = c.nu;
  m.fluid.body_force = c.body_force;
  return m;
}

HMMConfig case_hmm_config(const ExperimentCase& c) {
  HMMConfig hconf;
  hconf.sites = c.sites;
  hconf.tolerance = c.tolerance;
  hconf.max_iterations = c.max_iterations;
  hconf.micro.width = c.micro_width;
  hconf.micro.height = c.micro_height;
  hconf.micro.resolution = c.micro_resolution;
  hconf.micro.bc_mode = c.bc_mode;
  hconf.interpolant = c.interpolant;
  hconf.window = c.window;
  hconf.slip_floor = c.slip_floor;
  hconf.threads = c.threads;
  return hconf;
}

ExperimentResult run_experiment(const ExperimentCase& input) {
  const RoughnessProfile profile = case_profile(input);
  const ExperimentCase c = resolve_case(input);

  ExperimentResult result;
  result.config = c;

  TriangleMesh dns_mesh;
  result.dns =
      run_stage("dns", [&] { return solve_case_dns(c, profile, dns_mesh); });

  const MacroDescriptor macro = case_macro(c);
  result.noslip = run_stage("noslip", [&] { return solve_macro_noslip(macro); });

  const HMMConfig hconf = case_hmm_config(c);
  result.hmm = run_stage("hmm", [&] { return run_hmm(hconf, macro, profile); });

  const auto bb = dns_mesh.bounding_box();
  const std::array<double, 2> xr = {bb[0], bb[1]};
  result.dns_table = sample_profiles(result.dns, c.heights, xr, c.profile_samples);
  result.noslip_table =
      sample_profiles(result.noslip, c.heights, xr, c.profile_samples);
  result.hmm_table =
      sample_profiles(result.hmm.macro, c.heights, xr, c.profile_samples);

  ComparisonReport& rep = result.report;
  rep.case_name = c.name;
  rep.eps = c.eps;
  rep.nu = c.nu;
  rep.sites = c.sites;
  rep.alpha = result.hmm.law.values;
  rep.alpha_raw = result.hmm.report.alpha_raw;
  const auto [lo, hi] = std::minmax_element(rep.alpha.begin(), rep.alpha.end());
  rep.slip_spread = *hi > 0 ? (*hi - *lo) / *hi : 0.0;
  rep.iterations = result.hmm.report.iterations;
  rep.micro_sweeps = result.hmm.report.micro_sweeps;
  rep.tolerance = result.hmm.report.tolerance;
  rep.final_diff = result.hmm.report.final_diff;
  rep.dns_cells = dns_mesh.cell_count();
  rep.macro_cells = result.hmm.report.macro_cells;
  rep.micro_cells = result.hmm.report.micro_cells;
  rep.micro_cells_total = result.hmm.report.micro_cells_total;
  rep.cell_ratio =
      double(rep.macro_cells + rep.micro_cells_total) / rep.dns_cells;

  run_stage("report", [&] {
    const auto e_ns = field_error(result.dns_table, result.noslip_table);
    const auto e_h = field_error(result.dns_table, result.hmm_table);
    for (size_t i = 0; i < e_ns.size(); ++i)
      rep.errors.push_back({e_ns[i].height, e_ns[i].u1, e_h[i].u1,
                            e_ns[i].du1dx2, e_h[i].du1dx2});
    if (is_bfs(c)) {
      const std::array<double, 2> corner = {c.macro_bfs.inlet_length, 0.0};
      const double probe = c.eps / 2;
      // DNS shear oscillates per roughness period; smooth over one.
      rep.recirc_dns =
          recirculation_length(result.dns, corner, probe, profile.wavelength());
      rep.recirc_noslip = recirculation_length(result.noslip, corner, probe);
      rep.recirc_hmm = recirculation_length(result.hmm.macro, corner, probe);
    }
    return 0;
  });
  return result;
}

// ------------------------------------------------------------ reporting ----

void save_table_csv(const ProfileTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot open '" + path + "' for writing");
  out << "x1,height,u1,du1dx2\n";
  char line[160];
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%.15g,%.15g,%.15g,%.15g\n", r.x1,
                  r.height, r.u1, r.du1dx2);
    out << line;
  }
}

ProfileTable load_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != "x1,height,u1,du1dx2")
    throw ConfigError("'" + path + "' is not a profile table");
  ProfileTable table;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    ProfileRow r;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r.x1, &r.height, &r.u1,
                    &r.du1dx2) != 4)
      throw ConfigError("'" + path + "' line " + std::to_string(lineno) +
                        ": expected four comma-separated numbers");
    if (std::find(table.heights.begin(), table.heights.end(), r.height) ==
        table.heights.end())
      table.heights.push_back(r.height);
    table.rows.push_back(r);
  }
  return table;
}

std::string report_json(const ComparisonReport& r) {
  Json j;
  j["case"] = r.case_name;
  j["eps"] = r.eps;
  j["nu"] = r.nu;
  j["sites"] = r.sites;
  j["alpha"] = r.alpha;
  j["alpha_raw"] = r.alpha_raw;
  j["slip_spread"] = r.slip_spread;
  j["iterations"] = r.iterations;
  j["micro_sweeps"] = r.micro_sweeps;
  j["tolerance"] = r.tolerance;
  j["final_diff"] = r.final_diff;
  Json cells;
  cells["dns"] = r.dns_cells;
  cells["macro"] = r.macro_cells;
  cells["micro"] = r.micro_cells;
  cells["micro_total"] = r.micro_cells_total;
  cells["ratio"] = r.cell_ratio;
  j["cells"] = cells;
  Json errs = Json::array();
  for (const auto& e : r.errors) {
    Json row;
    row["height"] = e.height;
    Json u;
    u["noslip"] = e.u1_noslip;
    u["hmm"] = e.u1_hmm;
    row["u1"] = u;
    Json g;
    g["noslip"] = e.shear_noslip;
    g["hmm"] = e.shear_hmm;
    row["du1dx2"] = g;
    errs.push_back(row);
  }
  j["errors"] = errs;
  if (std::isfinite(r.recirc_dns)) {
    Json rc;
    rc["dns"] = r.recirc_dns;
    rc["noslip"] = r.recirc_noslip;
    rc["hmm"] = r.recirc_hmm;
    j["recirculation"] = rc;
  }
  return j.dump(2) + "\n";
}

void export_profiles(const ExperimentResult& result, const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec); // existing dir is fine
  save_table_csv(result.dns_table, (dir / "dns_profiles.csv").string());
  save_table_csv(result.noslip_table, (dir / "noslip_profiles.csv").string());
  save_table_csv(result.hmm_table, (dir / "hmm_profiles.csv").string());
  std::ofstream rep(dir / "report.json");
  if (!rep)
    throw ConfigError("cannot open '" + (dir / "report.json").string() +
                      "' for writing");
  rep << report_json(result.report);
}

// -------------------------------------------------------- configuration ----

namespace {

void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown key '" + it.key() + "' in " +
                        std::string(where));
  }
}

template <typename T>
void maybe(const Json& obj, const char* key, T& target) {
  if (obj.contains(key))
    target = obj.at(key).get<T>();
}

MicroBcMode bc_mode_from_string(const std::string& name) {
  if (name == "periodic_free_stream")
    return MicroBcMode::PeriodicFreeStream;
  if (name == "quadratic_dirichlet")
    return MicroBcMode::QuadraticDirichlet;
  throw ConfigError("unknown micro bc mode '" + name + "'");
}

} // namespace

ExperimentCase merge_case_json(const ExperimentCase& base, const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  if (!j.is_object())
    throw ConfigError("config root must be an object");
  check_keys(j, {"case", "name", "geometry", "fluid", "roughness", "hmm", "output"},
             "config root");
  ExperimentCase c = base;
  try {
    maybe(j, "name", c.name);
    if (j.contains("geometry")) {
      const Json& g = j.at("geometry");
      check_keys(g,
                 {"dns_wall_resolution", "dns_ny", "dns_grade_band",
                  "dns_seam_blend", "macro_nx", "macro_ny"},
                 "geometry");
      maybe(g, "dns_wall_resolution", c.dns_wall_resolution);
      maybe(g, "dns_ny", c.dns_ny);
      maybe(g, "dns_grade_band", c.dns_grade_band);
      maybe(g, "dns_seam_blend", c.dns_seam_blend);
      maybe(g, "macro_nx", c.macro_nx);
      maybe(g, "macro_ny", c.macro_ny);
    }
    if (j.contains("fluid")) {
      const Json& f = j.at("fluid");
      check_keys(f, {"eps", "nu", "body_force"}, "fluid");
      maybe(f, "eps", c.eps);
      maybe(f, "nu", c.nu);
      maybe(f, "body_force", c.body_force);
    }
    if (j.contains("roughness")) {
      const Json& r = j.at("roughness");
      check_keys(r, {"kind", "wavelength", "depth", "window_begin", "window_end"},
                 "roughness");
      if (r.contains("kind"))
        c.roughness = profile_kind_from_string(r.at("kind").get<std::string>());
      maybe(r, "wavelength", c.roughness_params.wavelength);
      maybe(r, "depth", c.roughness_params.depth);
      maybe(r, "window_begin", c.roughness_params.window_begin);
      maybe(r, "window_end", c.roughness_params.window_end);
    }
    if (j.contains("hmm")) {
      const Json& h = j.at("hmm");
      check_keys(h,
                 {"sites", "bc_mode", "micro_width", "micro_height",
                  "micro_resolution", "tolerance", "slip_floor", "interpolant",
                  "window", "max_iterations", "threads"},
                 "hmm");
      maybe(h, "sites", c.sites);
      if (h.contains("bc_mode"))
        c.bc_mode = bc_mode_from_string(h.at("bc_mode").get<std::string>());
      maybe(h, "micro_width", c.micro_width);
      maybe(h, "micro_height", c.micro_height);
      maybe(h, "micro_resolution", c.micro_resolution);
      maybe(h, "tolerance", c.tolerance);
      maybe(h, "slip_floor", c.slip_floor);
      if (h.contains("interpolant"))
        c.interpolant =
            interpolant_from_string(h.at("interpolant").get<std::string>());
      if (h.contains("window"))
        c.window = h.at("window").get<std::array<double, 2>>();
      maybe(h, "max_iterations", c.max_iterations);
      maybe(h, "threads", c.threads);
    }
    if (j.contains("output")) {
      const Json& o = j.at("output");
      check_keys(o, {"heights", "profile_samples"}, "output");
      maybe(o, "heights", c.heights);
      maybe(o, "profile_samples", c.profile_samples);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config value error: ") + e.what());
  }
  return c;
}

ExperimentCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  if (!j.is_object() || !j.contains("case"))
    throw ConfigError("config file must name its base 'case'");
  ExperimentCase base;
  try {
    base = make_case(case_from_string(j.at("case").get<std::string>()));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config value error: ") + e.what());
  }
  return merge_case_json(base, text);
}

} // namespace slipflow
