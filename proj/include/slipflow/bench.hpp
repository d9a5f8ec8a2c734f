#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slipflow/coupling.hpp"
#include "slipflow/geometry.hpp"
#include "slipflow/mesh.hpp"

namespace slipflow {

enum class CaseId {
  PeriodicChannel,
  SawtoothWavy,
  ModulatedChannel,
  QuasiPeriodicChannel,
  BackwardFacingStep,
};

std::string to_string(CaseId id);
CaseId case_from_string(const std::string& name);

// One benchmark configuration. Zeros mean "derive the per-case default"
// (documented next to each field); make_case() fills the published defaults.
struct ExperimentCase {
  CaseId id = CaseId::PeriodicChannel;
  std::string name = "periodic_channel";

  // fluid
  double eps = 0.025;
  double nu = 1.0;
  std::array<double, 2> body_force = {1.0, 0.0};

  // roughness
  ProfileKind roughness = ProfileKind::Sinusoidal;
  ProfileParams roughness_params;

  // hmm
  std::vector<double> sites = {0.5};
  MicroBcMode bc_mode = MicroBcMode::PeriodicFreeStream;
  double micro_width = 0;    // 0: one roughness wavelength
  double micro_height = 0;   // 0: 4*eps
  int micro_resolution = 16; // cells across the micro window
  double tolerance = 0;      // 0: eps^2
  double slip_floor = 0;     // 0: 1e-4*eps
  InterpolantKind interpolant = InterpolantKind::PiecewiseLinear;
  std::optional<std::array<double, 2>> window; // slip-law support (step case)
  int max_iterations = 8;
  int threads = 1;

  // output
  std::vector<double> heights; // empty: {eps/4, eps/2, eps, 2*eps, 4*eps}
                               // (+0.55 for the step case)
  int profile_samples = 400;

  // channel meshes
  int dns_wall_resolution = 12; // cells per roughness period
  int dns_ny = 32;
  double dns_grade_band = 0; // 0: 4*eps
  bool dns_seam_blend = false;
  int macro_nx = 40, macro_ny = 40;
  std::function<double(double)> top_fn; // curved upper wall (wavy case)

  // step-case meshes and inflow
  MacroBfsSpec macro_bfs;
  DnsBfsSpec dns_bfs;
  double inflow_peak = 22.5; // parabola maximum; mean 15 -> Re = 150 at nu=0.1
};

ExperimentCase make_case(CaseId id);

// JSON configuration with sections {geometry, fluid, roughness, hmm, output}
// merged over the named case's defaults. Unknown keys are ConfigError.
ExperimentCase load_case(const std::string& path);
ExperimentCase merge_case_json(const ExperimentCase& base, const std::string& text);

// Copy with every zero-valued "derive the default" field filled in;
// validates the settings first (ConfigError).
ExperimentCase resolve_case(const ExperimentCase& c);

// The rough wall the case describes.
RoughnessProfile case_profile(const ExperimentCase& c);

// Building blocks of run_experiment, exposed for single-stage runs: the
// reference solve on the rough domain (its mesh is returned through
// `mesh_out`), the macro problem without its wall law, and the coupling
// configuration. All three expect a resolved case.
FlowSolution solve_case_dns(const ExperimentCase& resolved,
                            const RoughnessProfile& profile,
                            TriangleMesh& mesh_out);
MacroDescriptor case_macro(const ExperimentCase& resolved);
HMMConfig case_hmm_config(const ExperimentCase& resolved);

// ------------------------------------------------------------- sampling ----

struct ProfileRow {
  double x1 = 0, height = 0, u1 = 0, du1dx2 = 0;
};

// Rows grouped by height, x1 strictly increasing inside a group. Points
// outside the solution's mesh are skipped.
struct ProfileTable {
  std::vector<double> heights;
  std::vector<ProfileRow> rows;
};

ProfileTable sample_profiles(const FlowSolution& sol,
                             const std::vector<double>& heights,
                             std::array<double, 2> x_range, int samples);

// CSV io for one table (header x1,height,u1,du1dx2; %.15g fields). Loading
// rebuilds the height groups in order of first appearance.
void save_table_csv(const ProfileTable& table, const std::string& path);
ProfileTable load_table_csv(const std::string& path);

struct ProfileError {
  double height = 0;
  double u1 = 0;      // relative L2 against the reference
  double du1dx2 = 0;
};

// Per-height relative L2 differences over the common grid; the tables must
// carry identical heights and x1 samples (GridMismatch otherwise).
std::vector<ProfileError> field_error(const ProfileTable& reference,
                                      const ProfileTable& candidate);

// Distance from the step corner to the reattachment point: the first
// negative-to-positive sign change of du1/dx2 along the probe line
// y = corner_y + probe_height, refined by bisection. A positive
// smooth_window averages the shear over [x - w/2, x + w/2] first (needed on
// rough-wall solutions). Throws NoReattachment when the shear never recovers.
double recirculation_length(const FlowSolution& sol,
                            std::array<double, 2> step_corner,
                            double probe_height, double smooth_window = 0);

// ------------------------------------------------------------ reporting ----

struct HeightErrors {
  double height = 0;
  double u1_noslip = 0, u1_hmm = 0;
  double shear_noslip = 0, shear_hmm = 0;
};

struct ComparisonReport {
  std::string case_name;
  double eps = 0, nu = 0;
  std::vector<double> sites;
  std::vector<double> alpha;                  // final law samples
  std::vector<std::vector<double>> alpha_raw; // per sweep
  double slip_spread = 0;                     // (max - min)/max over alpha
  int iterations = 0, micro_sweeps = 0;
  double tolerance = 0, final_diff = 0;
  int dns_cells = 0, macro_cells = 0, micro_cells_total = 0;
  std::vector<int> micro_cells;
  double cell_ratio = 0; // (macro + micro_total)/dns
  std::vector<HeightErrors> errors;
  // step case only (NaN elsewhere)
  double recirc_dns = std::numeric_limits<double>::quiet_NaN();
  double recirc_noslip = std::numeric_limits<double>::quiet_NaN();
  double recirc_hmm = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
  ExperimentCase config;
  FlowSolution dns;
  FlowSolution noslip;
  HMMResult hmm;
  ProfileTable dns_table, noslip_table, hmm_table;
  ComparisonReport report;
};

// DNS, first-order no-slip, and HMM runs plus sampled tables and the
// comparison report. Solver errors are annotated with the failing stage.
ExperimentResult run_experiment(const ExperimentCase& c);

// CSVs `<model>_profiles.csv` (header x1,height,u1,du1dx2) for the three
// models plus `report.json`; deterministic byte-for-byte for a fixed config.
void export_profiles(const ExperimentResult& result, const std::string& out_dir);

std::string report_json(const ComparisonReport& report);

} // namespace slipflow
