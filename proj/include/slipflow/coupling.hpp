#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "slipflow/fem.hpp"
#include "slipflow/geometry.hpp"
#include "slipflow/mesh.hpp"
#include "slipflow/micro.hpp"

namespace slipflow {

enum class InterpolantKind { PiecewiseLinear, PiecewiseConstant, CubicMonotone };

std::string to_string(InterpolantKind kind);
InterpolantKind interpolant_from_string(const std::string& name);

// Wall slip coefficient alpha(x1) built from site samples. Inside the window
// (or everywhere, when none is set) the interpolant is clamped below at
// `floor`; outside the window the law is identically zero, with transition
// knots at the window edges. Evaluation outside the sample range extends the
// nearest sample as a constant.
struct SlipLaw {
  std::vector<double> sites;  // strictly increasing sample abscissae
  std::vector<double> values; // sample values after flooring
  InterpolantKind kind = InterpolantKind::PiecewiseLinear;
  bool has_window = false;
  double window_lo = 0, window_hi = 0;
  double floor = 0;

  // Evaluation table: samples plus window knots, and Hermite slopes for the
  // monotone-cubic kind. Filled by build_slip_law.
  std::vector<double> knot_x, knot_y, knot_m;

  double operator()(double x1) const;
};

SlipLaw build_slip_law(const std::vector<double>& sites,
                       const std::vector<double>& values,
                       InterpolantKind kind = InterpolantKind::PiecewiseLinear,
                       std::optional<std::array<double, 2>> window = std::nullopt,
                       double floor = 0.0);

// Macro problem minus its wall law: mesh, which tag carries the slip wall,
// the boundary conditions on everything else, and the fluid model.
struct MacroDescriptor {
  TriangleMesh mesh;
  BoundaryTag slip_tag = BoundaryTag::SlipWall;
  std::array<double, 2> slip_range = {0.0, 1.0}; // x1 extent of the slip wall
  std::vector<VelocityBC> far_bcs;
  FluidParams fluid;
  PressureGauge gauge = PressureGauge::ZeroMean;
  SolverOptions options;
  bool navier_stokes = true; // false: drop the convective term (Stokes)
};

// Macro solve with the Navier-slip wall law alpha(x1) on the slip tag.
FlowSolution solve_macro(const MacroDescriptor& macro, const SlipLaw& slip);

// Macro solve with a no-slip wall instead of the slip law (the alpha = 0
// starting point of the outer iteration, and the first-order comparison run).
FlowSolution solve_macro_noslip(const MacroDescriptor& macro);

struct HMMConfig {
  std::vector<double> sites; // strictly increasing micro-window left edges
  double tolerance = 0;      // sup-norm termination threshold, > 0
  int max_iterations = 8;    // outer-loop cap
  MicroDomainSpec micro;     // template; `site` is overwritten per sample
  InterpolantKind interpolant = InterpolantKind::PiecewiseLinear;
  std::optional<std::array<double, 2>> window;
  double slip_floor = 0; // lower clamp for the law; must be > 0
  int threads = 1;       // concurrent micro solves per sweep
};

struct HMMReport {
  int iterations = 0;   // corrective macro solves inside the loop, >= 1
  int micro_sweeps = 0; // micro stages executed
  double final_diff = 0;
  double tolerance = 0;
  std::vector<std::vector<double>> alpha_raw; // per sweep, per site (unclamped)
  std::vector<SlipLaw> laws;                  // law after each sweep
  int macro_cells = 0;
  std::vector<int> micro_cells; // per site
  int micro_cells_total = 0;
};

struct HMMResult {
  FlowSolution macro;
  SlipLaw law;
  HMMReport report;
};

// One micro stage: boundary data from `macro` at every site of the config,
// micro solves (optionally threaded), slip extraction. Returns raw alphas in
// site order deterministically.
std::vector<double> micro_sweep(const HMMConfig& config, const MacroDescriptor& macro,
                                const FlowSolution& macro_solution,
                                const RoughnessProfile& profile,
                                std::vector<int>* cells_out = nullptr);

// Outer fixed-point iteration: start from the no-slip macro solution, then
// alternate micro sweeps and corrective macro solves until the slip law
// changes by less than the tolerance in the sup norm over the slip wall;
// finish with one macro solve under the converged law.
HMMResult run_hmm(const HMMConfig& config, const MacroDescriptor& macro,
                  const RoughnessProfile& profile);

} // namespace slipflow
