#pragma once

#include <array>
#include <functional>

#include "slipflow/fem.hpp"
#include "slipflow/geometry.hpp"

namespace slipflow {

enum class MicroBcMode { PeriodicFreeStream, QuadraticDirichlet };

struct MicroDomainSpec {
  double site = 0;   // left edge s_j
  double width = 0;  // L, one roughness period unless stated otherwise
  double height = 0; // gamma, 4*epsilon by default in the coupling layer
  int resolution = 12; // cells across the width
  MicroBcMode bc_mode = MicroBcMode::PeriodicFreeStream;
};

// Quadratic a0 + a1 t + a2 t^2 restricted to [lo, hi].
struct QuadraticProfile {
  double a0 = 0, a1 = 0, a2 = 0;
  double lo = 0, hi = 0;
  double eval(double t) const { return a0 + t * (a1 + t * a2); }
  double integral() const {
    auto anti = [this](double t) {
      return t * (a0 + t * (a1 / 2 + t * a2 / 3));
    };
    return anti(hi) - anti(lo);
  }
};

// Dirichlet data on the non-wall part of the micro boundary. Faces are the
// left side (profiles in x2), the top (profiles in x1) and the right side.
struct MicroBC {
  MicroBcMode mode = MicroBcMode::PeriodicFreeStream;
  double top_value = 0; // PeriodicFreeStream: horizontal velocity at the top
  // QuadraticDirichlet: u = horizontal component, v = vertical component
  QuadraticProfile u_left, v_left, u_top, v_top, u_right, v_right;
  // Signed boundary flux of the data (outward normal); zero for
  // divergence-free macro fields.
  double net_flux() const;
};

// Averaged free-stream data: top velocity = (mean of U1 over the top edge of
// the micro box, 0), periodic sides.
MicroBC build_free_stream_bc(const FlowSolution& macro, const MicroDomainSpec& spec);

// Closed-form variant for analytic macro fields.
MicroBC build_free_stream_bc(const std::function<std::array<double, 2>(double, double)>& macro,
                             const MicroDomainSpec& spec);

// Six quadratics pinned by eighteen constraints: wall-corner no-slip on the
// side profiles, per-face mass-flux equality with the macro field, macro
// continuity at the upper corners, and three midpoint interpolations. The
// macro face integrals start at the crest plane x2 = 0; side spans extend
// down to the wall height at the corresponding edge.
MicroBC build_quadratic_bc(const FlowSolution& macro, const MicroDomainSpec& spec,
                           const RoughnessProfile& profile);
MicroBC build_quadratic_bc(const std::function<std::array<double, 2>(double, double)>& macro,
                           const MicroDomainSpec& spec,
                           const RoughnessProfile& profile);

struct FluidParams {
  double nu = 1.0;
  std::array<double, 2> body_force = {0.0, 0.0};
  std::function<std::array<double, 2>(double, double)> force_fn;
};

// Stationary Navier-Stokes on [s_j, s_j+L] x [wall, gamma] with no-slip on
// the rough wall and the given data on the rest of the boundary.
FlowSolution solve_micro(const MicroDomainSpec& spec, const MicroBC& bc,
                         const RoughnessProfile& profile, const FluidParams& fluid,
                         const SolverOptions& opts = {});

// alpha_j = <u1> / <du1/dx2>, both averaged over the crest-plane segment
// [s_j, s_j+L] x {0}. Raw ratio; may be negative in recirculating flow.
double extract_slip(const FlowSolution& micro, const MicroDomainSpec& spec);

} // namespace slipflow
