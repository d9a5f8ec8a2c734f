#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "slipflow/mesh.hpp"

namespace slipflow {

namespace detail {
struct Space;
}

enum class PressureGauge { ZeroMean, None };

// Boundary condition bound to one (or, for Periodic, two) mesh tags.
struct VelocityBC {
  enum class Kind {
    Dirichlet, // both components strongly imposed
    Periodic,  // dof identification across the mesh's periodic pairs
    SlipRobin, // u2 = 0 strongly + weak (nu/alpha) u1 v1 term (horizontal wall)
    FreeSlip,  // u2 = 0 strongly, zero tangential shear (horizontal boundary)
    ZeroStress // natural do-nothing outflow
  };
  Kind kind = Kind::Dirichlet;
  std::vector<BoundaryTag> tags;
  std::function<std::array<double, 2>(double, double)> value; // Dirichlet data
  std::function<double(double)> slip;                         // Robin alpha(x1)
};

VelocityBC dirichlet_bc(BoundaryTag tag,
                        std::function<std::array<double, 2>(double, double)> value);
VelocityBC noslip_bc(BoundaryTag tag);
VelocityBC periodic_bc(BoundaryTag left = BoundaryTag::PeriodicLeft,
                       BoundaryTag right = BoundaryTag::PeriodicRight);
VelocityBC slip_robin_bc(BoundaryTag tag, std::function<double(double)> alpha);
VelocityBC free_slip_bc(BoundaryTag tag);
VelocityBC zero_stress_bc(BoundaryTag tag);

struct FlowProblem {
  const TriangleMesh* mesh = nullptr;
  double nu = 1.0;
  // Total driving force: constant part (covers a constant -grad p) plus an
  // optional spatially varying part.
  std::array<double, 2> body_force = {0.0, 0.0};
  std::function<std::array<double, 2>(double, double)> force_fn;
  std::vector<VelocityBC> bcs;
  PressureGauge gauge = PressureGauge::ZeroMean;
};

struct SolverOptions {
  double newton_tol = 1e-10;
  int newton_max_iter = 25;
  // When > 1, precede the target solve with a viscosity ramp starting at
  // nu * continuation_start, halving per stage, warm-starting each stage.
  double continuation_start = 0.0;
  int verbosity = 0;
};

struct SolveStats {
  int newton_iters = 0;
  double residual = 0;        // final nonlinear residual, relative
  double divergence = 0;      // ||discrete div u||_inf
  double velocity_scale = 0;  // max nodal |u|
};

// Immutable Taylor-Hood (P2/P1) solution; evaluation is deterministic with a
// lowest-element-index tie break on inter-element boundaries.
class FlowSolution {
public:
  std::array<double, 2> velocity(double x, double y) const;
  // [i][j] = d u_i / d x_j
  std::array<std::array<double, 2>, 2> velocity_gradient(double x, double y) const;
  double pressure(double x, double y) const;

  const TriangleMesh& mesh() const;
  const SolveStats& stats() const { return stats_; }
  const detail::Space& space() const { return *space_; }
  const Eigen::VectorXd& node_velocity() const { return u_node_; } // 2 per P2 node
  const Eigen::VectorXd& vertex_pressure() const { return p_vertex_; }

private:
  friend FlowSolution solve_stationary(const FlowProblem&, const SolverOptions&);
  friend FlowSolution solve_stokes(const FlowProblem&, const SolverOptions&);
  std::shared_ptr<const detail::Space> space_;
  Eigen::VectorXd u_node_;
  Eigen::VectorXd p_vertex_;
  SolveStats stats_;
};

// Stationary Navier-Stokes: Stokes solve as initial guess, then Newton with
// analytic Jacobian; sparse direct factorization of the saddle-point system.
FlowSolution solve_stationary(const FlowProblem& problem,
                              const SolverOptions& opts = {});
// Linear Stokes solve of the same problem (convection dropped).
FlowSolution solve_stokes(const FlowProblem& problem, const SolverOptions& opts = {});

enum class Field { U1, U2, Pressure, DU1DX1, DU1DX2, DU2DX1, DU2DX2 };

double eval_field(const FlowSolution& sol, Field field, double x, double y);

// Mean of a field along the horizontal segment [x, x+length] x {y}, split at
// element crossings and integrated with Gauss rules per piece (normalized by
// the segment length).
double line_average(const FlowSolution& sol, Field field, double x, double y,
                    double length);
// Same along an axis-aligned segment (used for vertical flux integrals).
double segment_average(const FlowSolution& sol, Field field, double x0, double y0,
                       double x1, double y1);
// Quadrature-only variant for closed-form fields.
double line_average(const std::function<double(double, double)>& field, double x,
                    double y, double length);

// Weighted mean with kernel support scaled onto [x, x+length]; the kernel must
// integrate to one on [0,1] (checked, KernelNotNormalized otherwise).
double kernel_average(const FlowSolution& sol, Field field, double x, double y,
                      double length, const std::function<double(double)>& kernel);
double kernel_average(const std::function<double(double, double)>& field, double x,
                      double y, double length,
                      const std::function<double(double)>& kernel);
// Smooth symmetric bump on [0,1]: unit mass, vanishing first central moment.
std::function<double(double)> bump_kernel();

// Mean of a trace field over all edges with the given tag (value fields only).
double boundary_average(const FlowSolution& sol, BoundaryTag tag, Field field);

// Velocity L2 errors against a closed form, integrated with a degree-5 rule.
double velocity_l2_error(const FlowSolution& sol,
                         const std::function<std::array<double, 2>(double, double)>& exact);

} // namespace slipflow
