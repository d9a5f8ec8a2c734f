#include "slipflow/micro.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "slipflow/errors.hpp"
#include "slipflow/mesh.hpp"

namespace slipflow {

namespace {

// Uniform access to the macro field: pointwise values plus the two face
// integrals the constraints need (vertical from the crest plane, horizontal
// along the top edge).
struct MacroAccess {
  std::function<std::array<double, 2>(double, double)> at;
  std::function<double(double x, double y_lo, double y_hi)> int_u1_vertical;
  std::function<double(double y, double x_lo, double x_hi)> int_u2_horizontal;
};

MacroAccess access_solution(const FlowSolution& macro) {
  MacroAccess a;
  a.at = [&macro](double x, double y) { return macro.velocity(x, y); };
  a.int_u1_vertical = [&macro](double x, double lo, double hi) {
    return segment_average(macro, Field::U1, x, lo, x, hi) * (hi - lo);
  };
  a.int_u2_horizontal = [&macro](double y, double lo, double hi) {
    return line_average(macro, Field::U2, lo, y, hi - lo) * (hi - lo);
  };
  return a;
}

MacroAccess access_closed_form(
    const std::function<std::array<double, 2>(double, double)>& macro) {
  MacroAccess a;
  a.at = macro;
  a.int_u1_vertical = [macro](double x, double lo, double hi) {
    return line_average([&](double t, double) { return macro(x, t)[0]; }, lo, 0.0,
                        hi - lo) * (hi - lo);
  };
  a.int_u2_horizontal = [macro](double y, double lo, double hi) {
    return line_average([&](double t, double) { return macro(t, y)[1]; }, lo, 0.0,
                        hi - lo) * (hi - lo);
  };
  return a;
}

void check_spec(const MicroDomainSpec& spec) {
  if (!(spec.width > 0) || !(spec.height > 0))
    throw ConfigError("micro domain needs positive width and height");
}

struct Constraint {
  enum Kind { Value, Integral } kind = Value;
  double where = 0; // Value only
  double rhs = 0;
};

QuadraticProfile solve_profile(double lo, double hi,
                               const std::array<Constraint, 3>& cons) {
  Eigen::Matrix3d A;
  Eigen::Vector3d b;
  for (int i = 0; i < 3; ++i) {
    if (cons[i].kind == Constraint::Value) {
      double t = cons[i].where;
      A.row(i) << 1.0, t, t * t;
    } else {
      A.row(i) << hi - lo, (hi * hi - lo * lo) / 2.0,
          (hi * hi * hi - lo * lo * lo) / 3.0;
    }
    b[i] = cons[i].rhs;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
  if (!lu.isInvertible())
    throw SingularConstraintSystem("degenerate quadratic-profile constraints");
  Eigen::Vector3d c = lu.solve(b);
  return {c[0], c[1], c[2], lo, hi};
}

MicroBC quadratic_bc_impl(const MacroAccess& macro, const MicroDomainSpec& spec,
                          const RoughnessProfile& profile) {
  check_spec(spec);
  const double s = spec.site, L = spec.width, g = spec.height;
  const double e = s + L;
  const double w_l = std::min(profile.wall(s), 0.0);
  const double w_r = std::min(profile.wall(e), 0.0);

  auto UL = macro.at(s, g);
  auto UR = macro.at(e, g);
  auto Um = macro.at(s + L / 2, g);
  auto ULh = macro.at(s, g / 2);
  auto URh = macro.at(e, g / 2);
  double flux_left = macro.int_u1_vertical(s, 0.0, g);
  double flux_right = macro.int_u1_vertical(e, 0.0, g);
  double flux_top = macro.int_u2_horizontal(g, s, e);

  using C = Constraint;
  MicroBC bc;
  bc.mode = MicroBcMode::QuadraticDirichlet;
  bc.u_left = solve_profile(w_l, g,
                            {C{C::Value, w_l, 0.0}, C{C::Value, g, UL[0]},
                             C{C::Integral, 0, flux_left}});
  bc.v_left = solve_profile(w_l, g,
                            {C{C::Value, w_l, 0.0}, C{C::Value, g, UL[1]},
                             C{C::Value, g / 2, ULh[1]}});
  bc.u_top = solve_profile(s, e,
                           {C{C::Value, s, UL[0]}, C{C::Value, e, UR[0]},
                            C{C::Value, s + L / 2, Um[0]}});
  bc.v_top = solve_profile(s, e,
                           {C{C::Value, s, UL[1]}, C{C::Value, e, UR[1]},
                            C{C::Integral, 0, flux_top}});
  bc.u_right = solve_profile(w_r, g,
                             {C{C::Value, w_r, 0.0}, C{C::Value, g, UR[0]},
                              C{C::Integral, 0, flux_right}});
  bc.v_right = solve_profile(w_r, g,
                             {C{C::Value, w_r, 0.0}, C{C::Value, g, UR[1]},
                              C{C::Value, g / 2, URh[1]}});
  return bc;
}

} // namespace

double MicroBC::net_flux() const {
  if (mode == MicroBcMode::PeriodicFreeStream) return 0.0;
  return -u_left.integral() + u_right.integral() + v_top.integral();
}

MicroBC build_free_stream_bc(const FlowSolution& macro, const MicroDomainSpec& spec) {
  check_spec(spec);
  MicroBC bc;
  bc.mode = MicroBcMode::PeriodicFreeStream;
  bc.top_value =
      line_average(macro, Field::U1, spec.site, spec.height, spec.width);
  return bc;
}

MicroBC build_free_stream_bc(
    const std::function<std::array<double, 2>(double, double)>& macro,
    const MicroDomainSpec& spec) {
  check_spec(spec);
  MicroBC bc;
  bc.mode = MicroBcMode::PeriodicFreeStream;
  bc.top_value = line_average([&](double x, double y) { return macro(x, y)[0]; },
                              spec.site, spec.height, spec.width);
  return bc;
}

MicroBC build_quadratic_bc(const FlowSolution& macro, const MicroDomainSpec& spec,
                           const RoughnessProfile& profile) {
  return quadratic_bc_impl(access_solution(macro), spec, profile);
}

MicroBC build_quadratic_bc(
    const std::function<std::array<double, 2>(double, double)>& macro,
    const MicroDomainSpec& spec, const RoughnessProfile& profile) {
  return quadratic_bc_impl(access_closed_form(macro), spec, profile);
}

FlowSolution solve_micro(const MicroDomainSpec& spec, const MicroBC& bc,
                         const RoughnessProfile& profile, const FluidParams& fluid,
                         const SolverOptions& opts) {
  check_spec(spec);
  MicroMeshSpec ms;
  ms.site = spec.site;
  ms.width = spec.width;
  ms.height = spec.height;
  ms.nx = spec.resolution;
  ms.periodic_sides = (bc.mode == MicroBcMode::PeriodicFreeStream);
  TriangleMesh mesh = mesh_micro(profile, ms);

  FlowProblem pb;
  pb.mesh = &mesh;
  pb.nu = fluid.nu;
  pb.body_force = fluid.body_force;
  pb.force_fn = fluid.force_fn;
  if (bc.mode == MicroBcMode::PeriodicFreeStream) {
    double top = bc.top_value;
    pb.bcs = {noslip_bc(BoundaryTag::NoSlipWall),
              dirichlet_bc(BoundaryTag::FreeStreamTop,
                           [top](double, double) {
                             return std::array<double, 2>{top, 0.0};
                           }),
              periodic_bc(BoundaryTag::MicroLeft, BoundaryTag::MicroRight)};
  } else {
    pb.bcs = {noslip_bc(BoundaryTag::NoSlipWall),
              dirichlet_bc(BoundaryTag::FreeStreamTop,
                           [&bc](double x, double) {
                             return std::array<double, 2>{bc.u_top.eval(x),
                                                          bc.v_top.eval(x)};
                           }),
              dirichlet_bc(BoundaryTag::MicroLeft,
                           [&bc](double, double y) {
                             return std::array<double, 2>{bc.u_left.eval(y),
                                                          bc.v_left.eval(y)};
                           }),
              dirichlet_bc(BoundaryTag::MicroRight,
                           [&bc](double, double y) {
                             return std::array<double, 2>{bc.u_right.eval(y),
                                                          bc.v_right.eval(y)};
                           })};
  }
  return solve_stationary(pb, opts);
}

double extract_slip(const FlowSolution& micro, const MicroDomainSpec& spec) {
  check_spec(spec);
  double num = line_average(micro, Field::U1, spec.site, 0.0, spec.width);
  double den = line_average(micro, Field::DU1DX2, spec.site, 0.0, spec.width);
  double shear_scale = micro.stats().velocity_scale / spec.height;
  if (std::abs(den) <= 1e-12 * shear_scale)
    throw DegenerateShear("crest-plane shear average " + std::to_string(den) +
                          " is below the resolvable scale");
  return num / den;
}

} // namespace slipflow
