#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "slipflow/errors.hpp"
#include "slipflow/fem.hpp"
#include "slipflow/mesh.hpp"

#include "reference_values.hpp"

using namespace slipflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

TriangleMesh unit_channel(int n) {
  MacroChannelSpec spec;
  spec.nx = spec.ny = n;
  return mesh_macro_channel(spec);
}

FlowProblem channel_problem(const TriangleMesh& mesh) {
  FlowProblem pb;
  pb.mesh = &mesh;
  pb.nu = 1.0;
  pb.body_force = {1.0, 0.0};
  pb.bcs = {noslip_bc(BoundaryTag::SlipWall), noslip_bc(BoundaryTag::Top),
            periodic_bc()};
  return pb;
}

double max_vertex_error(const FlowSolution& sol,
                        const std::function<double(double, double)>& exact_u1) {
  double worst = 0;
  for (const auto& v : sol.mesh().vertices)
    worst = std::max(worst, std::abs(eval_field(sol, Field::U1, v[0], v[1]) -
                                     exact_u1(v[0], v[1])));
  return worst;
}

// Manufactured Navier-Stokes solution on the unit square, zero on the whole
// boundary: u = curl of (1/pi) sin^2(pi x) sin^2(pi y), p = cos(pi x) cos(pi y).
struct Manufactured {
  static std::array<double, 2> u(double x, double y) {
    const double s = std::sin(kPi * x), t = std::sin(kPi * y);
    return {s * s * std::sin(2 * kPi * y), -std::sin(2 * kPi * x) * t * t};
  }
  static std::array<double, 2> laplace_u(double x, double y) {
    const double s = std::sin(kPi * x), t = std::sin(kPi * y);
    const double X = std::sin(2 * kPi * x), Xc = std::cos(2 * kPi * x);
    const double S = std::sin(2 * kPi * y), C = std::cos(2 * kPi * y);
    return {2 * kPi * kPi * (Xc - 2 * s * s) * S,
            -2 * kPi * kPi * (C - 2 * t * t) * X};
  }
  static std::array<double, 2> convection(double x, double y) {
    const double s = std::sin(kPi * x), t = std::sin(kPi * y);
    const double X = std::sin(2 * kPi * x), Xc = std::cos(2 * kPi * x);
    const double S = std::sin(2 * kPi * y), C = std::cos(2 * kPi * y);
    const double u1 = s * s * S, u2 = -X * t * t;
    // grad u1 = (pi X S, 2 pi s^2 C); grad u2 = (-2 pi Xc t^2, -pi X S)
    return {u1 * kPi * X * S + u2 * 2 * kPi * s * s * C,
            u1 * (-2 * kPi * Xc * t * t) + u2 * (-kPi * X * S)};
  }
  static std::array<double, 2> grad_p(double x, double y) {
    return {-kPi * std::sin(kPi * x) * std::cos(kPi * y),
            -kPi * std::cos(kPi * x) * std::sin(kPi * y)};
  }
  static std::array<double, 2> force(double x, double y, double nu) {
    const auto lap = laplace_u(x, y);
    const auto conv = convection(x, y);
    const auto gp = grad_p(x, y);
    return {-nu * lap[0] + conv[0] + gp[0], -nu * lap[1] + conv[1] + gp[1]};
  }
};

} // namespace

TEST_CASE("manufactured derivatives match finite differences") {
  // guards the hand-derived Laplacian/convection terms feeding the
  // convergence test
  const double h = 1e-5;
  for (auto [x, y] : {std::array<double, 2>{0.31, 0.47},
                      std::array<double, 2>{0.72, 0.18},
                      std::array<double, 2>{0.11, 0.88}}) {
    for (int c = 0; c < 2; ++c) {
      const auto f = [c](double a, double b) { return Manufactured::u(a, b)[c]; };
      const double lap = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) -
                          4 * f(x, y)) /
                         (h * h);
      CHECK(lap == doctest::Approx(Manufactured::laplace_u(x, y)[c]).epsilon(1e-4));
      const double dx = (f(x + h, y) - f(x - h, y)) / (2 * h);
      const double dy = (f(x, y + h) - f(x, y - h)) / (2 * h);
      const auto u = Manufactured::u(x, y);
      CHECK(u[0] * dx + u[1] * dy ==
            doctest::Approx(Manufactured::convection(x, y)[c]).epsilon(1e-6));
    }
  }
}

TEST_CASE("Poiseuille flow is reproduced to solver precision") {
  const TriangleMesh mesh = unit_channel(16);
  const FlowSolution sol = solve_stationary(channel_problem(mesh));
  CHECK(max_vertex_error(sol, [](double, double y) {
          return refs::poiseuille(y);
        }) <= 1e-8);
  // quadratic velocity also makes the shear exact
  for (double y : {0.11, 0.5, 0.93})
    CHECK(eval_field(sol, Field::DU1DX2, 0.4, y) ==
          doctest::Approx(0.5 - y).epsilon(1e-8));
  CHECK(sol.stats().divergence <= 1e-8);
}

TEST_CASE("Navier-slip Poiseuille matches the closed form") {
  const double alpha = 0.05;
  const TriangleMesh mesh = unit_channel(12);
  FlowProblem pb;
  pb.mesh = &mesh;
  pb.body_force = {1.0, 0.0};
  pb.bcs = {slip_robin_bc(BoundaryTag::SlipWall, [=](double) { return alpha; }),
            noslip_bc(BoundaryTag::Top), periodic_bc()};
  const FlowSolution sol = solve_stationary(pb);
  CHECK(max_vertex_error(sol, [=](double, double y) {
          return refs::slip_poiseuille(y, alpha);
        }) <= 1e-8);

  // Robin consistency u1 = alpha du1/dx2 on the wall
  for (int i = 0; i <= 20; ++i) {
    const double x = i / 20.0;
    const double u = eval_field(sol, Field::U1, x, 0.0);
    const double g = eval_field(sol, Field::DU1DX2, x, 0.0);
    CHECK(std::abs(u - alpha * g) <= 1e-8);
  }

  // periodic exactness at the seam
  for (double y : {0.05, 0.31, 0.77})
    CHECK(std::abs(eval_field(sol, Field::U1, 0.0, y) -
                   eval_field(sol, Field::U1, 1.0, y)) <= 1e-12);

  // volume flux is the same through every vertical cut
  const double fined = segment_average(sol, Field::U1, 0.3, 0.0, 0.3, 1.0);
  const double f2 = segment_average(sol, Field::U1, 0.71, 0.0, 0.71, 1.0);
  CHECK(fined == doctest::Approx(f2).epsilon(1e-8));
}

TEST_CASE("Couette flow with a moving top lid is exact") {
  const TriangleMesh mesh = unit_channel(8);
  FlowProblem pb;
  pb.mesh = &mesh;
  pb.bcs = {noslip_bc(BoundaryTag::SlipWall),
            dirichlet_bc(BoundaryTag::Top,
                         [](double, double) {
                           return std::array<double, 2>{1.0, 0.0};
                         }),
            periodic_bc()};
  const FlowSolution sol = solve_stationary(pb);
  CHECK(max_vertex_error(sol, [](double, double y) { return y; }) <= 1e-10);
  CHECK(boundary_average(sol, BoundaryTag::Top, Field::U1) ==
        doctest::Approx(1.0).epsilon(1e-10));
  // velocity() agrees with eval_field
  const auto v = sol.velocity(0.37, 0.52);
  CHECK(v[0] == doctest::Approx(eval_field(sol, Field::U1, 0.37, 0.52)));
  CHECK(v[1] == doctest::Approx(eval_field(sol, Field::U2, 0.37, 0.52)));
}

TEST_CASE("manufactured Navier-Stokes converges at the Taylor-Hood rate") {
  std::vector<double> errors;
  for (int n : {8, 16, 32}) {
    const TriangleMesh mesh = unit_channel(n);
    FlowProblem pb;
    pb.mesh = &mesh;
    pb.nu = 1.0;
    pb.force_fn = [](double x, double y) {
      return Manufactured::force(x, y, 1.0);
    };
    pb.bcs = {noslip_bc(BoundaryTag::SlipWall), noslip_bc(BoundaryTag::Top),
              noslip_bc(BoundaryTag::PeriodicLeft),
              noslip_bc(BoundaryTag::PeriodicRight)};
    const FlowSolution sol = solve_stationary(pb);
    errors.push_back(velocity_l2_error(sol, Manufactured::u));
  }
  REQUIRE(errors.size() == 3);
  const double rate1 = std::log2(errors[0] / errors[1]);
  const double rate2 = std::log2(errors[1] / errors[2]);
  CAPTURE(errors[0]);
  CAPTURE(errors[1]);
  CAPTURE(errors[2]);
  CHECK(rate1 >= 2.7);
  CHECK(rate2 >= 2.7);
}

TEST_CASE("vanishing forcing reaches the Stokes limit") {
  const TriangleMesh mesh = unit_channel(10);
  FlowProblem pb = channel_problem(mesh);
  pb.body_force = {1e-6, 0.0};
  const FlowSolution ns = solve_stationary(pb);
  const FlowSolution st = solve_stokes(pb);
  double worst = 0;
  for (double y : {0.1, 0.3, 0.5, 0.8}) {
    const double a = eval_field(ns, Field::U1, 0.4, y);
    const double b = eval_field(st, Field::U1, 0.4, y);
    worst = std::max(worst, std::abs(a - b) / std::abs(b));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("line and kernel averages reproduce closed forms") {
  const auto constant = [](double, double) { return 3.25; };
  const auto coord = [](double x, double) { return x; };
  CHECK(line_average(constant, 0.2, 0.5, 0.3) == doctest::Approx(3.25).epsilon(1e-13));
  // one vanishing moment puts the kernel average of x1 at the midpoint
  CHECK(kernel_average(coord, 0.2, 0.5, 0.3, bump_kernel()) ==
        doctest::Approx(0.35).epsilon(1e-10));
  // the box kernel is line_average by definition
  const auto box = [](double) { return 1.0; };
  CHECK(kernel_average(coord, 0.2, 0.5, 0.3, box) ==
        doctest::Approx(line_average(coord, 0.2, 0.5, 0.3)).epsilon(1e-12));
  CHECK_THROWS_AS(kernel_average(coord, 0.2, 0.5, 0.3,
                                 [](double) { return 2.0; }),
                  KernelNotNormalized);
}

TEST_CASE("boundary and gauge misconfiguration is rejected") {
  const TriangleMesh mesh = unit_channel(4);
  FlowProblem pb;
  pb.mesh = &mesh;
  pb.body_force = {1.0, 0.0};

  SUBCASE("uncovered tag") {
    pb.bcs = {noslip_bc(BoundaryTag::SlipWall), periodic_bc()};
    CHECK_THROWS_AS(solve_stationary(pb), BadBoundarySpec);
  }
  SUBCASE("tag covered twice") {
    pb.bcs = {noslip_bc(BoundaryTag::SlipWall), noslip_bc(BoundaryTag::SlipWall),
              noslip_bc(BoundaryTag::Top), periodic_bc()};
    CHECK_THROWS_AS(solve_stationary(pb), BadBoundarySpec);
  }
  SUBCASE("gauge without outflow or zero mean") {
    pb.bcs = {noslip_bc(BoundaryTag::SlipWall), noslip_bc(BoundaryTag::Top),
              periodic_bc()};
    pb.gauge = PressureGauge::None;
    CHECK_THROWS_AS(solve_stationary(pb), GaugeError);
  }
  SUBCASE("nonpositive slip coefficient") {
    pb.bcs = {slip_robin_bc(BoundaryTag::SlipWall, [](double) { return 0.0; }),
              noslip_bc(BoundaryTag::Top), periodic_bc()};
    CHECK_THROWS_AS(solve_stationary(pb), NonPositiveSlip);
  }
}

TEST_CASE("evaluation outside the mesh is reported") {
  const TriangleMesh mesh = unit_channel(4);
  const FlowSolution sol = solve_stationary(channel_problem(mesh));
  CHECK_THROWS_AS(eval_field(sol, Field::U1, -0.5, 0.5), PointOutsideMesh);
  CHECK_THROWS_AS(eval_field(sol, Field::U1, 0.5, 1.5), PointOutsideMesh);
  CHECK_THROWS_AS(
      segment_average(sol, Field::U1, 0.5, 0.5, 0.5, 1.5), SegmentOutsideMesh);
  CHECK_THROWS_AS(segment_average(sol, Field::U1, 0.1, 0.1, 0.5, 0.7),
                  SegmentOutsideMesh); // not axis-aligned
}

TEST_CASE("zero-stress outflow reproduces fully developed channel flow") {
  // Poiseuille with inflow profile prescribed and a do-nothing outlet: the
  // downstream state must stay the parabola.
  MacroChannelSpec spec;
  spec.nx = 20;
  spec.ny = 10;
  spec.periodic_sides = false;
  const TriangleMesh mesh = mesh_macro_channel(spec);
  FlowProblem pb;
  pb.mesh = &mesh;
  pb.body_force = {1.0, 0.0};
  pb.gauge = PressureGauge::None;
  pb.bcs = {noslip_bc(BoundaryTag::SlipWall), noslip_bc(BoundaryTag::Top),
            dirichlet_bc(BoundaryTag::Inflow,
                         [](double, double y) {
                           return std::array<double, 2>{refs::poiseuille(y), 0.0};
                         }),
            zero_stress_bc(BoundaryTag::Outflow)};
  const FlowSolution sol = solve_stationary(pb);
  for (double y : {0.2, 0.5, 0.9})
    CHECK(eval_field(sol, Field::U1, 0.95, y) ==
          doctest::Approx(refs::poiseuille(y)).epsilon(1e-7));
}
