#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>

#include "slipflow/errors.hpp"
#include "slipflow/geometry.hpp"
#include "slipflow/micro.hpp"

#include "reference_values.hpp"

using namespace slipflow;

namespace {

using MacroFn = std::function<std::array<double, 2>(double, double)>;

bool near(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

// Gauss integral of a closed-form component along a vertical or horizontal
// segment, dense enough to be exact for the polynomial fields used here.
double integrate(const std::function<double(double)>& f, double lo, double hi) {
  // 5-point Gauss-Legendre on 8 panels
  static const double xs[] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                              0.5384693101056831, 0.9061798459386640};
  static const double ws[] = {0.2369268850561891, 0.4786286704993665,
                              0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  double total = 0;
  const int panels = 8;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + (hi - lo) * p / panels;
    const double b = lo + (hi - lo) * (p + 1) / panels;
    for (int q = 0; q < 5; ++q)
      total += 0.5 * (b - a) * ws[q] * f(0.5 * (a + b) + 0.5 * (b - a) * xs[q]);
  }
  return total;
}

} // namespace

TEST_CASE("quadratic boundary data satisfies all eighteen constraints") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  // divergence-free polynomial macro with an impermeable crest plane
  const MacroFn macro = [](double x, double y) -> std::array<double, 2> {
    return {x * x + 0.3 * y, -2.0 * x * y};
  };

  for (double site : {0.0, 0.213}) { // a crest corner and a generic corner
    MicroDomainSpec spec;
    spec.site = site;
    spec.width = 0.3;
    spec.height = 0.4;
    const MicroBC bc = build_quadratic_bc(macro, spec, profile);
    const double s = site, e = site + spec.width, g = spec.height;
    const double wl = std::min(profile.wall(s), 0.0);
    const double wr = std::min(profile.wall(e), 0.0);
    CAPTURE(site);

    // wall corners: data vanishes where the side meets the wall
    CHECK(near(bc.u_left.eval(wl), 0.0));
    CHECK(near(bc.v_left.eval(wl), 0.0));
    CHECK(near(bc.u_right.eval(wr), 0.0));
    CHECK(near(bc.v_right.eval(wr), 0.0));

    // upper corners: data continuous with the macro field
    CHECK(near(bc.u_left.eval(g), macro(s, g)[0]));
    CHECK(near(bc.v_left.eval(g), macro(s, g)[1]));
    CHECK(near(bc.u_right.eval(g), macro(e, g)[0]));
    CHECK(near(bc.v_right.eval(g), macro(e, g)[1]));
    CHECK(near(bc.u_top.eval(s), macro(s, g)[0]));
    CHECK(near(bc.u_top.eval(e), macro(e, g)[0]));
    CHECK(near(bc.v_top.eval(s), macro(s, g)[1]));
    CHECK(near(bc.v_top.eval(e), macro(e, g)[1]));

    // midpoint interpolations
    CHECK(near(bc.u_top.eval(s + spec.width / 2), macro(s + spec.width / 2, g)[0]));
    CHECK(near(bc.v_left.eval(g / 2), macro(s, g / 2)[1]));
    CHECK(near(bc.v_right.eval(g / 2), macro(e, g / 2)[1]));

    // per-face mass flux equals the macro flux taken from the crest plane up
    CHECK(near(bc.u_left.integral(),
               integrate([&](double t) { return macro(s, t)[0]; }, 0.0, g)));
    CHECK(near(bc.u_right.integral(),
               integrate([&](double t) { return macro(e, t)[0]; }, 0.0, g)));
    CHECK(near(bc.v_top.integral(),
               integrate([&](double t) { return macro(t, g)[1]; }, s, e)));

    // mass compatibility of the assembled data
    CHECK(std::abs(bc.net_flux()) <= 1e-12 * (1.0 + g + spec.width));
  }
}

TEST_CASE("free-stream data is the mean of the macro top trace") {
  MicroDomainSpec spec;
  spec.site = 0.2;
  spec.width = 0.1;
  spec.height = 0.4;
  const MacroFn macro = [](double x, double y) -> std::array<double, 2> {
    return {3.0 * y + x, 0.0};
  };
  const MicroBC bc = build_free_stream_bc(macro, spec);
  CHECK(bc.mode == MicroBcMode::PeriodicFreeStream);
  // mean of 3*0.4 + x over [0.2, 0.3]
  CHECK(bc.top_value == doctest::Approx(1.2 + 0.25).epsilon(1e-12));
  CHECK(bc.net_flux() == 0.0);
}

TEST_CASE("flat wall develops no slip and an exact linear profile") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Flat, eps);
  MicroDomainSpec spec;
  spec.site = 0.0;
  spec.width = eps;
  spec.height = 4 * eps;
  spec.resolution = 8;
  const MacroFn macro = [](double, double y) -> std::array<double, 2> {
    return {2.5 * y, 0.0};
  };
  const MicroBC bc = build_free_stream_bc(macro, spec);
  FluidParams fluid;
  const FlowSolution sol = solve_micro(spec, bc, profile, fluid);
  // u1 = top_value * y / gamma solves the problem exactly
  const double top = bc.top_value;
  for (auto [x, y] : {std::array<double, 2>{0.03, 0.1},
                      std::array<double, 2>{0.07, 0.33}})
    CHECK(sol.velocity(x, y)[0] ==
          doctest::Approx(top * y / spec.height).epsilon(1e-10));
  CHECK(std::abs(extract_slip(sol, spec)) <= 1e-12);
}

TEST_CASE("sinusoidal slip amount sits near the homogenization value") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  MicroDomainSpec spec;
  spec.site = 0.0;
  spec.width = eps;
  spec.height = 4 * eps;
  spec.resolution = 16;
  const MacroFn macro = [](double, double y) -> std::array<double, 2> {
    return {y, 0.0};
  };
  const FlowSolution sol =
      solve_micro(spec, build_free_stream_bc(macro, spec), profile, {});
  const double alpha = extract_slip(sol, spec);
  const double theory = eps * refs::kSinusoidalSlipConstant;
  CAPTURE(alpha);
  CAPTURE(theory);
  CHECK(alpha > 0.0);
  CHECK(alpha / theory > 0.85);
  CHECK(alpha / theory < 1.35);
}

TEST_CASE("slip extraction is invariant under data scaling in the linear regime") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  MicroDomainSpec spec;
  spec.site = 0.0;
  spec.width = eps;
  spec.height = 4 * eps;
  spec.resolution = 12;
  FluidParams fluid;
  fluid.nu = 1e4; // convection negligible: the solve is effectively Stokes
  double alphas[2];
  int i = 0;
  for (double shear : {1.0, 3.0}) {
    const MacroFn macro = [shear](double, double y) -> std::array<double, 2> {
      return {shear * y, 0.0};
    };
    const FlowSolution sol =
        solve_micro(spec, build_free_stream_bc(macro, spec), profile, fluid);
    alphas[i++] = extract_slip(sol, spec);
  }
  CHECK(std::abs(alphas[0] - alphas[1]) <= 1e-8 * std::abs(alphas[0]));
}

TEST_CASE("periodic and Dirichlet windows agree on the slip amount") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  const MacroFn macro = [](double, double y) -> std::array<double, 2> {
    return {y, 0.0};
  };

  MicroDomainSpec periodic;
  periodic.site = 0.0;
  periodic.width = eps;
  periodic.height = 4 * eps;
  periodic.resolution = 12;
  const double a_periodic = extract_slip(
      solve_micro(periodic, build_free_stream_bc(macro, periodic), profile, {}),
      periodic);

  MicroDomainSpec dirichlet = periodic;
  dirichlet.width = 5 * eps; // side layers decay before the middle periods
  dirichlet.resolution = 60;
  dirichlet.bc_mode = MicroBcMode::QuadraticDirichlet;
  const double a_dirichlet = extract_slip(
      solve_micro(dirichlet, build_quadratic_bc(macro, dirichlet, profile),
                  profile, {}),
      dirichlet);

  CHECK(std::abs(a_periodic - a_dirichlet) / a_periodic <= 0.03);
}

TEST_CASE("degenerate boundary data is rejected at extraction") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  MicroDomainSpec spec;
  spec.site = 0.0;
  spec.width = eps;
  spec.height = 4 * eps;
  spec.resolution = 8;
  MicroBC bc;
  bc.top_value = 0.0;
  const FlowSolution sol = solve_micro(spec, bc, profile, {});
  CHECK_THROWS_AS(extract_slip(sol, spec), DegenerateShear);
}

TEST_CASE("invalid micro domains are rejected") {
  const auto profile = make_profile(ProfileKind::Sinusoidal, 0.1);
  MicroDomainSpec spec;
  spec.site = 0.0;
  spec.width = 0.0;
  spec.height = 0.4;
  CHECK_THROWS_AS(build_free_stream_bc(MacroFn([](double, double) {
                                         return std::array<double, 2>{1, 0};
                                       }),
                                       spec),
                  ConfigError);
}
