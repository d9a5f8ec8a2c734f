#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "slipflow/coupling.hpp"
#include "slipflow/errors.hpp"
#include "slipflow/geometry.hpp"
#include "slipflow/mesh.hpp"

#include "reference_values.hpp"

using namespace slipflow;

namespace {

MacroDescriptor channel_macro(int n, std::array<double, 2> force = {1.0, 0.0}) {
  MacroChannelSpec spec;
  spec.nx = spec.ny = n;
  MacroDescriptor macro;
  macro.mesh = mesh_macro_channel(spec);
  macro.far_bcs = {noslip_bc(BoundaryTag::Top), periodic_bc()};
  macro.fluid.body_force = force;
  return macro;
}

SlipLaw constant_law(double alpha) {
  return build_slip_law({0.5}, {alpha}, InterpolantKind::PiecewiseLinear,
                        std::nullopt, alpha);
}

HMMConfig mini_config() {
  HMMConfig config;
  config.sites = {0.2, 0.6};
  config.micro.width = 0.1;
  config.micro.height = 0.4;
  config.micro.resolution = 12;
  config.tolerance = 0.01; // eps^2
  config.slip_floor = 1e-5;
  return config;
}

double sup_law_diff(const SlipLaw& a, const SlipLaw& b) {
  double sup = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    sup = std::max(sup, std::abs(a(x) - b(x)));
  }
  return sup;
}

} // namespace

TEST_CASE("every interpolant reproduces its samples") {
  const std::vector<double> sites = {1.0, 2.0, 4.0};
  const std::vector<double> values = {0.002, 0.004, 0.003};
  for (auto kind : {InterpolantKind::PiecewiseLinear,
                    InterpolantKind::PiecewiseConstant,
                    InterpolantKind::CubicMonotone}) {
    CAPTURE(to_string(kind));
    const SlipLaw law = build_slip_law(sites, values, kind);
    for (size_t i = 0; i < sites.size(); ++i)
      CHECK(law(sites[i]) == doctest::Approx(values[i]).epsilon(1e-15));
  }
}

TEST_CASE("piecewise-linear law is exact on linear data and clamps outside") {
  auto f = [](double x) { return 0.002 + 0.001 * x; };
  const std::vector<double> sites = {0.0, 0.5, 1.0, 2.0};
  std::vector<double> values;
  for (double s : sites)
    values.push_back(f(s));
  const SlipLaw law = build_slip_law(sites, values);
  for (double x : {0.25, 0.75, 1.7})
    CHECK(law(x) == doctest::Approx(f(x)).epsilon(1e-15));
  CHECK(law(-3.0) == values.front()); // constant extension
  CHECK(law(9.0) == values.back());
}

TEST_CASE("piecewise-constant law switches at sample midpoints") {
  const SlipLaw law =
      build_slip_law({0.0, 1.0}, {0.01, 0.03}, InterpolantKind::PiecewiseConstant);
  CHECK(law(0.49) == 0.01);
  CHECK(law(0.5) == 0.01); // tie goes left
  CHECK(law(0.51) == 0.03);
  CHECK(law(-5.0) == 0.01);
  CHECK(law(5.0) == 0.03);
}

TEST_CASE("monotone cubic preserves monotone data without overshoot") {
  const std::vector<double> sites = {0.0, 1.0, 2.0, 3.0};
  const std::vector<double> values = {0.001, 0.002, 0.0035, 0.004};
  const SlipLaw law =
      build_slip_law(sites, values, InterpolantKind::CubicMonotone);
  double prev = law(0.0);
  for (int i = 1; i <= 300; ++i) {
    const double x = 3.0 * i / 300.0;
    const double v = law(x);
    CHECK(v >= prev - 1e-15);
    CHECK(v >= values.front() - 1e-15);
    CHECK(v <= values.back() + 1e-15);
    prev = v;
  }
}

TEST_CASE("window zeroes the law outside and the floor clamps inside") {
  const double floor = 1e-4;
  const SlipLaw law = build_slip_law({7.5, 13.5}, {0.01, 0.02},
                                     InterpolantKind::PiecewiseLinear,
                                     std::array<double, 2>{6.0, 16.0}, floor);
  CHECK(law(5.999) == 0.0);
  CHECK(law(16.001) == 0.0);
  CHECK(law(6.0) == floor);  // ramp starts at zero, clamped up
  CHECK(law(16.0) == floor);
  CHECK(law(6.75) == doctest::Approx(0.005).epsilon(1e-14));
  CHECK(law(10.5) == doctest::Approx(0.015).epsilon(1e-14));
  CHECK(law(7.5) == 0.01);

  // raw values below the floor are lifted to it at construction
  const SlipLaw lifted = build_slip_law({7.5, 13.5}, {5e-5, 0.02},
                                        InterpolantKind::PiecewiseLinear,
                                        std::array<double, 2>{6.0, 16.0}, floor);
  CHECK(lifted.values[0] == floor);
}

TEST_CASE("law construction rejects bad samples") {
  CHECK_THROWS_AS(build_slip_law({}, {}), EmptySamples);
  CHECK_THROWS_AS(build_slip_law({1.0, 1.0}, {0.1, 0.1}), NonMonotoneSites);
  CHECK_THROWS_AS(build_slip_law({1.0, 2.0}, {0.1}), ConfigError);
  CHECK_THROWS_AS(build_slip_law({7.5, 13.5}, {0.1, 0.1},
                                 InterpolantKind::PiecewiseLinear,
                                 std::array<double, 2>{8.0, 16.0}, 1e-5),
                  ConfigError);
}

TEST_CASE("macro slip solve matches the closed-form slip channel flow") {
  const double alpha = 0.0125;
  const MacroDescriptor macro = channel_macro(16);
  const FlowSolution sol = solve_macro(macro, constant_law(alpha));
  double worst = 0;
  for (const auto& v : macro.mesh.vertices)
    worst = std::max(worst, std::abs(sol.velocity(v[0], v[1])[0] -
                                     refs::slip_poiseuille(v[1], alpha)));
  CHECK(worst <= 1e-8);
}

TEST_CASE("a floored tiny law stays within its size of the no-slip solve") {
  const double delta = 1e-6;
  const MacroDescriptor macro = channel_macro(12);
  const FlowSolution with_law = solve_macro(macro, constant_law(delta));
  const FlowSolution noslip = solve_macro_noslip(macro);
  double worst = 0;
  for (const auto& v : macro.mesh.vertices) {
    const auto a = with_law.velocity(v[0], v[1]);
    const auto b = noslip.velocity(v[0], v[1]);
    worst = std::max(worst, std::hypot(a[0] - b[0], a[1] - b[1]));
  }
  CHECK(worst <= 10 * delta);
}

TEST_CASE("zero forcing yields the zero flow") {
  const MacroDescriptor macro = channel_macro(10, {0.0, 0.0});
  const FlowSolution sol = solve_macro(macro, constant_law(0.01));
  for (const auto& v : macro.mesh.vertices) {
    const auto u = sol.velocity(v[0], v[1]);
    CHECK(std::abs(u[0]) <= 1e-12);
    CHECK(std::abs(u[1]) <= 1e-12);
  }
}

TEST_CASE("the stokes macro path responds linearly to the body force") {
  MacroDescriptor macro = channel_macro(10, {1.0, 0.0});
  macro.navier_stokes = false;
  const SlipLaw law = constant_law(0.01);
  const FlowSolution one = solve_macro(macro, law);
  macro.fluid.body_force = {2.0, 0.0};
  const FlowSolution two = solve_macro(macro, law);
  for (auto [x, y] : {std::array<double, 2>{0.31, 0.5},
                      std::array<double, 2>{0.77, 0.12}})
    CHECK(two.velocity(x, y)[0] ==
          doctest::Approx(2 * one.velocity(x, y)[0]).epsilon(1e-10));
}

TEST_CASE("macro solve rejects a law that is not strictly positive") {
  const MacroDescriptor macro = channel_macro(8);
  const SlipLaw zero = build_slip_law({0.5}, {0.0});
  CHECK_THROWS_AS(solve_macro(macro, zero), NonPositiveSlip);
}

TEST_CASE("micro sweeps return identical doubles for any thread count") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  const MacroDescriptor macro = channel_macro(20);
  const FlowSolution noslip = solve_macro_noslip(macro);
  HMMConfig config = mini_config();
  config.sites = {0.05, 0.25, 0.45, 0.65};
  std::vector<double> base;
  for (int threads : {1, 2, 4}) {
    config.threads = threads;
    const auto alphas = micro_sweep(config, macro, noslip, profile);
    if (threads == 1) {
      base = alphas;
      for (double a : alphas)
        CHECK(a > 0.0);
    } else {
      REQUIRE(alphas.size() == base.size());
      for (size_t j = 0; j < base.size(); ++j)
        CHECK(alphas[j] == base[j]); // bitwise
    }
  }
}

TEST_CASE("windows past the periodic seam fold back onto the mesh") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  const MacroDescriptor macro = channel_macro(20);
  const FlowSolution noslip = solve_macro_noslip(macro);
  HMMConfig config = mini_config();
  config.sites = {0.0, 1.0}; // same abscissa modulo the period
  const auto alphas = micro_sweep(config, macro, noslip, profile);
  CHECK(alphas[0] == alphas[1]); // bitwise: identical folded window
}

TEST_CASE("the outer iteration converges fast and lands on a fixed point") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  const MacroDescriptor macro = channel_macro(20);
  const HMMConfig config = mini_config();
  const HMMResult result = run_hmm(config, macro, profile);
  const HMMReport& rep = result.report;

  CHECK(rep.iterations >= 1);
  CHECK(rep.iterations <= 2);
  CHECK(rep.micro_sweeps <= rep.iterations + 1);
  CHECK(rep.final_diff < rep.tolerance);
  CHECK(rep.micro_cells_total ==
        rep.micro_cells[0] + rep.micro_cells[1]);
  CHECK(rep.macro_cells == macro.mesh.cell_count());

  // physical bracket: 0 < alpha <= 1.1 * eps * depth
  for (double v : result.law.values) {
    CHECK(v > 0.0);
    CHECK(v <= 1.1 * eps * profile.depth());
  }

  // self-consistency: a fresh sweep against the returned macro state moves
  // the law by less than the termination threshold
  const auto alphas = micro_sweep(config, macro, result.macro, profile);
  const SlipLaw relaw = build_slip_law(config.sites, alphas, config.interpolant,
                                       config.window, config.slip_floor);
  CHECK(sup_law_diff(relaw, result.law) < config.tolerance);
}

TEST_CASE("the outer iteration reports non-convergence") {
  const double eps = 0.1;
  const auto profile = make_profile(ProfileKind::Sinusoidal, eps);
  const MacroDescriptor macro = channel_macro(12);
  HMMConfig config = mini_config();
  config.sites = {0.2};
  config.tolerance = 1e-30;
  config.max_iterations = 1;
  CHECK_THROWS_AS(run_hmm(config, macro, profile), MaxIterationsExceeded);
}

TEST_CASE("hmm configuration is validated before any solve") {
  const auto profile = make_profile(ProfileKind::Sinusoidal, 0.1);
  const MacroDescriptor macro = channel_macro(8);
  auto expect = [&](auto mutate, auto error) {
    HMMConfig config = mini_config();
    mutate(config);
    CHECK_THROWS_AS(run_hmm(config, macro, profile), decltype(error));
  };
  expect([](HMMConfig& c) { c.tolerance = 0; }, ConfigError{""});
  expect([](HMMConfig& c) { c.max_iterations = 0; }, ConfigError{""});
  expect([](HMMConfig& c) { c.sites = {}; }, EmptySamples{""});
  expect([](HMMConfig& c) { c.sites = {0.5, 0.2}; }, NonMonotoneSites{""});
  expect([](HMMConfig& c) { c.sites = {0.2, 0.25}; }, ConfigError{""});
  expect([](HMMConfig& c) { c.micro.width = 0; }, ConfigError{""});
  expect([](HMMConfig& c) { c.slip_floor = 0; }, ConfigError{""});
  expect([](HMMConfig& c) { c.threads = 0; }, ConfigError{""});
}

TEST_CASE("interpolant names round-trip") {
  for (auto kind : {InterpolantKind::PiecewiseLinear,
                    InterpolantKind::PiecewiseConstant,
                    InterpolantKind::CubicMonotone})
    CHECK(interpolant_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(interpolant_from_string("quintic"), ConfigError);
}
