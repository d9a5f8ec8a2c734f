#include "slipflow/coupling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "slipflow/errors.hpp"

namespace slipflow {

std::string to_string(InterpolantKind kind) {
  switch (kind) {
  case InterpolantKind::PiecewiseLinear:
    return "piecewise_linear";
  case InterpolantKind::PiecewiseConstant:
    return "piecewise_constant";
  case InterpolantKind::CubicMonotone:
    return "cubic_monotone";
  }
  return "piecewise_linear";
}

InterpolantKind interpolant_from_string(const std::string& name) {
  if (name == "piecewise_linear")
    return InterpolantKind::PiecewiseLinear;
  if (name == "piecewise_constant")
    return InterpolantKind::PiecewiseConstant;
  if (name == "cubic_monotone")
    return InterpolantKind::CubicMonotone;
  throw ConfigError("unknown interpolant kind '" + name + "'");
}

// ------------------------------------------------------------ slip law ----

double SlipLaw::operator()(double x1) const {
  if (has_window && (x1 < window_lo || x1 > window_hi))
    return 0.0;
  const auto& xs = knot_x;
  const auto& ys = knot_y;
  int n = static_cast<int>(xs.size());
  double v = 0;
  if (n == 1) {
    v = ys[0];
  } else if (kind == InterpolantKind::PiecewiseConstant) {
    // nearest sample, breaks at knot midpoints
    int j = static_cast<int>(std::upper_bound(xs.begin(), xs.end(), x1) -
                             xs.begin());
    j = std::clamp(j, 1, n - 1);
    v = (x1 - xs[j - 1] <= xs[j] - x1) ? ys[j - 1] : ys[j];
  } else if (x1 <= xs.front()) {
    v = ys.front();
  } else if (x1 >= xs.back()) {
    v = ys.back();
  } else {
    int j = static_cast<int>(std::upper_bound(xs.begin(), xs.end(), x1) -
                             xs.begin());
    j = std::clamp(j, 1, n - 1);
    double h = xs[j] - xs[j - 1];
    double t = (x1 - xs[j - 1]) / h;
    if (kind == InterpolantKind::PiecewiseLinear) {
      v = (1 - t) * ys[j - 1] + t * ys[j];
    } else { // monotone cubic Hermite
      double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
      double h10 = t * (1 - t) * (1 - t);
      double h01 = t * t * (3 - 2 * t);
      double h11 = t * t * (t - 1);
      v = h00 * ys[j - 1] + h10 * h * knot_m[j - 1] + h01 * ys[j] +
          h11 * h * knot_m[j];
    }
  }
  return std::max(v, floor);
}

namespace {

// Fritsch-Carlson slopes: shape-preserving cubic Hermite interpolation.
std::vector<double> pchip_slopes(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  int n = static_cast<int>(x.size());
  std::vector<double> m(n, 0.0);
  if (n < 2)
    return m;
  std::vector<double> h(n - 1), d(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    h[i] = x[i + 1] - x[i];
    d[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    m[0] = m[1] = d[0];
    return m;
  }
  for (int i = 1; i < n - 1; ++i) {
    if (d[i - 1] * d[i] <= 0) {
      m[i] = 0;
    } else {
      double w1 = 2 * h[i] + h[i - 1];
      double w2 = h[i] + 2 * h[i - 1];
      m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double m0 = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m0 * d0 <= 0)
      return 0.0;
    if (d0 * d1 < 0 && std::abs(m0) > 3 * std::abs(d0))
      return 3 * d0;
    return m0;
  };
  m[0] = end_slope(h[0], h[1], d[0], d[1]);
  m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  return m;
}

} // namespace

SlipLaw build_slip_law(const std::vector<double>& sites,
                       const std::vector<double>& values, InterpolantKind kind,
                       std::optional<std::array<double, 2>> window,
                       double floor) {
  if (sites.empty())
    throw EmptySamples("slip law needs at least one (site, value) sample");
  if (sites.size() != values.size())
    throw ConfigError("slip law sites and values differ in length");
  for (size_t j = 1; j < sites.size(); ++j)
    if (!(sites[j] > sites[j - 1]))
      throw NonMonotoneSites("slip law sites must be strictly increasing");

  SlipLaw law;
  law.sites = sites;
  law.values = values;
  for (double& v : law.values)
    v = std::max(v, floor);
  law.kind = kind;
  law.floor = floor;
  if (window) {
    auto [a, b] = *window;
    if (!(a < sites.front() && b > sites.back()))
      throw ConfigError("slip window must strictly contain all sites");
    law.has_window = true;
    law.window_lo = a;
    law.window_hi = b;
  }

  // Evaluation knots: the samples, flanked by zero-valued window knots for
  // the continuous kinds (the piecewise-constant law keeps its plateaus up
  // to the window edges).
  if (law.has_window && kind != InterpolantKind::PiecewiseConstant) {
    law.knot_x.push_back(law.window_lo);
    law.knot_y.push_back(0.0);
  }
  law.knot_x.insert(law.knot_x.end(), law.sites.begin(), law.sites.end());
  law.knot_y.insert(law.knot_y.end(), law.values.begin(), law.values.end());
  if (law.has_window && kind != InterpolantKind::PiecewiseConstant) {
    law.knot_x.push_back(law.window_hi);
    law.knot_y.push_back(0.0);
  }
  if (kind == InterpolantKind::CubicMonotone)
    law.knot_m = pchip_slopes(law.knot_x, law.knot_y);
  return law;
}

// ---------------------------------------------------------- macro solve ----

namespace {

FlowProblem macro_problem(const MacroDescriptor& macro) {
  FlowProblem pb;
  pb.mesh = &macro.mesh;
  pb.nu = macro.fluid.nu;
  pb.body_force = macro.fluid.body_force;
  pb.force_fn = macro.fluid.force_fn;
  pb.gauge = macro.gauge;
  pb.bcs = macro.far_bcs;
  return pb;
}

FlowSolution solve_flow(const FlowProblem& pb, const MacroDescriptor& macro) {
  return macro.navier_stokes ? solve_stationary(pb, macro.options)
                             : solve_stokes(pb, macro.options);
}

} // namespace

FlowSolution solve_macro(const MacroDescriptor& macro, const SlipLaw& slip) {
  FlowProblem pb = macro_problem(macro);
  pb.bcs.push_back(slip_robin_bc(macro.slip_tag,
                                 [slip](double x1) { return slip(x1); }));
  return solve_flow(pb, macro);
}

FlowSolution solve_macro_noslip(const MacroDescriptor& macro) {
  FlowProblem pb = macro_problem(macro);
  pb.bcs.push_back(noslip_bc(macro.slip_tag));
  return solve_flow(pb, macro);
}

// ----------------------------------------------------------- micro stage ----

namespace {

void validate_config(const HMMConfig& config) {
  if (!(config.tolerance > 0))
    throw ConfigError("hmm tolerance must be positive");
  if (config.max_iterations < 1)
    throw ConfigError("hmm needs at least one outer iteration");
  if (config.sites.empty())
    throw EmptySamples("hmm needs at least one micro site");
  for (size_t j = 1; j < config.sites.size(); ++j)
    if (!(config.sites[j] > config.sites[j - 1]))
      throw NonMonotoneSites("hmm sites must be strictly increasing");
  if (!(config.micro.width > 0) || !(config.micro.height > 0))
    throw ConfigError("micro template needs positive width and height");
  for (size_t j = 1; j < config.sites.size(); ++j)
    if (config.sites[j] - config.sites[j - 1] < config.micro.width)
      throw ConfigError("micro windows overlap: site spacing below the width");
  if (!(config.slip_floor > 0))
    throw ConfigError("slip floor must be positive");
  if (config.threads < 1)
    throw ConfigError("thread count must be at least 1");
}

} // namespace

std::vector<double> micro_sweep(const HMMConfig& config, const MacroDescriptor& macro,
                                const FlowSolution& macro_solution,
                                const RoughnessProfile& profile,
                                std::vector<int>* cells_out) {
  int nsites = static_cast<int>(config.sites.size());
  std::vector<double> alphas(nsites, 0.0);
  std::vector<int> cells(nsites, 0);
  std::vector<std::exception_ptr> errors(nsites);

  // On a periodic macro the window of a site at (or past) the right seam is
  // folded onto the left; the law still gets built at the original abscissa.
  // Folded windows must land inside one period, not straddle the seam.
  const double period = macro.mesh.period;
  const double xmin = period > 0 ? macro.mesh.bounding_box()[0] : 0.0;

  auto solve_site = [&](int j) {
    try {
      MicroDomainSpec spec = config.micro;
      spec.site = config.sites[j];
      if (period > 0) {
        double s = std::fmod(spec.site - xmin, period);
        if (s < 0)
          s += period;
        spec.site = xmin + s;
      }
      MicroBC bc = spec.bc_mode == MicroBcMode::PeriodicFreeStream
                       ? build_free_stream_bc(macro_solution, spec)
                       : build_quadratic_bc(macro_solution, spec, profile);
      FlowSolution sol =
          solve_micro(spec, bc, profile, macro.fluid, macro.options);
      alphas[j] = extract_slip(sol, spec);
      cells[j] = sol.mesh().cell_count();
    } catch (const Error& e) {
      errors[j] = std::make_exception_ptr(Error(
          e.code(), "micro site " + std::to_string(j) + " (s_j = " +
                        std::to_string(config.sites[j]) + "): " + e.what()));
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };

  if (config.threads <= 1 || nsites == 1) {
    for (int j = 0; j < nsites; ++j)
      solve_site(j);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int j = next.fetch_add(1); j < nsites; j = next.fetch_add(1))
        solve_site(j);
    };
    int nthreads = std::min(config.threads, nsites);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back(worker);
    for (auto& t : pool)
      t.join();
  }

  // deterministic gather: first failing site (in site order) wins
  for (int j = 0; j < nsites; ++j)
    if (errors[j])
      std::rethrow_exception(errors[j]);
  if (cells_out)
    *cells_out = cells;
  return alphas;
}

// -------------------------------------------------------- outer iteration ----

namespace {

double sup_difference(const SlipLaw& a, const SlipLaw& b,
                      std::array<double, 2> range) {
  constexpr int kSamples = 1000;
  double sup = 0;
  for (int i = 0; i < kSamples; ++i) {
    double x = range[0] + (range[1] - range[0]) * i / (kSamples - 1.0);
    sup = std::max(sup, std::abs(a(x) - b(x)));
  }
  return sup;
}

} // namespace

HMMResult run_hmm(const HMMConfig& config, const MacroDescriptor& macro,
                  const RoughnessProfile& profile) {
  validate_config(config);

  HMMReport rep;
  rep.tolerance = config.tolerance;
  rep.macro_cells = macro.mesh.cell_count();

  FlowSolution U = solve_macro_noslip(macro);
  std::vector<double> zeros(config.sites.size(), 0.0);
  SlipLaw prev = build_slip_law(config.sites, zeros, config.interpolant,
                                config.window, 0.0);
  SlipLaw cur;
  int corrective = 0;
  bool converged = false;
  for (int k = 1; k <= config.max_iterations; ++k) {
    auto alphas = micro_sweep(config, macro, U, profile, &rep.micro_cells);
    rep.alpha_raw.push_back(alphas);
    cur = build_slip_law(config.sites, alphas, config.interpolant,
                         config.window, config.slip_floor);
    rep.laws.push_back(cur);
    rep.micro_sweeps = k;
    rep.final_diff = sup_difference(cur, prev, macro.slip_range);
    if (rep.final_diff < config.tolerance) {
      converged = true;
      break;
    }
    if (k == config.max_iterations)
      break;
    U = solve_macro(macro, cur);
    ++corrective;
    prev = cur;
  }
  if (!converged)
    throw MaxIterationsExceeded(
        "slip law still moving by " + std::to_string(rep.final_diff) +
        " (tolerance " + std::to_string(config.tolerance) + ") after " +
        std::to_string(config.max_iterations) + " iterations");

  rep.micro_cells_total = 0;
  for (int c : rep.micro_cells)
    rep.micro_cells_total += c;
  // Corrective solves inside the loop; a loop that converges on its first
  // test still counts as one completed iteration.
  rep.iterations = std::max(1, corrective);

  HMMResult result{solve_macro(macro, cur), cur, std::move(rep)};
  return result;
}

} // namespace slipflow
