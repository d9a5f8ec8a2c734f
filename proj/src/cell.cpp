#include "slipflow/cell.hpp"

#include <algorithm>
#include <cmath>

#include "slipflow/errors.hpp"
#include "slipflow/mesh.hpp"

namespace slipflow {

CellSolution solve_cell_problem(const UnitCellShape& shape, double y2top,
                                int resolution, double mu) {
  if (resolution < 8)
    throw MeshError("cell resolution must be at least 8, got " +
                    std::to_string(resolution));
  TriangleMesh mesh = mesh_cell_domain(shape, y2top, resolution);

  FlowProblem pb;
  pb.mesh = &mesh;
  pb.nu = mu;
  pb.bcs = {dirichlet_bc(BoundaryTag::NoSlipWall,
                         [&shape](double x, double) {
                           return std::array<double, 2>{-shape.phi(x), 0.0};
                         }),
            free_slip_bc(BoundaryTag::Top), periodic_bc()};

  CellSolution sol;
  sol.shape = shape;
  sol.truncation_height = y2top;
  sol.cells = static_cast<int>(mesh.triangles.size());
  sol.chi = solve_stokes(pb);
  sol.chibar = boundary_average(sol.chi, BoundaryTag::Top, Field::U1);
  sol.top_mean_chi2 = boundary_average(sol.chi, BoundaryTag::Top, Field::U2);

  const FlowSolution& chi = sol.chi;
  auto u1 = [&chi](double x, double y) { return chi.velocity(x, y)[0]; };
  for (double y2 = shape.height; y2 < y2top + 1e-9; y2 += 0.25) {
    double level = std::min(y2, y2top);
    SliceSample s;
    s.y2 = level;
    s.mean_chi1 = line_average(u1, 0.0, level, 1.0);
    double var = line_average(
        [&](double x, double y) {
          double d = u1(x, y) - s.mean_chi1;
          return d * d;
        },
        0.0, level, 1.0);
    s.oscillation = std::sqrt(std::max(var, 0.0));
    sol.decay_samples.push_back(s);
  }
  return sol;
}

DecayReport decay_check(const CellSolution& solution) {
  DecayReport rep;
  const auto& samples = solution.decay_samples;

  double osc_scale = 0;
  for (const auto& s : samples) osc_scale = std::max(osc_scale, s.oscillation);
  double field_scale =
      std::max({std::abs(solution.chibar), solution.shape.height, 1e-30});
  if (osc_scale <= 1e-12 * field_scale) {
    rep.no_decay_needed = true;
    return rep;
  }

  // Discard slices that have decayed to the discretization noise floor; the
  // log-linear fit would otherwise flatten against it.
  double floor = std::max(1e-8 * osc_scale, 1e-11 * field_scale);
  double crest = solution.shape.height;
  for (const auto& s : samples) {
    if (s.y2 <= crest) continue; // fit strictly above the crest line
    if (s.oscillation <= floor) continue;
    rep.fitted.push_back({s.y2, std::log(s.oscillation)});
  }
  if (rep.fitted.size() < 4)
    throw InsufficientSamples("only " + std::to_string(rep.fitted.size()) +
                              " usable decay samples above the crest");

  double n = static_cast<double>(rep.fitted.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : rep.fitted) {
    sx += p[0];
    sy += p[1];
    sxx += p[0] * p[0];
    sxy += p[0] * p[1];
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  rep.rate = -slope;
  double ss = 0;
  for (const auto& p : rep.fitted) {
    double r = p[1] - (intercept + slope * p[0]);
    ss += r * r;
  }
  rep.fit_residual = std::sqrt(ss / n);
  return rep;
}

} // namespace slipflow
