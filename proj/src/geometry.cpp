#include "slipflow/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "slipflow/errors.hpp"

namespace slipflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
const double kSqrt2 = std::sqrt(2.0);

double frac(double x) {
  double f = x - std::floor(x);
  // Guard against 1.0 sneaking out of floor for x just below an integer.
  return (f >= 1.0) ? 0.0 : f;
}

double default_beta(double x1) {
  double s = std::sin(kSqrt2 * kTwoPi * x1);
  return s * s + 0.5;
}

// Piecewise-linear interpolation through sorted samples, clamped extension.
double tabulated_eval(const std::vector<std::array<double, 2>>& pts, double x) {
  if (x <= pts.front()[0]) return pts.front()[1];
  if (x >= pts.back()[0]) return pts.back()[1];
  auto it = std::upper_bound(pts.begin(), pts.end(), x,
                             [](double v, const std::array<double, 2>& p) {
                               return v < p[0];
                             });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  double t = (x - lo[0]) / (hi[0] - lo[0]);
  return lo[1] + t * (hi[1] - lo[1]);
}

} // namespace

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Flat: return "flat";
    case ProfileKind::Sinusoidal: return "sinusoidal";
    case ProfileKind::Sawtooth: return "sawtooth";
    case ProfileKind::ModulatedSinusoidal: return "modulated_sinusoidal";
    case ProfileKind::QuasiPeriodic: return "quasi_periodic";
    case ProfileKind::BfsPatch: return "bfs_patch";
    case ProfileKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

ProfileKind profile_kind_from_string(const std::string& name) {
  if (name == "flat") return ProfileKind::Flat;
  if (name == "sinusoidal") return ProfileKind::Sinusoidal;
  if (name == "sawtooth") return ProfileKind::Sawtooth;
  if (name == "modulated_sinusoidal") return ProfileKind::ModulatedSinusoidal;
  if (name == "quasi_periodic") return ProfileKind::QuasiPeriodic;
  if (name == "bfs_patch") return ProfileKind::BfsPatch;
  if (name == "tabulated") return ProfileKind::Tabulated;
  throw InvalidProfile("unknown profile kind '" + name + "'");
}

UnitCellShape unit_cell_flat() {
  return {[](double) { return 0.0; }, 0.0, "flat"};
}

UnitCellShape unit_cell_constant(double height) {
  if (height < 0) throw InvalidProfile("constant cell height must be >= 0");
  return {[height](double) { return height; }, height, "constant"};
}

UnitCellShape unit_cell_sinusoidal() { return unit_cell_sinusoidal_scaled(1.0); }

UnitCellShape unit_cell_sinusoidal_scaled(double depth) {
  if (depth < 0) throw InvalidProfile("sinusoidal cell depth must be >= 0");
  return {[depth](double y) { return depth * 0.5 * (1.0 + std::cos(kTwoPi * y)); },
          depth, "sinusoidal"};
}

UnitCellShape unit_cell_sawtooth() {
  const double H = 0.75;
  const double d = kSawtoothCliffFraction;
  auto phi = [H, d](double y) {
    y = frac(y);
    if (y <= 1.0 - d) return H * (1.0 - y / (1.0 - d));
    return H * (y - (1.0 - d)) / d;
  };
  return {phi, H, "sawtooth"};
}

RoughnessProfile RoughnessProfile::make(ProfileKind kind, double epsilon,
                                        ProfileParams params) {
  if (epsilon <= 0 && kind != ProfileKind::Flat && kind != ProfileKind::Tabulated)
    throw InvalidProfile("epsilon must be positive");
  if (params.wavelength < 0)
    throw InvalidProfile("wavelength must be positive (0 = kind default)");
  if (params.depth < 0)
    throw InvalidProfile("depth must be positive (0 = kind default)");

  RoughnessProfile p;
  p.kind_ = kind;
  p.epsilon_ = epsilon;

  switch (kind) {
    case ProfileKind::Flat: {
      p.wavelength_ = (params.wavelength > 0) ? params.wavelength : epsilon;
      p.depth_ = 0;
      p.wall_ = [](double) { return 0.0; };
      p.unit_cell_ = unit_cell_flat();
      break;
    }
    case ProfileKind::Sinusoidal: {
      double lam = (params.wavelength > 0) ? params.wavelength : epsilon;
      p.wavelength_ = lam;
      p.depth_ = (params.depth > 0) ? params.depth : 1.0;
      double amp = 0.5 * epsilon * p.depth_;
      p.wall_ = [amp, lam](double x1) {
        return amp * (std::cos(kTwoPi * x1 / lam) - 1.0);
      };
      p.unit_cell_ = unit_cell_sinusoidal_scaled(p.depth_);
      break;
    }
    case ProfileKind::Sawtooth: {
      double lam = (params.wavelength > 0) ? params.wavelength : epsilon;
      p.wavelength_ = lam;
      p.depth_ = (params.depth > 0) ? params.depth : 0.75;
      UnitCellShape cell = unit_cell_sawtooth();
      if (p.depth_ != 0.75) {
        double H = p.depth_;
        double d = kSawtoothCliffFraction;
        cell = {[H, d](double y) {
                  y = frac(y);
                  if (y <= 1.0 - d) return H * (1.0 - y / (1.0 - d));
                  return H * (y - (1.0 - d)) / d;
                },
                H, "sawtooth"};
      }
      double H = cell.height;
      auto phi = cell.phi;
      p.wall_ = [phi, H, lam, epsilon](double x1) {
        return epsilon * (phi(frac(x1 / lam)) - H);
      };
      p.unit_cell_ = cell;
      break;
    }
    case ProfileKind::ModulatedSinusoidal: {
      double lam = (params.wavelength > 0) ? params.wavelength : epsilon;
      p.wavelength_ = lam;
      double shape_depth = (params.depth > 0) ? params.depth : 1.0;
      auto beta = params.modulation ? params.modulation
                                    : std::function<double(double)>(default_beta);
      double amp = 0.5 * epsilon * shape_depth;
      auto base = [amp, lam](double x1) {
        return amp * (std::cos(kTwoPi * x1 / lam) - 1.0);
      };
      p.wall_ = [beta, base](double x1) { return beta(x1) * base(x1); };
      p.modulation_ = beta;
      p.unmodulated_ = base;
      // Depth bound: |beta| is not normalized, so scan one slow period for
      // the worst factor. The default beta peaks at 1.5.
      double beta_max = 0;
      for (int i = 0; i <= 4096; ++i)
        beta_max = std::max(beta_max, std::abs(beta(i / 4096.0)));
      p.depth_ = shape_depth * beta_max;
      p.unit_cell_ = unit_cell_sinusoidal_scaled(shape_depth);
      break;
    }
    case ProfileKind::QuasiPeriodic: {
      double lam = (params.wavelength > 0) ? params.wavelength : epsilon;
      p.wavelength_ = lam;
      p.depth_ = 4.25 / 3.0;
      p.wall_ = [epsilon, lam](double x1) {
        double y = x1 / lam;
        return (epsilon / 3.0) *
               (std::sin(kSqrt2 * kTwoPi * y) + std::sin(kTwoPi * y) - 2.25);
      };
      // Not periodic: no unit cell.
      break;
    }
    case ProfileKind::BfsPatch: {
      double lam = (params.wavelength > 0) ? params.wavelength : 2.5 * epsilon;
      p.wavelength_ = lam;
      p.depth_ = (params.depth > 0) ? params.depth : 1.0;
      double amp = 0.5 * epsilon * p.depth_;
      double a = params.window_begin, b = params.window_end;
      if (!(b > a)) throw InvalidProfile("bfs_patch window must satisfy end > begin");
      p.wall_ = [amp, lam, a, b](double x1) {
        if (x1 <= a || x1 >= b) return 0.0;
        return amp * (std::cos(kTwoPi * (x1 - a) / lam) - 1.0);
      };
      // One period of the patch in cell coordinates, heights in units of the
      // wavelength since that is the structural period.
      double ratio = epsilon / lam * p.depth_;
      p.unit_cell_ = unit_cell_sinusoidal_scaled(ratio);
      break;
    }
    case ProfileKind::Tabulated: {
      if (params.samples.size() < 2)
        throw InvalidProfile("tabulated profile needs at least two samples");
      auto pts = params.samples;
      std::sort(pts.begin(), pts.end(),
                [](const auto& u, const auto& v) { return u[0] < v[0]; });
      for (const auto& q : pts)
        if (q[1] > 1e-12)
          throw InvalidProfile("tabulated wall must satisfy wall(x1) <= 0");
      p.wavelength_ = (params.wavelength > 0) ? params.wavelength : epsilon;
      double lo = 0;
      for (const auto& q : pts) lo = std::min(lo, q[1]);
      p.depth_ = (epsilon > 0) ? -lo / epsilon : 0.0;
      p.wall_ = [pts](double x1) { return tabulated_eval(pts, x1); };
      break;
    }
  }
  return p;
}

double RoughnessProfile::wall_min_on(double a, double b) const {
  if (!(b > a)) throw InvalidProfile("wall_min_on needs b > a");
  const int n = 8192;
  double best = wall_(a);
  double best_x = a;
  for (int i = 1; i <= n; ++i) {
    double x = a + (b - a) * i / n;
    double w = wall_(x);
    if (w < best) {
      best = w;
      best_x = x;
    }
  }
  // Golden-section polish inside the winning bracket.
  double h = (b - a) / n;
  double lo = std::max(a, best_x - h), hi = std::min(b, best_x + h);
  const double gr = 0.6180339887498949;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  for (int it = 0; it < 60; ++it) {
    if (wall_(c) < wall_(d)) hi = d; else lo = c;
    c = hi - gr * (hi - lo);
    d = lo + gr * (hi - lo);
  }
  return std::min(best, wall_(0.5 * (lo + hi)));
}

double RoughnessProfile::modulation(double x1) const {
  return modulation_ ? modulation_(x1) : 1.0;
}

double RoughnessProfile::wall_unmodulated(double x1) const {
  return unmodulated_ ? unmodulated_(x1) : wall_(x1);
}

const UnitCellShape& RoughnessProfile::unit_cell() const {
  if (!has_unit_cell())
    throw InvalidProfile("profile kind '" + to_string(kind_) +
                         "' has no periodic unit cell");
  return unit_cell_;
}

RoughnessProfile make_profile(ProfileKind kind, double epsilon,
                              ProfileParams params) {
  return RoughnessProfile::make(kind, epsilon, std::move(params));
}

} // namespace slipflow
