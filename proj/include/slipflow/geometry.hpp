#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace slipflow {

// Shape of one roughness period in unit-cell coordinates: phi : [0,1] -> [0, H]
// with phi(0) = phi(1) = H (the side seams sit at crest height so a periodic
// strip mesh can be built on top of it).
struct UnitCellShape {
  std::function<double(double)> phi;
  double height = 0; // H = max phi
  std::string name;
};

enum class ProfileKind {
  Flat,
  Sinusoidal,
  Sawtooth,
  ModulatedSinusoidal,
  QuasiPeriodic,
  BfsPatch,
  Tabulated,
};

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& name);

struct ProfileParams {
  // Structural period of the roughness. 0 means the kind default
  // (epsilon for everything except bfs_patch, which uses 2.5*epsilon).
  double wavelength = 0;
  // Trough depth in units of epsilon. 0 means the kind default.
  double depth = 0;
  // Support window for bfs_patch; the wall is flat outside [begin, end].
  double window_begin = 6.0;
  double window_end = 16.0;
  // Slow amplitude modulation for modulated_sinusoidal. Empty means the
  // default beta(x1) = sin^2(sqrt(2)*2*pi*x1) + 1/2.
  std::function<double(double)> modulation;
  // Polyline samples (x1, wall) for tabulated profiles; at least two required.
  std::vector<std::array<double, 2>> samples;
};

// Rough-wall description in crest-plane coordinates: wall(x1) <= 0 everywhere
// and the highest crests touch x2 = 0. Deterministic and immutable.
class RoughnessProfile {
public:
  static RoughnessProfile make(ProfileKind kind, double epsilon,
                               ProfileParams params = {});

  double wall(double x1) const { return wall_(x1); }
  // Global wall minimum over [a, b] via dense sampling plus local refinement.
  double wall_min_on(double a, double b) const;

  ProfileKind kind() const { return kind_; }
  double epsilon() const { return epsilon_; }
  double wavelength() const { return wavelength_; }
  double depth() const { return depth_; } // in units of epsilon

  // Slow modulation factor (identically 1 except for modulated profiles).
  double modulation(double x1) const;
  // Wall with the modulation factor stripped; wall = modulation * unmodulated.
  double wall_unmodulated(double x1) const;

  bool has_unit_cell() const { return unit_cell_.phi != nullptr; }
  const UnitCellShape& unit_cell() const;

private:
  RoughnessProfile() = default;

  ProfileKind kind_ = ProfileKind::Flat;
  double epsilon_ = 0;
  double wavelength_ = 0;
  double depth_ = 0;
  std::function<double(double)> wall_;
  std::function<double(double)> modulation_;
  std::function<double(double)> unmodulated_;
  UnitCellShape unit_cell_;
};

// Spec-level convenience wrappers.
RoughnessProfile make_profile(ProfileKind kind, double epsilon,
                              ProfileParams params = {});

// Unit-cell shapes usable without a full profile (cell-problem studies).
UnitCellShape unit_cell_flat();
UnitCellShape unit_cell_constant(double height);
UnitCellShape unit_cell_sinusoidal();              // (1 + cos 2 pi y)/2, H = 1
UnitCellShape unit_cell_sinusoidal_scaled(double depth); // depth * sinusoidal
UnitCellShape unit_cell_sawtooth();                // depth 3/4, ramp + steep rise

// Width of the regularized sawtooth cliff as a fraction of one period. The
// ideal sawtooth has a vertical jump at the period seam; meshing a wall graph
// needs finite slope, so the rise happens over this fraction of the period.
// A quarter keeps the ramp-plus-rise character while staying resolvable at
// the cell densities the solvers run at: a steeper rise stalls the reference
// solves and inflates the wall-law model error beyond the slip length itself.
inline constexpr double kSawtoothCliffFraction = 1.0 / 4.0;

} // namespace slipflow
