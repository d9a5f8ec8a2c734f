#pragma once

#include <vector>

#include "slipflow/fem.hpp"
#include "slipflow/geometry.hpp"

namespace slipflow {

// One horizontal slice of the corrector: its mean and the RMS deviation of
// the horizontal component about that mean.
struct SliceSample {
  double y2 = 0;
  double mean_chi1 = 0;
  double oscillation = 0;
};

// Corrector of the homogenization cell problem on the truncated periodic
// strip [0,1] x [phi(y1), Y2top]. chibar is the slip constant: the mean of
// chi1 over the top slice (the zeroth Fourier mode, constant in y2 up to
// truncation error).
struct CellSolution {
  UnitCellShape shape;
  double truncation_height = 0;
  double chibar = 0;
  double top_mean_chi2 = 0; // horizontality check (0 by construction)
  std::vector<SliceSample> decay_samples; // y2 = H, H+1/4, ..., Y2top
  int cells = 0;
  FlowSolution chi; // velocity = chi, pressure = cell pressure
};

// Stokes solve with wall Dirichlet chi = -phi(y1) e1, periodic sides and a
// shear-free top (dchi1/dy2 = 0, chi2 = 0); mu only scales the pressure.
CellSolution solve_cell_problem(const UnitCellShape& shape, double y2top,
                                int resolution, double mu = 1.0);

struct DecayReport {
  double rate = 0;          // fitted exponential decay rate per unit y2
  double fit_residual = 0;  // rms residual of the log-linear fit
  bool no_decay_needed = false; // oscillation at noise level on every slice
  std::vector<std::array<double, 2>> fitted; // (y2, log oscillation) pairs used
};

// Least-squares exponential fit of the slice oscillation above the crest.
// Samples below the numerical noise floor are excluded; at least four usable
// samples are required (InsufficientSamples otherwise).
DecayReport decay_check(const CellSolution& solution);

} // namespace slipflow
