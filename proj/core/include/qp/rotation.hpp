#pragma once

#include <cstddef>

#include "qp/cocycle.hpp"

namespace qp::rotation {

using arithmetic::Frequency;
using cocycle::PotentialSpec;

struct RotationResult {
  double rho = 0.0;      // folded into [0, 1/2]
  double rho_raw = 0.0;  // signed mean angular increment per step, in turns
  std::size_t n_used = 0;
  std::size_t phase_samples = 0;
  double spread = 0.0;  // max - min of the folded per-phase estimates
  std::size_t degenerate_events = 0;
};

// Fibered rotation number of the Schrodinger cocycle at real E: the average
// angular increment of the projective action along the orbit, tracked as a
// continuous lift (atan2 unwrap each step) from w = (1,0), averaged over m
// equispaced phases and folded by rho -> min(rho mod 1, 1 - rho mod 1).
// Requires n >= 1000 and m >= 16.
RotationResult rotation_number(const PotentialSpec& pot, const Frequency& alpha, double E,
                               std::size_t n, std::size_t m, int threads = 1);

// N(E) = 1 - 2 rho(E); domain error outside [0, 1/2].
double ids_from_rotation(double rho);

// Folds a raw per-step increment (in turns) into [0, 1/2].
double fold_rotation(double raw);

}  // namespace qp::rotation
