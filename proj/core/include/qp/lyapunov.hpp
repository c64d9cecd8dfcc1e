#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "qp/cocycle.hpp"

namespace qp::lyapunov {

using arithmetic::Frequency;
using cocycle::Complex;
using cocycle::PotentialSpec;

// Below this distance to the nearest integer the fitted slope is snapped to
// it; beyond it we refuse to quantize rather than guess.
inline constexpr double kOmegaSnapThreshold = 0.2;

// (1/n) * mean over m equispaced phases x_j = j/m of the renormalized
// log-norm of the n-step transfer product at phase x_j + i eps_imag.
// Requires n >= 100 and m >= 16 a power of two.  Phase samples may be
// computed in parallel; the mean is a fixed-order pairwise tree, so the
// result is bit-identical for every thread count.
double lyapunov_exponent(const PotentialSpec& pot, const Frequency& alpha, Complex E,
                         double eps_imag, std::size_t n, std::size_t m, int threads = 1);

// Dyadic default schedule 2^{-3} .. 2^{-9}, strictly decreasing.
std::vector<double> default_eps_schedule();

// Health check behind the nonmonotone-profile warning: L nondecreasing and
// below-chord convex in eps (including the eps = 0 anchor), within an
// absolute tolerance of 1e-3.  A failure signals insufficient n or m.
bool profile_convexity_ok(const std::vector<double>& eps_desc,
                          const std::vector<double>& L_desc, double L0);

struct LyapunovProfile {
  Complex E;
  std::vector<double> eps_grid;  // strictly decreasing positive
  std::vector<double> L_values;  // L at each eps, same order
  double L0 = 0.0;               // L at eps = 0
  double slope = 0.0;            // least-squares d L / d(2 pi eps) over the last 4 points
  std::optional<int> omega_int;  // nearest integer when within the snap threshold
  double omega_residual = 0.0;   // |slope - round(slope)|
  bool convexity_warning = false;  // profile failed the monotone/convex health check
};

// Complexified-phase profile of L and the acceleration slope at real E.
LyapunovProfile acceleration(const PotentialSpec& pot, const Frequency& alpha, double E,
                             std::vector<double> schedule, std::size_t n, std::size_t m,
                             int threads = 1);

enum class RegimeLabel {
  Subcritical,
  Critical,
  Supercritical,
  UniformlyHyperbolicOrOffSpectrum,
};

const char* to_string(RegimeLabel label);

// L0 <= tol, omega = 0  -> subcritical;   L0 <= tol, omega >= 1 -> critical;
// L0 >  tol, omega >= 1 -> supercritical; L0 >  tol, omega = 0  -> UH/off-spectrum.
RegimeLabel classify_regime(double L0, int omega, double tol = 0.01);
// Throws ValidationError("unclassifiable...") when the profile did not snap.
RegimeLabel classify_regime(const LyapunovProfile& profile, double tol = 0.01);

}  // namespace qp::lyapunov
