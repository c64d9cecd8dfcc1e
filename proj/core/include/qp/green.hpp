#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qp/cocycle.hpp"
#include "qp/spectrum.hpp"

namespace qp::green {

using arithmetic::Frequency;
using cocycle::Complex;
using cocycle::PotentialSpec;
using spectrum::IDSTable;

// Resolvent window: max(200, ceil(8/Im z)); the resolvent decays like
// exp(-c Im z |site|), so this keeps the truncation error below ~1e-4.
std::size_t default_window(Complex z);

// cos/sin of 2 pi frac(j alpha) for j = -w..w, reduced from the
// extended-precision alpha once and shared across phases and energies.
class SiteTable {
 public:
  SiteTable(const Frequency& alpha, std::size_t w);
  std::size_t window() const { return w_; }
  double cos_at(std::ptrdiff_t j) const { return cos_[static_cast<std::size_t>(j + w_)]; }
  double sin_at(std::ptrdiff_t j) const { return sin_[static_cast<std::size_t>(j + w_)]; }

 private:
  std::ptrdiff_t w_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

struct GreenValue {
  Complex z;
  Complex value;
  enum class Method { ResolventAverage, BorelOfIds, BoundaryExtrapolation };
  Method method = Method::ResolventAverage;
  bool window_warning = false;  // halving the window moved the value by > 10*tol
};

// Averaged Green's function G(0,0,z) = int <delta_0, (H_x - z)^{-1} delta_0> dx
// by per-phase tridiagonal solves on sites [-w, w] (Dirichlet), averaged over
// m equispaced phases with a fixed-order tree reduction.  Im z > 0 required;
// the complex shift makes every solve strictly non-singular.
GreenValue green_avg(const PotentialSpec& pot, const Frequency& alpha, Complex z,
                     std::size_t window = 0, std::size_t m = 64, int threads = 1,
                     bool verify_window = true, double tol = 1e-4);
GreenValue green_avg(const PotentialSpec& pot, const SiteTable& sites, Complex z,
                     std::size_t m = 64, int threads = 1, bool verify_window = true,
                     double tol = 1e-4);

// Borel/Stieltjes transform of dN: sum over grid cells of dN/(E' - z) with
// midpoint evaluation.  For real z the cell structure must keep z at least
// 2 grid steps away from any mass increase (pole-proximity error otherwise).
GreenValue green_from_ids(const IDSTable& ids, Complex z);

// Thouless formula L(z) = int ln|E' - z| dN(E').  Piecewise-constant density
// per cell with the exact log integral, so a real z inside a cell is handled
// by the integrable-singularity antiderivative rather than the midpoint.
double thouless(const IDSTable& ids, Complex z);

struct BoundaryValue {
  double re_g = 0.0;      // linear-in-eps extrapolation of Re G(E + i eps) to 0+
  double residual = 0.0;  // max deviation of the fit on the last 3 points
  // The linear model failed: fit residual above tol, or consecutive
  // extrapolants drifting by > 10x the (floored) residual.  Expected at
  // measure-zero bad E (band edges); reported, not fatal.
  bool nonconvergent = false;
  std::vector<double> eps;  // schedule actually used
  std::vector<double> re_values;
};

// Normal boundary value of Re G along a decreasing eps schedule (default
// 2^{-3}..2^{-9}), Richardson-style linear extrapolation on the last 3 points.
BoundaryValue normal_boundary_re_g(const PotentialSpec& pot, const Frequency& alpha,
                                   double E, std::vector<double> schedule = {},
                                   std::size_t m = 64, int threads = 1,
                                   double tol = 1e-2);

// |d/dE L(E + i eps) - (-Re G(0,0,E + i eps))| with a central difference for
// the derivative.  L(z) = int ln|E' - z| dN gives dL/dE = -Re G for the
// resolvent orientation G = int dN/(E' - z) used here.
double derivative_identity_residual(const PotentialSpec& pot, const Frequency& alpha,
                                    double E, double eps, double dE, std::size_t n,
                                    std::size_t m, std::size_t green_m = 256,
                                    int threads = 1);

struct Cone {
  double y_min = 1e-2;
  double y_max = 1.0;
  int levels = 8;  // log-spaced heights
  int aspect = 5;  // odd; sample points per level across (E-y, E+y)
};

struct MaximalProfile {
  std::vector<double> E_grid;
  std::vector<double> Gstar;  // discretized non-tangential maximal function
  std::vector<double> sigma_grid;
  std::vector<double> weak_type_stat;  // sigma^{3/4} * |{E : G* > sigma}|
  double D = 0.0;                      // max of the statistic over the grid
  Cone cone;
};

// Non-tangential maximal function over the truncated cone |x - E| < y,
// y in [y_min, y_max]: G*(E) is a lower bound of the true sup (the cone is
// cut at y_min and discretized), and the weak-type statistic is evaluated by
// grid measure.
MaximalProfile maximal_function(const PotentialSpec& pot, const Frequency& alpha,
                                std::vector<double> E_grid, const Cone& cone,
                                std::vector<double> sigma_grid, std::size_t m = 16,
                                int threads = 1);

}  // namespace qp::green
