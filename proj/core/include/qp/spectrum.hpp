#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qp/cocycle.hpp"

namespace qp::spectrum {

using arithmetic::Frequency;
using cocycle::PotentialSpec;

// [-2 - ||V||_inf, 2 + ||V||_inf] contains the spectrum and every Dirichlet
// truncation eigenvalue.
double containment_bound(const PotentialSpec& pot);

// Number of eigenvalues < t of the symmetric tridiagonal matrix with the
// given diagonal and unit off-diagonals (Sturm/LDL^T sign count).
int sturm_count_below(std::span<const double> diag, double t);

// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
double eigenvalue_by_index(std::span<const double> diag, std::size_t k, double tol = 1e-10);

// All eigenvalues, ascending, of the tridiagonal with unit off-diagonals.
std::vector<double> eigenvalues_of_diag(std::span<const double> diag, double tol = 1e-10);

// Diagonal V(x + j alpha), j = 0..n-1, of the Dirichlet truncation.
std::vector<double> truncation_diagonal(const PotentialSpec& pot, const Frequency& alpha,
                                        double x, std::size_t n);

// All n eigenvalues of the Dirichlet truncation at phase x, ascending,
// by Sturm-sequence bisection to absolute tolerance `tol`.
std::vector<double> truncated_eigenvalues(const PotentialSpec& pot, const Frequency& alpha,
                                          double x, std::size_t n, double tol = 1e-10);

// Quantile eigenvalues of a single large truncation at x = 0 (used to sample
// on-spectrum energies without hand-picking).
std::vector<double> quantile_energies(const PotentialSpec& pot, const Frequency& alpha,
                                      std::size_t n, std::span<const double> quantiles);

struct IDSTable {
  enum class Method { Counting, Rotation };
  std::vector<double> E_grid;    // strictly increasing
  std::vector<double> N_values;  // nondecreasing, in [0, 1]
  Method method = Method::Counting;
  std::size_t truncation_n = 0;
  std::size_t phase_samples = 0;
};

// N(E) = mean over m phases of (# eigenvalues <= E)/n, nondecreasing by
// construction.  Requires n >= 100, m >= 8, E_grid strictly increasing.
IDSTable ids_counting(const PotentialSpec& pot, const Frequency& alpha,
                      std::vector<double> E_grid, std::size_t n, std::size_t m,
                      int threads = 1);

struct SpectrumApprox {
  struct Interval {
    double lo = 0.0;
    double hi = 0.0;
  };
  enum class Source { EigenvalueUnion, GrowthTest };
  std::vector<Interval> intervals;  // disjoint, sorted
  double margin = 0.0;
  Source source = Source::EigenvalueUnion;

  double min() const { return intervals.front().lo; }
  double max() const { return intervals.back().hi; }
  double total_length() const;
  bool contains(double E) const;
  // Length of (lo, hi) intersected with the union.
  double intersection_length(double lo, double hi) const;
};

// Union over m phases of the truncation eigenvalues, dilated by `margin` and
// merged into disjoint intervals.  Requires margin >= 3/n.
SpectrumApprox spectrum_approx(const PotentialSpec& pot, const Frequency& alpha,
                               std::size_t n, std::size_t m, double margin);

// Norm-growth dichotomy cross-check: flags E as off-spectrum when the slowest
// phase still grows at a rate >= max(factor * phase-mean, floor_rate).
// A diagnostic only; the eigenvalue union above is the primary method.
bool growth_test_off_spectrum(const PotentialSpec& pot, const Frequency& alpha, double E,
                              std::size_t n, std::size_t m, double factor = 0.5,
                              double floor_rate = 0.05, int threads = 1);

struct HomogeneityProfile {
  std::vector<double> sigma_grid;
  std::vector<double> min_ratio;     // min over E in S of |(E-s, E+s) cap S| / s
  std::vector<double> argmin_E;      // where the minimum is attained
  std::vector<char> passing;         // ratio >= 1/2
  double largest_passing_sigma = 0;  // largest prefix of the ascending grid that passes
};

// Exact interval-arithmetic homogeneity profile of the union.  For each sigma
// the minimum is taken over all interval endpoints, all breakpoints of the
// piecewise-linear window length (endpoints shifted by +-sigma), and
// E_samples equispaced points, so the reported minimum is exact.
HomogeneityProfile homogeneity_profile(const SpectrumApprox& S,
                                       std::span<const double> sigma_grid, int E_samples);

}  // namespace qp::spectrum
