#include "qp/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qp/errors.hpp"
#include "qp/parallel.hpp"

namespace qp::spectrum {

namespace {

// Off-diagonals are exactly 1, so the classical pivot floor for the LDL^T
// sign count is a fixed tiny constant.
constexpr double kPivMin = 1e-290;

}  // namespace

double containment_bound(const PotentialSpec& pot) { return 2.0 + pot.sup_norm(); }

int sturm_count_below(std::span<const double> diag, double t) {
  int count = 0;
  // q_1 = d_1 - t, then q_i = (d_i - t) - 1/q_{i-1}; the infinity seed makes
  // the first step come out right.
  double q = std::numeric_limits<double>::infinity();
  for (const double dj : diag) {
    q = (dj - t) - 1.0 / q;
    if (std::fabs(q) < kPivMin) q = -kPivMin;
    if (q < 0.0) ++count;
  }
  return count;
}

namespace {

std::pair<double, double> gershgorin_bounds(std::span<const double> diag) {
  double lo = diag[0], hi = diag[0];
  for (const double d : diag) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo - 2.0 - 1e-8, hi + 2.0 + 1e-8};
}

}  // namespace

double eigenvalue_by_index(std::span<const double> diag, std::size_t k, double tol) {
  if (diag.empty()) throw ValidationError("eigenvalue_by_index: empty matrix");
  if (k >= diag.size()) throw ValidationError("eigenvalue_by_index: index out of range");
  auto [lo, hi] = gershgorin_bounds(diag);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (static_cast<std::size_t>(sturm_count_below(diag, mid)) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> eigenvalues_of_diag(std::span<const double> diag, double tol) {
  if (diag.empty()) throw ValidationError("eigenvalues_of_diag: empty matrix");
  const std::size_t n = diag.size();
  std::vector<double> out(n);

  struct Bracket {
    double lo, hi;
    int clo, chi;  // Sturm counts at lo/hi
  };
  auto [glo, ghi] = gershgorin_bounds(diag);
  std::vector<Bracket> stack{{glo, ghi, 0, static_cast<int>(n)}};
  while (!stack.empty()) {
    const Bracket br = stack.back();
    stack.pop_back();
    const int k = br.chi - br.clo;
    if (k <= 0) continue;
    if (br.hi - br.lo <= tol) {
      const double mid = 0.5 * (br.lo + br.hi);
      for (int i = br.clo; i < br.chi; ++i) out[static_cast<std::size_t>(i)] = mid;
      continue;
    }
    const double mid = 0.5 * (br.lo + br.hi);
    const int cm = sturm_count_below(diag, mid);
    stack.push_back({mid, br.hi, cm, br.chi});
    stack.push_back({br.lo, mid, br.clo, cm});
  }
  return out;
}

std::vector<double> truncation_diagonal(const PotentialSpec& pot, const Frequency& alpha,
                                        double x, std::size_t n) {
  std::vector<double> diag(n);
  for (std::size_t j = 0; j < n; ++j)
    diag[j] = pot.value(alpha.orbit_phase(x, static_cast<std::int64_t>(j)));
  return diag;
}

std::vector<double> truncated_eigenvalues(const PotentialSpec& pot, const Frequency& alpha,
                                          double x, std::size_t n, double tol) {
  if (n < 1) throw ValidationError("truncated_eigenvalues: n must be >= 1");
  const std::vector<double> diag = truncation_diagonal(pot, alpha, x, n);
  return eigenvalues_of_diag(diag, tol);
}

std::vector<double> quantile_energies(const PotentialSpec& pot, const Frequency& alpha,
                                      std::size_t n, std::span<const double> quantiles) {
  if (n < 2) throw ValidationError("quantile_energies: n must be >= 2");
  const std::vector<double> diag = truncation_diagonal(pot, alpha, 0.0, n);
  std::vector<double> out;
  out.reserve(quantiles.size());
  for (const double q : quantiles) {
    if (!(q >= 0.0 && q <= 1.0))
      throw ValidationError("quantile_energies: quantiles must lie in [0,1]");
    const auto idx = static_cast<std::size_t>(std::llround(q * static_cast<double>(n - 1)));
    out.push_back(eigenvalue_by_index(diag, idx));
  }
  return out;
}

IDSTable ids_counting(const PotentialSpec& pot, const Frequency& alpha,
                      std::vector<double> E_grid, std::size_t n, std::size_t m,
                      int threads) {
  if (n < 100) throw ValidationError("ids_counting: n must be >= 100");
  if (m < 8) throw ValidationError("ids_counting: m must be >= 8");
  if (E_grid.size() < 2) throw ValidationError("ids_counting: grid needs >= 2 points");
  for (std::size_t i = 1; i < E_grid.size(); ++i) {
    if (!(E_grid[i] > E_grid[i - 1]))
      throw ValidationError("ids_counting: grid must be strictly increasing");
  }

  const std::size_t g = E_grid.size();
  std::vector<double> per_phase(m * g);
  const double inv_m = 1.0 / static_cast<double>(m);
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel_for(m, threads, [&](std::size_t j) {
    const std::vector<double> diag =
        truncation_diagonal(pot, alpha, static_cast<double>(j) * inv_m, n);
    for (std::size_t i = 0; i < g; ++i) {
      per_phase[j * g + i] =
          static_cast<double>(sturm_count_below(diag, E_grid[i])) * inv_n;
    }
  });

  IDSTable table;
  table.method = IDSTable::Method::Counting;
  table.truncation_n = n;
  table.phase_samples = m;
  table.N_values.resize(g);
  std::vector<double> column(m);
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < m; ++j) column[j] = per_phase[j * g + i];
    table.N_values[i] = tree_mean(column);
  }
  // Counting is monotone up to pivot-floor ties; enforce exactly.
  for (std::size_t i = 1; i < g; ++i)
    table.N_values[i] = std::max(table.N_values[i], table.N_values[i - 1]);
  table.E_grid = std::move(E_grid);
  return table;
}

double SpectrumApprox::total_length() const {
  double acc = 0.0;
  for (const auto& iv : intervals) acc += iv.hi - iv.lo;
  return acc;
}

bool SpectrumApprox::contains(double E) const {
  for (const auto& iv : intervals) {
    if (E >= iv.lo && E <= iv.hi) return true;
  }
  return false;
}

double SpectrumApprox::intersection_length(double lo, double hi) const {
  double acc = 0.0;
  for (const auto& iv : intervals) {
    const double a = std::max(lo, iv.lo);
    const double b = std::min(hi, iv.hi);
    if (b > a) acc += b - a;
  }
  return acc;
}

SpectrumApprox spectrum_approx(const PotentialSpec& pot, const Frequency& alpha,
                               std::size_t n, std::size_t m, double margin) {
  if (n < 2) throw ValidationError("spectrum_approx: n must be >= 2");
  if (m < 1) throw ValidationError("spectrum_approx: m must be >= 1");
  if (!(margin >= 3.0 / static_cast<double>(n)))
    throw ValidationError("spectrum_approx: margin must be >= 3/n");

  std::vector<double> eigs;
  eigs.reserve(n * m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto e = truncated_eigenvalues(pot, alpha, static_cast<double>(j) / m, n);
    eigs.insert(eigs.end(), e.begin(), e.end());
  }
  std::sort(eigs.begin(), eigs.end());

  SpectrumApprox out;
  out.margin = margin;
  out.source = SpectrumApprox::Source::EigenvalueUnion;
  for (const double e : eigs) {
    const double lo = e - margin, hi = e + margin;
    if (!out.intervals.empty() && lo <= out.intervals.back().hi) {
      out.intervals.back().hi = std::max(out.intervals.back().hi, hi);
    } else {
      out.intervals.push_back({lo, hi});
    }
  }
  return out;
}

bool growth_test_off_spectrum(const PotentialSpec& pot, const Frequency& alpha, double E,
                              std::size_t n, std::size_t m, double factor,
                              double floor_rate, int threads) {
  if (m < 8) throw ValidationError("growth_test_off_spectrum: m must be >= 8");
  const cocycle::OrbitTable table(alpha, n);
  std::vector<double> rates(m);
  const double inv_m = 1.0 / static_cast<double>(m);
  parallel_for(m, threads, [&](std::size_t j) {
    rates[j] = cocycle::transfer_product(pot, cocycle::Complex{E, 0.0}, table,
                                         static_cast<double>(j) * inv_m, 0.0, n)
                   .log_norm() /
               static_cast<double>(n);
  });
  const double mean = tree_mean(rates);
  const double lo = *std::min_element(rates.begin(), rates.end());
  return lo >= std::max(factor * mean, floor_rate);
}

HomogeneityProfile homogeneity_profile(const SpectrumApprox& S,
                                       std::span<const double> sigma_grid, int E_samples) {
  if (S.intervals.empty()) throw ValidationError("homogeneity_profile: empty spectrum");
  if (E_samples < 2) throw ValidationError("homogeneity_profile: E_samples must be >= 2");
  const double span = S.max() - S.min();
  for (const double s : sigma_grid) {
    if (!(s > 0)) throw ValidationError("homogeneity_profile: sigma must be > 0");
    if (!(s < span / 2))
      throw ValidationError("homogeneity_profile: sigma must be below half the span");
  }

  HomogeneityProfile profile;
  profile.sigma_grid.assign(sigma_grid.begin(), sigma_grid.end());

  const double total = S.total_length();
  for (const double sigma : sigma_grid) {
    // Candidate set: interval endpoints, endpoints shifted by +-sigma (the
    // breakpoints of the piecewise-linear window length), and an equispaced
    // sweep.  The window length is piecewise linear in E, so the minimum over
    // S is attained on this finite set and the computed value is exact.
    std::vector<double> candidates;
    for (const auto& iv : S.intervals) {
      candidates.push_back(iv.lo);
      candidates.push_back(iv.hi);
      for (const double shift : {-sigma, sigma}) {
        for (const double edge : {iv.lo, iv.hi}) {
          const double cand = edge + shift;
          if (S.contains(cand)) candidates.push_back(cand);
        }
      }
    }
    for (const auto& iv : S.intervals) {
      const int per_interval = std::max(
          2, static_cast<int>(std::lround(E_samples * (iv.hi - iv.lo) / total)));
      for (int i = 0; i <= per_interval; ++i) {
        candidates.push_back(iv.lo + (iv.hi - iv.lo) * i / per_interval);
      }
    }

    double best = std::numeric_limits<double>::infinity();
    double best_E = candidates.front();
    for (const double E : candidates) {
      const double ratio = S.intersection_length(E - sigma, E + sigma) / sigma;
      if (ratio < best) {
        best = ratio;
        best_E = E;
      }
    }
    profile.min_ratio.push_back(best);
    profile.argmin_E.push_back(best_E);
    profile.passing.push_back(best >= 0.5 ? 1 : 0);
  }

  for (std::size_t i = 0; i < profile.sigma_grid.size(); ++i) {
    if (!profile.passing[i]) break;
    profile.largest_passing_sigma =
        std::max(profile.largest_passing_sigma, profile.sigma_grid[i]);
  }
  return profile;
}

}  // namespace qp::spectrum
