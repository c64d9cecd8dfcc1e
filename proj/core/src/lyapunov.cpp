#include "qp/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "qp/errors.hpp"
#include "qp/parallel.hpp"

namespace qp::lyapunov {

namespace {

bool is_power_of_two(std::size_t m) { return m != 0 && (m & (m - 1)) == 0; }

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kConvexityTol = 1e-3;

}  // namespace

double lyapunov_exponent(const PotentialSpec& pot, const Frequency& alpha, Complex E,
                         double eps_imag, std::size_t n, std::size_t m, int threads) {
  if (n < 100) throw ValidationError("lyapunov_exponent: n must be >= 100");
  if (m < 16 || !is_power_of_two(m))
    throw ValidationError("lyapunov_exponent: m must be a power of two >= 16");

  const cocycle::OrbitTable table(alpha, n);
  std::vector<double> per_phase(m);
  const double inv_m = 1.0 / static_cast<double>(m);
  parallel_for(m, threads, [&](std::size_t j) {
    const double x0 = static_cast<double>(j) * inv_m;
    per_phase[j] = cocycle::transfer_product(pot, E, table, x0, eps_imag, n).log_norm();
  });
  return tree_mean(per_phase) / static_cast<double>(n);
}

std::vector<double> default_eps_schedule() {
  std::vector<double> s;
  for (int k = 3; k <= 9; ++k) s.push_back(std::ldexp(1.0, -k));
  return s;
}

namespace {

// Least-squares slope of (x_i, y_i).
double fit_slope(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

bool profile_convexity_ok(const std::vector<double>& eps_desc,
                          const std::vector<double>& L_desc, double L0) {
  std::vector<double> e{0.0}, L{L0};
  for (std::size_t i = eps_desc.size(); i-- > 0;) {
    e.push_back(eps_desc[i]);
    L.push_back(L_desc[i]);
  }
  for (std::size_t i = 0; i + 1 < L.size(); ++i) {
    if (L[i + 1] < L[i] - kConvexityTol) return false;
  }
  for (std::size_t i = 0; i + 2 < L.size(); ++i) {
    const double chord =
        ((e[i + 2] - e[i + 1]) * L[i] + (e[i + 1] - e[i]) * L[i + 2]) / (e[i + 2] - e[i]);
    if (L[i + 1] > chord + kConvexityTol) return false;
  }
  return true;
}

LyapunovProfile acceleration(const PotentialSpec& pot, const Frequency& alpha, double E,
                             std::vector<double> schedule, std::size_t n, std::size_t m,
                             int threads) {
  if (schedule.empty()) schedule = default_eps_schedule();
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0)) throw ValidationError("acceleration: schedule must be positive");
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw ValidationError("acceleration: schedule must be strictly decreasing");
  }

  LyapunovProfile profile;
  profile.E = Complex{E, 0.0};
  profile.eps_grid = schedule;
  profile.L_values.resize(schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    profile.L_values[i] =
        lyapunov_exponent(pot, alpha, profile.E, schedule[i], n, m, threads);
  }
  profile.L0 = lyapunov_exponent(pot, alpha, profile.E, 0.0, n, m, threads);

  // Slope over the linear tail: the last 4 (smallest) schedule points.
  const std::size_t tail = std::min<std::size_t>(4, schedule.size());
  std::vector<double> xs(tail), ys(tail);
  for (std::size_t i = 0; i < tail; ++i) {
    const std::size_t idx = schedule.size() - tail + i;
    xs[i] = kTwoPi * schedule[idx];
    ys[i] = profile.L_values[idx];
  }
  if (tail >= 2) {
    profile.slope = fit_slope(xs, ys);
  } else {
    profile.slope = (profile.L_values[0] - profile.L0) / (kTwoPi * schedule[0]);
  }

  const double rounded = std::round(profile.slope);
  profile.omega_residual = std::fabs(profile.slope - rounded);
  if (profile.omega_residual <= kOmegaSnapThreshold)
    profile.omega_int = static_cast<int>(rounded);

  profile.convexity_warning = !profile_convexity_ok(schedule, profile.L_values, profile.L0);
  return profile;
}

const char* to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::Subcritical: return "subcritical";
    case RegimeLabel::Critical: return "critical";
    case RegimeLabel::Supercritical: return "supercritical";
    case RegimeLabel::UniformlyHyperbolicOrOffSpectrum:
      return "uniformly-hyperbolic-or-off-spectrum";
  }
  return "?";
}

RegimeLabel classify_regime(double L0, int omega, double tol) {
  if (omega < 0) throw ValidationError("classify_regime: omega must be >= 0");
  if (L0 <= tol) return omega == 0 ? RegimeLabel::Subcritical : RegimeLabel::Critical;
  return omega == 0 ? RegimeLabel::UniformlyHyperbolicOrOffSpectrum
                    : RegimeLabel::Supercritical;
}

RegimeLabel classify_regime(const LyapunovProfile& profile, double tol) {
  if (!profile.omega_int)
    throw ValidationError("classify_regime: unclassifiable (acceleration did not snap)");
  return classify_regime(profile.L0, *profile.omega_int, tol);
}

}  // namespace qp::lyapunov
