#include "qp/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qp/errors.hpp"
#include "qp/parallel.hpp"
#include "trig_terms.hpp"

namespace qp::rotation {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kDegenerateNorm2 = 1e-24;  // (1e-12)^2
constexpr double kNudgeRadians = 1e-8;

struct PhaseEstimate {
  double turns_per_step = 0.0;
  std::size_t degenerate = 0;
};

// One-step angular increment of a Schrodinger matrix [[t, -1], [1, 0]] lies
// in (-pi/2, 3pi/2): the polar rotation part has angle atan2(2, t) in (0, pi)
// and the positive-definite factor displaces any direction by less than pi/2.
// atan2 measures in (-pi, pi], so an increment wrapped past -pi/2 is a
// forward near-pi step and belongs on the +2pi branch.  (A symmetric-branch
// unwrap fails exactly below the spectrum, where every step rotates by ~pi.)
PhaseEstimate track_lift(const detail::RealTerms& terms, double E,
                         std::span<const double> cos_t, std::span<const double> sin_t,
                         double cos0, double sin0, std::size_t n) {
  double vc = 1.0, vs = 0.0;  // current direction, unit length
  double total = 0.0;         // accumulated lift, radians
  PhaseEstimate out;
  for (std::size_t k = 0; k < n; ++k) {
    const double c1 = cos_t[k] * cos0 - sin_t[k] * sin0;
    const double s1 = sin_t[k] * cos0 + cos_t[k] * sin0;
    const double t = E - terms.eval(c1, s1);
    double wx = t * vc - vs;
    double wy = vc;
    double r2 = wx * wx + wy * wy;
    if (r2 < kDegenerateNorm2) {
      // w landed on the contracting direction: nudge and retry once.
      const double nc = vc * std::cos(kNudgeRadians) - vs * std::sin(kNudgeRadians);
      const double ns = vs * std::cos(kNudgeRadians) + vc * std::sin(kNudgeRadians);
      vc = nc;
      vs = ns;
      wx = t * vc - vs;
      wy = vc;
      r2 = wx * wx + wy * wy;
      ++out.degenerate;
    }
    double delta = std::atan2(vc * wy - vs * wx, vc * wx + vs * wy);
    if (delta <= -M_PI_2) delta += kTwoPi;
    total += delta;
    const double inv_r = 1.0 / std::sqrt(r2);
    vc = wx * inv_r;
    vs = wy * inv_r;
  }
  out.turns_per_step = total / (kTwoPi * static_cast<double>(n));
  return out;
}

}  // namespace

double fold_rotation(double raw) {
  double y = raw - std::floor(raw);
  return std::min(y, 1.0 - y);
}

RotationResult rotation_number(const PotentialSpec& pot, const Frequency& alpha, double E,
                               std::size_t n, std::size_t m, int threads) {
  if (n < 1000) throw ValidationError("rotation_number: n must be >= 1000");
  if (m < 16) throw ValidationError("rotation_number: m must be >= 16");

  const cocycle::OrbitTable table(alpha, n);
  const detail::RealTerms terms = detail::RealTerms::build(pot);

  std::vector<double> raw(m);
  std::vector<std::size_t> degenerate(m, 0);
  const double inv_m = 1.0 / static_cast<double>(m);
  parallel_for(m, threads, [&](std::size_t j) {
    const double x0 = static_cast<double>(j) * inv_m;
    const PhaseEstimate est = track_lift(terms, E, table.cos_table(), table.sin_table(),
                                         std::cos(kTwoPi * x0), std::sin(kTwoPi * x0), n);
    raw[j] = est.turns_per_step;
    degenerate[j] = est.degenerate;
  });

  RotationResult result;
  result.n_used = n;
  result.phase_samples = m;
  result.rho_raw = tree_mean(raw);
  result.rho = fold_rotation(result.rho_raw);
  double lo = fold_rotation(raw[0]), hi = lo;
  for (std::size_t j = 1; j < m; ++j) {
    const double f = fold_rotation(raw[j]);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  result.spread = hi - lo;
  for (const auto c : degenerate) result.degenerate_events += c;
  return result;
}

double ids_from_rotation(double rho) {
  if (!(rho >= 0.0 && rho <= 0.5))
    throw ValidationError("ids_from_rotation: rho must lie in [0, 1/2]");
  return 1.0 - 2.0 * rho;
}

}  // namespace qp::rotation
