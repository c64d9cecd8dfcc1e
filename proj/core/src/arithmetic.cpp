#include "qp/arithmetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "qp/errors.hpp"

namespace qp::arithmetic {

namespace {

BigFloat frac_part(const BigFloat& x) {
  BigFloat f = x - boost::multiprecision::floor(x);
  if (f < 0) f += 1;  // floor already handles this, but guard rounding
  if (f >= 1) f -= 1;
  return f;
}

bool mul_overflow(std::int64_t a, std::int64_t b, std::int64_t* out) {
  return __builtin_mul_overflow(a, b, out);
}

bool add_overflow(std::int64_t a, std::int64_t b, std::int64_t* out) {
  return __builtin_add_overflow(a, b, out);
}

// Appends one quotient to the recurrence; returns false on int64 overflow.
bool push_convergent(std::vector<Convergent>& conv, std::int64_t a) {
  // Seeds for x in (0,1): p_{-1}=1, q_{-1}=0, p_0=0, q_0=1.
  const Convergent prev2 = conv.size() >= 2 ? conv[conv.size() - 2]
                           : conv.size() == 1 ? Convergent{0, 1}
                                              : Convergent{1, 0};
  const Convergent prev1 = !conv.empty() ? conv.back() : Convergent{0, 1};
  Convergent next;
  std::int64_t t;
  if (mul_overflow(a, prev1.p, &t) || add_overflow(t, prev2.p, &next.p)) return false;
  if (mul_overflow(a, prev1.q, &t) || add_overflow(t, prev2.q, &next.q)) return false;
  conv.push_back(next);
  return true;
}

}  // namespace

Frequency continued_fraction(const BigFloat& x, int depth) {
  // Uncertainty of a directly supplied extended-precision value: a few ulps.
  const BigFloat u = boost::multiprecision::abs(x) *
                     std::numeric_limits<BigFloat>::epsilon() * 8;
  return continued_fraction(x, depth, u);
}

Frequency continued_fraction(const BigFloat& x, int depth, const BigFloat& uncertainty) {
  if (!(x > 0 && x < 1)) throw ValidationError("continued_fraction: x must lie in (0,1)");
  if (depth < 1) throw ValidationError("continued_fraction: depth must be >= 1");
  if (uncertainty < 0) throw ValidationError("continued_fraction: negative uncertainty");

  Frequency f;
  f.value_ = x;

  // Track the remainder together with its propagated absolute uncertainty.
  // A quotient is emitted only while floor(1/r) is stable under that
  // uncertainty; a remainder indistinguishable from 0 terminates the
  // expansion as rational, an uninformative one stops it as exhausted.
  BigFloat r = x;
  BigFloat half = uncertainty;
  // Below this error level a remainder hugging 0 is a meaningful rational
  // signal rather than generic error growth.
  const BigFloat informative(std::ldexp(1.0, -20));

  for (int step = 0; step < depth; ++step) {
    if (r <= 2 * half) {
      f.rational_detected_ = true;
      break;
    }
    const BigFloat inv = 1 / r;
    BigFloat half_inv = half / (r * r);
    half_inv += half_inv / 1000000;  // cushion for the division rounding
    BigFloat a_big = boost::multiprecision::floor(inv);
    BigFloat rem = inv - a_big;
    if (rem + half_inv >= 1) {
      a_big += 1;
      rem -= 1;
    }
    if (boost::multiprecision::abs(rem) <= 2 * half_inv) {
      // 1/r is an integer to within the propagated error.
      if (half_inv <= informative &&
          a_big <= BigFloat(std::numeric_limits<std::int64_t>::max() / 4) &&
          push_convergent(f.convergents_, static_cast<std::int64_t>(a_big))) {
        f.quotients_.push_back(static_cast<std::int64_t>(a_big));
        f.rational_detected_ = true;
      } else {
        f.precision_exhausted_ = true;
      }
      break;
    }
    if (rem < 0 || a_big > BigFloat(std::numeric_limits<std::int64_t>::max() / 4)) {
      f.precision_exhausted_ = true;
      break;
    }
    const auto a = static_cast<std::int64_t>(a_big);
    if (!push_convergent(f.convergents_, a)) {
      f.precision_exhausted_ = true;
      break;
    }
    f.quotients_.push_back(a);
    r = rem;
    half = half_inv;
  }
  return f;
}

Frequency Frequency::from_decimal(std::string_view decimal, int depth) {
  std::string s(decimal);
  const auto dot = s.find('.');
  if (dot == std::string::npos)
    throw ValidationError("frequency decimal literal must contain a '.'");
  std::size_t significant = 0;
  bool leading = true;
  int fractional_digits = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == dot) continue;
    if (!std::isdigit(static_cast<unsigned char>(s[i])))
      throw ValidationError("frequency decimal literal has non-digit characters");
    if (i > dot) ++fractional_digits;
    if (leading && s[i] == '0') continue;
    leading = false;
    ++significant;
  }
  if (significant < 30)
    throw ValidationError("frequency decimal literal needs >= 30 significant digits");
  const BigFloat x(s);
  if (!(x > 0 && x < 1)) throw ValidationError("frequency must lie in (0,1)");
  const BigFloat u = boost::multiprecision::pow(BigFloat(10), -fractional_digits);
  return continued_fraction(x, depth, u);
}

Frequency Frequency::from_quotients(const std::vector<std::int64_t>& quotients) {
  if (quotients.empty()) throw ValidationError("frequency quotient list is empty");
  Frequency f;
  for (const std::int64_t a : quotients) {
    if (a < 1) throw ValidationError("partial quotients must be >= 1");
    if (!push_convergent(f.convergents_, a))
      throw ValidationError("quotients overflow 64-bit convergents");
    f.quotients_.push_back(a);
  }
  // Exact value of the finite expansion.
  const Convergent last = f.convergents_.back();
  f.value_ = BigFloat(last.p) / BigFloat(last.q);
  return f;
}

double Frequency::orbit_phase(double x0, std::int64_t k) const {
  BigFloat t = BigFloat(x0) + BigFloat(k) * value_;
  return static_cast<double>(frac_part(t));
}

BigFloat Frequency::dist_to_integers(std::int64_t k) const {
  const BigFloat f = frac_part(BigFloat(k) * value_);
  return f <= BigFloat(0.5) ? f : 1 - f;
}

std::string to_string(DiophantineReport::Kind kind) {
  switch (kind) {
    case DiophantineReport::Kind::Sdc: return "SDC";
    case DiophantineReport::Kind::NotSdcWithinRange: return "not-SDC-within-range";
    case DiophantineReport::Kind::RationalDetected: return "rational-detected";
  }
  return "?";
}

DiophantineReport sdc_check(const Frequency& alpha, double kappa, double tau,
                            std::int64_t k_max) {
  if (!(kappa > 0)) throw ValidationError("sdc_check: kappa must be > 0");
  if (!(tau > 1)) throw ValidationError("sdc_check: tau must be > 1");
  if (k_max < 1) throw ValidationError("sdc_check: k_max must be >= 1");

  DiophantineReport report;
  report.kappa = kappa;
  report.tau = tau;
  report.k_max = k_max;
  if (alpha.rational_detected()) {
    report.kind = DiophantineReport::Kind::RationalDetected;
    return report;
  }

  // dist(k alpha, Z) = dist(-k alpha, Z), so positive k suffices.
  double worst = std::numeric_limits<double>::infinity();
  std::int64_t worst_k = 0;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    const double dist = static_cast<double>(alpha.dist_to_integers(k));
    const double weight =
        static_cast<double>(k) * std::max(1.0, std::pow(std::log(static_cast<double>(k)), tau));
    const double margin = weight * dist;
    if (margin < worst) {
      worst = margin;
      worst_k = k;
    }
  }
  report.worst_k = worst_k;
  report.worst_margin = worst;
  report.kind = worst >= kappa ? DiophantineReport::Kind::Sdc
                               : DiophantineReport::Kind::NotSdcWithinRange;
  return report;
}

BetaEstimate beta_exponent(const Frequency& alpha) {
  if (alpha.rational_detected())
    throw ValidationError("beta_exponent: rational-detected frequency");
  const auto& conv = alpha.convergents();
  if (conv.size() < 3)
    throw ValidationError("beta_exponent: insufficient-depth (need >= 3 convergents)");

  // ln(q_{n+1})/q_n realizes -ln||q_n alpha||/q_n up to O(1/q_n) via
  // ||q_n alpha|| ~ 1/q_{n+1}.  The limsup lives in the tail, so the tail
  // max over the last 5 pairs is the headline value.
  const std::size_t pairs = conv.size() - 1;
  BetaEstimate est;
  est.overall_max = 0.0;
  est.tail_max = 0.0;
  const std::size_t tail_begin = pairs > 5 ? pairs - 5 : 0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double ratio =
        std::log(static_cast<double>(conv[i + 1].q)) / static_cast<double>(conv[i].q);
    est.overall_max = std::max(est.overall_max, ratio);
    if (i >= tail_begin) est.tail_max = std::max(est.tail_max, ratio);
  }
  return est;
}

ThetaWitness theta_membership(const BigFloat& theta, const Frequency& alpha,
                              double gamma, double tau, std::int64_t k_max) {
  if (!(gamma > 0)) throw ValidationError("theta_membership: gamma must be > 0");
  if (!(tau > 1)) throw ValidationError("theta_membership: tau must be > 1");
  if (k_max < 0) throw ValidationError("theta_membership: k_max must be >= 0");

  ThetaWitness witness;
  double best = std::numeric_limits<double>::infinity();
  const BigFloat two_theta = 2 * theta;
  auto consider = [&](std::int64_t k) {
    BigFloat t = two_theta + BigFloat(k) * alpha.value();
    t -= boost::multiprecision::floor(t);
    const BigFloat norm_big = t <= BigFloat(0.5) ? t : 1 - t;
    const double norm = static_cast<double>(norm_big);
    const double margin = norm * std::pow(static_cast<double>(std::llabs(k)) + 1.0, tau);
    if (margin < best) {
      best = margin;
      witness.worst_k = k;
      witness.worst_norm = norm;
    }
  };
  consider(0);
  for (std::int64_t k = 1; k <= k_max; ++k) {
    consider(-k);
    consider(k);
  }
  witness.worst_margin = best;
  witness.member = best >= gamma;
  return witness;
}

}  // namespace qp::arithmetic
