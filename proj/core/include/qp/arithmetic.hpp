#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qp/bigfloat.hpp"

namespace qp::arithmetic {

struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
};

// An irrational frequency together with its continued-fraction data.
//
// The convergents satisfy p_k = a_k p_{k-1} + p_{k-2} and
// q_k = a_k q_{k-1} + q_{k-2} exactly in 64-bit integers, and
// |value - p_k/q_k| < 1/(q_k q_{k+1}) for every stored k.
class Frequency {
 public:
  // Decimal string in (0,1) carrying at least 30 significant digits.  The
  // expansion is certified against the string's half-width uncertainty.
  static Frequency from_decimal(std::string_view decimal, int depth = 64);

  // Exact ingestion from partial quotients (all >= 1).  The stored value is
  // the final convergent; the quotient list is authoritative.
  static Frequency from_quotients(const std::vector<std::int64_t>& quotients);

  const BigFloat& value() const { return value_; }
  double value_d() const { return static_cast<double>(value_); }
  const std::vector<std::int64_t>& quotients() const { return quotients_; }
  const std::vector<Convergent>& convergents() const { return convergents_; }
  bool rational_detected() const { return rational_detected_; }
  bool precision_exhausted() const { return precision_exhausted_; }

  // frac(x0 + k*alpha), reduced in extended precision (one multiply-and-reduce
  // per call, no accumulated working-precision drift).
  double orbit_phase(double x0, std::int64_t k) const;

  // dist(k*alpha, Z) in extended precision.
  BigFloat dist_to_integers(std::int64_t k) const;

 private:
  Frequency() = default;
  friend Frequency continued_fraction(const BigFloat&, int, const BigFloat&);

  BigFloat value_;
  std::vector<std::int64_t> quotients_;
  std::vector<Convergent> convergents_;
  bool rational_detected_ = false;
  bool precision_exhausted_ = false;
};

// Continued-fraction expansion of x in (0,1), at most `depth` quotients.
// Each quotient is certified on the interval [x - uncertainty, x + uncertainty];
// the expansion stops early with rational_detected when the remainder is
// consistent with zero, and with precision_exhausted when the next quotient
// cannot be certified (or would overflow the 64-bit convergents).
Frequency continued_fraction(const BigFloat& x, int depth);
Frequency continued_fraction(const BigFloat& x, int depth, const BigFloat& uncertainty);

struct DiophantineReport {
  enum class Kind { Sdc, NotSdcWithinRange, RationalDetected };
  Kind kind = Kind::NotSdcWithinRange;
  double kappa = 0.0;
  double tau = 0.0;
  std::int64_t worst_k = 0;
  double worst_margin = 0.0;  // min over k of |k| max(1, ln|k|)^tau dist(k alpha, Z)
  std::int64_t k_max = 0;
};

std::string to_string(DiophantineReport::Kind kind);

// Tests dist(k alpha, Z) >= kappa / (|k| max(1, ln|k|)^tau) for 1 <= |k| <= k_max.
// The max(1, .) guard replaces ln|k| at |k| = 1, which only strengthens the
// condition.  kind == Sdc iff worst_margin >= kappa.
DiophantineReport sdc_check(const Frequency& alpha, double kappa, double tau,
                            std::int64_t k_max);

struct BetaEstimate {
  double overall_max = 0.0;  // max_n ln(q_{n+1})/q_n over all stored convergents
  double tail_max = 0.0;     // same max over the last 5 pairs; the headline number
};

// Estimator of beta(alpha) = limsup_n ln(q_{n+1})/q_n.  Requires at least
// 3 convergents and a non-rational frequency.
BetaEstimate beta_exponent(const Frequency& alpha);

struct ThetaWitness {
  bool member = true;
  std::int64_t worst_k = 0;   // k minimizing ||2 theta + k alpha|| (|k|+1)^tau
  double worst_norm = 0.0;    // ||2 theta + worst_k * alpha||
  double worst_margin = 0.0;  // worst_norm * (|worst_k|+1)^tau; member iff >= gamma
};

// Membership test for Theta^tau_gamma: ||2 theta + k alpha|| >= gamma/(|k|+1)^tau
// for all |k| <= k_max.  Scans k = 0, -1, +1, -2, ... and keeps the strict
// minimizer, so the witness is deterministic.
ThetaWitness theta_membership(const BigFloat& theta, const Frequency& alpha,
                              double gamma, double tau, std::int64_t k_max);

}  // namespace qp::arithmetic
