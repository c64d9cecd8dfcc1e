#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qp/arithmetic.hpp"
#include "qp/errors.hpp"

using namespace qp::arithmetic;
using qp::BigFloat;
using qp::ValidationError;

TEST_CASE("golden mean expansion: all-ones quotients and Fibonacci convergents") {
  const Frequency f = continued_fraction(oracle::golden_value(), 6);
  REQUIRE(f.quotients().size() == 6);
  for (const auto a : f.quotients()) CHECK(a == 1);
  const std::vector<std::pair<std::int64_t, std::int64_t>> expected{
      {1, 1}, {1, 2}, {2, 3}, {3, 5}, {5, 8}, {8, 13}};
  for (std::size_t k = 0; k < expected.size(); ++k) {
    CHECK(f.convergents()[k].p == expected[k].first);
    CHECK(f.convergents()[k].q == expected[k].second);
  }
  CHECK_FALSE(f.rational_detected());
  CHECK_FALSE(f.precision_exhausted());
}

TEST_CASE("silver mean expansion: quotients all equal 2") {
  const BigFloat x = boost::multiprecision::sqrt(BigFloat(2)) - 1;
  const Frequency f = continued_fraction(x, 4);
  REQUIRE(f.quotients().size() == 4);
  for (const auto a : f.quotients()) CHECK(a == 2);
}

TEST_CASE("exact rational terminates with rational-detected") {
  const Frequency f = continued_fraction(BigFloat("0.25"), 5);
  CHECK(f.rational_detected());
  REQUIRE(f.quotients().size() == 1);
  CHECK(f.quotients()[0] == 4);
}

TEST_CASE("short decimal exhausts precision before the requested depth") {
  // 10 digits certify only the first handful of golden-mean quotients.
  const Frequency f = continued_fraction(BigFloat("0.6180339887"), 60, BigFloat("1e-10"));
  CHECK(f.precision_exhausted());
  CHECK(f.quotients().size() < 30);
  for (const auto a : f.quotients()) CHECK(a == 1);
}

TEST_CASE("frequency invariants: recurrence, approximation quality, q growth") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 40);
  const auto& conv = f.convergents();
  const auto& a = f.quotients();
  REQUIRE(conv.size() >= 10);
  for (std::size_t k = 2; k < conv.size(); ++k) {
    CHECK(conv[k].p == a[k] * conv[k - 1].p + conv[k - 2].p);
    CHECK(conv[k].q == a[k] * conv[k - 1].q + conv[k - 2].q);
    CHECK(conv[k].q > conv[k - 1].q);
  }
  for (std::size_t k = 0; k + 1 < conv.size(); ++k) {
    const BigFloat gap =
        boost::multiprecision::abs(f.value() - BigFloat(conv[k].p) / conv[k].q);
    CHECK(gap < BigFloat(1) / (BigFloat(conv[k].q) * conv[k + 1].q));
    // q_k ||q_k alpha|| < 1
    CHECK(BigFloat(conv[k].q) * f.dist_to_integers(conv[k].q) < 1);
  }
}

TEST_CASE("from_decimal validates digit count and range") {
  CHECK_THROWS_AS(Frequency::from_decimal("0.5"), ValidationError);
  CHECK_THROWS_AS(Frequency::from_decimal("1.618033988749894848204586834365638117"),
                  ValidationError);
  CHECK_NOTHROW(Frequency::from_decimal(oracle::golden_decimal()));
}

TEST_CASE("from_quotients is exact and matches the recurrence") {
  const Frequency f = Frequency::from_quotients({1, 1000000, 1, 1, 1, 1});
  CHECK_FALSE(f.rational_detected());
  CHECK(f.convergents()[0].q == 1);
  CHECK(f.convergents()[1].q == 1000001);
  // value is the exact last convergent
  const auto last = f.convergents().back();
  CHECK(f.value() == BigFloat(last.p) / last.q);
  CHECK_THROWS_AS(Frequency::from_quotients({}), ValidationError);
  CHECK_THROWS_AS(Frequency::from_quotients({0, 2}), ValidationError);
}

TEST_CASE("sdc_check: golden mean is SDC, worst margin dist(alpha,Z) at k=1") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 40);
  const auto report = sdc_check(f, 0.2, 1.1, 10000);
  CHECK(report.kind == DiophantineReport::Kind::Sdc);
  CHECK(report.worst_margin >= 0.2);
  CHECK(report.worst_k == 1);
  // dist(alpha, Z) = 1 - alpha = (3 - sqrt 5)/2
  CHECK(report.worst_margin == doctest::Approx((3.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-6));

  // exact-integer brute-force oracle over the same range
  const auto exact = oracle::ExactFrequency::from_decimal(oracle::golden_decimal());
  double worst = 1e300;
  long long worst_k = 0;
  for (long long k = 1; k <= 10000; ++k) {
    const double margin = oracle::sdc_margin_weight(k, 1.1) * exact.dist_to_integers(k);
    if (margin < worst) {
      worst = margin;
      worst_k = k;
    }
  }
  CHECK(worst_k == report.worst_k);
  CHECK(report.worst_margin == doctest::Approx(worst).epsilon(1e-9));
}

TEST_CASE("sdc_check: forced huge partial quotient fails at k = q_1") {
  const Frequency f = Frequency::from_quotients({1, 1000000, 1, 1, 1, 1, 1, 1});
  const auto report = sdc_check(f, 0.2, 1.1, 10);
  CHECK(report.kind == DiophantineReport::Kind::NotSdcWithinRange);
  CHECK(report.worst_k == 1);
  // dist(q_1 alpha, Z) < 1/q_2 by the convergent inequality
  CHECK(report.worst_margin < 1.0 / 1000001 + 1e-12);
}

TEST_CASE("sdc_check: k_max=1 tests only |k|=1") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 40);
  const auto report = sdc_check(f, 0.3, 1.1, 1);
  CHECK(report.kind == DiophantineReport::Kind::Sdc);
  CHECK(report.worst_k == 1);
  CHECK(report.worst_margin == doctest::Approx(0.3819660113).epsilon(1e-8));
}

TEST_CASE("sdc_check: rational-detected frequency reports as such") {
  const Frequency f = continued_fraction(BigFloat("0.25"), 5);
  const auto report = sdc_check(f, 0.2, 1.1, 10);
  CHECK(report.kind == DiophantineReport::Kind::RationalDetected);
}

TEST_CASE("sdc_check monotonicity in kappa and k_max") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 40);
  const auto base = sdc_check(f, 0.2, 1.5, 2000);
  // decreasing kappa never flips SDC -> not-SDC
  for (const double kappa : {0.1, 0.05, 0.01}) {
    const auto r = sdc_check(f, kappa, 1.5, 2000);
    if (base.kind == DiophantineReport::Kind::Sdc)
      CHECK(r.kind == DiophantineReport::Kind::Sdc);
  }
  // increasing k_max never flips not-SDC -> SDC (worst margin is monotone)
  double prev = 1e300;
  for (const std::int64_t kmax : {10, 100, 1000, 10000}) {
    const auto r = sdc_check(f, 0.2, 1.5, kmax);
    CHECK(r.worst_margin <= prev + 1e-15);
    prev = r.worst_margin;
  }
}

TEST_CASE("beta_exponent: golden mean tail goes to zero") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 30);
  const auto est = beta_exponent(f);
  CHECK(est.overall_max <= 0.7);
  CHECK(est.overall_max == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(est.tail_max <= 0.01);
}

TEST_CASE("beta_exponent: spike in the quotients shows up") {
  const Frequency f = Frequency::from_quotients({1, 1, 1000000, 1, 1, 1});
  const auto est = beta_exponent(f);
  CHECK(est.overall_max >= std::log(1e6) / 2.0);
}

TEST_CASE("beta_exponent: bounded quotients force a vanishing tail") {
  // deterministic pseudo-random quotient lists with entries in [1, 4]
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next = [&state] {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<std::int64_t>(state % 4) + 1;
  };
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<std::int64_t> qs(20);
    for (auto& q : qs) q = next();
    const auto est = beta_exponent(Frequency::from_quotients(qs));
    CHECK(est.tail_max <= est.overall_max);
    CHECK(est.tail_max <= 0.05);  // q_15 is already in the thousands
    CHECK(est.tail_max >= 0.0);
  }
}

TEST_CASE("beta_exponent rejects rational and shallow input") {
  CHECK_THROWS_AS(beta_exponent(continued_fraction(BigFloat("0.25"), 5)), ValidationError);
  CHECK_THROWS_AS(beta_exponent(Frequency::from_quotients({3, 2})), ValidationError);
}

TEST_CASE("theta_membership: exact resonance at theta = alpha/2") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 40);
  const BigFloat theta = f.value() / 2;
  const auto w = theta_membership(theta, f, 0.01, 2.0, 5);
  CHECK_FALSE(w.member);
  CHECK(w.worst_k == -1);
  CHECK(w.worst_norm <= 1e-30);
}

TEST_CASE("theta_membership: gamma above 1/2 fails at k=0") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 40);
  for (const double theta : {0.13, 0.317, 0.499}) {
    const auto w = theta_membership(BigFloat(theta), f, 0.6, 2.0, 0);
    CHECK_FALSE(w.member);
    CHECK(w.worst_k == 0);
  }
}

TEST_CASE("theta_membership: exhaustive scan case and monotonicity") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 40);
  const BigFloat theta(0.25);
  const auto base = theta_membership(theta, f, 0.05, 2.0, 1000);
  // worst margin decreases (weakly) with k_max -> antitone membership
  double prev = 1e300;
  for (const std::int64_t kmax : {10, 100, 1000}) {
    const auto w = theta_membership(theta, f, 0.05, 2.0, kmax);
    CHECK(w.worst_margin <= prev + 1e-15);
    prev = w.worst_margin;
  }
  // monotone in gamma: if it fails for small gamma it fails for any larger one
  if (!base.member) {
    CHECK_FALSE(theta_membership(theta, f, 0.1, 2.0, 1000).member);
    CHECK_FALSE(theta_membership(theta, f, 0.4, 2.0, 1000).member);
  }
  // member iff worst_margin >= gamma, by construction and brute force
  double brute = 1e300;
  for (std::int64_t k = -1000; k <= 1000; ++k) {
    BigFloat t = 2 * theta + BigFloat(k) * f.value();
    t -= boost::multiprecision::floor(t);
    const double norm = static_cast<double>(t <= BigFloat(0.5) ? t : 1 - t);
    brute = std::min(brute, norm * std::pow(std::abs(static_cast<double>(k)) + 1.0, 2.0));
  }
  CHECK(base.worst_margin == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("orbit_phase: multiply-and-reduce matches extended-precision addition") {
  const Frequency f = Frequency::from_decimal(oracle::golden_decimal(), 40);
  BigFloat acc(0.25);
  const BigFloat alpha = f.value();
  std::int64_t checkpoints[] = {1, 10, 1000, 100000, 1000000};
  std::size_t next = 0;
  for (std::int64_t k = 1; k <= 1000000 && next < 5; ++k) {
    acc += alpha;
    if (acc >= 1) acc -= 1;
    if (k == checkpoints[next]) {
      const double direct = f.orbit_phase(0.25, k);
      CHECK(std::fabs(direct - static_cast<double>(acc)) < 1e-12);
      ++next;
    }
  }
}
