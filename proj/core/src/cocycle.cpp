#include "qp/cocycle.hpp"

#include <algorithm>
#include <cmath>

#include "qp/errors.hpp"
#include "trig_terms.hpp"

namespace qp::cocycle {

namespace {

constexpr std::size_t kRescaleCadence = 32;
// Emergency rescale threshold, far below the double overflow edge.
constexpr double kGuardMagnitude = 1e120;
constexpr double kTwoPi = 2.0 * M_PI;

}  // namespace

PotentialSpec::PotentialSpec(double lambda, double epsilon, std::vector<Harmonic> v)
    : lambda_(lambda), epsilon_(epsilon), v_(std::move(v)) {
  for (const auto& h : v_) {
    if (h.k < 1) throw ValidationError("potential harmonic index must be >= 1");
  }
}

int PotentialSpec::max_harmonic() const {
  int m = lambda_ != 0.0 ? 1 : 0;
  for (const auto& h : v_) m = std::max(m, h.k);
  return m;
}

double PotentialSpec::value(double x) const {
  double acc = 2.0 * lambda_ * std::cos(kTwoPi * x);
  for (const auto& h : v_) {
    acc += epsilon_ * (h.cos_coeff * std::cos(kTwoPi * h.k * x) +
                       h.sin_coeff * std::sin(kTwoPi * h.k * x));
  }
  return acc;
}

Complex PotentialSpec::value(Complex x) const {
  Complex acc = 2.0 * lambda_ * std::cos(kTwoPi * x);
  for (const auto& h : v_) {
    acc += epsilon_ * (h.cos_coeff * std::cos(kTwoPi * double(h.k) * x) +
                       h.sin_coeff * std::sin(kTwoPi * double(h.k) * x));
  }
  return acc;
}

double PotentialSpec::sup_norm() const {
  double acc = 2.0 * std::fabs(lambda_);
  for (const auto& h : v_)
    acc += std::fabs(epsilon_) * (std::fabs(h.cos_coeff) + std::fabs(h.sin_coeff));
  return acc;
}

double PotentialSpec::analytic_norm(double h) const {
  double acc = 2.0 * std::fabs(lambda_) * std::exp(kTwoPi * h);
  for (const auto& t : v_) {
    acc += std::fabs(epsilon_) * (std::fabs(t.cos_coeff) + std::fabs(t.sin_coeff)) *
           std::exp(kTwoPi * t.k * h);
  }
  return acc;
}

double Mat2::frobenius_norm() const {
  return std::sqrt(std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d));
}

bool Mat2::is_real(double tol) const {
  return std::fabs(a.imag()) <= tol && std::fabs(b.imag()) <= tol &&
         std::fabs(c.imag()) <= tol && std::fabs(d.imag()) <= tol;
}

Mat2 operator*(const Mat2& lhs, const Mat2& rhs) {
  return Mat2{lhs.a * rhs.a + lhs.b * rhs.c, lhs.a * rhs.b + lhs.b * rhs.d,
              lhs.c * rhs.a + lhs.d * rhs.c, lhs.c * rhs.b + lhs.d * rhs.d};
}

double CocyclePoint::log_norm() const { return log_scale + std::log(matrix.frobenius_norm()); }

CocyclePoint compose(const CocyclePoint& later, const CocyclePoint& earlier) {
  CocyclePoint out;
  out.matrix = later.matrix * earlier.matrix;
  out.log_scale = later.log_scale + earlier.log_scale;
  const double f = out.matrix.frobenius_norm();
  if (f > 1e16) {
    const double inv = 1.0 / f;
    out.matrix.a *= inv;
    out.matrix.b *= inv;
    out.matrix.c *= inv;
    out.matrix.d *= inv;
    out.log_scale += std::log(f);
  }
  return out;
}

Mat2 schrodinger_matrix(const PotentialSpec& pot, Complex E, Complex x) {
  return Mat2{E - pot.value(x), Complex{-1.0, 0.0}, Complex{1.0, 0.0}, Complex{0.0, 0.0}};
}

OrbitTable::OrbitTable(const arithmetic::Frequency& alpha, std::size_t n) {
  cos_.resize(n);
  sin_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ph = alpha.orbit_phase(0.0, static_cast<std::int64_t>(k));
    cos_[k] = std::cos(kTwoPi * ph);
    sin_[k] = std::sin(kTwoPi * ph);
  }
}

namespace {

using detail::cd;

// Scalar plumbing so one kernel serves the real and complex paths.
inline double mul_sub(double t, double x, double y) { return t * x - y; }
inline cd mul_sub(cd t, cd x, cd y) { return t * x - y; }
inline double abs_sum(double x) { return std::fabs(x); }
inline double abs_sum(cd x) { return detail::abs1(x); }
inline double sq_mag(double x) { return x * x; }
inline double sq_mag(cd x) { return detail::abs2(x); }
inline double scale_by(double x, double f) { return x * f; }
inline cd scale_by(cd x, double f) { return {x.re * f, x.im * f}; }
inline Complex to_complex(double x) { return Complex{x, 0.0}; }
inline Complex to_complex(cd x) { return Complex{x.re, x.im}; }

template <class Scalar>
struct scalar_consts;
template <>
struct scalar_consts<double> {
  static constexpr double zero = 0.0;
  static constexpr double one = 1.0;
};
template <>
struct scalar_consts<cd> {
  static constexpr cd zero{0.0, 0.0};
  static constexpr cd one{1.0, 0.0};
};

template <class Scalar, class PotEval>
CocyclePoint product_kernel(Scalar E, const PotEval& pot_eval,
                            std::span<const double> cos_t, std::span<const double> sin_t,
                            double cos0, double sin0, std::size_t n) {
  Scalar a = scalar_consts<Scalar>::one;
  Scalar b = scalar_consts<Scalar>::zero;
  Scalar c = scalar_consts<Scalar>::zero;
  Scalar d = scalar_consts<Scalar>::one;

  double log_scale = 0.0;
  auto rescale = [&]() {
    // Normalize by the largest entry before squaring so a single violent
    // multiplication (huge |E|) cannot overflow the Frobenius sum.
    const double mx = std::max(std::max(abs_sum(a), abs_sum(b)),
                               std::max(abs_sum(c), abs_sum(d)));
    if (!std::isfinite(mx) || mx == 0.0)
      throw NumericError("transfer_product: overflow-guard violation (rescale cadence failed)");
    const double inv_mx = 1.0 / mx;
    a = scale_by(a, inv_mx);
    b = scale_by(b, inv_mx);
    c = scale_by(c, inv_mx);
    d = scale_by(d, inv_mx);
    const double f = std::sqrt(sq_mag(a) + sq_mag(b) + sq_mag(c) + sq_mag(d));
    const double inv_f = 1.0 / f;
    a = scale_by(a, inv_f);
    b = scale_by(b, inv_f);
    c = scale_by(c, inv_f);
    d = scale_by(d, inv_f);
    log_scale += std::log(mx) + std::log(f);
  };

  for (std::size_t k = 0; k < n; ++k) {
    const double ck = cos_t[k];
    const double sk = sin_t[k];
    const double c1 = ck * cos0 - sk * sin0;
    const double s1 = sk * cos0 + ck * sin0;
    const Scalar t = E - pot_eval(c1, s1);
    const Scalar na = mul_sub(t, a, c);
    const Scalar nb = mul_sub(t, b, d);
    c = a;
    d = b;
    a = na;
    b = nb;
    if (abs_sum(a) + abs_sum(b) > kGuardMagnitude || (k + 1) % kRescaleCadence == 0)
      rescale();
  }

  CocyclePoint out;
  out.matrix = Mat2{to_complex(a), to_complex(b), to_complex(c), to_complex(d)};
  out.log_scale = log_scale;
  return out;
}

}  // namespace

CocyclePoint transfer_product(const PotentialSpec& pot, Complex E,
                              const arithmetic::Frequency& alpha, double x0,
                              double eps_imag, std::size_t n) {
  const OrbitTable table(alpha, n);
  return transfer_product(pot, E, table, x0, eps_imag, n);
}

CocyclePoint transfer_product(const PotentialSpec& pot, Complex E, const OrbitTable& table,
                              double x0, double eps_imag, std::size_t n) {
  if (eps_imag < 0) throw ValidationError("transfer_product: eps_imag must be >= 0");
  if (table.size() < n) throw ValidationError("transfer_product: orbit table shorter than n");
  if (n == 0) return CocyclePoint{};

  const double cos0 = std::cos(kTwoPi * x0);
  const double sin0 = std::sin(kTwoPi * x0);

  if (eps_imag == 0.0 && E.imag() == 0.0) {
    const detail::RealTerms terms = detail::RealTerms::build(pot);
    const auto eval = [&terms](double c1, double s1) { return terms.eval(c1, s1); };
    return product_kernel<double>(E.real(), eval, table.cos_table(), table.sin_table(), cos0,
                                  sin0, n);
  }
  const detail::ComplexTerms terms = detail::ComplexTerms::build(pot, eps_imag);
  const auto eval = [&terms](double c1, double s1) { return terms.eval(c1, s1); };
  return product_kernel<cd>(cd{E.real(), E.imag()}, eval, table.cos_table(), table.sin_table(),
                            cos0, sin0, n);
}

}  // namespace qp::cocycle
