#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "qp/arithmetic.hpp"

namespace qp::cocycle {

using Complex = std::complex<double>;

struct Harmonic {
  int k = 1;  // harmonic index, >= 1
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

// V(x) = 2 lambda cos 2 pi x + epsilon * sum_k (c_k cos 2 pi k x + s_k sin 2 pi k x).
// A trigonometric polynomial, so evaluation at complex phase is the exact
// analytic extension.
class PotentialSpec {
 public:
  PotentialSpec() = default;  // free Laplacian (V == 0)
  PotentialSpec(double lambda, double epsilon, std::vector<Harmonic> v);

  static PotentialSpec free_laplacian() { return {}; }
  static PotentialSpec almost_mathieu(double lambda) { return {lambda, 0.0, {}}; }

  double lambda() const { return lambda_; }
  double epsilon() const { return epsilon_; }
  const std::vector<Harmonic>& v() const { return v_; }
  int max_harmonic() const;

  double value(double x) const;
  Complex value(Complex x) const;

  // sup_x |V(x)| bound: 2|lambda| + |epsilon| sum (|c_k| + |s_k|).
  double sup_norm() const;
  // |V|_h bound: 2|lambda| e^{2 pi h} + |epsilon| sum (|c_k| + |s_k|) e^{2 pi k h}.
  double analytic_norm(double h) const;

 private:
  double lambda_ = 0.0;
  double epsilon_ = 0.0;
  std::vector<Harmonic> v_;
};

struct Mat2 {
  Complex a{1.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{1.0, 0.0};  // [[a, b], [c, d]]

  Complex det() const { return a * d - b * c; }
  double frobenius_norm() const;
  bool is_real(double tol = 0.0) const;
};

Mat2 operator*(const Mat2& lhs, const Mat2& rhs);

// Renormalized cocycle iterate: the true product equals matrix * exp(log_scale).
struct CocyclePoint {
  Mat2 matrix;
  double log_scale = 0.0;

  double log_norm() const;  // log_scale + ln ||matrix||_F
};

// compose(later, earlier) = the product later*earlier with scales combined.
CocyclePoint compose(const CocyclePoint& later, const CocyclePoint& earlier);

// S_E^V(x) = [[E - V(x), -1], [1, 0]].
Mat2 schrodinger_matrix(const PotentialSpec& pot, Complex E, Complex x);

// cos/sin of 2 pi frac(k alpha) for k = 0..n-1.  Each entry is reduced from
// the extended-precision alpha, so long orbits carry no phase drift; the
// product kernel combines entries with the phase offset by exact angle
// addition.
class OrbitTable {
 public:
  OrbitTable(const arithmetic::Frequency& alpha, std::size_t n);

  std::size_t size() const { return cos_.size(); }
  std::span<const double> cos_table() const { return cos_; }
  std::span<const double> sin_table() const { return sin_; }

 private:
  std::vector<double> cos_;
  std::vector<double> sin_;
};

// Product of n Schrodinger matrices along the orbit x0 + j alpha (mod 1),
// phase complexified by i*eps_imag.  The running product is renormalized by
// its Frobenius norm every 32 multiplications (plus an emergency rescale if
// entries approach the overflow guard), accumulating ln of the factors into
// log_scale.  n = 0 gives the identity with log_scale 0.
CocyclePoint transfer_product(const PotentialSpec& pot, Complex E,
                              const arithmetic::Frequency& alpha, double x0,
                              double eps_imag, std::size_t n);

// Same, reusing a precomputed orbit table (table.size() >= n).
CocyclePoint transfer_product(const PotentialSpec& pot, Complex E,
                              const OrbitTable& table, double x0, double eps_imag,
                              std::size_t n);

}  // namespace qp::cocycle
