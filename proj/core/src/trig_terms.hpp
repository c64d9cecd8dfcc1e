#pragma once

// Internal helpers shared by the transfer-matrix and Green's-function kernels:
// a potential reduced to harmonic terms evaluated from (cos 2 pi x, sin 2 pi x)
// by Chebyshev-style angle doubling, plus a minimal complex type that keeps the
// hot loops free of the libcall-based std::complex arithmetic.

#include <cmath>
#include <vector>

#include "qp/cocycle.hpp"

namespace qp::detail {

struct cd {
  double re = 0.0;
  double im = 0.0;
};

inline cd operator+(cd x, cd y) { return {x.re + y.re, x.im + y.im}; }
inline cd operator-(cd x, cd y) { return {x.re - y.re, x.im - y.im}; }
inline cd operator*(cd x, cd y) {
  return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
}
inline cd inverse(cd x) {
  const double den = x.re * x.re + x.im * x.im;
  return {x.re / den, -x.im / den};
}
inline double abs1(cd x) { return std::fabs(x.re) + std::fabs(x.im); }
inline double abs2(cd x) { return x.re * x.re + x.im * x.im; }

// One cosine/sine pair per active harmonic, with the AMO term folded into
// harmonic 1.  V(x) = sum_p a_p cos(2 pi p x) + b_p sin(2 pi p x).
struct RealTerms {
  struct Term {
    int p;
    double a, b;
  };
  std::vector<Term> terms;

  static RealTerms build(const cocycle::PotentialSpec& pot) {
    RealTerms out;
    auto add = [&out](int p, double a, double b) {
      if (a == 0.0 && b == 0.0) return;
      for (auto& t : out.terms) {
        if (t.p == p) {
          t.a += a;
          t.b += b;
          return;
        }
      }
      out.terms.push_back({p, a, b});
    };
    add(1, 2.0 * pot.lambda(), 0.0);
    for (const auto& h : pot.v()) add(h.k, pot.epsilon() * h.cos_coeff, pot.epsilon() * h.sin_coeff);
    std::sort(out.terms.begin(), out.terms.end(),
              [](const Term& x, const Term& y) { return x.p < y.p; });
    return out;
  }

  double eval(double c1, double s1) const {
    double acc = 0.0;
    double cp = c1, sp = s1;
    int p = 1;
    for (const auto& t : terms) {
      while (p < t.p) {
        const double cn = cp * c1 - sp * s1;
        sp = sp * c1 + cp * s1;
        cp = cn;
        ++p;
      }
      acc += t.a * cp + t.b * sp;
    }
    return acc;
  }
};

// Complexified phase x + i eps: cos(2 pi p (x+i eps)) and sin split into the
// (cosh, sinh) factors, leaving per-step work as four real dot products.
struct ComplexTerms {
  struct Term {
    int p;
    double re_c, re_s;  // Re V += re_c * cos + re_s * sin
    double im_c, im_s;  // Im V += im_c * cos + im_s * sin
  };
  std::vector<Term> terms;

  static ComplexTerms build(const cocycle::PotentialSpec& pot, double eps_imag) {
    const RealTerms base = RealTerms::build(pot);
    ComplexTerms out;
    out.terms.reserve(base.terms.size());
    for (const auto& t : base.terms) {
      const double arg = 2.0 * M_PI * t.p * eps_imag;
      const double ch = std::cosh(arg);
      const double sh = std::sinh(arg);
      out.terms.push_back({t.p, t.a * ch, t.b * ch, t.b * sh, -t.a * sh});
    }
    return out;
  }

  cd eval(double c1, double s1) const {
    cd acc;
    double cp = c1, sp = s1;
    int p = 1;
    for (const auto& t : terms) {
      while (p < t.p) {
        const double cn = cp * c1 - sp * s1;
        sp = sp * c1 + cp * s1;
        cp = cn;
        ++p;
      }
      acc.re += t.re_c * cp + t.re_s * sp;
      acc.im += t.im_c * cp + t.im_s * sp;
    }
    return acc;
  }
};

}  // namespace qp::detail
