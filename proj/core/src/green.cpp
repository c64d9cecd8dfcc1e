#include "qp/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qp/errors.hpp"
#include "qp/lyapunov.hpp"
#include "qp/parallel.hpp"
#include "trig_terms.hpp"

namespace qp::green {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

using detail::cd;

}  // namespace

std::size_t default_window(Complex z) {
  if (!(z.imag() > 0)) throw ValidationError("default_window: Im z must be > 0");
  const double w = std::ceil(8.0 / z.imag());
  return std::max<std::size_t>(200, static_cast<std::size_t>(std::min(w, 4e6)));
}

SiteTable::SiteTable(const Frequency& alpha, std::size_t w)
    : w_(static_cast<std::ptrdiff_t>(w)) {
  cos_.resize(2 * w + 1);
  sin_.resize(2 * w + 1);
  for (std::ptrdiff_t j = -w_; j <= w_; ++j) {
    const double ph = alpha.orbit_phase(0.0, j);
    cos_[static_cast<std::size_t>(j + w_)] = std::cos(kTwoPi * ph);
    sin_[static_cast<std::size_t>(j + w_)] = std::sin(kTwoPi * ph);
  }
}

namespace {

// <delta_0, (H_x - z)^{-1} delta_0> for one phase by the two-sided
// continued-fraction (Schur complement) recursion: fold the chain inward from
// both Dirichlet ends, then G = 1/(d_0 - r_- - r_+).
cd green_one_phase(const detail::RealTerms& terms, const SiteTable& sites, cd z,
                   double cos_x, double sin_x, std::ptrdiff_t w) {
  auto diag_at = [&](std::ptrdiff_t j) -> double {
    const double cj = sites.cos_at(j);
    const double sj = sites.sin_at(j);
    const double c1 = cj * cos_x - sj * sin_x;
    const double s1 = sj * cos_x + cj * sin_x;
    return terms.eval(c1, s1);
  };
  cd r_plus{0.0, 0.0};
  for (std::ptrdiff_t j = w; j >= 1; --j) {
    const cd den = cd{diag_at(j) - z.re, -z.im} - r_plus;
    r_plus = detail::inverse(den);
  }
  cd r_minus{0.0, 0.0};
  for (std::ptrdiff_t j = -w; j <= -1; ++j) {
    const cd den = cd{diag_at(j) - z.re, -z.im} - r_minus;
    r_minus = detail::inverse(den);
  }
  const cd den = cd{diag_at(0) - z.re, -z.im} - r_plus - r_minus;
  return detail::inverse(den);
}

Complex phase_average(const PotentialSpec& pot, const SiteTable& sites, Complex z,
                      std::size_t m, int threads, std::ptrdiff_t w) {
  const detail::RealTerms terms = detail::RealTerms::build(pot);
  std::vector<double> re(m), im(m);
  const double inv_m = 1.0 / static_cast<double>(m);
  parallel_for(m, threads, [&](std::size_t i) {
    const double x = static_cast<double>(i) * inv_m;
    const cd g = green_one_phase(terms, sites, cd{z.real(), z.imag()},
                                 std::cos(kTwoPi * x), std::sin(kTwoPi * x), w);
    re[i] = g.re;
    im[i] = g.im;
  });
  return Complex{tree_mean(re), tree_mean(im)};
}

}  // namespace

GreenValue green_avg(const PotentialSpec& pot, const Frequency& alpha, Complex z,
                     std::size_t window, std::size_t m, int threads, bool verify_window,
                     double tol) {
  const std::size_t w = window == 0 ? default_window(z) : window;
  if (w < 200) throw ValidationError("green_avg: window must be >= 200");
  const SiteTable sites(alpha, w);
  return green_avg(pot, sites, z, m, threads, verify_window, tol);
}

GreenValue green_avg(const PotentialSpec& pot, const SiteTable& sites, Complex z,
                     std::size_t m, int threads, bool verify_window, double tol) {
  if (!(z.imag() > 0)) throw ValidationError("green_avg: Im z must be > 0");
  if (m < 1) throw ValidationError("green_avg: m must be >= 1");

  GreenValue out;
  out.z = z;
  out.method = GreenValue::Method::ResolventAverage;
  const auto w = static_cast<std::ptrdiff_t>(sites.window());
  out.value = phase_average(pot, sites, z, m, threads, w);
  if (verify_window) {
    const Complex at_half = phase_average(pot, sites, z, m, threads, w / 2);
    out.window_warning = std::abs(out.value - at_half) > 10.0 * tol;
  }
  return out;
}

namespace {

// Walks the cells [E_i, E_{i+1}] of the table with their mass increments.
template <class Fn>
void for_each_cell(const IDSTable& ids, Fn&& fn) {
  for (std::size_t i = 0; i + 1 < ids.E_grid.size(); ++i) {
    const double dn = ids.N_values[i + 1] - ids.N_values[i];
    fn(ids.E_grid[i], ids.E_grid[i + 1], dn);
  }
}

}  // namespace

GreenValue green_from_ids(const IDSTable& ids, Complex z) {
  if (ids.E_grid.size() < 2) throw ValidationError("green_from_ids: table too small");
  if (z.imag() < 0) throw ValidationError("green_from_ids: Im z must be >= 0");
  if (z.imag() == 0.0) {
    // Real z must stay clear of the support of the mass increase.
    double step = 0.0;
    for (std::size_t i = 0; i + 1 < ids.E_grid.size(); ++i)
      step = std::max(step, ids.E_grid[i + 1] - ids.E_grid[i]);
    for_each_cell(ids, [&](double a, double b, double dn) {
      if (dn > 1e-15 && std::fabs(0.5 * (a + b) - z.real()) < 2.0 * step)
        throw NumericError("green_from_ids: pole-proximity (real z on the support of dN)");
    });
  }
  Complex acc{0.0, 0.0};
  for_each_cell(ids, [&](double a, double b, double dn) {
    if (dn == 0.0) return;
    acc += dn / (Complex{0.5 * (a + b), 0.0} - z);
  });
  GreenValue out;
  out.z = z;
  out.value = acc;
  out.method = GreenValue::Method::BorelOfIds;
  return out;
}

namespace {

// int_a^b ln|t - z| dt, exact.  For real z the antiderivative
// (t-u)(ln|t-u| - 1) extends continuously through the singularity at t = u,
// which is the split-cell rule in closed form.
double log_abs_integral(double a, double b, Complex z) {
  if (z.imag() == 0.0) {
    const double u = z.real();
    auto F = [u](double t) {
      const double s = t - u;
      if (s == 0.0) return 0.0;
      return s * (std::log(std::fabs(s)) - 1.0);
    };
    return F(b) - F(a);
  }
  auto F = [z](double t) {
    const Complex s = Complex{t, 0.0} - z;
    return (s * (std::log(s) - 1.0)).real();
  };
  return F(b) - F(a);
}

}  // namespace

double thouless(const IDSTable& ids, Complex z) {
  if (ids.E_grid.size() < 2) throw ValidationError("thouless: table too small");
  double acc = 0.0;
  for_each_cell(ids, [&](double a, double b, double dn) {
    if (dn == 0.0) return;
    acc += dn * log_abs_integral(a, b, z) / (b - a);
  });
  return acc;
}

BoundaryValue normal_boundary_re_g(const PotentialSpec& pot, const Frequency& alpha,
                                   double E, std::vector<double> schedule, std::size_t m,
                                   int threads, double tol) {
  if (schedule.empty()) schedule = lyapunov::default_eps_schedule();
  if (schedule.size() < 3)
    throw ValidationError("normal_boundary_re_g: schedule needs >= 3 points");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i] < schedule[i - 1] && schedule[i] > 0))
      throw ValidationError("normal_boundary_re_g: schedule must be decreasing positive");
  }

  BoundaryValue out;
  out.eps = schedule;
  out.re_values.resize(schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const Complex z{E, schedule[i]};
    out.re_values[i] =
        green_avg(pot, alpha, z, 0, m, threads, /*verify_window=*/false).value.real();
  }

  // Linear-in-eps fit over a 3-point tail: value at 0 plus fit residual.
  auto extrapolate = [&](std::size_t last) -> std::pair<double, double> {
    const std::size_t i0 = last - 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = i0; i <= last; ++i) {
      sx += schedule[i];
      sy += out.re_values[i];
      sxx += schedule[i] * schedule[i];
      sxy += schedule[i] * out.re_values[i];
    }
    const double n = 3.0;
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double dev = 0.0;
    for (std::size_t i = i0; i <= last; ++i)
      dev = std::max(dev, std::fabs(intercept + slope * schedule[i] - out.re_values[i]));
    return {intercept, dev};
  };

  const auto [value, residual] = extrapolate(schedule.size() - 1);
  out.re_g = value;
  out.residual = residual;
  out.nonconvergent = residual > tol;
  if (schedule.size() >= 4) {
    const auto [prev, prev_res] = extrapolate(schedule.size() - 2);
    (void)prev_res;
    out.nonconvergent =
        out.nonconvergent || std::fabs(value - prev) > 10.0 * std::max(residual, 1e-4);
  }
  return out;
}

double derivative_identity_residual(const PotentialSpec& pot, const Frequency& alpha,
                                    double E, double eps, double dE, std::size_t n,
                                    std::size_t m, std::size_t green_m, int threads) {
  if (!(eps > 0)) throw ValidationError("derivative_identity_residual: eps must be > 0");
  if (!(dE > 0 && dE <= eps / 10.0))
    throw ValidationError("derivative_identity_residual: need 0 < dE <= eps/10");

  const double L_plus =
      lyapunov::lyapunov_exponent(pot, alpha, Complex{E + dE, eps}, 0.0, n, m, threads);
  const double L_minus =
      lyapunov::lyapunov_exponent(pot, alpha, Complex{E - dE, eps}, 0.0, n, m, threads);
  const double fd = (L_plus - L_minus) / (2.0 * dE);
  const GreenValue g =
      green_avg(pot, alpha, Complex{E, eps}, 0, green_m, threads, /*verify_window=*/false);
  return std::fabs(fd + g.value.real());
}

MaximalProfile maximal_function(const PotentialSpec& pot, const Frequency& alpha,
                                std::vector<double> E_grid, const Cone& cone,
                                std::vector<double> sigma_grid, std::size_t m,
                                int threads) {
  if (!(cone.y_min > 0)) throw ValidationError("maximal_function: y_min must be > 0");
  if (!(cone.y_max >= cone.y_min))
    throw ValidationError("maximal_function: y_max must be >= y_min");
  if (cone.levels < 1 || cone.aspect < 1 || cone.aspect % 2 == 0)
    throw ValidationError("maximal_function: levels >= 1 and odd aspect >= 1 required");
  if (E_grid.size() < 2) throw ValidationError("maximal_function: grid needs >= 2 points");

  // One site table per cone level, shared across the whole grid.
  std::vector<double> ys(cone.levels);
  if (cone.levels == 1) {
    ys[0] = cone.y_min;
  } else {
    const double ratio = std::pow(cone.y_max / cone.y_min,
                                  1.0 / static_cast<double>(cone.levels - 1));
    double y = cone.y_min;
    for (int l = 0; l < cone.levels; ++l, y *= ratio) ys[l] = y;
  }
  std::vector<SiteTable> tables;
  tables.reserve(ys.size());
  for (const double y : ys) tables.emplace_back(alpha, default_window(Complex{0.0, y}));

  const detail::RealTerms terms = detail::RealTerms::build(pot);
  const int half = cone.aspect / 2;

  MaximalProfile profile;
  profile.cone = cone;
  profile.Gstar.resize(E_grid.size());
  parallel_for(E_grid.size(), threads, [&](std::size_t gi) {
    const double E0 = E_grid[gi];
    double sup = 0.0;
    for (std::size_t l = 0; l < ys.size(); ++l) {
      const double y = ys[l];
      const auto w = static_cast<std::ptrdiff_t>(tables[l].window());
      for (int i = -half; i <= half; ++i) {
        const double x = E0 + y * static_cast<double>(i) / static_cast<double>(half + 1);
        // inner phase loop, fixed-order mean
        std::vector<double> re(m), im(m);
        for (std::size_t ph = 0; ph < m; ++ph) {
          const double xp = static_cast<double>(ph) / static_cast<double>(m);
          const cd g = green_one_phase(terms, tables[l], cd{x, y},
                                       std::cos(kTwoPi * xp), std::sin(kTwoPi * xp), w);
          re[ph] = g.re;
          im[ph] = g.im;
        }
        const double mag = std::hypot(tree_mean(re), tree_mean(im));
        sup = std::max(sup, mag);
      }
    }
    profile.Gstar[gi] = sup;
  });

  const double step =
      (E_grid.back() - E_grid.front()) / static_cast<double>(E_grid.size() - 1);
  std::sort(sigma_grid.begin(), sigma_grid.end());
  for (const double sigma : sigma_grid) {
    std::size_t exceed = 0;
    for (const double g : profile.Gstar) {
      if (g > sigma) ++exceed;
    }
    profile.weak_type_stat.push_back(std::pow(sigma, 0.75) * step *
                                     static_cast<double>(exceed));
  }
  profile.sigma_grid = std::move(sigma_grid);
  profile.D = profile.weak_type_stat.empty()
                  ? 0.0
                  : *std::max_element(profile.weak_type_stat.begin(),
                                      profile.weak_type_stat.end());
  profile.E_grid = std::move(E_grid);
  return profile;
}

}  // namespace qp::green
