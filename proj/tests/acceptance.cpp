// Acceptance suite: one test case per criterion, production-sized parameters,
// one [PASS]/[FAIL] line each on stdout.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qp/arithmetic.hpp"
#include "qp/green.hpp"
#include "qp/lyapunov.hpp"
#include "qp/rotation.hpp"
#include "qp/run.hpp"
#include "qp/spectrum.hpp"

using qp::arithmetic::Frequency;
using qp::cocycle::Complex;
using qp::cocycle::PotentialSpec;

namespace {

Frequency golden() { return Frequency::from_decimal(oracle::golden_decimal(), 40); }

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

void report(int id, const char* name, bool pass, const std::string& details) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name,
              details.c_str());
  std::fflush(stdout);
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

constexpr std::size_t kN = 10000;
constexpr std::size_t kM = 1024;
const std::vector<double> kQuantiles{0.1, 0.3, 0.5, 0.7, 0.9};

}  // namespace

TEST_CASE("criterion 1: AMO regime table") {
  const auto alpha = golden();
  Timer timer;
  bool pass = true;
  std::ostringstream detail;

  struct Row {
    double lambda, L_lo, L_hi;
    int omega;
    double residual_cap;
  };
  // lambda=2: L = ln 2 +- 0.02, omega 1; lambda=0.5: L <= 0.01, omega 0;
  // lambda=1: L <= 0.02, omega 1.
  const std::vector<Row> rows{{2.0, std::log(2.0) - 0.02, std::log(2.0) + 0.02, 1, 0.1},
                              {0.5, -1.0, 0.01, 0, 1.0},
                              {1.0, -1.0, 0.02, 1, 1.0}};
  for (const auto& row : rows) {
    const auto pot = PotentialSpec::almost_mathieu(row.lambda);
    const auto energies = qp::spectrum::quantile_energies(pot, alpha, 2000, kQuantiles);
    for (const double E : energies) {
      const auto profile = qp::lyapunov::acceleration(pot, alpha, E, {}, kN, kM);
      const bool L_ok = profile.L0 >= row.L_lo && profile.L0 <= row.L_hi;
      const bool omega_ok =
          profile.omega_int.has_value() && *profile.omega_int == row.omega &&
          profile.omega_residual <= row.residual_cap;
      if (!L_ok || !omega_ok) {
        pass = false;
        detail << " BAD(lambda=" << row.lambda << ",E=" << E << ",L=" << profile.L0
               << ",slope=" << profile.slope << ")";
      }
      CHECK(L_ok);
      CHECK(omega_ok);
    }
  }
  const double elapsed = timer.seconds();
  const bool in_budget = elapsed <= 120.0;
  CHECK(in_budget);
  pass = pass && in_budget;
  std::ostringstream ss;
  ss << "3 couplings x 5 quantile energies, n=1e4, m=1024, " << elapsed << " s"
     << detail.str();
  report(1, "AMO regime table L and omega", pass, ss.str());
}

TEST_CASE("criterion 2: perturbation persistence") {
  const auto alpha = golden();
  const PotentialSpec pot(2.0, 0.1, {{2, 1.0, 0.0}});  // 2 lambda cos + 0.1 cos 4 pi x
  const auto energies = qp::spectrum::quantile_energies(pot, alpha, 2000, kQuantiles);
  bool pass = true;
  double min_L = 1e300, max_res = 0.0;
  for (const double E : energies) {
    const auto profile = qp::lyapunov::acceleration(pot, alpha, E, {}, kN, kM);
    min_L = std::min(min_L, profile.L0);
    max_res = std::max(max_res, profile.omega_residual);
    const bool ok = profile.L0 >= 0.5 && profile.omega_int.has_value() &&
                    *profile.omega_int == 1 && profile.omega_residual <= 0.1;
    CHECK(ok);
    pass = pass && ok;
  }
  std::ostringstream ss;
  ss << "min L = " << min_L << " (>= 0.5), max residual = " << max_res;
  report(2, "lambda=2, eps=0.1 cos(4 pi x): L > 0, omega = 1", pass, ss.str());
}

TEST_CASE("criterion 3: IDS relation N = 1 - 2 rho") {
  const auto alpha = golden();
  bool pass = true;
  std::ostringstream ss;
  {
    const auto pot = PotentialSpec::free_laplacian();
    const auto grid = linspace(-2.5, 2.5, 50);
    const auto ids = qp::spectrum::ids_counting(pot, alpha, grid, 2000, 8);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto r = qp::rotation::rotation_number(pot, alpha, grid[i], 4096, 16);
      worst = std::max(worst, std::fabs(ids.N_values[i] -
                                        qp::rotation::ids_from_rotation(r.rho)));
    }
    const bool ok = worst <= 0.01;
    CHECK(ok);
    pass = pass && ok;
    ss << "free max residual = " << worst << " (<= 0.01)";
  }
  {
    const auto pot = PotentialSpec::almost_mathieu(2.0);
    const auto grid = linspace(-6.5, 6.5, 50);
    const auto ids = qp::spectrum::ids_counting(pot, alpha, grid, 2000, 16);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto r = qp::rotation::rotation_number(pot, alpha, grid[i], 4096, 64);
      worst = std::max(worst, std::fabs(ids.N_values[i] -
                                        qp::rotation::ids_from_rotation(r.rho)));
    }
    const bool ok = worst <= 0.02;
    CHECK(ok);
    pass = pass && ok;
    ss << "; AMO max residual = " << worst << " (<= 0.02)";
  }
  report(3, "counting vs rotation IDS", pass, ss.str());
}

TEST_CASE("criterion 4: Thouless formula") {
  const auto alpha = golden();
  bool pass = true;
  std::ostringstream ss;
  {
    const auto ids = qp::spectrum::ids_counting(PotentialSpec::free_laplacian(), alpha,
                                                linspace(-2.75, 2.75, 401), 2000, 8);
    const double t3 = qp::green::thouless(ids, {3.0, 0.0});
    const bool ok = std::fabs(t3 - 0.96242) <= 5e-3;
    CHECK(ok);
    pass = pass && ok;
    ss << "free |thouless(3) - 0.96242| = " << std::fabs(t3 - 0.96242);
  }
  {
    const auto pot = PotentialSpec::almost_mathieu(2.0);
    const auto ids =
        qp::spectrum::ids_counting(pot, alpha, linspace(-6.6, 6.6, 401), 2000, 16);
    double worst = 0.0;
    for (const double z : linspace(-3.0, 3.0, 20)) {
      const double t = qp::green::thouless(ids, {z, 0.0});
      const double L =
          qp::lyapunov::lyapunov_exponent(pot, alpha, {z, 0.0}, 0.0, kN, kM);
      worst = std::max(worst, std::fabs(t - L));
    }
    const bool ok = worst <= 0.02;
    CHECK(ok);
    pass = pass && ok;
    ss << "; AMO max |thouless - lyapunov| = " << worst << " (<= 0.02)";
  }
  report(4, "Thouless formula against both pipelines", pass, ss.str());
}

TEST_CASE("criterion 5: derivative identity dL/dE = -Re G") {
  const auto alpha = golden();
  const auto pot = PotentialSpec::almost_mathieu(2.0);
  double worst = 0.0;
  for (const double E : linspace(-4.0, 4.0, 20)) {
    worst = std::max(worst, qp::green::derivative_identity_residual(
                                pot, alpha, E, 0.1, 0.01, kN, 128, 256));
  }
  const bool pass = worst <= 0.01;
  CHECK(pass);
  std::ostringstream ss;
  ss << "max residual over 20 energies at eps=0.1: " << worst << " (<= 0.01)";
  report(5, "derivative identity", pass, ss.str());
}

TEST_CASE("criterion 6: reflectionless boundary values") {
  const auto alpha = golden();
  const auto pot = PotentialSpec::free_laplacian();
  bool pass = true;
  double worst_band = 0.0;
  for (const double E : {-1.0, 0.0, 0.5, 1.5}) {
    const auto b = qp::green::normal_boundary_re_g(pot, alpha, E, {}, 16);
    worst_band = std::max(worst_band, std::fabs(b.re_g));
    const bool ok = std::fabs(b.re_g) <= 0.01;
    CHECK(ok);
    pass = pass && ok;
  }
  const auto off = qp::green::normal_boundary_re_g(pot, alpha, 3.0, {}, 16);
  const double off_err = std::fabs(off.re_g - (-1.0 / std::sqrt(5.0)));
  const bool off_ok = off_err <= 0.01;
  CHECK(off_ok);
  pass = pass && off_ok;
  std::ostringstream ss;
  ss << "max |Re G| on the band = " << worst_band << ", off-spectrum error = " << off_err;
  report(6, "Re G(E+i0) = 0 on the band, -1/sqrt(5) at E=3", pass, ss.str());
}

TEST_CASE("criterion 7: Herglotz property at 200 points") {
  const auto alpha = golden();
  bool pass = true;
  double min_im = 1e300;
  for (const auto& pot :
       {PotentialSpec::free_laplacian(), PotentialSpec::almost_mathieu(2.0)}) {
    const double bound = qp::spectrum::containment_bound(pot);
    const auto res = linspace(-bound, bound, 20);
    const auto ims = linspace(std::log(0.01), std::log(1.0), 5);
    for (const double re : res) {
      for (const double lim : ims) {
        const auto g =
            qp::green::green_avg(pot, alpha, {re, std::exp(lim)}, 0, 64, 1, false);
        min_im = std::min(min_im, g.value.imag());
        if (!(g.value.imag() > 0.0)) pass = false;
      }
    }
  }
  CHECK(pass);
  std::ostringstream ss;
  ss << "min Im G over 200 points = " << min_im << " (> 0)";
  report(7, "Herglotz property of green_avg", pass, ss.str());
}

TEST_CASE("criterion 8: homogeneity profile, exact interval arithmetic") {
  bool pass = true;
  std::ostringstream ss;
  {
    qp::spectrum::SpectrumApprox S;
    S.intervals = {{-2.0, 2.0}};
    std::vector<double> sigmas;
    for (int k = 10; k >= 4; --k) sigmas.push_back(std::ldexp(1.0, -k));
    sigmas.push_back(0.1);
    const auto profile = qp::spectrum::homogeneity_profile(S, sigmas, 256);
    double min_ratio = 1e300;
    for (const double r : profile.min_ratio) min_ratio = std::min(min_ratio, r);
    const bool ok = min_ratio >= 1.0 - 1e-12;
    CHECK(ok);
    pass = pass && ok;
    ss << "S=[-2,2]: min ratio over sigma <= 0.1 is " << min_ratio;
  }
  {
    qp::spectrum::SpectrumApprox S;
    S.intervals = {{0.0, 0.5}, {0.52, 0.9}, {1.5, 2.0}};
    const std::vector<std::pair<double, double>> ivs{{0.0, 0.5}, {0.52, 0.9}, {1.5, 2.0}};
    bool exact = true;
    for (const double sigma : {0.1, 0.05, 0.02, 0.01}) {
      const auto profile =
          qp::spectrum::homogeneity_profile(S, std::vector<double>{sigma}, 512);
      const double expected = oracle::homogeneity_min_oracle(ivs, sigma);
      if (profile.min_ratio[0] != expected) exact = false;
    }
    CHECK(exact);
    pass = pass && exact;
    ss << "; 3-interval union matches the brute-force oracle exactly: "
       << (exact ? "yes" : "no");
  }
  report(8, "homogeneity definition", pass, ss.str());
}

TEST_CASE("criterion 9: weak-type diagnostic for G*") {
  const auto alpha = golden();
  const auto pot = PotentialSpec::almost_mathieu(2.0);
  qp::green::Cone cone;
  cone.y_min = 1e-2;
  cone.y_max = 1.0;
  cone.levels = 8;
  cone.aspect = 5;
  std::vector<double> sigmas;
  for (int k = -3; k <= 7; ++k) sigmas.push_back(std::ldexp(1.0, k));
  const auto profile = qp::green::maximal_function(pot, alpha, linspace(-6.6, 6.6, 401),
                                                   cone, sigmas, 16);
  bool pass = true;
  // all finite, superlevel measure nonincreasing, empty beyond max G*
  double prev_measure = 1e300;
  double max_gstar = 0.0;
  for (const double g : profile.Gstar) max_gstar = std::max(max_gstar, g);
  for (std::size_t i = 0; i < profile.sigma_grid.size(); ++i) {
    if (!std::isfinite(profile.weak_type_stat[i])) pass = false;
    const double measure =
        profile.weak_type_stat[i] / std::pow(profile.sigma_grid[i], 0.75);
    if (measure > prev_measure + 1e-12) pass = false;
    prev_measure = measure;
    if (profile.sigma_grid[i] > max_gstar && profile.weak_type_stat[i] != 0.0)
      pass = false;
  }
  if (!(profile.D > 0.0) || !std::isfinite(profile.D)) pass = false;
  CHECK(pass);
  std::ostringstream ss;
  ss << "D = " << profile.D << ", max G* = " << max_gstar
     << ", y_min = " << cone.y_min;
  report(9, "sigma^(3/4) |{G* > sigma}| bounded", pass, ss.str());
}

TEST_CASE("criterion 10: arithmetic layer") {
  const auto alpha = golden();
  bool pass = true;
  std::ostringstream ss;
  {
    const auto rep = qp::arithmetic::sdc_check(alpha, 0.2, 1.1, 100000);
    bool ok = rep.kind == qp::arithmetic::DiophantineReport::Kind::Sdc &&
              rep.worst_margin >= 0.2;
    // exact-integer brute force over the full range
    const auto exact = oracle::ExactFrequency::from_decimal(oracle::golden_decimal());
    double worst = 1e300;
    long long worst_k = 0;
    for (long long k = 1; k <= 100000; ++k) {
      const double margin = oracle::sdc_margin_weight(k, 1.1) * exact.dist_to_integers(k);
      if (margin < worst) {
        worst = margin;
        worst_k = k;
      }
    }
    ok = ok && worst_k == rep.worst_k &&
         std::fabs(worst - rep.worst_margin) <= 1e-9 * std::max(1.0, worst);
    CHECK(ok);
    pass = pass && ok;
    ss << "SDC margin " << rep.worst_margin << " at k=" << rep.worst_k
       << " (oracle agrees, kappa=0.2 certified to k_max=1e5)";
  }
  {
    const auto resonant =
        qp::arithmetic::theta_membership(alpha.value() / 2, alpha, 0.01, 2.0, 5);
    const auto capped = qp::arithmetic::theta_membership(qp::BigFloat(0.13), alpha, 0.6,
                                                         2.0, 0);
    const bool ok = !resonant.member && resonant.worst_k == -1 && !capped.member &&
                    capped.worst_k == 0;
    CHECK(ok);
    pass = pass && ok;
    ss << "; theta resonance and norm-cap cases return false";
  }
  report(10, "SDC certificate and Theta membership", pass, ss.str());
}

TEST_CASE("criterion 11: byte-identical outputs across thread counts") {
  namespace fs = std::filesystem;
  auto config = qp::run::json{
      {"task", "identities"},
      {"alpha", {{"decimal", oracle::golden_decimal()}}},
      {"potential", {{"lambda", 0.0}}},
      {"params",
       {{"grid_points", 11},
        {"rotation_n", 2048},
        {"rotation_m", 16},
        {"ids_n", 500},
        {"ids_m", 8},
        {"lyap_n", 2000},
        {"lyap_m", 64},
        {"thouless_points", 5},
        {"deriv_points", 5}}}};
  const auto cfg = qp::run::RunConfig::from_json(config);
  auto run_with = [&](int threads, const char* tag) {
    qp::run::RunOptions opt;
    opt.out_dir = fs::temp_directory_path() / (std::string("qpspec_acc11_") + tag);
    fs::remove_all(opt.out_dir);
    opt.threads = threads;
    qp::run::run(cfg, opt);
    std::ifstream in(opt.out_dir / "identities.csv", std::ios::binary);
    std::ostringstream ssf;
    ssf << in.rdbuf();
    return ssf.str();
  };
  const std::string one = run_with(1, "t1");
  const std::string four = run_with(4, "t4");
  const bool pass = !one.empty() && one == four;
  CHECK(pass);
  std::ostringstream ss;
  ss << "identities.csv bodies: " << one.size() << " bytes, threads 1 vs 4 "
     << (pass ? "identical" : "DIFFER");
  report(11, "determinism across worker counts", pass, ss.str());
}
