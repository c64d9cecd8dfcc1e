#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "qp/errors.hpp"
#include "qp/spectrum.hpp"

using namespace qp::spectrum;
using qp::arithmetic::Frequency;
using qp::cocycle::PotentialSpec;

namespace {

Frequency golden() { return Frequency::from_decimal(oracle::golden_decimal(), 40); }

}  // namespace

TEST_CASE("free chain n=3: eigenvalues -sqrt2, 0, sqrt2") {
  const auto e = truncated_eigenvalues(PotentialSpec::free_laplacian(), golden(), 0.0, 3);
  REQUIRE(e.size() == 3);
  CHECK(e[0] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-9));
  CHECK(std::fabs(e[1]) < 1e-9);
  CHECK(e[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("n=1 truncation: the single eigenvalue is V(x)") {
  const auto pot = PotentialSpec(1.0, 0.0, {});
  const double x = 0.37;
  const auto e = truncated_eigenvalues(pot, golden(), x, 1);
  REQUIRE(e.size() == 1);
  CHECK(e[0] == doctest::Approx(pot.value(x)).epsilon(1e-9));
}

TEST_CASE("free chain n=50: closed-form Dirichlet spectrum") {
  const auto e = truncated_eigenvalues(PotentialSpec::free_laplacian(), golden(), 0.2, 50);
  const auto expected = oracle::free_dirichlet_eigs(50);
  for (std::size_t k = 0; k < 50; ++k)
    CHECK(std::fabs(e[k] - expected[k]) < 1e-9);
}

TEST_CASE("eigenvalues sit inside the Gershgorin band") {
  const auto alpha = golden();
  const PotentialSpec pot(0.7, 0.3, {{2, 0.5, -0.2}});
  const auto diag = truncation_diagonal(pot, alpha, 0.13, 60);
  const double lo = *std::min_element(diag.begin(), diag.end()) - 2.0;
  const double hi = *std::max_element(diag.begin(), diag.end()) + 2.0;
  for (const double e : truncated_eigenvalues(pot, alpha, 0.13, 60)) {
    CHECK(e >= lo - 1e-8);
    CHECK(e <= hi + 1e-8);
  }
}

TEST_CASE("sturm count equals the refined eigenvalue count exactly") {
  const auto alpha = golden();
  const PotentialSpec pot(1.3, 0.2, {{3, 0.4, 0.1}});
  const auto diag = truncation_diagonal(pot, alpha, 0.05, 200);
  const auto eigs = eigenvalues_of_diag(diag);
  for (const double t : {-5.0, -1.3, -0.2, 0.0, 0.4, 1.9, 5.0}) {
    const auto expected = static_cast<int>(
        std::count_if(eigs.begin(), eigs.end(), [&](double e) { return e <= t; }));
    CHECK(sturm_count_below(diag, t) == expected);
  }
}

TEST_CASE("eigenvalue_by_index agrees with the full extraction") {
  const auto alpha = golden();
  const PotentialSpec pot = PotentialSpec::almost_mathieu(2.0);
  const auto diag = truncation_diagonal(pot, alpha, 0.0, 150);
  const auto eigs = eigenvalues_of_diag(diag);
  for (const std::size_t k : {std::size_t{0}, std::size_t{31}, std::size_t{74},
                              std::size_t{149}}) {
    CHECK(eigenvalue_by_index(diag, k) == doctest::Approx(eigs[k]).epsilon(1e-8));
  }
}

TEST_CASE("quantile energies of the free chain match -2cos(q pi)") {
  const auto energies = quantile_energies(PotentialSpec::free_laplacian(), golden(), 2000,
                                          std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9});
  const std::vector<double> qs{0.1, 0.3, 0.5, 0.7, 0.9};
  for (std::size_t i = 0; i < qs.size(); ++i)
    CHECK(energies[i] == doctest::Approx(-2.0 * std::cos(qs[i] * M_PI)).epsilon(0.01));
}

TEST_CASE("ids_counting: free Laplacian against the arccos closed form") {
  const auto alpha = golden();
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(-2.5 + 5.0 * i / 50.0);
  const auto table = ids_counting(PotentialSpec::free_laplacian(), alpha, grid, 2000, 8);
  REQUIRE(table.E_grid.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::fabs(table.N_values[i] - oracle::free_ids(grid[i])) < 5e-3);
    if (i > 0) CHECK(table.N_values[i] >= table.N_values[i - 1]);
  }
  // exact endpoints: mass 0 below, 1 above
  CHECK(table.N_values.front() == 0.0);
  CHECK(table.N_values.back() == 1.0);
  // spectral symmetry pins N(0) to 1/2 for an even chain length
  const auto mid = ids_counting(PotentialSpec::free_laplacian(), alpha,
                                std::vector<double>{-0.0001, 0.0, 2.0}, 2000, 8);
  CHECK(mid.N_values[1] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(mid.N_values[2] == doctest::Approx(1.0));
  const auto one = ids_counting(PotentialSpec::free_laplacian(), alpha,
                                std::vector<double>{0.0, 1.0}, 2000, 8);
  CHECK(one.N_values[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-2));
}

TEST_CASE("ids_counting: doubling n moves N by at most O(1/n)") {
  const auto alpha = golden();
  const auto pot = PotentialSpec::almost_mathieu(2.0);
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(-6.5 + 13.0 * i / 40.0);
  const auto coarse = ids_counting(pot, alpha, grid, 500, 8);
  const auto fine = ids_counting(pot, alpha, grid, 1000, 8);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, std::fabs(coarse.N_values[i] - fine.N_values[i]));
  CHECK(worst <= 4.0 / 500.0);
  MESSAGE("boundary-effect constant C ~ ", worst * 500.0);
}

TEST_CASE("spectrum_approx: free Laplacian recovers [-2, 2]") {
  const auto S =
      spectrum_approx(PotentialSpec::free_laplacian(), golden(), 2000, 8, 0.01);
  REQUIRE(S.intervals.size() == 1);
  CHECK(S.min() <= -1.99);
  CHECK(S.min() >= -2.02);
  CHECK(S.max() >= 1.99);
  CHECK(S.max() <= 2.02);
}

TEST_CASE("spectrum_approx: AMO containment and reflection symmetry") {
  const auto alpha = golden();
  const auto S = spectrum_approx(PotentialSpec::almost_mathieu(2.0), alpha, 600, 8, 0.02);
  CHECK(S.min() >= -6.0 - 0.03);
  CHECK(S.max() <= 6.0 + 0.03);
  // gauge symmetry x -> x+1/2 with (-1)^n conjugation mirrors the spectrum
  const auto& iv = S.intervals;
  for (std::size_t i = 0; i < iv.size(); ++i) {
    const auto& mirror = iv[iv.size() - 1 - i];
    CHECK(iv[i].lo == doctest::Approx(-mirror.hi).epsilon(1e-6));
    CHECK(iv[i].hi == doctest::Approx(-mirror.lo).epsilon(1e-6));
  }
}

TEST_CASE("spectrum_approx margins validated, intervals disjoint") {
  const auto alpha = golden();
  CHECK_THROWS_AS(spectrum_approx(PotentialSpec::free_laplacian(), alpha, 1000, 4, 1e-4),
                  qp::ValidationError);
  const auto S = spectrum_approx(PotentialSpec::almost_mathieu(2.0), alpha, 400, 4, 0.0085);
  for (std::size_t i = 1; i < S.intervals.size(); ++i)
    CHECK(S.intervals[i].lo > S.intervals[i - 1].hi);
}

TEST_CASE("IDS mass concentrates on the approximate spectrum") {
  const auto alpha = golden();
  for (const double lambda : {0.0, 2.0}) {
    const auto pot = PotentialSpec::almost_mathieu(lambda);
    const auto S = spectrum_approx(pot, alpha, 700, 8, 0.012);
    const double bound = containment_bound(pot);
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(-1.1 * bound + 2.2 * bound * i / 400.0);
    const auto ids = ids_counting(pot, alpha, grid, 700, 8);
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double dn = ids.N_values[i + 1] - ids.N_values[i];
      total += dn;
      if (S.contains(0.5 * (grid[i] + grid[i + 1]))) inside += dn;
    }
    CHECK(inside >= 0.99 * total);
  }
}

TEST_CASE("growth test flags the uniformly hyperbolic side only") {
  const auto alpha = golden();
  const auto pot = PotentialSpec::free_laplacian();
  CHECK(growth_test_off_spectrum(pot, alpha, 3.0, 500, 16));
  CHECK(growth_test_off_spectrum(pot, alpha, -2.5, 500, 16));
  CHECK_FALSE(growth_test_off_spectrum(pot, alpha, 0.0, 500, 16));
  CHECK_FALSE(growth_test_off_spectrum(pot, alpha, 1.5, 500, 16));
}

TEST_CASE("homogeneity: single interval has unit endpoint ratio") {
  SpectrumApprox S;
  S.intervals = {{-2.0, 2.0}};
  S.margin = 0.0;
  const std::vector<double> sigmas{0.1, 0.0625, 0.03125};
  const auto profile = homogeneity_profile(S, sigmas, 64);
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    CHECK(profile.min_ratio[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(profile.passing[i]);
  }
  CHECK(profile.largest_passing_sigma == doctest::Approx(0.1));
}

TEST_CASE("homogeneity: well-separated intervals behave like isolated ones") {
  SpectrumApprox S;
  S.intervals = {{0.0, 1.0}, {10.0, 11.0}};
  const auto profile = homogeneity_profile(S, std::vector<double>{0.5}, 64);
  CHECK(profile.min_ratio[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(profile.passing[0]);
}

TEST_CASE("homogeneity: three-interval union matches the dense oracle exactly") {
  SpectrumApprox S;
  S.intervals = {{0.0, 0.5}, {0.52, 0.9}, {1.5, 2.0}};
  const std::vector<std::pair<double, double>> ivs{{0.0, 0.5}, {0.52, 0.9}, {1.5, 2.0}};
  for (const double sigma : {0.1, 0.05, 0.025}) {
    const auto profile = homogeneity_profile(S, std::vector<double>{sigma}, 512);
    const double expected = oracle::homogeneity_min_oracle(ivs, sigma);
    CHECK(profile.min_ratio[0] == expected);
    CHECK(profile.min_ratio[0] > 0.0);
    CHECK(profile.min_ratio[0] <= 2.0);
  }
}

TEST_CASE("homogeneity: ratios bounded by 2 and sigma validation") {
  SpectrumApprox S;
  S.intervals = {{0.0, 1.0}};
  CHECK_THROWS_AS(homogeneity_profile(S, std::vector<double>{0.6}, 16),
                  qp::ValidationError);
  const auto profile = homogeneity_profile(S, std::vector<double>{0.01, 0.4}, 128);
  for (const double r : profile.min_ratio) {
    CHECK(r > 0.0);
    CHECK(r <= 2.0);
  }
}
