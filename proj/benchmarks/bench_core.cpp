#include <benchmark/benchmark.h>

#include "qp/arithmetic.hpp"
#include "qp/cocycle.hpp"
#include "qp/green.hpp"
#include "qp/lyapunov.hpp"
#include "qp/spectrum.hpp"

namespace {

const char* kGolden = "0.6180339887498948482045868343656381177203";

qp::arithmetic::Frequency golden() {
  return qp::arithmetic::Frequency::from_decimal(kGolden);
}

void BM_transfer_product_real(benchmark::State& state) {
  const auto alpha = golden();
  const auto pot = qp::cocycle::PotentialSpec::almost_mathieu(2.0);
  const qp::cocycle::OrbitTable table(alpha, 10000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        qp::cocycle::transfer_product(pot, {0.5, 0.0}, table, 0.37, 0.0, 10000));
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_transfer_product_real);

void BM_transfer_product_complex(benchmark::State& state) {
  const auto alpha = golden();
  const auto pot = qp::cocycle::PotentialSpec::almost_mathieu(2.0);
  const qp::cocycle::OrbitTable table(alpha, 10000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        qp::cocycle::transfer_product(pot, {0.5, 0.0}, table, 0.37, 0.0625, 10000));
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_transfer_product_complex);

void BM_lyapunov_smoke(benchmark::State& state) {
  const auto alpha = golden();
  const auto pot = qp::cocycle::PotentialSpec::almost_mathieu(2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        qp::lyapunov::lyapunov_exponent(pot, alpha, {0.5, 0.0}, 0.0, 1000, 256));
  }
}
BENCHMARK(BM_lyapunov_smoke);

void BM_sturm_count(benchmark::State& state) {
  const auto alpha = golden();
  const auto pot = qp::cocycle::PotentialSpec::almost_mathieu(2.0);
  const auto diag = qp::spectrum::truncation_diagonal(pot, alpha, 0.0, 2000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qp::spectrum::sturm_count_below(diag, 0.25));
  }
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_sturm_count);

void BM_green_avg(benchmark::State& state) {
  const auto alpha = golden();
  const auto pot = qp::cocycle::PotentialSpec::almost_mathieu(2.0);
  const qp::green::SiteTable sites(alpha, 400);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        qp::green::green_avg(pot, sites, {0.5, 0.05}, 32, 1, false));
  }
}
BENCHMARK(BM_green_avg);

}  // namespace

BENCHMARK_MAIN();
