// Throughput comparison of the chunked OpenMP sampling kernel against the
// serial reference implementation, plus a bit-identity check between them.
//
//   bench_mc [case-file] [n] [seed]
//
// Defaults: bundled 3-bus case layout, n = 2'000'000, seed = 1.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gridrisk/case_io.hpp"
#include "gridrisk/mc.hpp"

using namespace gridrisk;

namespace {

FlowFactorization builtin_case() {
  Network net;
  net.buses = {{"1"}, {"2"}, {"3"}};
  net.lines = {{0, 1, 1.0, 5.0}, {0, 2, 1.0, 5.0}, {1, 2, 1.0, 5.0}};
  net.slack = 2;
  InjectionModel model;
  model.mu = Eigen::Vector2d(3.0, -3.0);
  model.sigma = 0.5 * Eigen::Matrix2d::Identity();
  return factorize(net, model);
}

template <typename F>
double timed(F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  std::int64_t n = 2000000;
  std::uint64_t seed = 1;
  FlowFactorization factors;
  try {
    if (argc > 1) {
      const Scenario sc = load_case(argv[1]);
      const Network net =
          apply_capacity_rule(sc.data, sc.rule, sc.injections.mu);
      factors = factorize(net, sc.injections);
    } else {
      factors = builtin_case();
    }
    if (argc > 2) n = std::strtoll(argv[2], nullptr, 10);
    if (argc > 3) seed = std::strtoull(argv[3], nullptr, 10);
  } catch (const Error& e) {
    std::fprintf(stderr, "bench_mc: %s: %s\n", errc_name(e.code()), e.what());
    return 1;
  }

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("lines=%d buses=%d n=%lld seed=%llu threads=%d\n", factors.m,
              factors.n, static_cast<long long>(n),
              static_cast<unsigned long long>(seed), threads);

  Eigen::VectorXd parallel_out, serial_out;
  // warm-up pass so page faults and thread spin-up stay out of the timings
  parallel_out = max_abs_flows(factors, std::min<std::int64_t>(n, 10000), seed);

  const double t_par = timed([&] { parallel_out = max_abs_flows(factors, n, seed); });
  const double t_ser =
      timed([&] { serial_out = max_abs_flows_serial(factors, n, seed); });

  const bool identical = (parallel_out - serial_out).cwiseAbs().maxCoeff() == 0.0;
  std::printf("parallel kernel : %8.3f s  (%.2f Msamples/s)\n", t_par,
              n / t_par / 1e6);
  std::printf("serial reference: %8.3f s  (%.2f Msamples/s)\n", t_ser,
              n / t_ser / 1e6);
  std::printf("speedup x%.2f, outputs bit-identical: %s\n", t_ser / t_par,
              identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
