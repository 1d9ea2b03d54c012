#include "gridrisk/mc.hpp"

#include <cmath>
#include <vector>

#include "gridrisk/rng.hpp"

namespace gridrisk {

namespace {

// Fixed chunk plan: sample i lives in chunk i / kChunk no matter how many
// threads run, and every estimate reduces the per-sample vector in index
// order, so results are a function of (factors, n, seed) only.
constexpr std::int64_t kChunk = 8192;
constexpr std::uint64_t kFlowStreamTag = 0x666c6f77ull;

struct FlowSampler {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> v;
  Eigen::VectorXd nu;
  CounterRng rng;
  int d = 0;

  FlowSampler(const FlowFactorization& f, std::uint64_t seed)
      : v(f.v_mat), nu(f.nu), rng{derive_key(seed, kFlowStreamTag)},
        d(static_cast<int>(f.v_mat.cols())) {}

  // normals of sample i occupy global indices [i*d, (i+1)*d)
  void draw(std::int64_t i, double* x) const {
    fill_normals(rng, static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(d),
                 d, x);
  }

  double max_abs(std::int64_t i, double* x) const {
    draw(i, x);
    double mx = 0.0;
    for (Eigen::Index l = 0; l < v.rows(); ++l) {
      double y = nu(l);
      const double* row = v.data() + l * d;
      for (int k = 0; k < d; ++k) y += row[k] * x[k];
      mx = std::max(mx, std::abs(y));
    }
    return mx;
  }
};

void check_n(std::int64_t n) {
  if (n < 1) fail(Errc::bad_argument, "sample count must be at least 1");
}

}  // namespace

Eigen::MatrixXd sample_flows(const FlowFactorization& factors, std::int64_t n,
                             std::uint64_t seed) {
  check_n(n);
  const FlowSampler sampler(factors, seed);
  Eigen::MatrixXd out(n, factors.m);
  const std::int64_t chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < chunks; ++c) {
    std::vector<double> x(static_cast<size_t>(sampler.d));
    const std::int64_t hi = std::min(n, (c + 1) * kChunk);
    for (std::int64_t i = c * kChunk; i < hi; ++i) {
      sampler.draw(i, x.data());
      for (Eigen::Index l = 0; l < factors.m; ++l) {
        double y = sampler.nu(l);
        const double* row = sampler.v.data() + l * sampler.d;
        for (int k = 0; k < sampler.d; ++k) y += row[k] * x[k];
        out(i, l) = y;
      }
    }
  }
  return out;
}

Eigen::VectorXd max_abs_flows(const FlowFactorization& factors, std::int64_t n,
                              std::uint64_t seed) {
  check_n(n);
  const FlowSampler sampler(factors, seed);
  Eigen::VectorXd out(n);
  const std::int64_t chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < chunks; ++c) {
    std::vector<double> x(static_cast<size_t>(sampler.d));
    const std::int64_t hi = std::min(n, (c + 1) * kChunk);
    for (std::int64_t i = c * kChunk; i < hi; ++i)
      out(i) = sampler.max_abs(i, x.data());
  }
  return out;
}

Eigen::VectorXd max_abs_flows_serial(const FlowFactorization& factors,
                                     std::int64_t n, std::uint64_t seed) {
  check_n(n);
  const FlowSampler sampler(factors, seed);
  Eigen::VectorXd out(n);
  std::vector<double> x(static_cast<size_t>(sampler.d));
  for (std::int64_t i = 0; i < n; ++i) out(i) = sampler.max_abs(i, x.data());
  return out;
}

McEstimate estimate_failure_prob(const FlowFactorization& factors,
                                 std::int64_t n, std::uint64_t seed) {
  const Eigen::VectorXd mx = max_abs_flows(factors, n, seed);
  std::int64_t overloads = 0;
  for (std::int64_t i = 0; i < n; ++i)
    if (mx(i) >= 1.0) ++overloads;  // non-strict: hitting capacity counts
  const double p = static_cast<double>(overloads) / static_cast<double>(n);
  McEstimate e;
  e.mean = p;
  e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  e.n_samples = n;
  e.seed = seed;
  e.kind = "failure_prob";
  return e;
}

McEstimate estimate_risk(const FlowFactorization& factors, std::int64_t n,
                         std::uint64_t seed) {
  const Eigen::VectorXd mx = max_abs_flows(factors, n, seed);
  const double mean = mx.sum() / static_cast<double>(n);
  double ss = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = mx(i) - mean;
    ss += d * d;
  }
  McEstimate e;
  e.mean = mean;
  e.std_error =
      n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))
            : 0.0;
  e.n_samples = n;
  e.seed = seed;
  e.kind = "risk";
  return e;
}

ConcentrationReport concentration_check(const FlowFactorization& factors,
                                        const std::vector<double>& s_values,
                                        std::int64_t n, std::uint64_t seed) {
  if (s_values.empty()) fail(Errc::bad_argument, "need at least one s value");
  for (size_t i = 0; i < s_values.size(); ++i) {
    if (s_values[i] < 0.0)
      fail(Errc::bad_argument, "s values must be nonnegative");
    if (i > 0 && s_values[i] <= s_values[i - 1])
      fail(Errc::bad_argument, "s values must be strictly increasing");
  }
  const Eigen::VectorXd mx = max_abs_flows(factors, n, seed);
  const double r_hat = mx.sum() / static_cast<double>(n);
  const double max_sigma = factors.max_sigma();

  ConcentrationReport rep;
  rep.r_hat = r_hat;
  rep.s_values = s_values;
  rep.n_samples = n;
  rep.seed = seed;
  for (double s : s_values) {
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < n; ++i)
      if (mx(i) - r_hat >= s) ++hits;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    McEstimate e;
    e.mean = p;
    e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    e.n_samples = n;
    e.seed = seed;
    e.kind = "tail_prob";
    rep.empirical.push_back(e);
    double bound = 1.0;
    if (s > 0.0) {
      bound = max_sigma > 0.0
                  ? std::exp(-s * s / (2.0 * max_sigma * max_sigma))
                  : 0.0;
    }
    rep.bound.push_back(bound);
  }
  return rep;
}

}  // namespace gridrisk
