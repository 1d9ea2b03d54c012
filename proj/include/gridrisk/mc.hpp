#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gridrisk/flow_factors.hpp"

namespace gridrisk {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
  std::string kind;  // "failure_prob" | "risk"
};

// n x m matrix of sampled normalized flows, one sample per row:
// row_i = nu + v_mat * x_i. Identical for identical (factors, n, seed).
Eigen::MatrixXd sample_flows(const FlowFactorization& factors, std::int64_t n,
                             std::uint64_t seed);

// Per-sample max_l |flow_l|, the quantity every estimator below reduces.
// OpenMP kernel over fixed-size chunks; sample i depends only on (seed, i),
// so the output is bit-identical at any thread count.
Eigen::VectorXd max_abs_flows(const FlowFactorization& factors, std::int64_t n,
                              std::uint64_t seed);

// Plain one-sample-at-a-time loop kept as the reference implementation for
// the kernel above; must produce bit-identical output.
Eigen::VectorXd max_abs_flows_serial(const FlowFactorization& factors,
                                     std::int64_t n, std::uint64_t seed);

// Fraction of samples with max|flow| >= 1 (non-strict), binomial std error.
McEstimate estimate_failure_prob(const FlowFactorization& factors,
                                 std::int64_t n, std::uint64_t seed);

// Mean of max|flow| with sample-std/sqrt(n) std error.
McEstimate estimate_risk(const FlowFactorization& factors, std::int64_t n,
                         std::uint64_t seed);

struct ConcentrationReport {
  double r_hat = 0.0;                  // plug-in risk estimate
  std::vector<double> s_values;        // strictly increasing, nonnegative
  std::vector<McEstimate> empirical;   // tail prob of max|flow| >= r_hat + s
  std::vector<double> bound;           // exp(-s^2 / (2 max_sigma^2))
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

// Deviation-tail check of the sampled max|flow| around its estimated mean
// against the Gaussian concentration bound, one entry per s.
ConcentrationReport concentration_check(const FlowFactorization& factors,
                                        const std::vector<double>& s_values,
                                        std::int64_t n, std::uint64_t seed);

}  // namespace gridrisk
