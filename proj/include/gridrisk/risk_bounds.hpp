#pragma once

#include <Eigen/Dense>
#include <limits>

#include "gridrisk/flow_factors.hpp"

namespace gridrisk {

// Closed-form upper bound on the expected maximum absolute normalized flow:
// max|nu_i| + max sigma_i * sqrt(2 log 2m).
double r_up(const Eigen::VectorXd& nu, const Eigen::VectorXd& sigma);

struct RStarResult {
  double value = 0.0;
  // Minimizing s of g(s) = log(2m)/s + max_i(sigma_i^2 s / 2 + |nu_i|);
  // +infinity when every sigma is zero (g decreases toward max|nu|).
  double s_star = std::numeric_limits<double>::infinity();

  bool s_unbounded() const { return !std::isfinite(s_star); }
};

// Chernoff-style bound evaluated exactly: g is convex and piecewise smooth,
// so its minimum lies either at a stationary point sqrt(2 log 2m)/sigma_i of
// one affine piece or at a crossing of two pieces; both candidate families
// are enumerated and the best value is kept (ties break to the smallest s).
// Never exceeds r_up.
RStarResult r_star(const Eigen::VectorXd& nu, const Eigen::VectorXd& sigma);

// Value of the objective g at a given s > 0, exposed for diagnostics/tests.
double r_star_objective(double s, const Eigen::VectorXd& nu,
                        const Eigen::VectorXd& sigma);

// Overload-probability bound exp(-(1-r)^2 / (2 max_sigma^2)) for r < 1,
// saturating at 1 otherwise.
double failure_bound(double r, double max_sigma);

// Largest risk level r such that failure_bound(r) <= q:
// 1 - max_sigma * sqrt(2 log(1/q)). Requires q in (0, 1).
double risk_threshold(double q, double max_sigma);

struct RiskAssessment {
  double q = 0.0;
  double r_up = 0.0;
  double r_star = 0.0;
  double s_star = 0.0;
  double max_sigma = 0.0;
  double threshold = 0.0;
  double failure_bound = 0.0;
  // Which risk value the bound was evaluated at ("r_star").
  const char* bound_evaluated_at = "r_star";
};

RiskAssessment assess(const FlowFactorization& factors, double q);

}  // namespace gridrisk
