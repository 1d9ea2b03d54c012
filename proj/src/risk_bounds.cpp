#include "gridrisk/risk_bounds.hpp"

#include <cmath>
#include <vector>

namespace gridrisk {

namespace {

void check_pair(const Eigen::VectorXd& nu, const Eigen::VectorXd& sigma) {
  if (nu.size() == 0) fail(Errc::bad_argument, "need at least one line");
  if (nu.size() != sigma.size())
    fail(Errc::dimension_mismatch, "nu and sigma lengths differ");
  if ((sigma.array() < 0.0).any())
    fail(Errc::bad_argument, "sigma entries must be nonnegative");
}

}  // namespace

double r_up(const Eigen::VectorXd& nu, const Eigen::VectorXd& sigma) {
  check_pair(nu, sigma);
  const double two_log_2m = 2.0 * std::log(2.0 * static_cast<double>(nu.size()));
  return nu.cwiseAbs().maxCoeff() + sigma.maxCoeff() * std::sqrt(two_log_2m);
}

double r_star_objective(double s, const Eigen::VectorXd& nu,
                        const Eigen::VectorXd& sigma) {
  check_pair(nu, sigma);
  if (!(s > 0.0)) fail(Errc::bad_argument, "s must be positive");
  const double log_2m = std::log(2.0 * static_cast<double>(nu.size()));
  double piece = 0.0;
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    piece = std::max(piece, sigma(i) * sigma(i) * s / 2.0 + std::abs(nu(i)));
  }
  return log_2m / s + piece;
}

RStarResult r_star(const Eigen::VectorXd& nu, const Eigen::VectorXd& sigma) {
  check_pair(nu, sigma);
  const Eigen::Index m = nu.size();
  const double log_2m = std::log(2.0 * static_cast<double>(m));
  const double sqrt_2l = std::sqrt(2.0 * log_2m);
  const double max_nu = nu.cwiseAbs().maxCoeff();
  const double max_sigma = sigma.maxCoeff();

  if (max_sigma == 0.0) {
    // g decreases monotonically toward max|nu|; no finite minimizer
    return {max_nu, std::numeric_limits<double>::infinity()};
  }
  const double cap = max_nu + max_sigma * sqrt_2l;  // = r_up
  if (max_nu == 0.0) {
    // single active piece; the stationary point is exact and equals r_up
    return {cap, sqrt_2l / max_sigma};
  }

  // The objective is convex: 1/s curvature plus a piecewise-affine max. Its
  // minimum is at a stationary point of an affine piece or at a crossing of
  // two pieces, so evaluating g on those candidates is exact.
  std::vector<double> cands;
  cands.reserve(static_cast<size_t>(m + m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    if (sigma(i) > 0.0) cands.push_back(sqrt_2l / sigma(i));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double d = sigma(j) * sigma(j) - sigma(i) * sigma(i);
      if (d == 0.0) continue;  // parallel pieces never cross
      const double s = 2.0 * (std::abs(nu(i)) - std::abs(nu(j))) / d;
      if (s > 0.0 && std::isfinite(s)) cands.push_back(s);
    }
  }

  RStarResult best{std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()};
  for (double s : cands) {
    double v = log_2m / s;
    double piece = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      piece = std::max(piece, sigma(i) * sigma(i) * s / 2.0 + std::abs(nu(i)));
    }
    v += piece;
    if (v < best.value || (v == best.value && s < best.s_star)) {
      best.value = v;
      best.s_star = s;
    }
  }
  // mathematically guaranteed; enforce under rounding too
  if (best.value > cap) best.value = cap;
  return best;
}

double failure_bound(double r, double max_sigma) {
  if (r >= 1.0) return 1.0;
  if (max_sigma <= 0.0) return 0.0;
  const double gap = 1.0 - r;
  return std::exp(-gap * gap / (2.0 * max_sigma * max_sigma));
}

double risk_threshold(double q, double max_sigma) {
  if (!(q > 0.0 && q < 1.0))
    fail(Errc::bad_argument, "q must lie strictly between 0 and 1");
  if (max_sigma < 0.0) fail(Errc::bad_argument, "max_sigma must be >= 0");
  return 1.0 - max_sigma * std::sqrt(2.0 * std::log(1.0 / q));
}

RiskAssessment assess(const FlowFactorization& factors, double q) {
  RiskAssessment a;
  a.q = q;
  a.max_sigma = factors.max_sigma();
  a.threshold = risk_threshold(q, a.max_sigma);
  a.r_up = r_up(factors.nu, factors.sigma);
  const RStarResult rs = r_star(factors.nu, factors.sigma);
  a.r_star = rs.value;
  a.s_star = rs.s_star;
  a.failure_bound = failure_bound(rs.value, a.max_sigma);
  return a;
}

}  // namespace gridrisk
