#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridrisk/mc.hpp"
#include "gridrisk/risk_bounds.hpp"

namespace gridrisk {

enum class RegionKind { up, star, ci };

RegionKind region_kind_from_string(const std::string& s);
const char* region_kind_name(RegionKind k);

// Conjunction of a_row . mu <= b_row over all rows; rows come in +/- pairs
// (2i is +w_i, 2i+1 is -w_i). `empty` is set when the shared right-hand side
// is non-positive, i.e. no mean injection is acceptable at this q.
struct HalfSpaceSystem {
  Eigen::MatrixXd a;  // 2m x (n-1)
  Eigen::VectorXd b;  // 2m
  bool empty = false;
  double t_up = 0.0;
};

HalfSpaceSystem rup_halfspaces(const FlowFactorization& factors, double q);

// Estimate of the risk at a shifted mean. `substream` must make concurrent
// calls reproducible regardless of scheduling; implementations derive their
// sampling stream from (their own seed, substream).
struct RiskEstimator {
  std::function<McEstimate(const Eigen::VectorXd& mu, std::uint64_t substream)>
      estimate;
};

// estimate_risk bound to (factors-with-replaced-mean, n, seed).
RiskEstimator make_risk_estimator(const FlowFactorization& factors,
                                  std::int64_t n, std::uint64_t seed);

// Membership of mean vector mu in the region of the given kind at level q.
// kind == ci needs an estimator and accepts mu when the estimated risk plus
// ci_std_errs standard errors clears the threshold; the substream
// disambiguates concurrent calls.
bool membership(const Eigen::VectorXd& mu, const FlowFactorization& factors,
                double q, RegionKind kind,
                const RiskEstimator* estimator = nullptr,
                double ci_std_errs = 3.0, std::uint64_t substream = 0);

struct SweepOptions {
  int rays = 60;
  double tol = 1e-6;
  double max_radius = 1e6;
  double ci_std_errs = 3.0;
  std::uint64_t seed = 1;
};

struct SliceVertex {
  double angle = 0.0;
  double x = 0.0;  // axis_i coordinate of the boundary point
  double y = 0.0;  // axis_j coordinate
  double radius = 0.0;
  bool bounded = true;  // false: no exit within max_radius, vertex marked
};

struct RegionSlice {
  RegionKind kind = RegionKind::up;
  double q = 0.0;
  int axis_i = 0;
  int axis_j = 0;
  Eigen::VectorXd base_mu;
  int rays = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::vector<SliceVertex> vertices;  // in increasing angular order
  bool convex = false;               // turn test within sweep tolerance
};

// Two-dimensional radial slice of the region through base_mu, varying the
// two given mu coordinates. Rays are swept independently (OpenMP) from the
// base point, which must be a member; each ray brackets the boundary by
// doubling then bisects to `tol`.
RegionSlice sweep_slice(const FlowFactorization& factors,
                        const Eigen::VectorXd& base_mu, int axis_i, int axis_j,
                        double q, RegionKind kind, const SweepOptions& opts,
                        const RiskEstimator* estimator = nullptr);

// "angle,mu_i,mu_j" rows, numbers at 17 significant digits.
std::string slice_to_csv(const RegionSlice& slice);

nlohmann::json slice_to_json(const RegionSlice& slice);

}  // namespace gridrisk
