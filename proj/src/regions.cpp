#include "gridrisk/regions.hpp"

#include <cmath>
#include <cstdio>

#include "gridrisk/errors.hpp"
#include "gridrisk/rng.hpp"

namespace gridrisk {

namespace {

// Shared by rup_halfspaces and membership so the two agree bit-for-bit.
double rup_rhs(const FlowFactorization& factors, double q) {
  if (!(q > 0.0 && q < 1.0))
    fail(Errc::bad_argument, "failure probability target must be in (0, 1)");
  const double ms = factors.max_sigma();
  return 1.0 - ms * (std::sqrt(2.0 * std::log(1.0 / q)) +
                     std::sqrt(2.0 * std::log(2.0 * factors.m)));
}

void check_mu(const Eigen::VectorXd& mu, const FlowFactorization& factors) {
  if (mu.size() != factors.n - 1)
    fail(Errc::dimension_mismatch,
         "mean vector must have one entry per non-slack bus");
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RegionKind region_kind_from_string(const std::string& s) {
  if (s == "up") return RegionKind::up;
  if (s == "star") return RegionKind::star;
  if (s == "ci") return RegionKind::ci;
  fail(Errc::bad_argument, "unknown region kind '" + s + "'");
}

const char* region_kind_name(RegionKind k) {
  switch (k) {
    case RegionKind::up: return "up";
    case RegionKind::star: return "star";
    case RegionKind::ci: return "ci";
  }
  return "?";
}

HalfSpaceSystem rup_halfspaces(const FlowFactorization& factors, double q) {
  HalfSpaceSystem sys;
  sys.t_up = rup_rhs(factors, q);
  sys.empty = !(sys.t_up > 0.0);
  sys.a.resize(2 * factors.m, factors.n - 1);
  sys.b.resize(2 * factors.m);
  for (Eigen::Index l = 0; l < factors.m; ++l) {
    sys.a.row(2 * l) = factors.w_mat.row(l);
    sys.a.row(2 * l + 1) = -factors.w_mat.row(l);
    sys.b(2 * l) = sys.t_up;
    sys.b(2 * l + 1) = sys.t_up;
  }
  return sys;
}

RiskEstimator make_risk_estimator(const FlowFactorization& factors,
                                  std::int64_t n, std::uint64_t seed) {
  RiskEstimator est;
  est.estimate = [factors, n, seed](const Eigen::VectorXd& mu,
                                    std::uint64_t substream) {
    check_mu(mu, factors);
    FlowFactorization shifted = factors;
    shifted.nu = factors.w_mat * mu;
    return estimate_risk(shifted, n, derive_key(seed, substream));
  };
  return est;
}

bool membership(const Eigen::VectorXd& mu, const FlowFactorization& factors,
                double q, RegionKind kind, const RiskEstimator* estimator,
                double ci_std_errs, std::uint64_t substream) {
  check_mu(mu, factors);
  switch (kind) {
    case RegionKind::up: {
      const double t_up = rup_rhs(factors, q);
      if (!(t_up > 0.0)) return false;
      return (factors.w_mat * mu).cwiseAbs().maxCoeff() <= t_up;
    }
    case RegionKind::star: {
      const double tau = risk_threshold(q, factors.max_sigma());
      const Eigen::VectorXd nu = factors.w_mat * mu;
      return r_star(nu, factors.sigma).value <= tau;
    }
    case RegionKind::ci: {
      if (!estimator || !estimator->estimate)
        fail(Errc::estimator_required,
             "sampled-risk membership needs a risk estimator");
      const double tau = risk_threshold(q, factors.max_sigma());
      const McEstimate e = estimator->estimate(mu, substream);
      return e.mean + ci_std_errs * e.std_error <= tau;
    }
  }
  fail(Errc::bad_argument, "unknown region kind");
}

RegionSlice sweep_slice(const FlowFactorization& factors,
                        const Eigen::VectorXd& base_mu, int axis_i, int axis_j,
                        double q, RegionKind kind, const SweepOptions& opts,
                        const RiskEstimator* estimator) {
  check_mu(base_mu, factors);
  if (opts.rays < 8) fail(Errc::bad_argument, "need at least 8 rays");
  if (!(opts.tol > 0.0)) fail(Errc::bad_argument, "tolerance must be positive");
  if (!(opts.max_radius > 0.0))
    fail(Errc::bad_argument, "max radius must be positive");
  const int d = factors.n - 1;
  if (axis_i < 0 || axis_i >= d || axis_j < 0 || axis_j >= d)
    fail(Errc::bad_argument, "slice axis out of range");
  if (axis_i == axis_j) fail(Errc::bad_argument, "slice axes must differ");

  if (!membership(base_mu, factors, q, kind, estimator, opts.ci_std_errs, 0))
    fail(Errc::base_point_outside,
         "base point is not inside the region being swept");

  RegionSlice slice;
  slice.kind = kind;
  slice.q = q;
  slice.axis_i = axis_i;
  slice.axis_j = axis_j;
  slice.base_mu = base_mu;
  slice.rays = opts.rays;
  slice.tol = opts.tol;
  slice.seed = opts.seed;
  slice.vertices.resize(static_cast<size_t>(opts.rays));

  const double two_pi = 2.0 * std::acos(-1.0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < opts.rays; ++r) {
    const double angle = two_pi * r / opts.rays;
    const double cx = std::cos(angle);
    const double cy = std::sin(angle);
    std::uint64_t evals = 0;
    auto inside = [&](double t) {
      Eigen::VectorXd mu = base_mu;
      mu(axis_i) += t * cx;
      mu(axis_j) += t * cy;
      const std::uint64_t sub =
          ((static_cast<std::uint64_t>(r) + 1) << 32) | evals++;
      return membership(mu, factors, q, kind, estimator, opts.ci_std_errs, sub);
    };

    double lo = 0.0;
    double hi = std::min(1.0, opts.max_radius);
    bool bounded = true;
    while (inside(hi)) {
      lo = hi;
      if (hi >= opts.max_radius) {
        bounded = false;
        break;
      }
      hi = std::min(hi * 2.0, opts.max_radius);
    }
    if (bounded) {
      while (hi - lo > opts.tol) {
        const double mid = 0.5 * (lo + hi);
        (inside(mid) ? lo : hi) = mid;
      }
    }

    SliceVertex v;
    v.angle = angle;
    v.radius = lo;  // certified inside; boundary within tol beyond it
    v.x = base_mu(axis_i) + lo * cx;
    v.y = base_mu(axis_j) + lo * cy;
    v.bounded = bounded;
    slice.vertices[static_cast<size_t>(r)] = v;
  }

  // Turn test: every consecutive edge pair of the closed polygon must turn
  // the same way, up to slack proportional to the bisection tolerance. Only
  // meaningful when every ray actually exited the region.
  bool all_bounded = true;
  for (const auto& v : slice.vertices) all_bounded = all_bounded && v.bounded;
  if (all_bounded) {
    double max_r = 0.0;
    for (const auto& v : slice.vertices) max_r = std::max(max_r, v.radius);
    const double eps = 64.0 * opts.tol * (1.0 + max_r);
    bool ok = true;
    const int nv = opts.rays;
    for (int i = 0; i < nv; ++i) {
      const auto& a = slice.vertices[static_cast<size_t>(i)];
      const auto& b = slice.vertices[static_cast<size_t>((i + 1) % nv)];
      const auto& c = slice.vertices[static_cast<size_t>((i + 2) % nv)];
      const double cross =
          (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
      if (cross < -eps) {
        ok = false;
        break;
      }
    }
    slice.convex = ok;
  }
  return slice;
}

std::string slice_to_csv(const RegionSlice& slice) {
  std::string out = "angle,mu_i,mu_j\n";
  for (const auto& v : slice.vertices) {
    out += fmt17(v.angle);
    out += ',';
    out += fmt17(v.x);
    out += ',';
    out += fmt17(v.y);
    out += '\n';
  }
  return out;
}

nlohmann::json slice_to_json(const RegionSlice& slice) {
  nlohmann::json j;
  j["kind"] = region_kind_name(slice.kind);
  j["q"] = slice.q;
  j["axis_i"] = slice.axis_i;
  j["axis_j"] = slice.axis_j;
  j["base_mu"] = std::vector<double>(slice.base_mu.begin(),
                                     slice.base_mu.end());
  j["rays"] = slice.rays;
  j["tol"] = slice.tol;
  j["seed"] = slice.seed;
  j["convex"] = slice.convex;
  nlohmann::json verts = nlohmann::json::array();
  for (const auto& v : slice.vertices) {
    verts.push_back({{"angle", v.angle},
                     {"x", v.x},
                     {"y", v.y},
                     {"radius", v.radius},
                     {"bounded", v.bounded}});
  }
  j["vertices"] = std::move(verts);
  return j;
}

}  // namespace gridrisk
