// Command-line front end: analyze | region | mc | inspect.
//
// Exit codes: 0 success (analyze: mean is in the safe polyhedron), 2 analyze
// only when the mean passes the tighter bound but not the polyhedron, 3
// analyze when it passes neither, 1 any error. Errors print one JSON object
// to stderr. With fixed options and seed every output is byte-identical
// across runs and thread counts.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gridrisk/case_io.hpp"
#include "gridrisk/mc.hpp"
#include "gridrisk/regions.hpp"
#include "gridrisk/risk_bounds.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kDefaultSeed = 1;  // documented constant; no env var

using gridrisk::Errc;
using gridrisk::Error;
using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json make_manifest(const std::string& command, const std::string& case_path,
                   const json& options, std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["case"] = case_path;
  m["options"] = options;
  m["seed"] = seed;
  m["version"] = kVersion;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(
                    command + '\0' + case_path + '\0' + options.dump() + '\0' +
                    std::to_string(seed))));
  m["config_hash"] = buf;
  return m;
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) gridrisk::fail(Errc::io_error, "cannot write '" + out_path + "'");
  out << text;
  if (!out) gridrisk::fail(Errc::io_error, "error writing '" + out_path + "'");
}

void write_json(const std::string& out_path, const json& doc) {
  write_text(out_path, doc.dump(2) + "\n");
}

json estimate_to_json(const gridrisk::McEstimate& e) {
  return {{"mean", e.mean},
          {"std_error", e.std_error},
          {"n_samples", e.n_samples},
          {"seed", e.seed},
          {"kind", e.kind}};
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.begin(), v.end()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Options shared by every subcommand; q/rule/noise default to the case file.
struct CommonOpts {
  std::string case_path;
  std::string out;
  std::optional<double> q;
  std::optional<double> iid_variance;
  std::optional<std::string> capacity_rule;
  double capacity_factor = 1.5;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("case", o.case_path, "case file (.json or .m)")->required();
  cmd->add_option("--out", o.out, "output path (default: stdout)");
  cmd->add_option("--q", o.q, "failure probability target, overrides the case");
  cmd->add_option("--iid-variance", o.iid_variance,
                  "replace the covariance with this iid variance");
  cmd->add_option("--capacity-rule", o.capacity_rule,
                  "explicit | rate_a | factor_of_mean, overrides the case");
  cmd->add_option("--capacity-factor", o.capacity_factor,
                  "factor for factor_of_mean (default 1.5)");
}

struct Resolved {
  gridrisk::Scenario scenario;
  gridrisk::FlowFactorization factors;
  double q = 0.0;
  json options;  // resolved values for the manifest
};

Resolved resolve(const CommonOpts& o,
                 const std::vector<double>& mu_override = {}) {
  Resolved r;
  r.scenario = gridrisk::load_case(o.case_path);
  if (o.iid_variance) {
    const int d = r.scenario.data.network.bus_count() - 1;
    r.scenario.injections.sigma =
        *o.iid_variance * Eigen::MatrixXd::Identity(d, d);
    r.scenario.iid_variance = *o.iid_variance;
  }
  if (o.capacity_rule)
    r.scenario.rule =
        gridrisk::capacity_rule_from_string(*o.capacity_rule,
                                            o.capacity_factor);
  if (!mu_override.empty()) {
    if (static_cast<int>(mu_override.size()) !=
        r.scenario.data.network.bus_count() - 1)
      gridrisk::fail(Errc::dimension_mismatch,
                     "--mu needs one entry per non-slack bus");
    r.scenario.injections.mu = Eigen::Map<const Eigen::VectorXd>(
        mu_override.data(), static_cast<Eigen::Index>(mu_override.size()));
  }
  r.q = o.q.value_or(r.scenario.q);
  const gridrisk::Network net = gridrisk::apply_capacity_rule(
      r.scenario.data, r.scenario.rule, r.scenario.injections.mu);
  r.factors = gridrisk::factorize(net, r.scenario.injections);

  r.options["q"] = r.q;
  r.options["capacity_rule"] = gridrisk::capacity_rule_name(r.scenario.rule);
  if (r.scenario.rule.kind ==
      gridrisk::CapacityRule::Kind::factor_of_mean)
    r.options["capacity_factor"] = r.scenario.rule.factor;
  if (r.scenario.iid_variance)
    r.options["iid_variance"] = *r.scenario.iid_variance;
  if (!mu_override.empty()) r.options["mu"] = mu_override;
  return r;
}

// bus id -> position in the mean vector (bus order, slack removed)
int mu_index_of_bus(const gridrisk::Network& net, const std::string& id) {
  const int slack = net.slack_index();
  for (int b = 0; b < net.bus_count(); ++b) {
    if (net.buses[static_cast<size_t>(b)].id != id) continue;
    if (b == slack)
      gridrisk::fail(Errc::bad_argument,
                     "bus " + id + " is the slack bus; its mean is implied");
    return b > slack ? b - 1 : b;
  }
  gridrisk::fail(Errc::bad_argument, "unknown bus id '" + id + "'");
}

json bounds_to_json(const gridrisk::RiskAssessment& a) {
  json j;
  j["q"] = a.q;
  j["r_up"] = a.r_up;
  j["r_star"] = a.r_star;
  if (std::isfinite(a.s_star))
    j["s_star"] = a.s_star;
  else
    j["s_star"] = nullptr;  // objective decreases toward its infimum
  j["max_sigma"] = a.max_sigma;
  j["threshold"] = a.threshold;
  j["failure_bound"] = a.failure_bound;
  j["bound_evaluated_at"] = a.bound_evaluated_at;
  return j;
}

int cmd_analyze(const CommonOpts& o, const std::vector<double>& mu_override,
                std::uint64_t seed) {
  Resolved r = resolve(o, mu_override);
  const auto a = gridrisk::assess(r.factors, r.q);
  const bool in_up = gridrisk::membership(r.scenario.injections.mu, r.factors,
                                          r.q, gridrisk::RegionKind::up);
  const bool in_star = gridrisk::membership(r.scenario.injections.mu,
                                            r.factors, r.q,
                                            gridrisk::RegionKind::star);
  json rep;
  rep["manifest"] = make_manifest("analyze", o.case_path, r.options, seed);
  rep["network"] = {{"buses", r.factors.n},
                    {"lines", r.factors.m},
                    {"slack", r.scenario.data.network
                                  .buses[static_cast<size_t>(
                                      r.scenario.data.network.slack_index())]
                                  .id}};
  rep["mu"] = vector_to_json(r.scenario.injections.mu);
  rep["nu"] = vector_to_json(r.factors.nu);
  rep["sigma"] = vector_to_json(r.factors.sigma);
  rep["bounds"] = bounds_to_json(a);
  rep["membership"] = {{"up", in_up}, {"star", in_star}};
  rep["verdict"] = in_up ? "up" : in_star ? "star_only" : "outside";
  write_json(o.out, rep);
  return in_up ? 0 : in_star ? 2 : 3;
}

int cmd_region(const CommonOpts& o, const std::vector<std::string>& axes,
               const std::string& kind_name, gridrisk::SweepOptions opts,
               std::int64_t n) {
  if (o.out.empty())
    gridrisk::fail(Errc::bad_argument,
                   "region writes a CSV file and a JSON sidecar; --out is "
                   "required");
  if (axes.size() != 2)
    gridrisk::fail(Errc::bad_argument, "--axes needs exactly two bus ids");
  Resolved r = resolve(o);
  const gridrisk::RegionKind kind =
      gridrisk::region_kind_from_string(kind_name);
  const int ai = mu_index_of_bus(r.scenario.data.network, axes[0]);
  const int aj = mu_index_of_bus(r.scenario.data.network, axes[1]);

  gridrisk::RiskEstimator estimator;
  const gridrisk::RiskEstimator* est_ptr = nullptr;
  if (kind == gridrisk::RegionKind::ci) {
    estimator = gridrisk::make_risk_estimator(r.factors, n, opts.seed);
    est_ptr = &estimator;
  }
  const auto slice =
      gridrisk::sweep_slice(r.factors, r.scenario.injections.mu, ai, aj, r.q,
                            kind, opts, est_ptr);

  r.options["axes"] = axes;
  r.options["kind"] = kind_name;
  r.options["rays"] = opts.rays;
  r.options["tol"] = opts.tol;
  r.options["max_radius"] = opts.max_radius;
  if (kind == gridrisk::RegionKind::ci) {
    r.options["n"] = n;
    r.options["ci_std_errs"] = opts.ci_std_errs;
  }
  json sidecar = gridrisk::slice_to_json(slice);
  sidecar["manifest"] =
      make_manifest("region", o.case_path, r.options, opts.seed);
  sidecar["axis_buses"] = axes;

  write_text(o.out, gridrisk::slice_to_csv(slice));
  std::string side_path = o.out;
  if (side_path.size() >= 4 &&
      side_path.compare(side_path.size() - 4, 4, ".csv") == 0)
    side_path.resize(side_path.size() - 4);
  side_path += ".json";
  write_json(side_path, sidecar);
  return 0;
}

int cmd_mc(const CommonOpts& o, std::int64_t n, std::uint64_t seed,
           const std::vector<double>& s_values) {
  Resolved r = resolve(o);
  const auto a = gridrisk::assess(r.factors, r.q);
  const auto p_hat = gridrisk::estimate_failure_prob(r.factors, n, seed);
  const auto r_hat = gridrisk::estimate_risk(r.factors, n, seed);

  r.options["n"] = n;
  json rep;
  if (!s_values.empty()) r.options["concentration"] = s_values;
  rep["manifest"] = make_manifest("mc", o.case_path, r.options, seed);
  rep["failure_prob"] = estimate_to_json(p_hat);
  rep["risk"] = estimate_to_json(r_hat);
  rep["bounds"] = bounds_to_json(a);
  // estimate-vs-analytic-bound consistency flags at 3 standard errors
  rep["consistency"] = {
      {"failure_prob_below_bound",
       p_hat.mean - 3.0 * p_hat.std_error <= a.failure_bound},
      {"risk_below_r_star", r_hat.mean - 3.0 * r_hat.std_error <= a.r_star},
      {"risk_below_r_up", r_hat.mean - 3.0 * r_hat.std_error <= a.r_up}};
  if (!s_values.empty()) {
    const auto rep_c = gridrisk::concentration_check(r.factors, s_values, n,
                                                     seed);
    json c;
    c["r_hat"] = rep_c.r_hat;
    c["n_samples"] = rep_c.n_samples;
    c["seed"] = rep_c.seed;
    json entries = json::array();
    for (size_t i = 0; i < rep_c.s_values.size(); ++i) {
      entries.push_back(
          {{"s", rep_c.s_values[i]},
           {"empirical", estimate_to_json(rep_c.empirical[i])},
           {"bound", rep_c.bound[i]},
           {"consistent", rep_c.empirical[i].mean -
                                  3.0 * rep_c.empirical[i].std_error <=
                              rep_c.bound[i]}});
    }
    c["tails"] = std::move(entries);
    rep["concentration"] = std::move(c);
  }
  write_json(o.out, rep);
  return 0;
}

int cmd_inspect(const CommonOpts& o) {
  Resolved r = resolve(o);
  const gridrisk::Network& net = r.scenario.data.network;
  json rep;
  rep["manifest"] = make_manifest("inspect", o.case_path, r.options, 0);
  json buses = json::array();
  for (const auto& b : net.buses) buses.push_back(b.id);
  json lines = json::array();
  const gridrisk::Network resolved_net = gridrisk::apply_capacity_rule(
      r.scenario.data, r.scenario.rule, r.scenario.injections.mu);
  for (const auto& l : resolved_net.lines)
    lines.push_back({{"from", net.buses[static_cast<size_t>(l.from)].id},
                     {"to", net.buses[static_cast<size_t>(l.to)].id},
                     {"susceptance", l.susceptance},
                     {"capacity", l.capacity}});
  rep["network"] = {{"buses", buses},
                    {"lines", lines},
                    {"slack", net.buses[static_cast<size_t>(
                                            net.slack_index())].id},
                    {"base_mva", r.scenario.data.base_mva}};
  rep["mu"] = vector_to_json(r.scenario.injections.mu);
  rep["laplacian"] = matrix_to_json(gridrisk::laplacian(resolved_net));
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        gridrisk::laplacian(resolved_net));
    const Eigen::VectorXd ev = es.eigenvalues();
    int kernel = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) <= 1e-9 * ev(ev.size() - 1)) ++kernel;
    rep["laplacian_spectrum"] = {{"eigenvalues", vector_to_json(ev)},
                                 {"kernel_dim", kernel}};
  }
  rep["w_mat"] = matrix_to_json(r.factors.w_mat);
  rep["nu"] = vector_to_json(r.factors.nu);
  rep["sigma"] = vector_to_json(r.factors.sigma);
  rep["max_sigma"] = r.factors.max_sigma();
  write_json(o.out, rep);
  return 0;
}

int fail_json(const std::string& code, const std::string& message) {
  json err;
  err["error"] = {{"code", code}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polyhedral safe-capacity regions and line-overload "
               "probability bounds for DC grids with Gaussian injections"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOpts an_o, rg_o, mc_o, in_o;
  std::vector<double> mu_override, s_values;
  std::vector<std::string> axes;
  std::string kind = "up";
  gridrisk::SweepOptions sweep;
  sweep.seed = kDefaultSeed;
  std::int64_t region_n = 20000, mc_n = 100000;
  std::uint64_t an_seed = kDefaultSeed, mc_seed = kDefaultSeed;

  CLI::App* an = app.add_subcommand(
      "analyze", "risk bounds and membership verdicts for the case mean");
  add_common(an, an_o);
  an->add_option("--mu", mu_override, "override the mean injections")
      ->delimiter(',');
  an->add_option("--seed", an_seed, "rng seed (default 1)");

  CLI::App* rg = app.add_subcommand(
      "region", "sweep a two-bus slice of a capacity region to CSV + JSON");
  add_common(rg, rg_o);
  rg->add_option("--axes", axes, "two bus ids spanning the slice")
      ->delimiter(',')
      ->required();
  rg->add_option("--kind", kind, "up | star | ci (default up)");
  rg->add_option("--rays", sweep.rays, "rays to sweep, >= 8 (default 60)");
  rg->add_option("--tol", sweep.tol, "bisection tolerance (default 1e-6)");
  rg->add_option("--max-radius", sweep.max_radius,
                 "give up on a ray beyond this radius (default 1e6)");
  rg->add_option("--n", region_n,
                 "samples per membership test for kind=ci (default 20000)");
  rg->add_option("--ci-std-errs", sweep.ci_std_errs,
                 "std errors of margin for kind=ci (default 3)");
  rg->add_option("--seed", sweep.seed, "rng seed (default 1)");

  CLI::App* mc = app.add_subcommand(
      "mc", "Monte Carlo failure probability and risk vs the bounds");
  add_common(mc, mc_o);
  mc->add_option("--n", mc_n, "sample count (default 100000)");
  mc->add_option("--seed", mc_seed, "rng seed (default 1)");
  mc->add_option("--concentration", s_values,
                 "deviation levels for the tail check, increasing")
      ->delimiter(',');

  CLI::App* in = app.add_subcommand(
      "inspect", "dump the parsed network and flow factors");
  add_common(in, in_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    return fail_json("usage", e.what());
  }

  try {
    if (an->parsed()) return cmd_analyze(an_o, mu_override, an_seed);
    if (rg->parsed()) return cmd_region(rg_o, axes, kind, sweep, region_n);
    if (mc->parsed()) return cmd_mc(mc_o, mc_n, mc_seed, s_values);
    return cmd_inspect(in_o);
  } catch (const Error& e) {
    return fail_json(gridrisk::errc_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail_json("internal", e.what());
  }
}
