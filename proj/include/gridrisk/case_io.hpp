#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridrisk/flow_factors.hpp"
#include "gridrisk/network.hpp"

namespace gridrisk {

struct CaseMetadata {
  std::string name;
  std::string source;  // file path or "inline"
};

// A parsed grid case before a capacity rule is applied. `network` carries
// parse-time capacities (explicit file values, or branch ratings when
// present, else a placeholder of 1); `rate_a` keeps the per-line rating in
// per-unit, 0 where the file had none.
struct CaseData {
  Network network;
  Eigen::VectorXd base_injections;  // length n, all buses, per-unit
  double base_mva = 1.0;
  std::vector<double> rate_a;
  CaseMetadata meta;
};

struct CapacityRule {
  enum class Kind { explicit_caps, rate_a, factor_of_mean };
  Kind kind = Kind::explicit_caps;
  double factor = 1.5;  // factor_of_mean only
};

CapacityRule capacity_rule_from_string(const std::string& s, double factor);
std::string capacity_rule_name(const CapacityRule& rule);

struct Scenario {
  CaseData data;
  InjectionModel injections;
  CapacityRule rule;
  double q = 1e-3;
  // preserved iid shorthand so serialization round-trips the input form
  std::optional<double> iid_variance;
};

// MATPOWER-style .m text: reads baseMVA and the bus/gen/branch matrices,
// ignores everything else. Susceptance = 1/x, out-of-service branches are
// dropped, zero reactance on an in-service branch is an error. Slack = the
// type-3 bus (falls back to the last bus). Injections = (Pg - Pd)/baseMVA.
CaseData parse_matpower(const std::string& text);

// Native JSON case format; see bundled cases/k3.json for the shape.
Scenario load_case_json(const std::string& text);

nlohmann::json scenario_to_json(const Scenario& scenario);

// Network with capacities resolved per the rule. factor_of_mean computes
// unnormalized mean flows at mu and sets capacity = factor * |flow|, which
// requires every line to carry nonzero mean flow.
Network apply_capacity_rule(const CaseData& data, const CapacityRule& rule,
                            const Eigen::VectorXd& mu);

struct CaseDefaults {
  double iid_variance = 2e-2;  // injection variance for .m files
  double q = 1e-3;
};

// Loads .m or .json by extension. For .m files the injection model defaults
// to mu = non-slack base injections and sigma = iid_variance * I.
Scenario load_case(const std::string& path,
                   const CaseDefaults& defaults = CaseDefaults{});

std::string read_file(const std::string& path);

}  // namespace gridrisk
