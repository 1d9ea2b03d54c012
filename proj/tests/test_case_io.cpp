#include <doctest.h>

#include <cmath>
#include <string>

#include "gridrisk/case_io.hpp"
#include "helpers.hpp"

using namespace gridrisk;
using testutil::error_code_of;
using testutil::error_message_of;

namespace {

std::string cases_dir() { return GRIDRISK_CASES_DIR; }

// Three buses, one dropped branch, a switched-off generator, a short
// generator row without a status column, comments, and a string scalar.
const char* kTiny =
    "function mpc = tiny\n"                        // 1
    "% three-bus loop\n"                           // 2
    "mpc.version = '2';\n"                         // 3
    "mpc.baseMVA = 100; % MVA base\n"              // 4
    "mpc.bus = [\n"                                // 5
    "\t1\t3\t0\t0;\n"                              // 6
    "\t2\t1\t10\t0;\n"                             // 7
    "\t3\t1\t20\t0;\n"                             // 8
    "];\n"                                         // 9
    "mpc.gen = [\n"                                // 10
    "\t1\t25\t0\t0\t0\t0\t100\t1;\n"               // 11
    "\t2\t5\t0\t0\t0\t0\t100\t0; % off\n"          // 12
    "\t1\t5;\n"                                    // 13
    "];\n"                                         // 14
    "mpc.branch = [\n"                             // 15
    "\t1\t2\t0.01\t0.1\t0\t250\t0\t0\t0\t0\t1;\n"  // 16
    "\t2\t3\t0.01\t0.2\t0\t0\t0\t0\t0\t0\t1;\n"    // 17
    "\t1\t3\t0.01\t0.5\t0\t300\t0\t0\t0\t0\t0;\n"  // 18
    "];\n";                                        // 19

nlohmann::json base_case() {
  return nlohmann::json::parse(R"({
    "name": "jtest",
    "buses": [{"id": "a"}, {"id": "b"}, {"id": "c"}],
    "lines": [
      {"from": "a", "to": "b", "susceptance": 1.0, "capacity": 2.0},
      {"from": "b", "to": "c", "susceptance": 2.0}
    ],
    "slack": "c",
    "injections": {"mu": [0.5, -0.25], "iid_variance": 0.1},
    "q": 0.01
  })");
}

Errc json_code(const nlohmann::json& j) {
  return error_code_of([&] { load_case_json(j.dump()); });
}

std::string json_message(const nlohmann::json& j) {
  return error_message_of([&] { load_case_json(j.dump()); });
}

}  // namespace

TEST_CASE("matpower text parses with drops, defaults and accumulation") {
  const CaseData data = parse_matpower(kTiny);
  CHECK(data.meta.name == "tiny");
  CHECK(data.base_mva == 100.0);
  REQUIRE(data.network.bus_count() == 3);
  CHECK(data.network.buses[0].id == "1");
  CHECK(data.network.slack == 0);  // the type-3 bus

  // the out-of-service branch is gone; ratings convert to per-unit
  REQUIRE(data.network.line_count() == 2);
  CHECK(data.network.lines[0].from == 0);
  CHECK(data.network.lines[0].to == 1);
  CHECK(data.network.lines[0].susceptance == doctest::Approx(10.0));
  CHECK(data.network.lines[0].capacity == doctest::Approx(2.5));
  CHECK(data.rate_a[0] == doctest::Approx(2.5));
  CHECK(data.network.lines[1].susceptance == doctest::Approx(5.0));
  CHECK(data.network.lines[1].capacity == 1.0);  // no rating: placeholder
  CHECK(data.rate_a[1] == 0.0);

  // bus 1 collects both in-service generators, the switched-off one is not
  // counted, and the short row without a status column is in service
  CHECK(data.base_injections(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(data.base_injections(1) == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(data.base_injections(2) == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("matpower slack selection") {
  const char* no_slack =
      "mpc.baseMVA = 1;\n"
      "mpc.bus = [1 1 0; 2 1 0];\n"
      "mpc.branch = [1 2 0 0.5];\n";
  CHECK(parse_matpower(no_slack).network.slack == -1);  // falls back to last

  const char* two_slack =
      "mpc.baseMVA = 1;\n"
      "mpc.bus = [1 3 0; 2 3 0];\n"
      "mpc.branch = [1 2 0 0.5];\n";
  CHECK(parse_matpower(two_slack).network.slack == 0);  // first type 3 wins
}

TEST_CASE("matpower one-line matrices and separate closing brackets") {
  const char* compact =
      "mpc.baseMVA = 10;\n"
      "mpc.bus = [1 3 0; 2 1 5];\n"
      "mpc.branch = [1 2 0 0.25 0 50\n"
      "]\n"
      ";\n";
  const CaseData data = parse_matpower(compact);
  CHECK(data.network.bus_count() == 2);
  CHECK(data.network.lines[0].susceptance == doctest::Approx(4.0));
  CHECK(data.network.lines[0].capacity == doctest::Approx(5.0));
  CHECK(data.base_injections(1) == doctest::Approx(-0.5));
}

TEST_CASE("matpower structural errors carry codes and line numbers") {
  const char* no_base =
      "mpc.bus = [1 3 0; 2 1 0];\n"
      "mpc.branch = [1 2 0 0.5];\n";
  CHECK(error_code_of([&] { parse_matpower(no_base); }) == Errc::missing_block);
  CHECK(error_message_of([&] { parse_matpower(no_base); }).find("baseMVA") !=
        std::string::npos);

  const char* no_branch = "mpc.baseMVA = 1;\nmpc.bus = [1 3 0; 2 1 0];\n";
  CHECK(error_code_of([&] { parse_matpower(no_branch); }) ==
        Errc::missing_block);

  const char* no_bus = "mpc.baseMVA = 1;\nmpc.branch = [1 2 0 0.5];\n";
  CHECK(error_code_of([&] { parse_matpower(no_bus); }) == Errc::missing_block);

  const char* bad_base =
      "mpc.baseMVA = 0;\n"
      "mpc.bus = [1 3 0; 2 1 0];\n"
      "mpc.branch = [1 2 0 0.5];\n";
  CHECK(error_code_of([&] { parse_matpower(bad_base); }) ==
        Errc::non_positive_parameter);
}

TEST_CASE("matpower row errors name the offending line") {
  const char* zero_x =
      "function mpc = zr\n"          // 1
      "mpc.baseMVA = 100;\n"         // 2
      "mpc.bus = [1 3 0; 2 1 0];\n"  // 3
      "mpc.branch = [\n"             // 4
      "1 2 0 0;\n"                   // 5
      "];\n";
  CHECK(error_code_of([&] { parse_matpower(zero_x); }) == Errc::zero_reactance);
  const std::string zx_msg = error_message_of([&] { parse_matpower(zero_x); });
  CHECK(zx_msg.find("line 5") != std::string::npos);
  CHECK(zx_msg.find("buses 1-2") != std::string::npos);

  const char* bad_tok =
      "mpc.baseMVA = 1;\n"
      "mpc.bus = [\n"
      "1 3a 0;\n"  // line 3
      "];\n"
      "mpc.branch = [1 2 0 0.5];\n";
  CHECK(error_code_of([&] { parse_matpower(bad_tok); }) == Errc::malformed_row);
  const std::string tok_msg =
      error_message_of([&] { parse_matpower(bad_tok); });
  CHECK(tok_msg.find("'3a'") != std::string::npos);
  CHECK(tok_msg.find("line 3") != std::string::npos);

  const char* short_branch =
      "mpc.baseMVA = 1;\n"
      "mpc.bus = [1 3 0; 2 1 0];\n"
      "mpc.branch = [\n"
      "1 2 0.1;\n"  // line 4
      "];\n";
  CHECK(error_code_of([&] { parse_matpower(short_branch); }) ==
        Errc::malformed_row);
  const std::string sb_msg =
      error_message_of([&] { parse_matpower(short_branch); });
  CHECK(sb_msg.find("line 4") != std::string::npos);
  CHECK(sb_msg.find("3 columns, need at least 4") != std::string::npos);

  const char* dup_bus =
      "mpc.baseMVA = 1;\n"
      "mpc.bus = [\n"
      "1 3 0;\n"
      "1 1 0;\n"  // line 4
      "];\n"
      "mpc.branch = [1 2 0 0.5];\n";
  CHECK(error_code_of([&] { parse_matpower(dup_bus); }) == Errc::malformed_row);
  CHECK(error_message_of([&] { parse_matpower(dup_bus); })
            .find("duplicate bus 1 at line 4") != std::string::npos);

  const char* ghost_branch =
      "mpc.baseMVA = 1;\n"
      "mpc.bus = [1 3 0; 2 1 0];\n"
      "mpc.branch = [1 7 0 0.5];\n";
  CHECK(error_code_of([&] { parse_matpower(ghost_branch); }) ==
        Errc::malformed_row);

  const char* ghost_gen =
      "mpc.baseMVA = 1;\n"
      "mpc.bus = [1 3 0; 2 1 0];\n"
      "mpc.gen = [7 10];\n"
      "mpc.branch = [1 2 0 0.5];\n";
  CHECK(error_code_of([&] { parse_matpower(ghost_gen); }) ==
        Errc::malformed_row);
  CHECK(error_message_of([&] { parse_matpower(ghost_gen); })
            .find("unknown bus 7") != std::string::npos);
}

TEST_CASE("bundled 14-bus case loads with the expected aggregates") {
  const Scenario sc = load_case(cases_dir() + "/case14.m");
  CHECK(sc.data.meta.name == "case14");
  CHECK(sc.data.meta.source == cases_dir() + "/case14.m");
  CHECK(sc.data.network.bus_count() == 14);
  CHECK(sc.data.network.line_count() == 20);
  CHECK(sc.data.network.slack_index() == 0);
  CHECK(sc.data.base_mva == 100.0);
  // total generation 272.4 MW against 259 MW of load
  CHECK(sc.data.base_injections.sum() ==
        doctest::Approx((272.4 - 259.0) / 100.0).epsilon(1e-9));
  CHECK(sc.data.network.lines[0].susceptance ==
        doctest::Approx(1.0 / 0.05917).epsilon(1e-12));
  for (double r : sc.data.rate_a) CHECK(r == doctest::Approx(99.0));

  // .m files take the sampling model from the defaults
  CHECK(sc.injections.mu.size() == 13);
  CHECK(sc.injections.mu(0) ==
        doctest::Approx(sc.data.base_injections(1)).epsilon(1e-12));
  REQUIRE(sc.iid_variance.has_value());
  CHECK(*sc.iid_variance == 2e-2);
  CHECK(sc.q == 1e-3);
  CHECK(sc.rule.kind == CapacityRule::Kind::explicit_caps);
}

TEST_CASE("bundled triangle case loads verbatim") {
  const Scenario sc = load_case(cases_dir() + "/k3.json");
  CHECK(sc.data.meta.name == "k3");
  CHECK(sc.data.network.bus_count() == 3);
  CHECK(sc.data.network.slack == 2);
  for (const auto& l : sc.data.network.lines) CHECK(l.capacity == 5.0);
  CHECK(sc.injections.mu.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(sc.iid_variance.has_value());
  CHECK(*sc.iid_variance == 0.5);
  CHECK((sc.injections.sigma -
         0.5 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sc.q == 0.001);
}

TEST_CASE("json scenarios round-trip through serialization") {
  const Scenario sc = load_case_json(read_file(cases_dir() + "/k3.json"));
  const Scenario back = load_case_json(scenario_to_json(sc).dump());
  CHECK(back.data.meta.name == sc.data.meta.name);
  REQUIRE(back.data.network.bus_count() == sc.data.network.bus_count());
  REQUIRE(back.data.network.line_count() == sc.data.network.line_count());
  for (int l = 0; l < sc.data.network.line_count(); ++l) {
    const auto& a = sc.data.network.lines[static_cast<size_t>(l)];
    const auto& b = back.data.network.lines[static_cast<size_t>(l)];
    CHECK(a.from == b.from);
    CHECK(a.to == b.to);
    CHECK(a.susceptance == b.susceptance);
    CHECK(a.capacity == b.capacity);
  }
  CHECK(back.data.network.slack_index() == sc.data.network.slack_index());
  CHECK((back.injections.mu.array() == sc.injections.mu.array()).all());
  CHECK(back.iid_variance == sc.iid_variance);
  CHECK(back.q == sc.q);
  CHECK(back.rule.kind == sc.rule.kind);
}

TEST_CASE("dense covariance is accepted and survives a round-trip") {
  nlohmann::json j = base_case();
  j["injections"].erase("iid_variance");
  j["injections"]["sigma"] = {{0.5, 0.1}, {0.1, 0.5}};
  const Scenario sc = load_case_json(j.dump());
  CHECK(!sc.iid_variance.has_value());
  CHECK(sc.injections.sigma(0, 1) == 0.1);
  const nlohmann::json out = scenario_to_json(sc);
  CHECK(out["injections"].contains("sigma"));
  CHECK(!out["injections"].contains("iid_variance"));
  const Scenario back = load_case_json(out.dump());
  CHECK((back.injections.sigma.array() == sc.injections.sigma.array()).all());
}

TEST_CASE("json defaults: capacity, rule, slack fallback") {
  nlohmann::json j = base_case();
  CHECK(load_case_json(j.dump()).data.network.lines[1].capacity == 1.0);
  CHECK(load_case_json(j.dump()).rule.kind ==
        CapacityRule::Kind::explicit_caps);
  j.erase("slack");
  const Scenario sc = load_case_json(j.dump());
  CHECK(sc.data.network.slack == -1);
  CHECK(sc.data.network.slack_index() == 2);
  // iid variance of zero is a legal degenerate model
  nlohmann::json z = base_case();
  z["injections"]["iid_variance"] = 0.0;
  CHECK(load_case_json(z.dump()).injections.sigma.cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("json schema violations point into the document") {
  nlohmann::json j = base_case();
  j.erase("buses");
  CHECK(json_code(j) == Errc::schema_violation);
  CHECK(json_message(j).find("$: missing 'buses'") != std::string::npos);

  j = base_case();
  j["buses"] = 5;
  CHECK(json_message(j).find("$.buses: expected an array") !=
        std::string::npos);

  j = base_case();
  j["buses"][1] = {{"idx", "b"}};
  CHECK(json_message(j).find("$.buses[1]: missing 'id'") != std::string::npos);

  j = base_case();
  j["buses"][1]["id"] = "a";
  CHECK(json_message(j).find("duplicate bus id 'a'") != std::string::npos);

  j = base_case();
  j["lines"][0].erase("susceptance");
  CHECK(json_message(j).find("$.lines[0]: missing 'susceptance'") !=
        std::string::npos);

  j = base_case();
  j["lines"][0]["from"] = "zz";
  CHECK(json_message(j).find("$.lines[0].from: unknown bus id 'zz'") !=
        std::string::npos);

  j = base_case();
  j["slack"] = "zz";
  CHECK(json_message(j).find("$.slack") != std::string::npos);

  j = base_case();
  j["injections"]["mu"][1] = "x";
  CHECK(json_message(j).find("$.injections.mu[1]: expected a number") !=
        std::string::npos);

  j = base_case();
  j["injections"]["sigma"] = {{0.1, 0.0}, {0.0, 0.1}};  // both forms present
  CHECK(json_message(j).find("exactly one of 'sigma' and 'iid_variance'") !=
        std::string::npos);
  j["injections"].erase("sigma");
  j["injections"].erase("iid_variance");  // neither form present
  CHECK(json_code(j) == Errc::schema_violation);

  j = base_case();
  j["injections"]["iid_variance"] = -0.5;
  CHECK(json_message(j).find("$.injections.iid_variance: must be >= 0") !=
        std::string::npos);

  j = base_case();
  j["q"] = 0.0;
  CHECK(json_message(j).find("$.q") != std::string::npos);
  j["q"] = 1.5;
  CHECK(json_code(j) == Errc::schema_violation);

  j = base_case();
  j["capacity_rule"] = {{"kind", "weird"}};
  CHECK(json_message(j).find("unknown capacity rule") != std::string::npos);
  j["capacity_rule"] = {{"kind", "factor_of_mean"}, {"factor", 0.0}};
  CHECK(json_message(j).find("capacity factor must be positive") !=
        std::string::npos);
  j["capacity_rule"] = nlohmann::json::object();
  CHECK(json_message(j).find("$.capacity_rule: missing 'kind'") !=
        std::string::npos);

  CHECK(error_code_of([] { load_case_json("not json {"); }) ==
        Errc::schema_violation);
  CHECK(error_message_of([] { load_case_json("not json {"); })
            .find("$: not valid JSON") != std::string::npos);
  CHECK(error_code_of([] { load_case_json("[1, 2]"); }) ==
        Errc::schema_violation);
}

TEST_CASE("json dimension mismatches are separate from schema errors") {
  nlohmann::json j = base_case();
  j["injections"]["mu"] = {0.5};
  CHECK(json_code(j) == Errc::dimension_mismatch);

  j = base_case();
  j["injections"].erase("iid_variance");
  j["injections"]["sigma"] = {{0.1, 0.0}};
  CHECK(json_code(j) == Errc::dimension_mismatch);

  j = base_case();
  j["injections"].erase("iid_variance");
  j["injections"]["sigma"] = {{0.1, 0.0}, {0.0, 0.1, 0.2}};
  CHECK(json_code(j) == Errc::dimension_mismatch);
}

TEST_CASE("capacity rules resolve against the parsed case") {
  const Scenario sc = load_case(cases_dir() + "/k3.json");

  const Network kept =
      apply_capacity_rule(sc.data, sc.rule, sc.injections.mu);
  for (const auto& l : kept.lines) CHECK(l.capacity == 5.0);

  CaseData rated = sc.data;
  rated.rate_a = {2.0, 4.0, 3.0};
  CapacityRule rule;
  rule.kind = CapacityRule::Kind::rate_a;
  const Network by_rating =
      apply_capacity_rule(rated, rule, sc.injections.mu);
  CHECK(by_rating.lines[0].capacity == 2.0);
  CHECK(by_rating.lines[1].capacity == 4.0);
  CHECK(by_rating.lines[2].capacity == 3.0);

  rated.rate_a = {2.0, 0.0, 3.0};
  CHECK(error_code_of([&] {
          apply_capacity_rule(rated, rule, sc.injections.mu);
        }) == Errc::missing_rate_a);
  CHECK(error_message_of([&] {
          apply_capacity_rule(rated, rule, sc.injections.mu);
        }).find("line 1-3") != std::string::npos);

  rated.rate_a = {2.0};
  CHECK(error_code_of([&] {
          apply_capacity_rule(rated, rule, sc.injections.mu);
        }) == Errc::dimension_mismatch);
}

TEST_CASE("factor-of-mean capacities scale with the dispatch") {
  const Scenario sc = load_case(cases_dir() + "/k3.json");
  CapacityRule rule;
  rule.kind = CapacityRule::Kind::factor_of_mean;
  rule.factor = 1.5;
  const Eigen::Vector2d mu(3.0, -3.0);
  const Network net = apply_capacity_rule(sc.data, rule, mu);
  // mean line flows at this dispatch are (2, 1, -1)
  CHECK(net.lines[0].capacity == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(net.lines[1].capacity == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(net.lines[2].capacity == doctest::Approx(1.5).epsilon(1e-12));

  // normalized mean flows all sit at 1/factor
  InjectionModel model;
  model.mu = mu;
  model.sigma = 0.5 * Eigen::Matrix2d::Identity();
  const auto f = factorize(net, model);
  for (int l = 0; l < 3; ++l)
    CHECK(std::abs(f.nu(l)) == doctest::Approx(1.0 / 1.5).epsilon(1e-12));

  CapacityRule degenerate = rule;
  degenerate.factor = 0.0;
  CHECK(error_code_of([&] {
          apply_capacity_rule(sc.data, degenerate, mu);
        }) == Errc::bad_argument);
}

TEST_CASE("factor-of-mean refuses lines with no mean flow") {
  CaseData chain;
  chain.network.buses = {{"1"}, {"2"}, {"3"}};
  chain.network.lines = {{0, 1, 1.0, 1.0}, {1, 2, 1.0, 1.0}};
  chain.network.slack = 2;
  chain.rate_a = {0.0, 0.0};
  chain.base_injections = Eigen::Vector3d::Zero();
  CapacityRule rule;
  rule.kind = CapacityRule::Kind::factor_of_mean;
  const Eigen::Vector2d mu(0.0, 1.0);  // the 1-2 line carries nothing
  CHECK(error_code_of([&] { apply_capacity_rule(chain, rule, mu); }) ==
        Errc::zero_mean_flow);
  CHECK(error_message_of([&] { apply_capacity_rule(chain, rule, mu); })
            .find("line 1-2") != std::string::npos);
}

TEST_CASE("load_case dispatches on the extension") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("case.txt"), "whatever");
  CHECK(error_code_of([&] { load_case(tmp.file("case.txt")); }) ==
        Errc::bad_argument);
  CHECK(error_code_of([&] { load_case(tmp.file("missing.json")); }) ==
        Errc::io_error);

  // uppercase extension is accepted
  testutil::write_file(tmp.file("upper.M"),
                       "mpc.baseMVA = 1;\n"
                       "mpc.bus = [1 3 0; 2 1 0];\n"
                       "mpc.branch = [1 2 0 0.5];\n");
  CHECK(load_case(tmp.file("upper.M")).data.network.bus_count() == 2);
  // no function statement: the name falls back to the file stem
  CHECK(load_case(tmp.file("upper.M")).data.meta.name == "upper");

  nlohmann::json j = base_case();
  j.erase("name");
  testutil::write_file(tmp.file("anon.json"), j.dump());
  CHECK(load_case(tmp.file("anon.json")).data.meta.name == "anon");

  CaseDefaults d;
  d.iid_variance = 0.3;
  d.q = 0.05;
  const Scenario m = load_case(tmp.file("upper.M"), d);
  CHECK(m.q == 0.05);
  CHECK(m.injections.sigma(0, 0) == 0.3);
  REQUIRE(m.iid_variance.has_value());
  CHECK(*m.iid_variance == 0.3);
}
