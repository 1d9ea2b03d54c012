#include "gridrisk/case_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "gridrisk/errors.hpp"

namespace gridrisk {

namespace {

std::string fmt_num(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- MATPOWER-style parsing -------------------------------------------

struct MatBlock {
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;  // source line of each row
  bool present = false;
};

struct MatFile {
  std::map<std::string, MatBlock> blocks;
  std::map<std::string, double> scalars;
  std::string name;
};

void parse_matrix_chunk(MatFile& f, const std::string& block,
                        const std::string& chunk, int line_no) {
  std::istringstream in(chunk);
  std::vector<double> row;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      fail(Errc::malformed_row, block + " matrix: unreadable token '" + tok +
                                    "' at line " + std::to_string(line_no));
    row.push_back(v);
  }
  if (!row.empty()) {
    f.blocks[block].rows.push_back(std::move(row));
    f.blocks[block].row_lines.push_back(line_no);
  }
}

// Content of one physical line inside a matrix block; rows are ';'-separated.
void parse_matrix_line(MatFile& f, const std::string& block,
                       const std::string& content, int line_no) {
  size_t start = 0;
  while (start <= content.size()) {
    const size_t semi = content.find(';', start);
    const std::string chunk =
        content.substr(start, semi == std::string::npos ? semi : semi - start);
    parse_matrix_chunk(f, block, chunk, line_no);
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
}

MatFile scan_matpower(const std::string& text) {
  static const std::regex assign_re(R"(^\s*mpc\.([A-Za-z_]\w*)\s*=\s*(.*)$)");
  static const std::regex func_re(R"(^\s*function\s+\w+\s*=\s*(\w+))");

  MatFile f;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::string block;  // nonempty while inside a [...] matrix
  while (std::getline(in, raw)) {
    ++line_no;
    const size_t pct = raw.find('%');
    std::string line = pct == std::string::npos ? raw : raw.substr(0, pct);

    if (!block.empty()) {
      const size_t close = line.find(']');
      if (close == std::string::npos) {
        parse_matrix_line(f, block, line, line_no);
      } else {
        parse_matrix_line(f, block, line.substr(0, close), line_no);
        block.clear();
      }
      continue;
    }

    std::smatch m;
    if (std::regex_search(line, m, func_re)) {
      f.name = m[1];
      continue;
    }
    if (!std::regex_search(line, m, assign_re)) continue;
    const std::string key = m[1];
    std::string rhs = m[2];
    const size_t open = rhs.find('[');
    if (open != std::string::npos) {
      f.blocks[key].present = true;
      block = key;
      const std::string rest = rhs.substr(open + 1);
      const size_t close = rest.find(']');
      if (close == std::string::npos) {
        parse_matrix_line(f, block, rest, line_no);
      } else {
        parse_matrix_line(f, block, rest.substr(0, close), line_no);
        block.clear();
      }
    } else {
      // scalar assignment; silently skip non-numeric ones (e.g. version)
      while (!rhs.empty() &&
             (rhs.back() == ';' || std::isspace(static_cast<unsigned char>(
                                       rhs.back()))))
        rhs.pop_back();
      char* end = nullptr;
      const double v = std::strtod(rhs.c_str(), &end);
      if (end != rhs.c_str() && *end == '\0') f.scalars[key] = v;
    }
  }
  return f;
}

const MatBlock& need_block(const MatFile& f, const std::string& key) {
  auto it = f.blocks.find(key);
  if (it == f.blocks.end() || it->second.rows.empty())
    fail(Errc::missing_block, "case file has no mpc." + key + " matrix");
  return it->second;
}

void need_cols(const std::vector<double>& row, size_t n,
               const std::string& what, int line_no) {
  if (row.size() < n)
    fail(Errc::malformed_row, what + " row at line " + std::to_string(line_no) +
                                  " has " + std::to_string(row.size()) +
                                  " columns, need at least " +
                                  std::to_string(n));
}

// ---- JSON helpers ------------------------------------------------------

[[noreturn]] void schema_fail(const std::string& path, const std::string& why) {
  fail(Errc::schema_violation, path + ": " + why);
}

const nlohmann::json& member(const nlohmann::json& obj, const char* key,
                             const std::string& path) {
  if (!obj.is_object()) schema_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(path, std::string("missing '") + key + "'");
  return *it;
}

double as_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) schema_fail(path, "expected a number");
  return j.get<double>();
}

std::string as_string(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) schema_fail(path, "expected a string");
  return j.get<std::string>();
}

const nlohmann::json& as_array(const nlohmann::json& j,
                               const std::string& path) {
  if (!j.is_array()) schema_fail(path, "expected an array");
  return j;
}

}  // namespace

CapacityRule capacity_rule_from_string(const std::string& s, double factor) {
  CapacityRule rule;
  if (s == "explicit") {
    rule.kind = CapacityRule::Kind::explicit_caps;
  } else if (s == "rate_a") {
    rule.kind = CapacityRule::Kind::rate_a;
  } else if (s == "factor_of_mean") {
    rule.kind = CapacityRule::Kind::factor_of_mean;
  } else {
    fail(Errc::bad_argument, "unknown capacity rule '" + s + "'");
  }
  if (!(factor > 0.0))
    fail(Errc::bad_argument, "capacity factor must be positive");
  rule.factor = factor;
  return rule;
}

std::string capacity_rule_name(const CapacityRule& rule) {
  switch (rule.kind) {
    case CapacityRule::Kind::explicit_caps: return "explicit";
    case CapacityRule::Kind::rate_a: return "rate_a";
    case CapacityRule::Kind::factor_of_mean: return "factor_of_mean";
  }
  return "?";
}

CaseData parse_matpower(const std::string& text) {
  const MatFile f = scan_matpower(text);

  auto base_it = f.scalars.find("baseMVA");
  if (base_it == f.scalars.end())
    fail(Errc::missing_block, "case file has no mpc.baseMVA value");
  const double base_mva = base_it->second;
  if (!(base_mva > 0.0))
    fail(Errc::non_positive_parameter, "baseMVA must be positive");

  const MatBlock& bus = need_block(f, "bus");
  const MatBlock& branch = need_block(f, "branch");

  CaseData data;
  data.base_mva = base_mva;
  data.meta.name = f.name;
  data.meta.source = "inline";

  std::map<std::string, int> bus_index;
  std::vector<double> pd;
  int slack = -1;
  for (size_t i = 0; i < bus.rows.size(); ++i) {
    const auto& row = bus.rows[i];
    need_cols(row, 3, "bus", bus.row_lines[i]);
    const std::string id = fmt_num(row[0]);
    if (!bus_index.emplace(id, static_cast<int>(i)).second)
      fail(Errc::malformed_row, "duplicate bus " + id + " at line " +
                                    std::to_string(bus.row_lines[i]));
    data.network.buses.push_back(Bus{id});
    pd.push_back(row[2]);
    if (static_cast<int>(row[1]) == 3 && slack < 0)
      slack = static_cast<int>(i);
  }
  data.network.slack = slack;  // negative falls back to the last bus

  const int n = data.network.bus_count();
  Eigen::VectorXd pg = Eigen::VectorXd::Zero(n);
  if (auto it = f.blocks.find("gen"); it != f.blocks.end()) {
    const MatBlock& gen = it->second;
    for (size_t i = 0; i < gen.rows.size(); ++i) {
      const auto& row = gen.rows[i];
      need_cols(row, 2, "gen", gen.row_lines[i]);
      if (row.size() >= 8 && row[7] <= 0.0) continue;  // out of service
      auto bi = bus_index.find(fmt_num(row[0]));
      if (bi == bus_index.end())
        fail(Errc::malformed_row, "gen row at line " +
                                      std::to_string(gen.row_lines[i]) +
                                      " references unknown bus " +
                                      fmt_num(row[0]));
      pg(bi->second) += row[1];
    }
  }

  for (size_t i = 0; i < branch.rows.size(); ++i) {
    const auto& row = branch.rows[i];
    need_cols(row, 4, "branch", branch.row_lines[i]);
    if (row.size() >= 11 && row[10] <= 0.0) continue;  // status 0: dropped
    auto fi = bus_index.find(fmt_num(row[0]));
    auto ti = bus_index.find(fmt_num(row[1]));
    if (fi == bus_index.end() || ti == bus_index.end())
      fail(Errc::malformed_row, "branch row at line " +
                                    std::to_string(branch.row_lines[i]) +
                                    " references unknown bus");
    const double x = row[3];
    if (x == 0.0)
      fail(Errc::zero_reactance, "branch row at line " +
                                     std::to_string(branch.row_lines[i]) +
                                     " (buses " + fi->first + "-" + ti->first +
                                     ") has zero reactance");
    const double rating = row.size() >= 6 && row[5] > 0.0
                              ? row[5] / base_mva
                              : 0.0;
    Line line;
    line.from = fi->second;
    line.to = ti->second;
    line.susceptance = 1.0 / x;
    line.capacity = rating > 0.0 ? rating : 1.0;
    data.network.lines.push_back(line);
    data.rate_a.push_back(rating);
  }

  data.base_injections.resize(n);
  for (int i = 0; i < n; ++i)
    data.base_injections(i) = (pg(i) - pd[static_cast<size_t>(i)]) / base_mva;

  validate(data.network);
  return data;
}

Scenario load_case_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::schema_violation, std::string("$: not valid JSON (") + e.what() +
                                     ")");
  }
  if (!doc.is_object()) schema_fail("$", "expected an object");

  Scenario sc;
  sc.data.meta.source = "inline";
  if (auto it = doc.find("name"); it != doc.end())
    sc.data.meta.name = as_string(*it, "$.name");

  std::map<std::string, int> bus_index;
  const auto& buses = as_array(member(doc, "buses", "$"), "$.buses");
  for (size_t i = 0; i < buses.size(); ++i) {
    const std::string path = "$.buses[" + std::to_string(i) + "]";
    const std::string id = as_string(member(buses[i], "id", path), path + ".id");
    if (!bus_index.emplace(id, static_cast<int>(i)).second)
      schema_fail(path + ".id", "duplicate bus id '" + id + "'");
    sc.data.network.buses.push_back(Bus{id});
  }

  const auto& lines = as_array(member(doc, "lines", "$"), "$.lines");
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string path = "$.lines[" + std::to_string(i) + "]";
    Line line;
    const std::string from =
        as_string(member(lines[i], "from", path), path + ".from");
    const std::string to = as_string(member(lines[i], "to", path), path + ".to");
    auto fi = bus_index.find(from);
    auto ti = bus_index.find(to);
    if (fi == bus_index.end())
      schema_fail(path + ".from", "unknown bus id '" + from + "'");
    if (ti == bus_index.end())
      schema_fail(path + ".to", "unknown bus id '" + to + "'");
    line.from = fi->second;
    line.to = ti->second;
    line.susceptance = as_number(member(lines[i], "susceptance", path),
                                 path + ".susceptance");
    line.capacity = 1.0;
    if (auto it = lines[i].find("capacity"); it != lines[i].end())
      line.capacity = as_number(*it, path + ".capacity");
    sc.data.network.lines.push_back(line);
    sc.data.rate_a.push_back(0.0);
  }

  if (auto it = doc.find("slack"); it != doc.end()) {
    const std::string id = as_string(*it, "$.slack");
    auto si = bus_index.find(id);
    if (si == bus_index.end())
      schema_fail("$.slack", "unknown bus id '" + id + "'");
    sc.data.network.slack = si->second;
  }

  const int n = sc.data.network.bus_count();
  const auto& inj = member(doc, "injections", "$");
  const auto& mu = as_array(member(inj, "mu", "$.injections"),
                            "$.injections.mu");
  if (static_cast<int>(mu.size()) != n - 1)
    fail(Errc::dimension_mismatch,
         "$.injections.mu has " + std::to_string(mu.size()) +
             " entries, expected one per non-slack bus (" +
             std::to_string(n - 1) + ")");
  sc.injections.mu.resize(n - 1);
  for (size_t i = 0; i < mu.size(); ++i)
    sc.injections.mu(static_cast<Eigen::Index>(i)) =
        as_number(mu[i], "$.injections.mu[" + std::to_string(i) + "]");

  const bool has_sigma = inj.contains("sigma");
  const bool has_iid = inj.contains("iid_variance");
  if (has_sigma == has_iid)
    schema_fail("$.injections",
                "need exactly one of 'sigma' and 'iid_variance'");
  if (has_iid) {
    const double eps = as_number(inj["iid_variance"],
                                 "$.injections.iid_variance");
    if (eps < 0.0) schema_fail("$.injections.iid_variance", "must be >= 0");
    sc.iid_variance = eps;
    sc.injections.sigma =
        eps * Eigen::MatrixXd::Identity(n - 1, n - 1);
  } else {
    const auto& sig = as_array(inj["sigma"], "$.injections.sigma");
    if (static_cast<int>(sig.size()) != n - 1)
      fail(Errc::dimension_mismatch,
           "$.injections.sigma has " + std::to_string(sig.size()) +
               " rows, expected " + std::to_string(n - 1));
    sc.injections.sigma.resize(n - 1, n - 1);
    for (size_t i = 0; i < sig.size(); ++i) {
      const std::string path = "$.injections.sigma[" + std::to_string(i) + "]";
      const auto& row = as_array(sig[i], path);
      if (static_cast<int>(row.size()) != n - 1)
        fail(Errc::dimension_mismatch,
             path + " has " + std::to_string(row.size()) +
                 " entries, expected " + std::to_string(n - 1));
      for (size_t j = 0; j < row.size(); ++j)
        sc.injections.sigma(static_cast<Eigen::Index>(i),
                            static_cast<Eigen::Index>(j)) =
            as_number(row[j], path + "[" + std::to_string(j) + "]");
    }
  }

  if (auto it = doc.find("capacity_rule"); it != doc.end()) {
    const std::string kind =
        as_string(member(*it, "kind", "$.capacity_rule"),
                  "$.capacity_rule.kind");
    double factor = 1.5;
    if (auto fit = it->find("factor"); fit != it->end())
      factor = as_number(*fit, "$.capacity_rule.factor");
    try {
      sc.rule = capacity_rule_from_string(kind, factor);
    } catch (const Error& e) {
      schema_fail("$.capacity_rule", e.what());
    }
  }

  if (auto it = doc.find("q"); it != doc.end()) {
    sc.q = as_number(*it, "$.q");
    if (!(sc.q > 0.0 && sc.q < 1.0)) schema_fail("$.q", "must lie in (0, 1)");
  }

  // slack injection balances the non-slack means
  const int slack = sc.data.network.slack_index();
  sc.data.base_injections.resize(n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    if (i != slack) sc.data.base_injections(i) = sc.injections.mu(k++);
  sc.data.base_injections(slack) = -sc.injections.mu.sum();
  sc.data.base_mva = 1.0;

  validate(sc.data.network);
  return sc;
}

nlohmann::json scenario_to_json(const Scenario& scenario) {
  const Network& net = scenario.data.network;
  nlohmann::json j;
  j["name"] = scenario.data.meta.name;
  nlohmann::json buses = nlohmann::json::array();
  for (const auto& b : net.buses) buses.push_back({{"id", b.id}});
  j["buses"] = std::move(buses);
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : net.lines) {
    lines.push_back({{"from", net.buses[static_cast<size_t>(l.from)].id},
                     {"to", net.buses[static_cast<size_t>(l.to)].id},
                     {"susceptance", l.susceptance},
                     {"capacity", l.capacity}});
  }
  j["lines"] = std::move(lines);
  j["slack"] = net.buses[static_cast<size_t>(net.slack_index())].id;
  nlohmann::json inj;
  inj["mu"] = std::vector<double>(scenario.injections.mu.begin(),
                                  scenario.injections.mu.end());
  if (scenario.iid_variance) {
    inj["iid_variance"] = *scenario.iid_variance;
  } else {
    nlohmann::json sig = nlohmann::json::array();
    for (Eigen::Index i = 0; i < scenario.injections.sigma.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index jj = 0; jj < scenario.injections.sigma.cols(); ++jj)
        row.push_back(scenario.injections.sigma(i, jj));
      sig.push_back(std::move(row));
    }
    inj["sigma"] = std::move(sig);
  }
  j["injections"] = std::move(inj);
  nlohmann::json rule;
  rule["kind"] = capacity_rule_name(scenario.rule);
  if (scenario.rule.kind == CapacityRule::Kind::factor_of_mean)
    rule["factor"] = scenario.rule.factor;
  j["capacity_rule"] = std::move(rule);
  j["q"] = scenario.q;
  return j;
}

Network apply_capacity_rule(const CaseData& data, const CapacityRule& rule,
                            const Eigen::VectorXd& mu) {
  Network net = data.network;
  switch (rule.kind) {
    case CapacityRule::Kind::explicit_caps:
      break;
    case CapacityRule::Kind::rate_a: {
      if (data.rate_a.size() != net.lines.size())
        fail(Errc::dimension_mismatch, "rating vector does not match lines");
      for (size_t l = 0; l < net.lines.size(); ++l) {
        if (!(data.rate_a[l] > 0.0))
          fail(Errc::missing_rate_a,
               "line " + net.buses[static_cast<size_t>(net.lines[l].from)].id +
                   "-" + net.buses[static_cast<size_t>(net.lines[l].to)].id +
                   " has no rating");
        net.lines[l].capacity = data.rate_a[l];
      }
      break;
    }
    case CapacityRule::Kind::factor_of_mean: {
      if (!(rule.factor > 0.0))
        fail(Errc::bad_argument, "capacity factor must be positive");
      validate(net);
      const int n = net.bus_count();
      if (mu.size() != n - 1)
        fail(Errc::dimension_mismatch,
             "mean vector must have one entry per non-slack bus");
      const Eigen::VectorXd flows =
          weighted_incidence(net) * pseudo_inverse(laplacian(net)) *
          slack_embedding(n, net.slack_index()) * mu;
      const double scale = std::max(1.0, flows.cwiseAbs().maxCoeff());
      for (size_t l = 0; l < net.lines.size(); ++l) {
        const double f = std::abs(flows(static_cast<Eigen::Index>(l)));
        if (f <= 1e-9 * scale)
          fail(Errc::zero_mean_flow,
               "line " +
                   net.buses[static_cast<size_t>(net.lines[l].from)].id + "-" +
                   net.buses[static_cast<size_t>(net.lines[l].to)].id +
                   " carries zero mean flow; factor rule undefined");
        net.lines[l].capacity = rule.factor * f;
      }
      break;
    }
  }
  validate(net);
  return net;
}

Scenario load_case(const std::string& path, const CaseDefaults& defaults) {
  const size_t dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));

  const std::string text = read_file(path);
  Scenario sc;
  if (ext == "json") {
    sc = load_case_json(text);
  } else if (ext == "m") {
    sc.data = parse_matpower(text);
    const int n = sc.data.network.bus_count();
    const int slack = sc.data.network.slack_index();
    sc.injections.mu.resize(n - 1);
    int k = 0;
    for (int i = 0; i < n; ++i)
      if (i != slack) sc.injections.mu(k++) = sc.data.base_injections(i);
    sc.injections.sigma =
        defaults.iid_variance * Eigen::MatrixXd::Identity(n - 1, n - 1);
    sc.iid_variance = defaults.iid_variance;
    sc.q = defaults.q;
    sc.rule.kind = CapacityRule::Kind::explicit_caps;
  } else {
    fail(Errc::bad_argument,
         "unsupported case file extension '" + ext + "' (want .json or .m)");
  }
  sc.data.meta.source = path;
  if (sc.data.meta.name.empty()) {
    const size_t slash = path.find_last_of("/\\");
    const size_t start = slash == std::string::npos ? 0 : slash + 1;
    sc.data.meta.name = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
  }
  return sc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(Errc::io_error, "error reading '" + path + "'");
  return ss.str();
}

}  // namespace gridrisk
