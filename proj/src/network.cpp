#include "gridrisk/network.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

namespace gridrisk {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::bad_argument: return "bad_argument";
    case Errc::disconnected: return "disconnected";
    case Errc::duplicate_line: return "duplicate_line";
    case Errc::non_positive_parameter: return "non_positive_parameter";
    case Errc::bad_slack_index: return "bad_slack_index";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::not_symmetric: return "not_symmetric";
    case Errc::not_psd: return "not_psd";
    case Errc::multiple_zero_eigenvalues: return "multiple_zero_eigenvalues";
    case Errc::estimator_required: return "estimator_required";
    case Errc::base_point_outside: return "base_point_outside";
    case Errc::schema_violation: return "schema_violation";
    case Errc::missing_block: return "missing_block";
    case Errc::malformed_row: return "malformed_row";
    case Errc::zero_reactance: return "zero_reactance";
    case Errc::zero_mean_flow: return "zero_mean_flow";
    case Errc::missing_rate_a: return "missing_rate_a";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

namespace {

std::string line_label(const Network& net, int l) {
  const Line& ln = net.lines[static_cast<size_t>(l)];
  std::ostringstream os;
  os << "line " << l << " (" << net.buses[static_cast<size_t>(ln.from)].id
     << " -> " << net.buses[static_cast<size_t>(ln.to)].id << ")";
  return os.str();
}

}  // namespace

void validate(const Network& net) {
  const int n = net.bus_count();
  const int m = net.line_count();
  if (n < 2) fail(Errc::bad_argument, "network needs at least two buses");

  const int slack = net.slack_index();
  if (slack < 0 || slack >= n) {
    std::ostringstream os;
    os << "slack index " << net.slack << " out of range for " << n << " buses";
    fail(Errc::bad_slack_index, os.str());
  }

  std::map<std::pair<int, int>, int> seen;
  for (int l = 0; l < m; ++l) {
    const Line& ln = net.lines[static_cast<size_t>(l)];
    if (ln.from < 0 || ln.from >= n || ln.to < 0 || ln.to >= n ||
        ln.from == ln.to) {
      std::ostringstream os;
      os << "line " << l << " has invalid endpoints (" << ln.from << ", "
         << ln.to << ")";
      fail(Errc::bad_argument, os.str());
    }
    if (!(ln.susceptance > 0.0)) {
      fail(Errc::non_positive_parameter,
           line_label(net, l) + " has non-positive susceptance");
    }
    if (!(ln.capacity > 0.0)) {
      fail(Errc::non_positive_parameter,
           line_label(net, l) + " has non-positive capacity");
    }
    auto key = std::minmax(ln.from, ln.to);
    auto [it, inserted] = seen.emplace(key, l);
    if (!inserted) {
      std::ostringstream os;
      os << line_label(net, l) << " duplicates " << line_label(net, it->second)
         << "; parallel lines must be merged first";
      fail(Errc::duplicate_line, os.str());
    }
  }

  // connectivity sweep; on failure report each component's bus ids
  std::vector<int> comp(static_cast<size_t>(n), -1);
  int n_comp = 0;
  for (int root = 0; root < n; ++root) {
    if (comp[static_cast<size_t>(root)] >= 0) continue;
    std::vector<int> stack{root};
    comp[static_cast<size_t>(root)] = n_comp;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const Line& ln : net.lines) {
        int v = -1;
        if (ln.from == u) v = ln.to;
        else if (ln.to == u) v = ln.from;
        else continue;
        if (comp[static_cast<size_t>(v)] < 0) {
          comp[static_cast<size_t>(v)] = n_comp;
          stack.push_back(v);
        }
      }
    }
    ++n_comp;
  }
  if (n_comp > 1) {
    std::ostringstream os;
    os << "network is disconnected into " << n_comp << " components:";
    for (int c = 0; c < n_comp; ++c) {
      os << (c ? " /" : "");
      for (int i = 0; i < n; ++i)
        if (comp[static_cast<size_t>(i)] == c)
          os << ' ' << net.buses[static_cast<size_t>(i)].id;
    }
    fail(Errc::disconnected, os.str());
  }
}

Eigen::MatrixXd laplacian(const Network& net) {
  const int n = net.bus_count();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const Line& ln : net.lines) {
    l(ln.from, ln.to) -= ln.susceptance;
    l(ln.to, ln.from) -= ln.susceptance;
  }
  // diagonal = minus the accumulated row; row sums vanish at machine precision
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) s += l(i, j);
    l(i, i) = -s;
  }
  return l;
}

Eigen::MatrixXd weighted_incidence(const Network& net) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(net.line_count(), net.bus_count());
  for (int l = 0; l < net.line_count(); ++l) {
    const Line& ln = net.lines[static_cast<size_t>(l)];
    b(l, ln.from) = ln.susceptance;
    b(l, ln.to) = -ln.susceptance;
  }
  return b;
}

Eigen::MatrixXd unit_incidence(const Network& net) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(net.line_count(), net.bus_count());
  for (int l = 0; l < net.line_count(); ++l) {
    const Line& ln = net.lines[static_cast<size_t>(l)];
    a(l, ln.from) = 1.0;
    a(l, ln.to) = -1.0;
  }
  return a;
}

}  // namespace gridrisk
