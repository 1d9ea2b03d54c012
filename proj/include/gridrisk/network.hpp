#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gridrisk/errors.hpp"

namespace gridrisk {

struct Bus {
  std::string id;
};

// Endpoints are dense bus indices. Orientation (from -> to) fixes the sign of
// a positive flow; susceptance and capacity must be positive.
struct Line {
  int from = -1;
  int to = -1;
  double susceptance = 0.0;
  double capacity = 0.0;
};

struct Network {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  int slack = -1;  // negative means "last bus"

  int bus_count() const { return static_cast<int>(buses.size()); }
  int line_count() const { return static_cast<int>(lines.size()); }
  int slack_index() const { return slack < 0 ? bus_count() - 1 : slack; }
};

// Throws Error on: empty bus set, dangling/self-loop endpoints, non-positive
// susceptance or capacity, duplicate unordered bus pair, out-of-range slack,
// or a disconnected graph (message lists the components).
void validate(const Network& net);

// Weighted Laplacian, n x n. Off-diagonal -beta, diagonal = sum of incident
// susceptances, built as minus the off-diagonal row sum so each row sums to
// zero up to the rounding of that one accumulation.
Eigen::MatrixXd laplacian(const Network& net);

// Weighted edge-vertex incidence, m x n: +beta at `from`, -beta at `to`.
Eigen::MatrixXd weighted_incidence(const Network& net);

// Orientation-only incidence, m x n with entries in {-1, 0, +1}.
Eigen::MatrixXd unit_incidence(const Network& net);

}  // namespace gridrisk
