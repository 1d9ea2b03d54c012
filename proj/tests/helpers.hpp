#pragma once

// Shared fixtures and small utilities for the test binaries.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "gridrisk/case_io.hpp"
#include "gridrisk/errors.hpp"
#include "gridrisk/flow_factors.hpp"
#include "gridrisk/network.hpp"

namespace testutil {

// Triangle of three unit-susceptance lines with capacity 5, slack at bus 3.
inline gridrisk::Network k3_network() {
  gridrisk::Network net;
  net.buses = {{"1"}, {"2"}, {"3"}};
  net.lines = {{0, 1, 1.0, 5.0}, {0, 2, 1.0, 5.0}, {1, 2, 1.0, 5.0}};
  net.slack = 2;
  return net;
}

inline gridrisk::FlowFactorization k3_factors(double mu1 = 0.0,
                                              double mu2 = 0.0,
                                              double variance = 0.5) {
  gridrisk::InjectionModel model;
  model.mu = Eigen::Vector2d(mu1, mu2);
  model.sigma = variance * Eigen::Matrix2d::Identity();
  return gridrisk::factorize(k3_network(), model);
}

// Synthetic factorization with independent per-line flows: v = diag(sigma).
// Valid sampling model for any (nu, sigma) pair; the closed-form bounds do
// not assume any particular correlation.
inline gridrisk::FlowFactorization diag_factors(const Eigen::VectorXd& nu,
                                                const Eigen::VectorXd& sigma) {
  gridrisk::FlowFactorization f;
  f.m = static_cast<int>(nu.size());
  f.n = f.m + 1;
  f.slack = f.m;
  f.nu = nu;
  f.sigma = sigma;
  f.v_mat = Eigen::MatrixXd(sigma.asDiagonal());
  f.w_mat = Eigen::MatrixXd::Identity(f.m, f.m);
  return f;
}

// Random connected network: spanning tree plus extra edges, random weights.
inline gridrisk::Network random_connected_network(std::mt19937_64& gen,
                                                  int max_buses) {
  std::uniform_int_distribution<int> nd(2, max_buses);
  std::uniform_real_distribution<double> beta(0.2, 5.0);
  std::uniform_real_distribution<double> cap(0.5, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n = nd(gen);
  gridrisk::Network net;
  for (int i = 0; i < n; ++i) net.buses.push_back({std::to_string(i + 1)});
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    net.lines.push_back({pick(gen), i, beta(gen), cap(gen)});
  }
  // sprinkle extra edges without duplicating pairs
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (unit(gen) > 2.0 / n) continue;
      bool dup = false;
      for (const auto& l : net.lines)
        dup = dup || (std::min(l.from, l.to) == i && std::max(l.from, l.to) == j);
      if (!dup) net.lines.push_back({i, j, beta(gen), cap(gen)});
    }
  }
  net.slack = std::uniform_int_distribution<int>(0, n - 1)(gen);
  return net;
}

// Runs fn, which must throw gridrisk::Error, and returns its code.
template <typename F>
gridrisk::Errc error_code_of(F&& fn) {
  try {
    fn();
  } catch (const gridrisk::Error& e) {
    return e.code();
  }
  throw std::logic_error("expected a gridrisk::Error");
}

template <typename F>
std::string error_message_of(F&& fn) {
  try {
    fn();
  } catch (const gridrisk::Error& e) {
    return e.what();
  }
  throw std::logic_error("expected a gridrisk::Error");
}

// Scratch directory wiped on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 1000; ++i) {
      auto candidate = base / ("gridrisk_test_" + std::to_string(::getpid()) +
                               "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testutil
