#pragma once

#include <Eigen/Dense>

#include "gridrisk/network.hpp"

namespace gridrisk {

// Gaussian injection model over the n-1 non-slack buses, in bus index order:
// injections = sqrt(sigma) * X + mu with X standard normal.
struct InjectionModel {
  Eigen::VectorXd mu;     // length n-1
  Eigen::MatrixXd sigma;  // (n-1) x (n-1), symmetric PSD
};

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via spectral
// decomposition. Eigenvalues at or below rel_tol * lambda_max are treated as
// the structural kernel; exactly one may fall there (a Laplacian's all-ones
// direction), more mean the graph behind the matrix is disconnected.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& mat,
                               double rel_tol = 1e-9);

// Symmetric PSD square root. Eigenvalues in [-tol, 0] clamp to zero so
// rank-deficient covariances pass; below -tol is an error.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma, double tol = 1e-8);

// n x (n-1) embedding of non-slack injections into zero-sum bus injections:
// identity on non-slack rows (in bus index order), -1 across the slack row.
Eigen::MatrixXd slack_embedding(int n, int slack);

struct FlowFactorization {
  Eigen::MatrixXd l_pinv;  // n x n
  Eigen::MatrixXd ptdf;    // m x n, capacity-normalized injection-to-flow map
  Eigen::MatrixXd w_mat;   // m x (n-1), ptdf * slack embedding
  Eigen::MatrixXd v_mat;   // m x (n-1), w_mat * sqrt(sigma)
  Eigen::VectorXd nu;      // m, mean normalized flows = w_mat * mu
  Eigen::VectorXd sigma;   // m, per-line flow standard deviations
  int m = 0;
  int n = 0;
  int slack = 0;

  double max_sigma() const { return m ? sigma.maxCoeff() : 0.0; }
};

// Validates the network, checks model dimensions, and assembles the full
// normalized flow law: flows = v_mat * X + nu in units of line capacity.
FlowFactorization factorize(const Network& net, const InjectionModel& model,
                            double rel_tol = 1e-9);

}  // namespace gridrisk
