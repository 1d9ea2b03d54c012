#include "gridrisk/flow_factors.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace gridrisk {

namespace {

void require_square_symmetric(const Eigen::MatrixXd& mat, const char* what) {
  if (mat.rows() != mat.cols()) {
    std::ostringstream os;
    os << what << " must be square, got " << mat.rows() << "x" << mat.cols();
    fail(Errc::dimension_mismatch, os.str());
  }
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  const double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream os;
    os << what << " is not symmetric (max asymmetry " << asym << ")";
    fail(Errc::not_symmetric, os.str());
  }
}

}  // namespace

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& mat, double rel_tol) {
  require_square_symmetric(mat, "pseudo_inverse input");
  if (!(rel_tol > 0.0)) fail(Errc::bad_argument, "rel_tol must be positive");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
  if (es.info() != Eigen::Success)
    fail(Errc::bad_argument, "eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lambda_max = ev.cwiseAbs().maxCoeff();
  const double cut = rel_tol * lambda_max;

  int kernel_dim = 0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) <= cut) {
      ++kernel_dim;  // structural zero, excluded
    } else {
      inv(i) = 1.0 / ev(i);
    }
  }
  if (kernel_dim > 1 && lambda_max > 0.0) {
    std::ostringstream os;
    os << kernel_dim << " eigenvalues below " << cut
       << "; matrix kernel is larger than the all-ones direction"
          " (disconnected graph?)";
    fail(Errc::multiple_zero_eigenvalues, os.str());
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma, double tol) {
  require_square_symmetric(sigma, "covariance");
  if (!(tol >= 0.0)) fail(Errc::bad_argument, "tol must be nonnegative");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success)
    fail(Errc::bad_argument, "eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol) {
      std::ostringstream os;
      os << "covariance has eigenvalue " << ev(i) << " below -" << tol;
      fail(Errc::not_psd, os.str());
    }
    ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd slack_embedding(int n, int slack) {
  if (n < 2) fail(Errc::bad_argument, "need at least two buses");
  if (slack < 0 || slack >= n) {
    std::ostringstream os;
    os << "slack index " << slack << " out of range for " << n << " buses";
    fail(Errc::bad_slack_index, os.str());
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n - 1);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (i == slack) continue;
    s(i, col++) = 1.0;
  }
  s.row(slack).setConstant(-1.0);
  return s;
}

FlowFactorization factorize(const Network& net, const InjectionModel& model,
                            double rel_tol) {
  validate(net);
  const int n = net.bus_count();
  const int m = net.line_count();

  if (model.mu.size() != n - 1) {
    std::ostringstream os;
    os << "mu has length " << model.mu.size() << ", expected " << n - 1;
    fail(Errc::dimension_mismatch, os.str());
  }
  if (model.sigma.rows() != n - 1 || model.sigma.cols() != n - 1) {
    std::ostringstream os;
    os << "sigma is " << model.sigma.rows() << "x" << model.sigma.cols()
       << ", expected " << n - 1 << "x" << n - 1;
    fail(Errc::dimension_mismatch, os.str());
  }

  FlowFactorization f;
  f.m = m;
  f.n = n;
  f.slack = net.slack_index();
  f.l_pinv = pseudo_inverse(laplacian(net), rel_tol);

  Eigen::VectorXd inv_cap(m);
  for (int l = 0; l < m; ++l)
    inv_cap(l) = 1.0 / net.lines[static_cast<size_t>(l)].capacity;
  f.ptdf = inv_cap.asDiagonal() * weighted_incidence(net) * f.l_pinv;

  f.w_mat = f.ptdf * slack_embedding(n, f.slack);
  f.v_mat = f.w_mat * psd_sqrt(model.sigma);
  f.nu = f.w_mat * model.mu;
  f.sigma = f.v_mat.rowwise().norm();
  return f;
}

}  // namespace gridrisk
