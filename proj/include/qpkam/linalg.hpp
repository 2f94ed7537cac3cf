#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <complex>
#include <stdexcept>
#include <vector>

namespace qpkam {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// operator 2-norm (largest singular value); matrices here are tiny
inline double opnorm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

inline double opnorm_real_part(const Mat& M) { return opnorm(M.real().cast<cxd>()); }
inline double opnorm_imag_part(const Mat& M) { return opnorm(M.imag().cast<cxd>()); }

inline Mat identity(int n) { return Mat::Identity(n, n); }

// standard symplectic form J = [[0, -I],[I, 0]], n even
inline Mat symplectic_J(int n) {
  if (n % 2 != 0) throw std::invalid_argument("symplectic form needs even dimension");
  Mat J = Mat::Zero(n, n);
  int h = n / 2;
  J.topRightCorner(h, h) = -Mat::Identity(h, h);
  J.bottomLeftCorner(h, h) = Mat::Identity(h, h);
  return J;
}

inline std::vector<cxd> eigenvalues_of(const Mat& A) {
  Eigen::ComplexEigenSolver<Mat> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalue computation failed");
  std::vector<cxd> out(A.rows());
  for (int i = 0; i < A.rows(); ++i) out[i] = es.eigenvalues()(i);
  return out;
}

// symmetric Hausdorff distance between two eigenvalue multisets: every point of
// each set must have a close partner in the other (no one-to-one matching, which
// would overstate the distance when eigenvalues cluster)
inline double eigenvalue_set_distance(std::vector<cxd> a, std::vector<cxd> b) {
  if (a.size() != b.size()) throw std::invalid_argument("set distance needs equal sizes");
  double worst = 0.0;
  auto directed = [&](const std::vector<cxd>& from, const std::vector<cxd>& to) {
    for (const cxd& x : from) {
      double best = 1e300;
      for (const cxd& y : to) best = std::min(best, std::abs(x - y));
      worst = std::max(worst, best);
    }
  };
  directed(a, b);
  directed(b, a);
  return worst;
}

inline double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace qpkam
