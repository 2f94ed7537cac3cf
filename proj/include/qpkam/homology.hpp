#pragma once

#include "diophantine.hpp"
#include "groups.hpp"
#include "trivial_map.hpp"

namespace qpkam {

struct DivisorEntry {
  HalfIndex m;
  int L = 0, Lp = 0;
  double divisor_modulus = 0.0;
  double bound = 0.0;
};

struct HomologicalSolution {
  TorusSeries X;
  double N = 0.0;
  std::vector<DivisorEntry> divisor_log;
  double residual = 0.0;         // coefficient-sum norm of the defect
  double algebra_defect = 0.0;
  double estimate_measured = 0.0;  // |Phi^{-1} X Phi|_{r'}
  double estimate_bound = 0.0;     // closed-form certificate (0 when Phi absent)
};

struct HomologyOptions {
  double C0 = 8.0;
  double Cprime = 0.0;  // 0 -> derived default
  double D = 0.0;       // 0 -> derived default
  double divisor_safety = 0.5;
  double r = 0.0, r_prime = 0.0;  // for the estimate certificate
};

namespace detail {

inline Mat vec_of(const Mat& M) {
  Mat v(M.size(), 1);
  int at = 0;
  for (int j = 0; j < M.cols(); ++j)
    for (int i = 0; i < M.rows(); ++i) v(at++, 0) = M(i, j);
  return v;
}
inline Mat unvec(const Mat& v, int n) {
  Mat M(n, n);
  int at = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) M(i, j) = v(at++, 0);
  return M;
}
inline Mat kron(const Mat& A, const Mat& B) {
  Mat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

}  // namespace detail

// Blockwise solve: for each mode and block pair, invert the shifted Sylvester
// operator restricted to the range of M -> P_L M P_{L'}.
inline HomologicalSolution solve_homological(const Mat& Atilde, const TorusSeries& F,
                                             double N, const Decomposition& dec,
                                             const TrivialMap* phi, const LieGroupTag& G,
                                             double kappa_prime, const Frequency& freq,
                                             HomologyOptions opt = {}) {
  const int n = F.n;
  HomologicalSolution sol;
  sol.N = N;
  sol.X = TorusSeries::zero(n, F.d, F.declared_r, F.reg);

  // per-subspace spectra of Atilde
  std::vector<std::vector<cxd>> specs;
  for (const auto& s : dec.subspaces)
    specs.push_back(eigenvalues_of(Mat(s.basis.adjoint() * Atilde * s.basis)));

  const int n2 = n * n;
  for (const auto& [m, C] : F.coeffs) {
    if (m.is_zero() || m.abs() > N) continue;
    const cxd divisor_shift(0.0, kTwoPi * m.dot(freq.omega));
    Mat Xm = Mat::Zero(n, n);
    for (size_t li = 0; li < dec.subspaces.size(); ++li)
      for (size_t lj = 0; lj < dec.subspaces.size(); ++lj) {
        const Mat& PL = dec.subspaces[li].projection;
        const Mat& PLp = dec.subspaces[lj].projection;
        Mat B = PL * C * PLp;
        if (B.norm() <= 1e-300) continue;

        double dmin = 1e300;
        for (cxd a : specs[li])
          for (cxd b : specs[lj]) dmin = std::min(dmin, std::abs(divisor_shift - (a - b)));
        DivisorEntry ent;
        ent.m = m;
        ent.L = dec.subspaces[li].label;
        ent.Lp = dec.subspaces[lj].label;
        ent.divisor_modulus = dmin;
        ent.bound = kappa_prime / std::pow(m.abs(), freq.tau);
        sol.divisor_log.push_back(ent);
        if (dmin < ent.bound * opt.divisor_safety)
          throw std::runtime_error("solve_homological: divisor below the certified bound at "
                                   "mode " + m.str() + " blocks (" +
                                   std::to_string(ent.L) + "," + std::to_string(ent.Lp) + ")");

        Mat K = divisor_shift * Mat::Identity(n2, n2) -
                (detail::kron(Mat::Identity(n, n), Mat(Atilde * PL)) -
                 detail::kron(Mat((PLp * Atilde).transpose()), Mat::Identity(n, n)));
        // orthonormal basis of the block range
        Mat T = detail::kron(Mat(PLp.transpose()), PL);
        Eigen::ColPivHouseholderQR<Mat> qr(T);
        qr.setThreshold(1e-10);
        int rank = static_cast<int>(qr.rank());
        if (rank == 0) continue;
        Mat Q = qr.householderQ() * Mat::Identity(n2, rank);
        Mat Ks = Q.adjoint() * K * Q;
        Mat y = Ks.fullPivLu().solve(Q.adjoint() * detail::vec_of(B));
        Xm += detail::unvec(Mat(Q * y), n);
      }
    sol.X.set(m, Xm);
  }
  sol.X.real_flag = F.real_flag;

  // residual of d_omega X = [Atilde, X] + F^N - F_hat(0)
  TorusSeries lhs = directional_derivative(sol.X, freq.omega);
  TorusSeries bracket = sub(multiply(TorusSeries::constant(Atilde, F.d, F.declared_r, F.reg), sol.X),
                            multiply(sol.X, TorusSeries::constant(Atilde, F.d, F.declared_r, F.reg)));
  TorusSeries rhs = bracket;
  for (const auto& [m, C] : F.coeffs)
    if (!m.is_zero() && m.abs() <= N) rhs.add_to(m, C);
  TorusSeries defect = sub(lhs, rhs);
  double resid = 0.0;
  for (const auto& [m, C] : defect.coeffs) resid += opnorm(C);
  sol.residual = resid;
  sol.algebra_defect = algebra_defect_series(sol.X, G);

  if (phi) {
    double r = opt.r > 0.0 ? opt.r : F.declared_r;
    double rp = opt.r_prime > 0.0 ? opt.r_prime : 0.5 * r;
    double gamma = dec.gamma_cert;
    double tau = freq.tau;
    double an = opnorm(nilpotent_part(Atilde).AN);
    double D = opt.D > 0.0 ? opt.D : std::ceil(tau * n2 + F.d + 1);
    double Cp = opt.Cprime > 0.0
                    ? opt.Cprime
                    : n2 * std::pow(2.0, n2) * std::pow(2.0 * opt.C0, 2.0 * n2) *
                          std::tgamma(tau * n2 + F.d + 1.0);
    TorusSeries conjX = conjugate_by_trivial(sol.X, *phi);
    TorusSeries conjF = conjugate_by_trivial(F, *phi);
    sol.estimate_measured = class_norm(conjX, rp);
    sol.estimate_bound = Cp * std::pow((1.0 + an) / ((r - rp) * kappa_prime),
                                       2.0 * n2 * gamma + D) *
                         class_norm(conjF, r);
  }
  return sol;
}

// Independent path: entrywise triangular solve in a Schur basis of Atilde.
inline TorusSeries solve_homological_schur(const Mat& Atilde, const TorusSeries& F, double N,
                                           const Frequency& freq) {
  const int n = F.n;
  Eigen::ComplexSchur<Mat> schur(Atilde, true);
  Mat T = schur.matrixT(), U = schur.matrixU();
  TorusSeries X = TorusSeries::zero(n, F.d, F.declared_r, F.reg);
  for (const auto& [m, C] : F.coeffs) {
    if (m.is_zero() || m.abs() > N) continue;
    const cxd mu(0.0, kTwoPi * m.dot(freq.omega));
    Mat f = U.adjoint() * C * U;
    Mat x = Mat::Zero(n, n);
    for (int i = n - 1; i >= 0; --i)
      for (int k = 0; k < n; ++k) {
        cxd rhs = f(i, k);
        for (int l = i + 1; l < n; ++l) rhs += T(i, l) * x(l, k);
        for (int l = 0; l < k; ++l) rhs -= x(i, l) * T(l, k);
        x(i, k) = rhs / (mu - T(i, i) + T(k, k));
      }
    X.set(m, Mat(U * x * U.adjoint()));
  }
  X.real_flag = F.real_flag;
  return X;
}

// the proof's Neumann-form resolvent bound, reproduced as a certificate
inline double neumann_resolvent_bound(const Mat& Atilde, const Decomposition& dec,
                                      size_t li, size_t lj, double abs_m, double kappa_prime,
                                      double tau) {
  int n = static_cast<int>(Atilde.rows());
  double an = opnorm(nilpotent_part(Atilde).AN);
  double pl = opnorm(dec.subspaces[li].projection);
  double plp = opnorm(dec.subspaces[lj].projection);
  double n2 = n * n;
  return n2 * std::pow(2.0, n2) * std::pow(1.0 + an * (pl + plp), n2 - 1.0) *
         std::pow(std::pow(abs_m, tau) / kappa_prime, n2 - 1.0);
}

}  // namespace qpkam
