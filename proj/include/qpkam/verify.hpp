#pragma once

#include "diophantine.hpp"
#include "series.hpp"
#include "trivial_map.hpp"

namespace qpkam {

struct ResidualReport {
  int grid_points = 0;
  double sup_residual = 0.0;
  double relative_to = 1.0;
};

// RK4 integration of d/dt X = A(theta0 + t omega) X, X(0) = Id
inline Mat cocycle_integrate(const TorusSeries& Aseries, const std::vector<double>& theta0,
                             double T, int steps, const Frequency& freq) {
  if (steps < 1) throw std::invalid_argument("cocycle_integrate: steps must be >= 1");
  const double h = T / steps;
  Mat X = Mat::Identity(Aseries.n, Aseries.n);
  auto at = [&](double t) {
    std::vector<double> th = theta0;
    for (int j = 0; j < Aseries.d; ++j) th[j] += t * freq.omega[j];
    return eval(Aseries, th);
  };
  for (int i = 0; i < steps; ++i) {
    double t = i * h;
    Mat A1 = at(t), A2 = at(t + 0.5 * h), A4 = at(t + h);
    Mat k1 = A1 * X;
    Mat k2 = A2 * (X + 0.5 * h * k1);
    Mat k3 = A2 * (X + 0.5 * h * k2);
    Mat k4 = A4 * (X + h * k3);
    X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return X;
}

// sup over a uniform grid of || d_omega Z - lhs Z + Z rhs ||
inline ResidualReport conjugacy_residual(const TorusSeries& lhs, const TorusSeries& Z,
                                         const TorusSeries& rhs, int grid,
                                         const Frequency& freq) {
  TorusSeries dZ = directional_derivative(Z, freq.omega);
  ResidualReport rep;
  rep.grid_points = 1;
  for (int j = 0; j < Z.d; ++j) rep.grid_points *= grid;
  std::vector<int> idx(Z.d, 0);
  for (int p = 0; p < rep.grid_points; ++p) {
    int q = p;
    std::vector<double> th(Z.d);
    for (int j = 0; j < Z.d; ++j) {
      th[j] = 2.0 * (q % grid) / grid;
      q /= grid;
    }
    Mat res = eval(dZ, th) - eval(lhs, th) * eval(Z, th) + eval(Z, th) * eval(rhs, th);
    rep.sup_residual = std::max(rep.sup_residual, opnorm(res));
  }
  return rep;
}

inline bool npp_check(const TorusSeries& F, const TrivialMap& phi, double tol = 1e-12) {
  TorusSeries G = conjugate_by_trivial(F, phi);
  for (const auto& [m, C] : G.coeffs)
    if (!m.is_integer() && opnorm(C) > tol) return false;
  return true;
}

struct DriftReport {
  double worst_ratio = 0.0;  // measured drift / bound, over all sampled lambda
  bool holds = true;
  bool collision_flag = false;
};

// eigenvalue drift of A + lambda F over lambda in (0,1], set-distance form
inline DriftReport eigenvalue_drift_bound(const Mat& A, const Mat& F, int lambda_samples,
                                          bool compact = false) {
  const int n = static_cast<int>(A.rows());
  if (opnorm(F) > 1.0 + 1e-12)
    throw std::invalid_argument("eigenvalue_drift_bound: ||F|| must be <= 1");
  DriftReport rep;
  std::vector<cxd> base = eigenvalues_of(A);
  double na = opnorm(A);
  for (int i = 1; i <= lambda_samples; ++i) {
    double lam = static_cast<double>(i) / lambda_samples;
    std::vector<cxd> cur = eigenvalues_of(A + lam * F);
    double bound = compact ? lam : 2.0 * n * std::pow(lam, 1.0 / n) * (na + 1.0);
    // for each perturbed eigenvalue there must be a close unperturbed one
    double drift = eigenvalue_set_distance(cur, base);
    rep.worst_ratio = std::max(rep.worst_ratio, drift / bound);
  }
  rep.holds = rep.worst_ratio <= 1.0;
  return rep;
}

struct SauzinReport {
  bool holds = true;
  double worst_lower = 1e300;  // min of E/lower-bound
  double worst_upper = 0.0;    // max of E/upper-bound
};

// two-sided exponential comparison for E_a(r) = sum r^k / k!^a
inline SauzinReport series_bounds_check(double a, double lambda,
                                        const std::vector<double>& r_samples) {
  if (a <= 0.0 || a == 1.0) throw std::invalid_argument("series_bounds_check: bad exponent");
  bool upper_regime = a > 1.0;  // lambda < 1 expected; reversed for a < 1
  double K1 = std::pow(1.0 - std::pow(lambda, a / (a - 1.0)), a - 1.0);
  SauzinReport rep;
  for (double r : r_samples) {
    double E = gevrey_E(a, r);
    double lo, hi;
    if (upper_regime) {
      lo = K1 * std::exp(lambda * a * std::pow(r, 1.0 / a));
      hi = std::exp(a * std::pow(r, 1.0 / a));
    } else {
      lo = std::exp(a * std::pow(r, 1.0 / a));
      hi = K1 * std::exp(lambda * a * std::pow(r, 1.0 / a));
    }
    rep.worst_lower = std::min(rep.worst_lower, E / lo);
    rep.worst_upper = std::max(rep.worst_upper, E / hi);
    if (E < lo * (1.0 - 1e-12) || E > hi * (1.0 + 1e-12)) rep.holds = false;
  }
  return rep;
}

}  // namespace qpkam
