#pragma once

#include "diophantine.hpp"
#include "groups.hpp"
#include "series.hpp"

namespace qpkam {

enum class RunMode { theoretical, practical };

struct ScheduleCaps {
  double N_max = 64.0;
  double R_max = 16.0;
  double modes_max = 4096.0;
  double order_cap = 1e4;  // largest order any DC verification will enumerate
};

struct ScheduleParams {
  double kappa = 0.0, tau = 1.0;
  double gamma0 = 0.0;  // initial decomposition exponent, n(n+1) by default
  double C0 = 8.0;
  double Cprime = 0.0;   // 0 -> derived per-instance (homological estimate)
  double Csecond = 1.0;  // norm-equivalence constant
  double D = 0.0;        // 0 -> derived per-instance
  double D1 = 2.0, D3 = 8.0, D5 = 2.0, D7 = 16.0, D8 = 4.0;
  double c_nr = 1e-3;  // spectrum-persistence constant
  double contraction_exponent = 1.5;
  double eps_power = 100.0;
  ScheduleCaps caps;
  RunMode mode = RunMode::practical;

  static ScheduleParams from(const Frequency& freq, int n,
                             RunMode mode = RunMode::practical) {
    ScheduleParams p;
    p.kappa = freq.kappa;
    p.tau = freq.tau;
    p.gamma0 = n * (n + 1);
    p.mode = mode;
    return p;
  }
  void validate() const {
    if (kappa <= 0.0 || tau < 1.0 || gamma0 <= 0.0 || C0 <= 0.0 || c_nr <= 0.0 ||
        contraction_exponent <= 1.0 || eps_power < 2.0 || caps.N_max <= 0.0 ||
        caps.R_max <= 0.0 || caps.modes_max <= 0.0)
      throw std::invalid_argument("ScheduleParams: all constants must be positive");
  }
};

struct Schedule {
  double N = 0.0;         // truncation order
  double R = 0.0;         // resonance-removal amplification factor
  double kappa2 = 0.0;    // spectral gap for the next decomposition
  double N_formula = 0.0; // uncapped values, for the log
  double R_formula = 0.0;
  bool capped = false;
};

// step-size schedule: truncation order from the target norm, amplification from
// the analyticity loss, and the resulting spectral gap
inline Schedule schedules(double r, double r_prime, double eps, int n,
                          const ScheduleParams& params,
                          Regularity reg = Regularity::analytic()) {
  if (!(r_prime > 0.0 && r_prime < r && r <= 0.5))
    throw std::invalid_argument("schedules: need 0 < r' < r <= 1/2");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("schedules: need 0 < eps < 1");
  params.validate();
  Schedule s;
  double hc = 0.5 * n * (n - 1) + 1.0;
  s.N_formula = std::abs(std::log(eps)) / (kTwoPi * r);
  s.R_formula = std::pow(80.0, 4) * hc * hc / std::pow(r - r_prime, 8);
  if (reg.gevrey) {
    s.N_formula = std::pow(s.N_formula, reg.beta);
    s.R_formula = std::pow(s.R_formula, reg.beta);
  }
  s.N = s.N_formula;
  s.R = s.R_formula;
  if (params.mode == RunMode::practical) {
    if (s.N > params.caps.N_max) { s.N = params.caps.N_max; s.capped = true; }
    if (s.R > params.caps.R_max) { s.R = params.caps.R_max; s.capped = true; }
  }
  double order = std::pow(s.R, hc) * s.N;
  if (params.mode == RunMode::practical && order > params.caps.order_cap) {
    order = params.caps.order_cap;
    s.capped = true;
  }
  s.kappa2 = params.kappa / (n * std::pow(8.0 * order, params.tau));
  return s;
}

struct PersistenceReport {
  bool ok = false;
  double margin = 0.0;  // threshold/eps_tilde - 1; >= 0 iff ok (with cond2)
  bool cond1 = false, cond2 = false;
  double threshold = 0.0;
};

// Smallness test licensing spectrum persistence under a perturbation of norm
// eps_tilde: if it passes, Atilde + E keeps a (3/4 kappa', tau)-separated
// spectrum up to order Ntilde for every ||E|| <= eps_tilde.
inline PersistenceReport spectrum_persistence(const Mat& Atilde, double eps_tilde,
                                              double Ntilde, double kappa_prime, double C,
                                              const LieGroupTag& G,
                                              const ScheduleParams& params) {
  PersistenceReport rep;
  const int n = static_cast<int>(Atilde.rows());
  double base = std::pow(C, params.tau) * kappa_prime;
  rep.threshold = G.compact()
                      ? params.c_nr * base * base
                      : params.c_nr * std::pow(base / (1.0 + opnorm(Atilde)), 2.0 * n);
  if (eps_tilde == 0.0) {
    rep.ok = rep.cond1 = rep.cond2 = true;
    rep.margin = 1e300;
    return rep;
  }
  rep.cond1 = eps_tilde <= rep.threshold;
  rep.cond2 = Ntilde <= std::abs(std::log(eps_tilde)) / C;
  rep.ok = rep.cond1 && rep.cond2;
  rep.margin = rep.threshold / eps_tilde - 1.0;
  return rep;
}

struct IterationPlan {
  std::vector<double> log_eps;  // log(eps_k); the values themselves underflow fast
  std::vector<double> r_seq, gamma_seq, b_seq;
  bool admissible = true;          // all checked inequalities hold
  std::vector<bool> epsk0_holds;   // |log eps_k|^{2 D5 gamma_k} <= eps_k^{-1/4}
  std::vector<bool> epsk1_holds;   // ((b_k+1)/(r_k - r_{k+1}))^{D5 gamma_k} eps_k <= C'
  double eps_threshold = 0.0;      // admissibility threshold on eps
};

// geometric-in-the-exponent step plan: eps_k = eps^{eps_power^k}, the strip
// radii halve the remaining gap, budgets follow the norm-growth recursion
inline IterationPlan plan_iteration(const ScheduleParams& params, double b0, double r,
                                    double r_prime, double eps, int horizon = 8) {
  if (!(r_prime >= 95.0 / 96.0 * r && r_prime < r))
    throw std::invalid_argument("plan_iteration: need r' in [95r/96, r)");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("plan_iteration: need 0 < eps < 1");
  IterationPlan plan;
  plan.eps_threshold =
      std::pow((r - r_prime) / (b0 + 1.0), 2.0 * params.gamma0 * params.D5);
  if (params.mode == RunMode::theoretical && eps > plan.eps_threshold)
    plan.admissible = false;
  const double Cp = 1.0;
  double log_eps0 = std::log(eps);
  for (int k = 0; k <= horizon; ++k) {
    double log_ek = log_eps0 * std::pow(params.eps_power, k);
    double gk = std::pow(2.0, k) * params.gamma0;
    double rk = r_prime + (r - r_prime) / std::pow(2.0, k);
    plan.log_eps.push_back(log_ek);
    plan.gamma_seq.push_back(gk);
    plan.r_seq.push_back(rk);
    double bk = k == 0 ? b0
                       : plan.b_seq.back() +
                             std::abs(plan.log_eps[k - 1]) *
                                 std::pow(std::pow(2.0, k) / (r - r_prime), params.D5);
    plan.b_seq.push_back(bk);
    // in log space: 2 D5 gamma_k log|log eps_k| <= -log(eps_k)/4
    bool e0 = 2.0 * params.D5 * gk * std::log(std::abs(log_ek)) <= -log_ek / 4.0;
    double rk1 = r_prime + (r - r_prime) / std::pow(2.0, k + 1);
    bool e1 = params.D5 * gk * std::log((bk + 1.0) / (rk - rk1)) + log_ek <= std::log(Cp);
    plan.epsk0_holds.push_back(e0);
    plan.epsk1_holds.push_back(e1);
    if (params.mode == RunMode::theoretical && !(e0 && e1)) plan.admissible = false;
  }
  return plan;
}

}  // namespace qpkam
