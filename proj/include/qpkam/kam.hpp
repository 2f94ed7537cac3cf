#pragma once

#include <optional>

#include "homology.hpp"
#include "resonance.hpp"
#include "schedule.hpp"
#include "verify.hpp"

namespace qpkam {

struct ContractionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline TorusSeries const_like(const Mat& C, const TorusSeries& like) {
  return TorusSeries::constant(C, like.d, like.declared_r, like.reg);
}
inline TorusSeries id_like(const TorusSeries& like) {
  return TorusSeries::identity(like.n, like.d, like.declared_r, like.reg);
}

}  // namespace detail

struct InductiveCertificates {
  double eps_tilde = 0.0;       // measured |F~|
  double mean_norm = 0.0;       // ||F~^(0)||
  bool moypt_ok = true;         // smallness of the mean vs the derived threshold
  bool order_ok = true;         // N~ <= |log eps~| / C
  double dc_margin_out = 0.0;   // margin of A' at (3/4) kappa'
  bool dc_out_ok = true;
  double conj_residual = 0.0;   // grid residual of the conjugation identity
  double drift = 0.0;           // ||A' - A~||
  double discarded_mass = 0.0;  // support-cap ledger
  double estimate_measured = 0.0, estimate_bound = 0.0;  // conjugated-solution bound
};

struct InductiveResult {
  TorusSeries X;
  TorusSeries eX, emX;  // exp(X), exp(-X) as computed (kept for composition)
  Mat Aprime;
  TorusSeries Fprime;
  Decomposition dec_prime;
  HomologicalSolution hom;
  InductiveCertificates cert;
};

// One linearized conjugation step: solve the homological equation up to order
// Ntilde, absorb the mean into the constant part, and assemble the new
// perturbation exactly in the series algebra.
inline InductiveResult inductive_step(const Mat& Atilde, const TorusSeries& Ftilde,
                                      const Decomposition& dec, const TrivialMap* phi,
                                      const ScheduleParams& params, double r_tilde,
                                      double r_tilde_prime, double kappa_prime,
                                      double Ntilde, double C, const LieGroupTag& G,
                                      const Frequency& freq, int residual_grid = 12) {
  const int n = Ftilde.n;
  InductiveResult out;
  auto& cert = out.cert;
  cert.eps_tilde = class_norm(Ftilde, r_tilde);
  cert.mean_norm = opnorm(Ftilde.mean());

  DcReport dc_in = spectrum_is_dc(Atilde, kappa_prime, freq.tau, Ntilde, freq);
  if (!dc_in.holds)
    throw std::runtime_error("inductive_step: constant part fails the spectral separation "
                             "hypothesis at order " + std::to_string(Ntilde) +
                             " (margin " + std::to_string(dc_in.worst_margin) + ")");

  double base = std::pow(C, params.tau) * kappa_prime;
  double moypt_threshold =
      G.compact() ? params.Csecond * base * base
                  : params.Csecond * std::pow(base / (1.0 + opnorm(Atilde)), 2.0 * n);
  cert.moypt_ok = cert.mean_norm <= cert.eps_tilde + 1e-300 &&
                  cert.eps_tilde <= moypt_threshold;
  cert.order_ok = cert.eps_tilde <= 0.0 ||
                  Ntilde <= std::abs(std::log(cert.eps_tilde)) / C;
  if (params.mode == RunMode::theoretical) {
    if (!cert.moypt_ok)
      throw std::runtime_error("inductive_step: mean-smallness hypothesis fails");
    if (!cert.order_ok)
      throw std::runtime_error("inductive_step: truncation order exceeds |log eps|/C");
  }

  if (cert.eps_tilde == 0.0) {
    out.X = TorusSeries::zero(n, Ftilde.d, Ftilde.declared_r, Ftilde.reg);
    out.eX = detail::id_like(Ftilde);
    out.emX = detail::id_like(Ftilde);
    out.Aprime = Atilde;
    out.Fprime = out.X;
    out.dec_prime = dec;
    return out;
  }

  // with the support-degree floor, polynomial inputs truncate exactly
  double N_use = Ntilde;
  if (params.mode == RunMode::practical)
    N_use = std::max(N_use, Ftilde.support_degree());
  TruncationResult trunc = truncate(Ftilde, N_use, r_tilde_prime);
  const TorusSeries& FN = trunc.series;
  Mat F0 = Ftilde.mean();

  HomologyOptions hopt;
  hopt.C0 = params.C0;
  hopt.Cprime = params.Cprime;
  hopt.D = params.D;
  hopt.r = r_tilde;
  hopt.r_prime = r_tilde_prime;
  out.hom = solve_homological(Atilde, FN, N_use, dec, phi, G, kappa_prime, freq, hopt);
  out.X = out.hom.X;
  cert.estimate_measured = out.hom.estimate_measured;
  cert.estimate_bound = out.hom.estimate_bound;

  out.Aprime = Atilde + F0;
  cert.drift = opnorm(Mat(out.Aprime - Atilde));

  double tol_exp = std::max(1e-300, 1e-8 * cert.eps_tilde * cert.eps_tilde);
  double support_cap = params.mode == RunMode::practical
                           ? 4.0 * std::max(N_use, Ftilde.support_degree())
                           : -1.0;
  out.eX = exp_series(out.X, tol_exp, 5.0, support_cap, &cert.discarded_mass);
  out.emX = exp_series(scale(out.X, -1.0), tol_exp, 5.0, support_cap, &cert.discarded_mass);

  // F' = e^{-X}(F~ - F~^N) + e^{-X} F~ (e^X - Id) + (e^{-X} - Id) F~^(0)
  //      - e^{-X} sum_{k>=2} (1/k!) sum_{l<k} X^l (F~^N - F~^(0)) X^{k-1-l}
  TorusSeries Id = detail::id_like(Ftilde);
  TorusSeries F0s = detail::const_like(F0, Ftilde);
  TorusSeries tail = sub(Ftilde, FN);
  TorusSeries term1 = multiply(out.emX, tail);
  TorusSeries term2 = multiply(multiply(out.emX, Ftilde), sub(out.eX, Id));
  TorusSeries term3 = multiply(sub(out.emX, Id), F0s);

  TorusSeries M = sub(FN, F0s);
  double nx = class_norm(out.X, out.X.declared_r);
  int Kmax = 2;
  double pw = nx * nx / 2.0;
  while (Kmax < 200 && pw > tol_exp) {
    ++Kmax;
    pw *= nx / Kmax;
  }
  std::vector<TorusSeries> Xpow;  // X^0 .. X^{Kmax-1}
  Xpow.push_back(Id);
  for (int k = 1; k < Kmax; ++k) {
    TorusSeries p = multiply(Xpow.back(), out.X);
    if (support_cap > 0.0) p = cap_support(p, support_cap, out.X.declared_r, &cert.discarded_mass);
    Xpow.push_back(p);
  }
  TorusSeries S = TorusSeries::zero(n, Ftilde.d, Ftilde.declared_r, Ftilde.reg);
  double fact = 1.0;
  for (int k = 2; k <= Kmax; ++k) {
    fact *= k;
    TorusSeries inner = TorusSeries::zero(n, Ftilde.d, Ftilde.declared_r, Ftilde.reg);
    for (int l = 0; l <= k - 1; ++l) {
      TorusSeries t = multiply(multiply(Xpow[l], M), Xpow[k - 1 - l]);
      if (support_cap > 0.0)
        t = cap_support(t, support_cap, Ftilde.declared_r, &cert.discarded_mass);
      inner = add(inner, t);
    }
    S = add(S, scale(inner, 1.0 / fact));
  }
  TorusSeries term4 = multiply(out.emX, S);
  out.Fprime = sub(add(add(term1, term2), term3), term4);
  if (support_cap > 0.0)
    out.Fprime = cap_support(out.Fprime, support_cap, r_tilde_prime, &cert.discarded_mass);

  DcReport dc_out = spectrum_is_dc(out.Aprime, 0.75 * kappa_prime, freq.tau, Ntilde, freq);
  cert.dc_out_ok = dc_out.holds;
  cert.dc_margin_out = dc_out.worst_margin;

  out.dec_prime = coarsen_decomposition(out.Fprime, Atilde, out.Aprime, dec);
  out.dec_prime.gap = 0.75 * kappa_prime;

  // conjugation identity on a grid: d_omega e^X = (A~ + F~)e^X - e^X(A' + F')
  TorusSeries lhs = add(detail::const_like(Atilde, Ftilde), Ftilde);
  TorusSeries rhs = add(detail::const_like(out.Aprime, Ftilde), out.Fprime);
  cert.conj_residual = conjugacy_residual(lhs, out.eX, rhs, residual_grid, freq).sup_residual;
  return out;
}

struct FullStepResult {
  TorusSeries Zprime, Zprime_inv;
  TorusSeries Abar_prime, Fbar_prime;
  TorusSeries Psi_prime, Psi_prime_inv;
  Mat Aprime;
  double eps_prime = 0.0;     // measured norm of Fbar' at r''
  double eps_scheduled = 0.0; // the proof's target e^{-2 pi (r - r'') R^{1/4} Nbar}
  bool resonance_flag = false;
  bool half_integer_shift = false;
  double kappa2 = 0.0, Nbar = 0.0, RNbar = 0.0;
  int inner_steps = 0;
  double conj_residual = 0.0;       // Z' transport identity on a grid
  double reducibility_residual = 0.0;  // d_omega Psi' = Abar' Psi' - Psi' A'
  bool sl2_dichotomy_ok = true;
  double normA_prime = 0.0;
  double Zminus_id_norm = 0.0;
  std::vector<InductiveCertificates> inner_certs;
};

// Two-phase step: remove resonances of the constant part, then contract the
// perturbation by iterated linearized conjugations until the scheduled target.
inline FullStepResult full_step(const Mat& A, const TorusSeries& Abar,
                                const TorusSeries& Fbar, const TorusSeries& Psi,
                                const TorusSeries& Psi_inv, double r, double r_second,
                                double gamma, const ScheduleParams& params,
                                const LieGroupTag& G, const Frequency& freq,
                                int residual_grid = 12, int inner_cap = 8) {
  (void)gamma;
  if (!(r_second >= 95.0 / 96.0 * r && r_second < r))
    throw std::invalid_argument("full_step: need r'' in [95r/96, r)");
  const int n = Fbar.n;
  FullStepResult out;
  double eps = class_norm(Fbar, r);

  if (eps == 0.0) {
    out.Zprime = detail::id_like(Fbar);
    out.Zprime_inv = out.Zprime;
    out.Abar_prime = Abar;
    out.Fbar_prime = TorusSeries::zero(n, Fbar.d, Fbar.declared_r, Fbar.reg);
    out.Psi_prime = Psi;
    out.Psi_prime_inv = Psi_inv;
    out.Aprime = A;
    out.normA_prime = opnorm(A);
    return out;
  }

  Schedule sched = schedules(r, r_second, eps, n, params, Fbar.reg);

  // phase 1: reduction of the eigenvalues of A
  EigenvalueReduction red = reduction_of_eigenvalues(
      A, G, sched.R, std::max(2, static_cast<int>(std::ceil(sched.N))), freq,
      params.caps.order_cap);
  out.resonance_flag = red.shift.any_shift();
  for (const auto& m : red.shift.m_js)
    if (!m.is_integer()) out.half_integer_shift = true;
  out.kappa2 = red.shift.kappa2;
  out.Nbar = red.shift.Nbar;
  out.RNbar = red.RNbar;
  if (!red.spectrum_report.holds)
    throw std::runtime_error("full_step: shifted spectrum fails the separation check");
  out.sl2_dichotomy_ok = red.sl2_dichotomy_ok;

  // inner system: F = Psi^{-1} Fbar Psi, then conjugate by the trivial map
  TorusSeries Finner = multiply(multiply(Psi_inv, Fbar), Psi);
  TorusSeries Ftilde = conjugate_by_trivial(Finner, red.Phi);

  out.eps_scheduled =
      std::exp(-kTwoPi * (r - r_second) * std::pow(sched.R, 0.25) * out.Nbar);
  double eps_target = out.eps_scheduled;
  if (params.mode == RunMode::practical)
    eps_target = std::min(eps_target, std::pow(eps, params.contraction_exponent));

  Mat curA = red.Atilde;
  TorusSeries curF = Ftilde;
  Decomposition curdec = red.dec;
  TorusSeries Etot = detail::id_like(Fbar);
  TorusSeries Etot_inv = Etot;

  double half = (r + r_second) / 2.0;
  const int l = inner_cap;
  double C_order = kTwoPi * half;  // so that |log eps| / C >= N(r_j, eps)
  for (int j = 0; j < l; ++j) {
    double cur_eps = class_norm(curF, half);
    if (cur_eps <= eps_target) break;
    double rj = half - j * (r - r_second) / (2.0 * l);
    double rj1 = half - (j + 1) * (r - r_second) / (2.0 * l);
    double kpj = std::pow(0.75, j) * out.kappa2 / params.C0;
    double Nj = j == 0 ? out.RNbar
                       : std::min(std::abs(std::log(cur_eps)) / (kTwoPi * rj),
                                  params.caps.order_cap);
    Nj = std::max(Nj, 2.0);
    const TrivialMap* phi_j = j == 0 && !red.Phi.is_identity() ? &red.Phi : nullptr;
    InductiveResult step = inductive_step(curA, curF, curdec, phi_j, params, rj, rj1,
                                          kpj, Nj, C_order, G, freq, residual_grid);
    out.inner_certs.push_back(step.cert);
    Etot = multiply(Etot, step.eX);
    Etot_inv = multiply(step.emX, Etot_inv);
    curA = step.Aprime;
    curF = step.Fprime;
    curdec = step.dec_prime;
    ++out.inner_steps;
  }

  // assemble the outer objects
  TorusSeries PhiS = red.Phi.to_series(Fbar.declared_r, Fbar.reg);
  TorusSeries PhiS_inv = red.Phi.inverse().to_series(Fbar.declared_r, Fbar.reg);
  out.Psi_prime = multiply(Psi, PhiS);
  out.Psi_prime_inv = multiply(PhiS_inv, Psi_inv);
  out.Zprime = multiply(multiply(out.Psi_prime, Etot), out.Psi_prime_inv);
  out.Zprime_inv = multiply(multiply(out.Psi_prime, Etot_inv), out.Psi_prime_inv);
  out.Aprime = curA;
  out.normA_prime = opnorm(curA);

  out.Abar_prime = add(
      multiply(multiply(out.Psi_prime, detail::const_like(curA, Fbar)), out.Psi_prime_inv),
      multiply(directional_derivative(out.Psi_prime, freq.omega), out.Psi_prime_inv));
  out.Fbar_prime = multiply(multiply(out.Psi_prime, curF), out.Psi_prime_inv);
  out.eps_prime = class_norm(out.Fbar_prime, r_second);
  out.Zminus_id_norm = class_norm(sub(out.Zprime, detail::id_like(Fbar)), r_second);

  if (out.eps_prime > std::pow(eps, params.contraction_exponent))
    throw ContractionFailure(
        "full_step: contraction failed (eps' = " + std::to_string(out.eps_prime) +
        " > eps^" + std::to_string(params.contraction_exponent) + " = " +
        std::to_string(std::pow(eps, params.contraction_exponent)) + ")");

  if (G.sl2_like() && out.resonance_flag && !out.sl2_dichotomy_ok)
    throw std::runtime_error("full_step: SL2 dichotomy violated after resonance removal");

  // periodicity discipline: integer shifts preserve torus-periodicity
  if (Abar.torus_periodic() && Fbar.torus_periodic() && Psi.torus_periodic() &&
      !out.half_integer_shift) {
    if (!out.Zprime.torus_periodic() || !out.Abar_prime.torus_periodic() ||
        !out.Fbar_prime.torus_periodic())
      throw std::runtime_error("full_step: torus-periodicity lost without a half-integer shift");
  }

  // conjugation transport and reducibility residuals on a grid
  out.conj_residual = conjugacy_residual(add(Abar, Fbar), out.Zprime,
                                         add(out.Abar_prime, out.Fbar_prime),
                                         residual_grid, freq).sup_residual;
  out.reducibility_residual =
      conjugacy_residual(out.Abar_prime, out.Psi_prime,
                         detail::const_like(curA, Fbar), residual_grid, freq).sup_residual;
  return out;
}

struct KamState {
  int k = 0;
  double r_k = 0.0;
  Mat A_k;
  TorusSeries Abar_k, Fbar_k, Psi_k, Psi_inv_k;
  Decomposition dec_k;
  double gamma_k = 0.0;
  double b_k = 0.0;
  double eps_k = 0.0;
  bool resonance_flag = false;
  // per-step diagnostics for the run log
  double eps_scheduled = 0.0, Nbar_k = 0.0, kappa2_k = 0.0;
  double residual = 0.0, group_defect_k = 0.0;
};

struct KamRun {
  std::vector<KamState> states;
  TorusSeries Z_total, Z_total_inv;
  std::vector<double> residual_log, norm_log, cauchy_log;
  bool target_reached = false;
};

// Iterate full_step along the halving strip schedule until the measured
// perturbation norm reaches the target.
inline KamRun almost_reduce(const Mat& A, const TorusSeries& F, const LieGroupTag& G,
                            double r, double r_prime, double target_eps,
                            const ScheduleParams& params, const Frequency& freq,
                            int max_steps = 12, int residual_grid = 12) {
  if (F.declared_r < r)
    throw std::invalid_argument("almost_reduce: series declared below the requested radius");
  KamRun run;
  KamState st;
  st.k = 0;
  st.r_k = r;
  st.A_k = A;
  st.Abar_k = detail::const_like(A, F);
  st.Fbar_k = F;
  st.Psi_k = detail::id_like(F);
  st.Psi_inv_k = st.Psi_k;
  st.dec_k = eigen_clusters(A, freq.kappa);
  st.gamma_k = params.gamma0;
  st.b_k = opnorm(A);
  st.eps_k = class_norm(F, r);
  run.Z_total = detail::id_like(F);
  run.Z_total_inv = run.Z_total;
  run.states.push_back(st);
  run.norm_log.push_back(st.eps_k);

  double normA0 = opnorm(A);
  for (int k = 0; k < max_steps; ++k) {
    KamState& cur = run.states.back();
    if (cur.eps_k <= target_eps) {
      run.target_reached = true;
      break;
    }
    double rk = cur.r_k;
    double rk1 = r_prime + (r - r_prime) / std::pow(2.0, k + 1);
    if (rk1 < 95.0 / 96.0 * rk) rk1 = 95.0 / 96.0 * rk;
    FullStepResult fs = full_step(cur.A_k, cur.Abar_k, cur.Fbar_k, cur.Psi_k,
                                  cur.Psi_inv_k, rk, rk1, cur.gamma_k, params, G, freq,
                                  residual_grid);
    KamState nxt;
    nxt.k = k + 1;
    nxt.r_k = rk1;
    nxt.A_k = fs.Aprime;
    nxt.Abar_k = fs.Abar_prime;
    nxt.Fbar_k = fs.Fbar_prime;
    nxt.Psi_k = fs.Psi_prime;
    nxt.Psi_inv_k = fs.Psi_prime_inv;
    nxt.dec_k = eigen_clusters(fs.Aprime, fs.kappa2);
    nxt.gamma_k = 2.0 * cur.gamma_k;
    nxt.b_k = cur.b_k + std::abs(std::log(std::max(cur.eps_k, 1e-300))) *
                            std::pow(std::pow(2.0, k + 1) / (r - r_prime), params.D5);
    nxt.eps_k = fs.eps_prime;
    nxt.resonance_flag = fs.resonance_flag;
    nxt.eps_scheduled = fs.eps_scheduled;
    nxt.Nbar_k = fs.Nbar;
    nxt.kappa2_k = fs.kappa2;
    nxt.group_defect_k = group_defect_series(fs.Psi_prime, G);

    run.Z_total = multiply(run.Z_total, fs.Zprime);
    run.Z_total_inv = multiply(fs.Zprime_inv, run.Z_total_inv);

    // transport invariant for the accumulated conjugation
    nxt.residual = conjugacy_residual(add(detail::const_like(A, F), F), run.Z_total,
                                      add(nxt.Abar_k, nxt.Fbar_k), residual_grid,
                                      freq).sup_residual;
    if (nxt.residual > 1e-8 * (1.0 + normA0))
      throw std::runtime_error("almost_reduce: accumulated conjugation residual " +
                               std::to_string(nxt.residual) + " exceeds the tolerance");

    run.cauchy_log.push_back(opnorm(Mat(nxt.A_k - cur.A_k)));
    run.residual_log.push_back(nxt.residual);
    run.norm_log.push_back(nxt.eps_k);
    run.states.push_back(std::move(nxt));
    if (run.states.back().eps_k <= target_eps) {
      run.target_reached = true;
      break;
    }
  }
  return run;
}

struct NearbyReducible {
  TorusSeries H;            // the reducible system close to A + F
  TorusSeries conjugation;  // Z reducing H to Abar_eps, then Psi to A_target
  Mat A_target;
  double distance = 0.0;    // measured norm of (A + F) - H at r'
  double residual = 0.0;
  KamRun run;
};

inline NearbyReducible nearby_reducible(const Mat& A, const TorusSeries& F,
                                        const LieGroupTag& G, double r, double r_prime,
                                        double eps, const ScheduleParams& params,
                                        const Frequency& freq, int max_steps = 12,
                                        int residual_grid = 12) {
  NearbyReducible out;
  out.run = almost_reduce(A, F, G, r, r_prime, eps / 4.0, params, freq, max_steps,
                          residual_grid);
  if (!out.run.target_reached)
    throw ContractionFailure("nearby_reducible: iteration did not reach target eps/4");
  const KamState& fin = out.run.states.back();
  TorusSeries AF = add(detail::const_like(A, F), F);
  TorusSeries carried =
      multiply(multiply(out.run.Z_total, fin.Fbar_k), out.run.Z_total_inv);
  out.H = sub(AF, carried);
  out.conjugation = out.run.Z_total;
  out.A_target = fin.A_k;
  out.distance = class_norm(sub(AF, out.H), r_prime);
  out.residual = conjugacy_residual(out.H, out.run.Z_total, fin.Abar_k, residual_grid,
                                    freq).sup_residual;
  return out;
}

}  // namespace qpkam
