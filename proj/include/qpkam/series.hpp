#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

#include "half_index.hpp"
#include "linalg.hpp"

namespace qpkam {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Regularity {
  bool gevrey = false;
  double beta = 0.0;  // > 1 when gevrey

  static Regularity analytic() { return {}; }
  static Regularity gevrey_class(double beta) {
    if (beta <= 1.0) throw std::invalid_argument("gevrey exponent must exceed 1");
    return {true, beta};
  }
  bool operator==(const Regularity& o) const {
    return gevrey == o.gevrey && (!gevrey || beta == o.beta);
  }
};

struct NormBound {
  double value = 0.0;
  enum class Kind { exact, upper_bound } kind = Kind::upper_bound;
  double r = 0.0;
  std::optional<double> beta;
};

// E_a(y) = sum_k y^k / (k!)^a, summed to relative tail < 1e-16
inline double gevrey_E(double a, double y) {
  if (y <= 0.0) return 1.0;
  double term = 1.0, total = 1.0;
  for (int k = 1; k < 100000; ++k) {
    term *= y / std::pow(static_cast<double>(k), a);
    total += term;
    if (term < 1e-16 * total && k > 2) break;
  }
  return total;
}

// per-mode Gevrey weight: product over coordinates of E_beta(2pi|m_j| r^beta)
inline double gevrey_mode_factor(const HalfIndex& m, double beta, double r) {
  double f = 1.0;
  for (int j = 0; j < m.d(); ++j)
    f *= gevrey_E(beta, kTwoPi * std::abs(m.component(j)) * std::pow(r, beta));
  return f;
}

// Matrix-valued trigonometric polynomial on the (double) torus.
// Coefficients indexed over (1/2)Z^d; torus-periodic iff all indices are integer.
struct TorusSeries {
  int n = 0;
  int d = 0;
  double declared_r = 0.0;
  Regularity reg;
  bool real_flag = false;
  std::map<HalfIndex, Mat> coeffs;

  static TorusSeries zero(int n, int d, double r, Regularity reg = Regularity::analytic()) {
    TorusSeries F;
    F.n = n; F.d = d; F.declared_r = r; F.reg = reg;
    return F;
  }
  static TorusSeries constant(const Mat& C, int d, double r,
                              Regularity reg = Regularity::analytic()) {
    TorusSeries F = zero(static_cast<int>(C.rows()), d, r, reg);
    F.set(HalfIndex::zero(d), C);
    return F;
  }
  static TorusSeries single_mode(const HalfIndex& m, const Mat& C, double r,
                                 Regularity reg = Regularity::analytic()) {
    TorusSeries F = zero(static_cast<int>(C.rows()), m.d(), r, reg);
    F.set(m, C);
    return F;
  }
  static TorusSeries identity(int n, int d, double r,
                              Regularity reg = Regularity::analytic()) {
    return constant(Mat::Identity(n, n), d, r, reg);
  }

  void set(const HalfIndex& m, const Mat& C) {
    if (m.d() != d) throw std::invalid_argument("index dimension mismatch");
    if (C.rows() != n || C.cols() != n) throw std::invalid_argument("matrix dimension mismatch");
    if (C.norm() == 0.0) coeffs.erase(m);
    else coeffs[m] = C;
  }
  void add_to(const HalfIndex& m, const Mat& C) {
    auto it = coeffs.find(m);
    if (it == coeffs.end()) set(m, C);
    else {
      it->second += C;
      if (it->second.norm() == 0.0) coeffs.erase(it);
    }
  }
  Mat coeff(const HalfIndex& m) const {
    auto it = coeffs.find(m);
    return it == coeffs.end() ? Mat::Zero(n, n) : it->second;
  }
  Mat mean() const { return coeff(HalfIndex::zero(d)); }

  bool torus_periodic() const {
    for (const auto& [m, C] : coeffs)
      if (!m.is_integer()) return false;
    return true;
  }
  double support_degree() const {
    int deg = 0;
    for (const auto& [m, C] : coeffs) deg = std::max(deg, m.abs_doubled());
    return deg / 2.0;
  }
};

inline void check_compatible(const TorusSeries& F, const TorusSeries& G) {
  if (F.n != G.n || F.d != G.d) throw std::invalid_argument("series dimension mismatch");
}

inline Mat eval(const TorusSeries& F, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != F.d) throw std::invalid_argument("theta dimension mismatch");
  Mat out = Mat::Zero(F.n, F.n);
  for (const auto& [m, C] : F.coeffs)
    out += C * std::exp(cxd(0.0, kTwoPi * m.dot(theta)));
  return out;
}

inline TorusSeries directional_derivative(const TorusSeries& F, const std::vector<double>& omega) {
  if (static_cast<int>(omega.size()) != F.d) throw std::invalid_argument("omega dimension mismatch");
  TorusSeries D = TorusSeries::zero(F.n, F.d, F.declared_r, F.reg);
  for (const auto& [m, C] : F.coeffs) {
    if (m.is_zero()) continue;
    D.set(m, cxd(0.0, kTwoPi * m.dot(omega)) * C);
  }
  D.real_flag = F.real_flag;
  return D;
}

inline NormBound analytic_norm(const TorusSeries& F, double r) {
  if (r < 0.0) throw std::invalid_argument("negative strip parameter");
  double s = 0.0;
  for (const auto& [m, C] : F.coeffs) s += opnorm(C) * std::exp(kTwoPi * m.abs() * r);
  NormBound b;
  b.value = s;
  b.kind = F.coeffs.size() <= 1 ? NormBound::Kind::exact : NormBound::Kind::upper_bound;
  b.r = r;
  return b;
}

inline NormBound gevrey_norm(const TorusSeries& F, double beta, double r) {
  if (beta <= 1.0 || r <= 0.0) throw std::invalid_argument("bad gevrey parameters");
  double s = 0.0;
  for (const auto& [m, C] : F.coeffs) s += opnorm(C) * gevrey_mode_factor(m, beta, r);
  NormBound b;
  b.value = s;
  b.kind = NormBound::Kind::upper_bound;
  b.r = r;
  b.beta = beta;
  return b;
}

// norm in the series' own regularity class
inline double class_norm(const TorusSeries& F, double r) {
  return F.reg.gevrey ? gevrey_norm(F, F.reg.beta, r).value : analytic_norm(F, r).value;
}

// closed-form tail constant, derived by shell counting + geometric comparison
inline double tronc_constant(int d) {
  return std::pow(2.0, 3 * d - 2) * std::pow(1.0 + d, d - 1) *
         (1.0 + 2.0 * std::pow(static_cast<double>(d), d - 1));
}

inline double troncG_constant(int d, double beta) {
  double q = beta / (beta - 1.0);
  double K1ref = std::pow(1.0 - std::pow(0.98, q), beta - 1.0);  // worst case r-r' >= 0.02
  double c = std::pow(K1ref, -static_cast<double>(d));
  c *= std::pow(2.0, 2 * d - 1) * std::pow(1.0 + d, d - 1);
  c *= std::pow(beta * d, beta * d);
  c *= 3.0 * std::tgamma(beta + 1.0);
  c *= std::pow(50.0, (d + 1) * std::max(0.0, beta - 2.0));
  return c;
}

struct TruncationResult {
  TorusSeries series;   // modes |m| <= N
  NormBound tail_exact; // weighted mass of discarded modes at r'
  double lemma_bound = 0.0;
};

inline TruncationResult truncate(const TorusSeries& F, double N, double r_prime) {
  if (r_prime >= F.declared_r)
    throw std::invalid_argument("truncation target radius must be below the declared radius");
  TruncationResult out;
  out.series = TorusSeries::zero(F.n, F.d, F.declared_r, F.reg);
  out.series.real_flag = F.real_flag;
  double tail = 0.0;
  for (const auto& [m, C] : F.coeffs) {
    if (m.abs() <= N) out.series.set(m, C);
    else {
      tail += opnorm(C) * (F.reg.gevrey ? gevrey_mode_factor(m, F.reg.beta, r_prime)
                                        : std::exp(kTwoPi * m.abs() * r_prime));
    }
  }
  out.tail_exact.value = tail;
  out.tail_exact.kind = NormBound::Kind::upper_bound;
  out.tail_exact.r = r_prime;
  if (F.reg.gevrey) out.tail_exact.beta = F.reg.beta;

  double delta = F.declared_r - r_prime;
  double Nf = std::max(N, 1.0);
  if (F.reg.gevrey) {
    double beta = F.reg.beta;
    out.lemma_bound = troncG_constant(F.d, beta) * std::pow(Nf, F.d + 1) *
                      std::exp(-2.0 * delta * std::pow(Nf, 1.0 / beta)) /
                      std::pow(delta, 2.0 * (F.d + 1)) *
                      gevrey_norm(F, beta, F.declared_r).value;
  } else {
    out.lemma_bound = tronc_constant(F.d) * std::pow(Nf, F.d) *
                      std::exp(-kTwoPi * N * delta) / std::pow(delta, F.d + 1) *
                      analytic_norm(F, F.declared_r).value;
  }
  return out;
}

inline TorusSeries add(const TorusSeries& F, const TorusSeries& G) {
  check_compatible(F, G);
  TorusSeries S = F;
  for (const auto& [m, C] : G.coeffs) S.add_to(m, C);
  S.real_flag = F.real_flag && G.real_flag;
  return S;
}

inline TorusSeries scale(const TorusSeries& F, cxd a) {
  TorusSeries S = TorusSeries::zero(F.n, F.d, F.declared_r, F.reg);
  for (const auto& [m, C] : F.coeffs) S.set(m, a * C);
  S.real_flag = F.real_flag && a.imag() == 0.0;
  return S;
}

inline TorusSeries sub(const TorusSeries& F, const TorusSeries& G) {
  return add(F, scale(G, -1.0));
}

inline TorusSeries multiply(const TorusSeries& F, const TorusSeries& G) {
  check_compatible(F, G);
  TorusSeries P = TorusSeries::zero(F.n, F.d, std::min(F.declared_r, G.declared_r), F.reg);
  for (const auto& [m1, C1] : F.coeffs)
    for (const auto& [m2, C2] : G.coeffs)
      P.add_to(m1 + m2, C1 * C2);
  P.real_flag = F.real_flag && G.real_flag;
  return P;
}

// theta -> conj(F(theta)) for real theta; coefficient at -m becomes conj(coeff(m))
inline TorusSeries pointwise_conj(const TorusSeries& F) {
  TorusSeries S = TorusSeries::zero(F.n, F.d, F.declared_r, F.reg);
  for (const auto& [m, C] : F.coeffs) S.set(-m, C.conjugate());
  S.real_flag = F.real_flag;
  return S;
}

// theta -> F(theta)^* for real theta
inline TorusSeries pointwise_adjoint(const TorusSeries& F) {
  TorusSeries S = TorusSeries::zero(F.n, F.d, F.declared_r, F.reg);
  for (const auto& [m, C] : F.coeffs) S.set(-m, C.adjoint());
  S.real_flag = F.real_flag;
  return S;
}

inline bool is_real_symmetric(const TorusSeries& F, double tol) {
  for (const auto& [m, C] : F.coeffs)
    if ((F.coeff(-m) - C.conjugate()).norm() > tol) return false;
  return true;
}

// drop modes with |m| > n_max, returning the dropped weighted mass (error ledger)
inline TorusSeries cap_support(const TorusSeries& F, double n_max, double r_ledger,
                               double* discarded = nullptr) {
  TorusSeries S = TorusSeries::zero(F.n, F.d, F.declared_r, F.reg);
  S.real_flag = F.real_flag;
  double mass = 0.0;
  for (const auto& [m, C] : F.coeffs) {
    if (m.abs() <= n_max) S.set(m, C);
    else
      mass += opnorm(C) * (F.reg.gevrey ? gevrey_mode_factor(m, F.reg.beta, r_ledger)
                                        : std::exp(kTwoPi * m.abs() * r_ledger));
  }
  if (discarded) *discarded += mass;
  return S;
}

// exp of a series by its Taylor polynomial; order chosen from the norm of X
inline TorusSeries exp_series(const TorusSeries& X, double tol,
                              double divergence_guard = 5.0,
                              double support_cap = -1.0, double* ledger = nullptr) {
  if (tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
  double nx = class_norm(X, X.declared_r);
  if (nx >= divergence_guard)
    throw std::runtime_error("exp_series: norm exceeds divergence guard; step size invalid");
  int K = 1;
  double pw = nx;  // nx^{K} / K! at K=1
  while (K < 200) {
    double next = pw * nx / (K + 1);  // nx^{K+1}/(K+1)!
    double geo = 1.0 - nx / (K + 2);
    if (geo > 0.0 && next / geo <= tol) break;
    pw = next;
    ++K;
  }
  TorusSeries out = TorusSeries::identity(X.n, X.d, X.declared_r, X.reg);
  out.real_flag = X.real_flag;
  TorusSeries power = TorusSeries::identity(X.n, X.d, X.declared_r, X.reg);
  power.real_flag = X.real_flag;
  double fact = 1.0;
  for (int k = 1; k <= K; ++k) {
    power = multiply(power, X);
    if (support_cap > 0.0) power = cap_support(power, support_cap, X.declared_r, ledger);
    fact *= k;
    out = add(out, scale(power, 1.0 / fact));
  }
  return out;
}

}  // namespace qpkam
