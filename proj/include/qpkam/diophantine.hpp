#pragma once

#include <cstdint>
#include <functional>

#include "linalg.hpp"
#include "half_index.hpp"
#include "series.hpp"

namespace qpkam {

struct Frequency {
  std::vector<double> omega;
  double kappa = 0.0;  // in (0,1)
  double tau = 1.0;    // >= max(1, d-1)

  int d() const { return static_cast<int>(omega.size()); }

  static Frequency golden2(double kappa = 0.44, double tau = 1.0) {
    return {{1.0, (std::sqrt(5.0) - 1.0) / 2.0}, kappa, tau};
  }
};

struct DcReport {
  bool holds = true;
  HalfIndex worst_m;
  double worst_margin = 1e300;  // signed distance to the bound; < 0 iff !holds
  double N = 0.0;
  int nu = 1;
};

namespace detail {

constexpr double kSearchOrderCap = 1e4;
constexpr std::int64_t kEnumBudget = 100000000;

// iterate k in Z^dim with |k|_1 <= K, lexicographic, calling f(k)
template <typename F>
void for_each_lattice(int dim, int K, F&& f) {
  std::vector<int> k(dim, 0);
  std::function<void(int, int)> rec = [&](int j, int left) {
    if (j == dim - 1) {
      for (k[j] = -left; k[j] <= left; ++k[j]) f(k);
      return;
    }
    for (k[j] = -left; k[j] <= left; ++k[j]) rec(j + 1, left - std::abs(k[j]));
  };
  if (dim == 0) return;
  rec(0, K);
}

}  // namespace detail

inline DcReport verify_frequency(const Frequency& freq, double N) {
  const int d = freq.d();
  if (N < 1) throw std::invalid_argument("verify_frequency: N must be >= 1");
  if (N > detail::kSearchOrderCap ||
      std::pow(2.0 * N + 1.0, d) > static_cast<double>(detail::kEnumBudget))
    throw std::runtime_error("verify_frequency: search order exceeds enumeration budget; "
                             "use a smaller N");
  DcReport rep;
  rep.N = N;
  rep.nu = 1;
  rep.worst_m = HalfIndex::zero(d);
  detail::for_each_lattice(d, static_cast<int>(N), [&](const std::vector<int>& k) {
    double absm = 0.0, dot = 0.0;
    for (int j = 0; j < d; ++j) {
      absm += std::abs(k[j]);
      dot += k[j] * freq.omega[j];
    }
    if (absm == 0.0 || absm > N) return;
    double margin = std::abs(dot) - freq.kappa / std::pow(absm, freq.tau);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_m = HalfIndex::integer(k);
    }
  });
  rep.holds = rep.worst_margin >= 0.0;
  return rep;
}

// |z - 2 pi i <m, omega>| >= kappa'/|m|^tau for all m in (1/nu)Z^d, 0 < |m| <= N.
// Dense enumeration near the origin; beyond it, only the few lattice points that
// can come close to the resonance line are inspected (solved last coordinate).
inline DcReport dc_modulo(cxd z, int nu, double kappa_prime, double tau, double N,
                          const Frequency& freq) {
  if (kappa_prime <= 0.0) throw std::invalid_argument("dc_modulo: kappa' must be positive");
  const int d = freq.d();
  if (N > detail::kSearchOrderCap)
    throw std::runtime_error("dc_modulo: search order exceeds the configured cap");
  DcReport rep;
  rep.N = N;
  rep.nu = nu;
  rep.worst_m = HalfIndex::zero(d);

  const int Kmax = static_cast<int>(std::floor(N * nu + 1e-9));  // |k|_1 bound, m = k/nu
  if (Kmax < 1) { rep.holds = true; rep.worst_margin = 1e300; return rep; }

  auto consider = [&](const std::vector<int>& k) {
    double absk = 0.0, dot = 0.0;
    for (int j = 0; j < d; ++j) {
      absk += std::abs(k[j]);
      dot += k[j] * freq.omega[j];
    }
    if (absk == 0.0 || absk > Kmax) return;
    double absm = absk / nu;
    double margin = std::abs(z - cxd(0.0, kTwoPi * dot / nu)) -
                    kappa_prime / std::pow(absm, tau);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      std::vector<int> doubled(d);
      for (int j = 0; j < d; ++j) doubled[j] = k[j] * 2 / nu;
      rep.worst_m = HalfIndex(doubled);
    }
  };

  int Kdense = Kmax;
  if (std::pow(2.0 * Kmax + 1.0, d) > 2e7)
    Kdense = static_cast<int>((std::pow(2e7, 1.0 / d) - 1.0) / 2.0);
  detail::for_each_lattice(d, std::min(Kdense, Kmax), consider);

  if (Kdense < Kmax) {
    // solve for the coordinate with the largest |omega_j|
    int jsolve = 0;
    for (int j = 1; j < d; ++j)
      if (std::abs(freq.omega[j]) > std::abs(freq.omega[jsolve])) jsolve = j;
    double wj = freq.omega[jsolve];
    if (wj == 0.0) throw std::runtime_error("dc_modulo: zero frequency vector");
    double target = z.imag() / kTwoPi * nu;  // want <k, omega> ~ target
    if (std::pow(2.0 * Kmax + 1.0, d - 1) > static_cast<double>(detail::kEnumBudget))
      throw std::runtime_error("dc_modulo: enumeration budget exceeded");
    detail::for_each_lattice(d - 1, Kmax, [&](const std::vector<int>& kred) {
      double rest = 0.0;
      int jj = 0;
      std::vector<int> k(d, 0);
      for (int j = 0; j < d; ++j) {
        if (j == jsolve) continue;
        k[j] = kred[jj++];
        rest += k[j] * freq.omega[j];
      }
      double c = (target - rest) / wj;
      int base = static_cast<int>(std::llround(c));
      for (int off = -3; off <= 3; ++off) {
        k[jsolve] = base + off;
        consider(k);
      }
    });
  }
  rep.holds = rep.worst_margin >= 0.0;
  return rep;
}

// DC spectrum: every eigenvalue difference in DC_{omega,1}; additionally in
// DC_{omega,2} when the pair is not conjugate.
inline DcReport spectrum_is_dc(const Mat& A, double kappa_prime, double tau, double N,
                               const Frequency& freq) {
  std::vector<cxd> eigs = eigenvalues_of(A);
  double tol = 1e-10 * (1.0 + opnorm(A));
  DcReport rep;
  rep.N = N;
  rep.nu = 1;
  rep.worst_m = HalfIndex::zero(freq.d());
  for (size_t i = 0; i < eigs.size(); ++i)
    for (size_t j = 0; j < eigs.size(); ++j) {
      cxd z = eigs[i] - eigs[j];
      DcReport r1 = dc_modulo(z, 1, kappa_prime, tau, N, freq);
      if (r1.worst_margin < rep.worst_margin) {
        rep.worst_margin = r1.worst_margin;
        rep.worst_m = r1.worst_m;
        rep.nu = 1;
      }
      if (std::abs(eigs[i] - std::conj(eigs[j])) > tol) {
        DcReport r2 = dc_modulo(z, 2, kappa_prime, tau, N, freq);
        if (r2.worst_margin < rep.worst_margin) {
          rep.worst_margin = r2.worst_margin;
          rep.worst_m = r2.worst_m;
          rep.nu = 2;
        }
      }
    }
  rep.holds = rep.worst_margin >= 0.0;
  return rep;
}

}  // namespace qpkam
