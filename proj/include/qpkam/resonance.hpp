#pragma once

#include <optional>

#include "diophantine.hpp"
#include "trivial_map.hpp"

namespace qpkam {

struct ResonanceShift {
  std::vector<HalfIndex> m_js;  // one per eigenvalue, in input order
  double Nbar = 0.0;
  double kappa2 = 0.0;  // achieved DC constant
  int rounds = 0;
  bool half_lattice = true;
  bool capped = false;
  std::vector<double> round_orders;

  bool any_shift() const {
    for (const auto& m : m_js)
      if (!m.is_zero()) return true;
    return false;
  }
  double sup_abs() const {
    double w = 0.0;
    for (const auto& m : m_js) w = std::max(w, m.abs());
    return w;
  }
};

namespace detail {

// lexicographically-first admissible minimizer of |x - 2 pi <m, omega>| among
// integer m with 0 < |m| <= order and distance < kappa'/|m|^tau
inline std::optional<std::vector<int>> find_resonant_m(double x, double order,
                                                       double kappa_prime, double tau,
                                                       const Frequency& freq) {
  const int d = freq.d();
  const int K = static_cast<int>(std::floor(order + 1e-9));
  if (K < 1) return std::nullopt;
  std::optional<std::vector<int>> best;
  double best_dist = 1e300;
  auto consider = [&](const std::vector<int>& k) {
    double absk = 0.0, dot = 0.0;
    for (int j = 0; j < d; ++j) {
      absk += std::abs(k[j]);
      dot += k[j] * freq.omega[j];
    }
    if (absk == 0.0 || absk > K) return;
    double dist = std::abs(x - kTwoPi * dot);
    if (dist >= kappa_prime / std::pow(absk, tau)) return;
    if (dist < best_dist - 1e-15 ||
        (std::abs(dist - best_dist) <= 1e-15 && best && k < *best)) {
      best_dist = dist;
      best = k;
    }
  };
  if (std::pow(2.0 * K + 1.0, d) <= 2e7) {
    for_each_lattice(d, K, consider);
    return best;
  }
  // an admissible m lies within kappa'/(2 pi |omega_j|) of the resonance line;
  // solve the widest coordinate, scan the rest
  int jsolve = 0;
  for (int j = 1; j < d; ++j)
    if (std::abs(freq.omega[j]) > std::abs(freq.omega[jsolve])) jsolve = j;
  double wj = freq.omega[jsolve];
  if (std::pow(2.0 * K + 1.0, d - 1) > static_cast<double>(kEnumBudget))
    throw std::runtime_error("resonance search budget exceeded");
  for_each_lattice(d - 1, K, [&](const std::vector<int>& kred) {
    std::vector<int> k(d, 0);
    double rest = 0.0;
    int jj = 0;
    for (int j = 0; j < d; ++j) {
      if (j == jsolve) continue;
      k[j] = kred[jj++];
      rest += k[j] * freq.omega[j];
    }
    double c = (x / kTwoPi - rest) / wj;
    int base = static_cast<int>(std::llround(c));
    for (int off = -3; off <= 3; ++off) {
      k[jsolve] = base + off;
      consider(k);
    }
  });
  return best;
}

}  // namespace detail

// Single removal pass. Two steps: half-integer shifts pairing opposite imaginary
// parts (half-lattice case only), then integer shifts per imaginary-part class,
// assigned center-outward so that a detected resonance collapses the pair gap.
inline ResonanceShift remove_resonances_once(const std::vector<cxd>& alphas, double Ntilde,
                                             double kappa_prime, const Frequency& freq,
                                             bool half_lattice) {
  const int n = static_cast<int>(alphas.size());
  const int d = freq.d();
  if (kappa_prime > freq.kappa / (n * std::pow(8.0 * Ntilde, freq.tau)) + 1e-15)
    throw std::invalid_argument("remove_resonances_once: kappa' exceeds kappa/(n(8N)^tau)");
  ResonanceShift out;
  out.half_lattice = half_lattice;
  out.Nbar = Ntilde;
  out.kappa2 = kappa_prime;
  out.rounds = 1;
  out.m_js.assign(n, HalfIndex::zero(d));

  std::vector<cxd> a = alphas;

  if (half_lattice) {
    for (int j = 0; j < n; ++j) {
      auto m = detail::find_resonant_m(2.0 * a[j].imag(), Ntilde, kappa_prime, freq.tau, freq);
      if (m) {
        HalfIndex half((*m));  // doubled = m, i.e. the half vector m/2
        a[j] -= cxd(0.0, kTwoPi * half.dot(freq.omega));
        out.m_js[j] = half;
      }
    }
  }

  // classes by imaginary-part proximity (transitive closure at kappa')
  std::vector<cxd> im_only(n);
  for (int j = 0; j < n; ++j) im_only[j] = cxd(0.0, a[j].imag());
  std::vector<int> root = detail::cluster_indices(im_only, kappa_prime);
  std::vector<int> reps;
  for (int j = 0; j < n; ++j)
    if (std::find(reps.begin(), reps.end(), root[j]) == reps.end()) reps.push_back(root[j]);
  auto class_im = [&](int rep) {
    double s = 0.0;
    int c = 0;
    for (int j = 0; j < n; ++j)
      if (root[j] == rep) { s += a[j].imag(); ++c; }
    return s / c;
  };
  std::sort(reps.begin(), reps.end(),
            [&](int x, int y) { return std::abs(class_im(x)) < std::abs(class_im(y)); });

  std::map<int, HalfIndex> class_shift;  // rep -> integer shift (as half-index)
  std::vector<int> assigned;
  auto member_of = [&](int rep) {
    for (int j = 0; j < n; ++j)
      if (root[j] == rep) return j;
    return -1;
  };
  auto shifted_val = [&](int j) {
    return a[j] - cxd(0.0, kTwoPi * class_shift.at(root[j]).dot(freq.omega));
  };

  std::vector<bool> done(reps.size(), false);
  for (size_t ci = 0; ci < reps.size(); ++ci) {
    if (done[ci]) continue;
    int rep = reps[ci];
    double im = class_im(rep);
    // mirror class: opposite imaginary part, if present; only real systems
    // carry the conjugation constraint that forces opposite shifts
    int mirror = -1;
    if (half_lattice)
      for (size_t cj = ci + 1; cj < reps.size(); ++cj)
        if (!done[cj] && std::abs(class_im(reps[cj]) + im) <= n * kappa_prime) {
          mirror = static_cast<int>(cj);
          break;
        }
    HalfIndex s = HalfIndex::zero(d);
    if (!assigned.empty()) {
      // look for a resonance against an already-assigned class
      double best = 1e300;
      for (int arep : assigned) {
        int jm = member_of(arep);
        cxd aj = shifted_val(jm);
        int km = member_of(rep);
        auto m = detail::find_resonant_m(a[km].imag() - aj.imag(), Ntilde, kappa_prime,
                                         freq.tau, freq);
        if (m) {
          HalfIndex cand = HalfIndex::integer(*m);
          // keep every member's total shift within the order bound
          bool within = true;
          for (int j = 0; j < n; ++j)
            if (root[j] == rep && (out.m_js[j] + cand).abs() > Ntilde + 1e-9) within = false;
          if (!within) continue;
          double dist = std::abs(a[km] - cxd(0.0, kTwoPi * cand.dot(freq.omega)) - aj);
          if (dist < best) {
            best = dist;
            s = cand;
          }
        }
      }
    }
    class_shift[rep] = s;
    assigned.push_back(rep);
    done[ci] = true;
    if (mirror >= 0) {
      class_shift[reps[mirror]] = -s;
      assigned.push_back(reps[mirror]);
      done[mirror] = true;
    }
  }

  for (int j = 0; j < n; ++j) out.m_js[j] = out.m_js[j] + class_shift.at(root[j]);
  return out;
}

inline std::vector<cxd> apply_shift(const std::vector<cxd>& alphas,
                                    const std::vector<HalfIndex>& m_js,
                                    const Frequency& freq) {
  std::vector<cxd> out = alphas;
  for (size_t j = 0; j < out.size(); ++j)
    out[j] -= cxd(0.0, kTwoPi * m_js[j].dot(freq.omega));
  return out;
}

// pairwise DC check on a raw eigenvalue list (conjugate pairs at nu=1 only)
inline DcReport list_is_dc(const std::vector<cxd>& alphas, bool half_lattice,
                           double kappa_prime, double tau, double order,
                           const Frequency& freq) {
  DcReport rep;
  rep.N = order;
  rep.worst_m = HalfIndex::zero(freq.d());
  double scale = 0.0;
  for (cxd x : alphas) scale = std::max(scale, std::abs(x));
  for (size_t i = 0; i < alphas.size(); ++i)
    for (size_t j = 0; j < alphas.size(); ++j) {
      cxd z = alphas[i] - alphas[j];
      DcReport r1 = dc_modulo(z, 1, kappa_prime, tau, order, freq);
      if (r1.worst_margin < rep.worst_margin) { rep.worst_margin = r1.worst_margin; rep.worst_m = r1.worst_m; rep.nu = 1; }
      if (half_lattice && std::abs(alphas[i] - std::conj(alphas[j])) > 1e-10 * (1.0 + scale)) {
        DcReport r2 = dc_modulo(z, 2, kappa_prime, tau, order, freq);
        if (r2.worst_margin < rep.worst_margin) { rep.worst_margin = r2.worst_margin; rep.worst_m = r2.worst_m; rep.nu = 2; }
      }
    }
  rep.holds = rep.worst_margin >= 0.0;
  return rep;
}

// Iterated removal with order amplification until the shifted list is DC
inline ResonanceShift remove_resonances_iterated(const std::vector<cxd>& alphas, double R,
                                                 int N, const Frequency& freq,
                                                 bool half_lattice,
                                                 double order_cap = 1e4) {
  const int n = static_cast<int>(alphas.size());
  const int d = freq.d();
  if (R < 1.0 || N < 2) throw std::invalid_argument("remove_resonances_iterated: need R >= 1, N >= 2");
  const double half_count = 0.5 * n * (n - 1);
  double kappa2 = freq.kappa / (n * std::pow(8.0 * std::min(std::pow(R, half_count + 1.0) * N,
                                                            order_cap) , freq.tau));

  ResonanceShift total;
  total.half_lattice = half_lattice;
  total.kappa2 = kappa2;
  total.m_js.assign(n, HalfIndex::zero(d));
  std::vector<cxd> cur = alphas;
  int max_rounds = std::max(1, n * (n - 1) / 2);
  double Nbar = N;
  for (int r = 0; r <= max_rounds; ++r) {
    double order = std::min(std::pow(R, r + 1.0) * N, order_cap);
    total.capped = total.capped || std::pow(R, r + 1.0) * N > order_cap;
    DcReport rep = list_is_dc(cur, half_lattice, kappa2, freq.tau, order, freq);
    if (rep.holds) {
      Nbar = std::min(std::pow(R, static_cast<double>(r)) * N, order_cap);
      total.rounds = r;
      total.Nbar = Nbar;
      total.round_orders.push_back(order);
      return total;
    }
    if (r == max_rounds)
      throw std::runtime_error("remove_resonances_iterated: no termination within the "
                               "guaranteed round count");
    ResonanceShift pass = remove_resonances_once(cur, order, kappa2, freq, half_lattice);
    total.round_orders.push_back(order);
    for (int j = 0; j < n; ++j) total.m_js[j] = total.m_js[j] + pass.m_js[j];
    cur = apply_shift(alphas, total.m_js, freq);
  }
  return total;  // unreachable
}

struct EigenvalueReduction {
  TrivialMap Phi;
  Mat Atilde;
  ResonanceShift shift;
  Decomposition dec;
  double RNbar = 0.0;  // order at which the DC conclusion is certified
  bool sl2_dichotomy_ok = true;
  DcReport spectrum_report;
};

// Assemble the trivial conjugation Phi and the shifted constant part Atilde.
inline EigenvalueReduction reduction_of_eigenvalues(const Mat& A, const LieGroupTag& G,
                                                    double R, int N, const Frequency& freq,
                                                    double order_cap = 1e4) {
  const int n = static_cast<int>(A.rows());
  const int d = freq.d();
  const double half_count = 0.5 * n * (n - 1);
  double kappa2 = freq.kappa / (n * std::pow(8.0 * std::min(std::pow(R, half_count + 1.0) * N,
                                                            order_cap), freq.tau));
  EigenvalueReduction out;
  out.dec = eigen_clusters(A, kappa2);

  // flat eigenvalue list in cluster order
  std::vector<cxd> alphas;
  std::vector<int> owner;
  for (size_t c = 0; c < out.dec.subspaces.size(); ++c)
    for (cxd a : out.dec.subspaces[c].eigenvalues) {
      alphas.push_back(a);
      owner.push_back(static_cast<int>(c));
    }

  out.shift = remove_resonances_iterated(alphas, R, N, freq, !G.integer_lattice(), order_cap);
  out.RNbar = std::min(R * out.shift.Nbar, order_cap);

  // one exponent per cluster; members must agree (proximity condition)
  out.Phi.dec = out.dec;
  out.Phi.d = d;
  for (size_t c = 0; c < out.dec.subspaces.size(); ++c) {
    std::optional<HalfIndex> mL;
    for (size_t j = 0; j < alphas.size(); ++j) {
      if (owner[j] != static_cast<int>(c)) continue;
      if (!mL) mL = out.shift.m_js[j];
      else if (*mL != out.shift.m_js[j])
        throw std::runtime_error("reduction_of_eigenvalues: shift differs within a cluster "
                                 "(proximity condition violated)");
    }
    out.Phi.exponents[out.dec.subspaces[c].label] = *mL;
  }

  out.Atilde = A - out.Phi.shift_matrix(freq.omega);
  out.spectrum_report = list_is_dc(apply_shift(alphas, out.shift.m_js, freq),
                                   !G.integer_lattice(), out.shift.kappa2, freq.tau,
                                   out.RNbar, freq);
  if (G.sl2_like() && !out.Phi.is_identity())
    out.sl2_dichotomy_ok = opnorm(out.Atilde) <= out.shift.kappa2 + 1e-12;
  return out;
}

}  // namespace qpkam
