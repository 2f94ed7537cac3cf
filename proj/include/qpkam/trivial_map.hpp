#pragma once

#include "decomposition.hpp"

namespace qpkam {

// Phi(theta) = sum_L e^{2 pi i <m_L, theta>} P_L
struct TrivialMap {
  Decomposition dec;
  std::map<int, HalfIndex> exponents;  // label -> m_L
  int d = 0;

  static TrivialMap id(const Decomposition& dec, int d) {
    TrivialMap t;
    t.dec = dec;
    t.d = d;
    for (const auto& s : dec.subspaces) t.exponents[s.label] = HalfIndex::zero(d);
    return t;
  }

  bool is_identity() const {
    for (const auto& [l, m] : exponents)
      if (!m.is_zero()) return false;
    return true;
  }

  Mat eval_at(const std::vector<double>& theta) const {
    Mat out = Mat::Zero(dec.n, dec.n);
    for (const auto& s : dec.subspaces)
      out += s.projection * std::exp(cxd(0.0, kTwoPi * exponents.at(s.label).dot(theta)));
    return out;
  }

  TorusSeries to_series(double r, Regularity reg = Regularity::analytic()) const {
    TorusSeries F = TorusSeries::zero(dec.n, d, r, reg);
    for (const auto& s : dec.subspaces) F.add_to(exponents.at(s.label), s.projection);
    return F;
  }

  TrivialMap inverse() const {
    TrivialMap t = *this;
    for (auto& [l, m] : t.exponents) m = -m;
    return t;
  }

  // exponent sum over all subspaces (integer for n=2 per the reality pairing)
  HalfIndex exponent_sum() const {
    HalfIndex s = HalfIndex::zero(d);
    for (const auto& [l, m] : exponents) s = s + m;
    return s;
  }

  // the frequency shift the map applies to the constant part:
  // d_omega Phi = A Phi - Phi Atilde with Atilde = A - sum_L 2 pi i <m_L, omega> P_L
  Mat shift_matrix(const std::vector<double>& omega) const {
    Mat S = Mat::Zero(dec.n, dec.n);
    for (const auto& s : dec.subspaces)
      S += cxd(0.0, kTwoPi * exponents.at(s.label).dot(omega)) * s.projection;
    return S;
  }
};

// Phi^{-1} F Phi : block (L,L') of mode m lands on m - m_L + m_{L'}
inline TorusSeries conjugate_by_trivial(const TorusSeries& F, const TrivialMap& phi) {
  TorusSeries out = TorusSeries::zero(F.n, F.d, F.declared_r, F.reg);
  for (const auto& [m, C] : F.coeffs)
    for (const auto& L : phi.dec.subspaces)
      for (const auto& Lp : phi.dec.subspaces) {
        Mat B = L.projection * C * Lp.projection;
        if (B.norm() == 0.0) continue;
        out.add_to(m - phi.exponents.at(L.label) + phi.exponents.at(Lp.label), B);
      }
  return out;
}

// Phi F Phi^{-1}
inline TorusSeries sandwich_by_trivial(const TorusSeries& F, const TrivialMap& phi) {
  return conjugate_by_trivial(F, phi.inverse());
}

// reality criterion: for every L there is L' with P_{L'} = conj(P_L) and m_{L'} = -m_L
inline bool trivial_map_is_real(const TrivialMap& phi, double tol = 1e-9) {
  for (const auto& s : phi.dec.subspaces) {
    bool ok = false;
    for (const auto& t : phi.dec.subspaces)
      if ((s.projection.conjugate() - t.projection).norm() <= tol * phi.dec.n &&
          phi.exponents.at(t.label) == -phi.exponents.at(s.label)) {
        ok = true;
        break;
      }
    if (!ok) return false;
  }
  return true;
}

}  // namespace qpkam
