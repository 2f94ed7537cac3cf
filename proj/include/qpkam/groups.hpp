#pragma once

#include <string>

#include "series.hpp"

namespace qpkam {

enum class GroupId { GL_C, GL_R, SL2_C, SL_R, Sp_R, O, U };

struct LieGroupTag {
  GroupId id = GroupId::GL_C;
  int n = 1;

  LieGroupTag() = default;
  LieGroupTag(GroupId g, int nn) : id(g), n(nn) {
    if (id == GroupId::Sp_R && n % 2 != 0)
      throw std::invalid_argument("Sp requires even dimension");
    if (id == GroupId::SL2_C && n != 2)
      throw std::invalid_argument("SL2_C requires n=2");
  }

  // resonance shifts live on the integer lattice (conjugations stay on T^d)
  bool integer_lattice() const { return id == GroupId::GL_C || id == GroupId::U; }
  bool compact() const { return id == GroupId::O || id == GroupId::U; }
  bool real_group() const {
    return id == GroupId::GL_R || id == GroupId::SL_R || id == GroupId::Sp_R ||
           id == GroupId::O;
  }
  bool sl2_like() const {
    return id == GroupId::SL2_C || (id == GroupId::SL_R && n == 2);
  }

  std::string name() const {
    switch (id) {
      case GroupId::GL_C: return "GL_C";
      case GroupId::GL_R: return "GL_R";
      case GroupId::SL2_C: return "SL2_C";
      case GroupId::SL_R: return "SL_R";
      case GroupId::Sp_R: return "Sp_R";
      case GroupId::O: return "O";
      case GroupId::U: return "U";
    }
    return "?";
  }
  static LieGroupTag parse(const std::string& s, int n) {
    if (s == "GL_C") return {GroupId::GL_C, n};
    if (s == "GL_R") return {GroupId::GL_R, n};
    if (s == "SL2_C") return {GroupId::SL2_C, n};
    if (s == "SL_R") return {GroupId::SL_R, n};
    if (s == "Sp_R") return {GroupId::Sp_R, n};
    if (s == "O") return {GroupId::O, n};
    if (s == "U") return {GroupId::U, n};
    throw std::invalid_argument("unknown group tag: " + s);
  }
};

inline double group_defect(const Mat& M, const LieGroupTag& G) {
  const int n = G.n;
  switch (G.id) {
    case GroupId::GL_C:
      return 0.0;
    case GroupId::GL_R:
      return opnorm_imag_part(M);
    case GroupId::SL2_C:
      return std::abs(M.determinant() - cxd(1.0, 0.0));
    case GroupId::SL_R:
      return opnorm_imag_part(M) + std::abs(M.determinant() - cxd(1.0, 0.0));
    case GroupId::Sp_R: {
      Mat J = symplectic_J(n);
      return opnorm(M.transpose() * J * M - J) + opnorm_imag_part(M);
    }
    case GroupId::O:
      return opnorm(M.adjoint() * M - Mat::Identity(n, n)) + opnorm_imag_part(M);
    case GroupId::U:
      return opnorm(M.adjoint() * M - Mat::Identity(n, n));
  }
  return 0.0;
}

inline double algebra_defect(const Mat& X, const LieGroupTag& G) {
  const int n = G.n;
  switch (G.id) {
    case GroupId::GL_C:
      return 0.0;
    case GroupId::GL_R:
      return opnorm_imag_part(X);
    case GroupId::SL2_C:
      return std::abs(X.trace());
    case GroupId::SL_R:
      return opnorm_imag_part(X) + std::abs(X.trace());
    case GroupId::Sp_R: {
      Mat J = symplectic_J(n);
      return opnorm(X.transpose() * J + J * X) + opnorm_imag_part(X);
    }
    case GroupId::O:
      return opnorm(X.adjoint() + X) + opnorm_imag_part(X);
    case GroupId::U:
      return opnorm(X.adjoint() + X);
  }
  return 0.0;
}

// deterministic quasi-random sample points on the double torus [0,2)^d
inline std::vector<std::vector<double>> sample_thetas(int d, int count) {
  static const double alphas[] = {0.6180339887498949, 0.4142135623730951,
                                  0.7320508075688772, 0.2360679774997896};
  std::vector<std::vector<double>> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::vector<double> th(d);
    for (int j = 0; j < d; ++j) {
      double x = 0.31 + (i + 1) * alphas[j % 4];
      th[j] = 2.0 * (x - std::floor(x));
    }
    pts.push_back(std::move(th));
  }
  return pts;
}

inline double group_defect_series(const TorusSeries& F, const LieGroupTag& G,
                                  int samples = 50) {
  double worst = 0.0;
  for (const auto& th : sample_thetas(F.d, samples))
    worst = std::max(worst, group_defect(eval(F, th), G));
  return worst;
}

inline double algebra_defect_series(const TorusSeries& F, const LieGroupTag& G,
                                    int samples = 50) {
  double worst = 0.0;
  for (const auto& th : sample_thetas(F.d, samples))
    worst = std::max(worst, algebra_defect(eval(F, th), G));
  return worst;
}

}  // namespace qpkam
