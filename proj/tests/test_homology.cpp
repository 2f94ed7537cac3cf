#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qpkam/homology.hpp"

using namespace qpkam;

namespace {

const Frequency kGolden = Frequency::golden2(0.44, 1.0);

TorusSeries random_rhs(int n, int d, double r, int degree, double amp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  TorusSeries F = TorusSeries::zero(n, d, r, Regularity::analytic());
  std::vector<int> m(d, -degree);
  auto next = [&]() {
    for (int j = d - 1; j >= 0; --j) {
      if (++m[j] <= degree) return true;
      m[j] = -degree;
    }
    return false;
  };
  do {
    int a1 = 0;
    for (int v : m) a1 += std::abs(v);
    if (a1 == 0 || a1 > degree) continue;
    Mat C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = amp * cxd(U(rng), U(rng));
    F.add_to(HalfIndex::integer(m), C);
  } while (next());
  return F;
}

}  // namespace

TEST_CASE("scalar case matches the explicit divisor formula") {
  Mat A(1, 1);
  A(0, 0) = cxd(0.2, 0.7);
  std::mt19937_64 rng(5);
  TorusSeries F = random_rhs(1, 2, 0.4, 3, 0.1, rng);
  Decomposition dec = Decomposition::whole_space(1);
  LieGroupTag G = LieGroupTag::parse("GL_C", 1);
  HomologicalSolution sol =
      solve_homological(A, F, 3.0, dec, nullptr, G, 1e-3, kGolden);
  for (const auto& [m, C] : F.coeffs) {
    if (m.is_zero() || m.abs() > 3.0) continue;
    cxd divisor(0.0, kTwoPi * m.dot(kGolden.omega));  // the bracket vanishes for n=1
    CHECK(std::abs(sol.X.coeffs.at(m)(0, 0) - C(0, 0) / divisor) < 1e-14);
  }
  CHECK(sol.residual < 1e-14);
}

TEST_CASE("both solver paths agree on random certified-DC systems") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  LieGroupTag G = LieGroupTag::parse("GL_C", 2);
  int accepted = 0;
  while (accepted < 50) {
    Mat A(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) A(i, j) = 0.5 * cxd(U(rng), U(rng));
    double kp = 1e-3;
    if (!spectrum_is_dc(A, kp, kGolden.tau, 4, kGolden).holds) continue;
    ++accepted;
    TorusSeries F = random_rhs(2, 2, 0.4, 3, 1.0, rng);
    Decomposition dec = eigen_clusters(A, kp);
    HomologicalSolution sol = solve_homological(A, F, 3.0, dec, nullptr, G, kp, kGolden);
    TorusSeries Xs = solve_homological_schur(A, F, 3.0, kGolden);
    double diff = 0.0, scale = 0.0;
    for (const auto& [m, C] : sol.X.coeffs) {
      diff += (C - Xs.coeffs.at(m)).norm();
      scale += C.norm();
    }
    CHECK(diff <= 1e-9 * (1.0 + scale));
    CHECK(sol.residual < 1e-10 * (1.0 + scale));
  }
}

TEST_CASE("solution satisfies the conjugation equation pointwise") {
  std::mt19937_64 rng(13);
  Mat A(2, 2);
  A << cxd(0.3, 0.1), cxd(0.05, 0), cxd(0, 0), cxd(-0.2, -0.4);
  TorusSeries F = random_rhs(2, 2, 0.4, 2, 0.5, rng);
  Decomposition dec = eigen_clusters(A, 1e-3);
  LieGroupTag G = LieGroupTag::parse("GL_C", 2);
  HomologicalSolution sol = solve_homological(A, F, 2.0, dec, nullptr, G, 1e-3, kGolden);
  TorusSeries dX = directional_derivative(sol.X, kGolden.omega);
  for (double t : {0.0, 0.31, 0.87}) {
    std::vector<double> theta{t, 0.6 * t + 0.1};
    Mat lhs = eval(dX, theta);
    Mat FN = Mat::Zero(2, 2);
    for (const auto& [m, C] : F.coeffs)
      if (!m.is_zero() && m.abs() <= 2.0)
        FN += C * std::exp(cxd(0.0, kTwoPi * m.dot(theta)));
    Mat rhs = A * eval(sol.X, theta) - eval(sol.X, theta) * A + FN;
    CHECK((lhs - rhs).norm() < 1e-12);
  }
}

TEST_CASE("divisor log records the true moduli and bounds") {
  Mat A(2, 2);
  A << cxd(0.3, 0.1), cxd(0, 0), cxd(0, 0), cxd(-0.2, -0.4);
  std::mt19937_64 rng(3);
  TorusSeries F = random_rhs(2, 2, 0.4, 2, 0.5, rng);
  Decomposition dec = eigen_clusters(A, 1e-3);
  LieGroupTag G = LieGroupTag::parse("GL_C", 2);
  HomologicalSolution sol = solve_homological(A, F, 2.0, dec, nullptr, G, 1e-3, kGolden);
  std::vector<cxd> eigs = eigenvalues_of(A);
  CHECK_FALSE(sol.divisor_log.empty());
  for (const auto& e : sol.divisor_log) {
    CHECK(e.bound == Catch::Approx(1e-3 / e.m.abs()).epsilon(1e-12));
    // recompute the modulus from the matching cluster eigenvalues
    cxd shift(0.0, kTwoPi * e.m.dot(kGolden.omega));
    const Subspace* SL = nullptr;
    const Subspace* SLp = nullptr;
    for (const auto& s : dec.subspaces) {
      if (s.label == e.L) SL = &s;
      if (s.label == e.Lp) SLp = &s;
    }
    REQUIRE(SL != nullptr);
    REQUIRE(SLp != nullptr);
    double dmin = 1e300;
    for (cxd a : SL->eigenvalues)
      for (cxd b : SLp->eigenvalues) dmin = std::min(dmin, std::abs(shift - (a - b)));
    CHECK(e.divisor_modulus == Catch::Approx(dmin).margin(1e-10));
    CHECK(e.divisor_modulus >= 0.5 * e.bound);
  }
}

TEST_CASE("an exact spectral resonance is refused") {
  // eigenvalue gap equal to 2 pi <(0,1), omega> makes the divisor vanish at that mode
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = cxd(0.0, kTwoPi * kGolden.omega[1] / 2.0);
  A(1, 1) = -A(0, 0);
  TorusSeries F = TorusSeries::zero(2, 2, 0.4, Regularity::analytic());
  Mat C(2, 2);
  C << cxd(0, 0), cxd(1, 0), cxd(1, 0), cxd(0, 0);
  F.add_to(HalfIndex::integer({0, 1}), C);
  Decomposition dec = eigen_clusters(A, 1e-6);
  LieGroupTag G = LieGroupTag::parse("GL_C", 2);
  CHECK_THROWS_WITH(solve_homological(A, F, 2.0, dec, nullptr, G, 1e-3, kGolden),
                    Catch::Matchers::ContainsSubstring("divisor below the certified bound"));
}

TEST_CASE("unitary-algebra data keeps the solution in the algebra") {
  LieGroupTag G = LieGroupTag::parse("U", 2);
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = cxd(0, 0.31);
  A(1, 1) = cxd(0, -0.17);
  // skew-hermitian series: F_hat(-m) = -F_hat(m)^dagger
  TorusSeries F = TorusSeries::zero(2, 2, 0.4, Regularity::analytic());
  Mat C(2, 2);
  C << cxd(0, 0.2), cxd(0.1, 0.3), cxd(0, 0), cxd(0, -0.1);
  F.add_to(HalfIndex::integer({1, 0}), C);
  F.add_to(HalfIndex::integer({-1, 0}), Mat(-C.adjoint()));
  Decomposition dec = eigen_clusters(A, 1e-3);
  HomologicalSolution sol = solve_homological(A, F, 2.0, dec, nullptr, G, 1e-3, kGolden);
  CHECK(sol.algebra_defect < 1e-12);
}

TEST_CASE("trivial-map certificate bounds the measured conjugated norm") {
  Mat A(2, 2);
  A << cxd(0.3, 0.1), cxd(0, 0), cxd(0, 0), cxd(-0.2, -0.4);
  std::mt19937_64 rng(19);
  TorusSeries F = random_rhs(2, 2, 0.4, 2, 0.5, rng);
  Decomposition dec = eigen_clusters(A, 1e-3);
  LieGroupTag G = LieGroupTag::parse("GL_C", 2);
  TrivialMap phi = TrivialMap::id(dec, 2);
  phi.exponents[dec.subspaces[0].label] = HalfIndex::integer({1, 0});
  phi.exponents[dec.subspaces[1].label] = HalfIndex::integer({-1, 0});
  HomologyOptions opt;
  opt.r = 0.4;
  opt.r_prime = 0.2;
  HomologicalSolution sol = solve_homological(A, F, 2.0, dec, &phi, G, 1e-3, kGolden, opt);
  CHECK(sol.estimate_measured > 0.0);
  CHECK(sol.estimate_bound > 0.0);
  CHECK(sol.estimate_measured <= sol.estimate_bound);
  HomologicalSolution bare = solve_homological(A, F, 2.0, dec, nullptr, G, 1e-3, kGolden);
  CHECK(bare.estimate_bound == 0.0);
  // the Neumann-form resolvent certificate also dominates the blockwise gain
  for (const auto& e : sol.divisor_log) {
    double cert = neumann_resolvent_bound(A, dec, 0, 1, e.m.abs(), 1e-3, kGolden.tau);
    CHECK(cert >= 1.0);
  }
}

TEST_CASE("modes beyond the cutoff stay untouched and zero mode is excluded") {
  Mat A(2, 2);
  A << cxd(0.3, 0.1), cxd(0, 0), cxd(0, 0), cxd(-0.2, -0.4);
  std::mt19937_64 rng(29);
  TorusSeries F = random_rhs(2, 2, 0.4, 4, 0.5, rng);
  Mat C0(2, 2);
  C0 << cxd(1, 0), cxd(0, 0), cxd(0, 0), cxd(1, 0);
  F.add_to(HalfIndex::zero(2), C0);
  Decomposition dec = eigen_clusters(A, 1e-3);
  LieGroupTag G = LieGroupTag::parse("GL_C", 2);
  HomologicalSolution sol = solve_homological(A, F, 2.0, dec, nullptr, G, 1e-3, kGolden);
  for (const auto& [m, C] : sol.X.coeffs) {
    CHECK_FALSE(m.is_zero());
    CHECK(m.abs() <= 2.0);
  }
}
