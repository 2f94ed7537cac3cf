#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstring>
#include <functional>
#include <numeric>

#include "groups.hpp"
#include "series.hpp"

namespace qpkam {

struct Subspace {
  int label = 0;
  Mat basis;       // n x k, orthonormal columns (Schur vectors)
  Mat projection;  // n x n spectral projector
  std::vector<cxd> eigenvalues;
  cxd eigenvalue_mean() const {
    cxd s = 0.0;
    for (cxd a : eigenvalues) s += a;
    return s / static_cast<double>(eigenvalues.size());
  }
};

struct Decomposition {
  int n = 0;
  double gap = 0.0;         // kappa'
  double gamma_cert = 0.0;  // exponent in the projection-norm certificate
  std::size_t source_hash = 0;
  bool real_flag = false, symplectic_flag = false, unitary_flag = false;
  std::vector<Subspace> subspaces;

  static Decomposition whole_space(int n) {
    Decomposition dec;
    dec.n = n;
    dec.gap = 0.0;
    dec.gamma_cert = n * (n + 1);
    Subspace s;
    s.label = 0;
    s.basis = Mat::Identity(n, n);
    s.projection = Mat::Identity(n, n);
    dec.subspaces.push_back(std::move(s));
    return dec;
  }

  const Subspace* find(int label) const {
    for (const auto& s : subspaces)
      if (s.label == label) return &s;
    return nullptr;
  }
  double max_projection_norm() const {
    double w = 0.0;
    for (const auto& s : subspaces) w = std::max(w, opnorm(s.projection));
    return w;
  }
  double partition_defect() const {
    Mat sum = Mat::Zero(n, n);
    double w = 0.0;
    for (const auto& s : subspaces) sum += s.projection;
    w = opnorm(sum - Mat::Identity(n, n));
    for (size_t i = 0; i < subspaces.size(); ++i)
      for (size_t j = 0; j < subspaces.size(); ++j) {
        Mat p = subspaces[i].projection * subspaces[j].projection;
        if (i == j) p -= subspaces[i].projection;
        w = std::max(w, opnorm(p));
      }
    return w;
  }
};

inline std::size_t matrix_hash(const Mat& A) {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](double x) {
    std::uint64_t b;
    static_assert(sizeof(b) == sizeof(x));
    std::memcpy(&b, &x, sizeof(b));
    h = (h ^ b) * 1099511628211ull;
  };
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) {
      mix(A(i, j).real());
      mix(A(i, j).imag());
    }
  return h;
}

// Swap the diagonal entries at positions k, k+1 of an upper triangular T by a
// unitary similarity, updating Q accordingly.
inline void schur_swap_adjacent(Mat& T, Mat& Q, int k) {
  const cxd a = T(k, k), b = T(k, k + 1), c = T(k + 1, k + 1);
  // eigenvector of [[a,b],[0,c]] for eigenvalue c
  cxd x1 = b, x2 = c - a;
  double nx = std::sqrt(std::norm(x1) + std::norm(x2));
  if (nx == 0.0) return;  // equal eigenvalues, nothing to move
  x1 /= nx; x2 /= nx;
  Mat G(2, 2);
  G << x1, -std::conj(x2), x2, std::conj(x1);
  T.block(k, 0, 2, T.cols()) = G.adjoint() * T.block(k, 0, 2, T.cols());
  T.block(0, k, T.rows(), 2) = T.block(0, k, T.rows(), 2) * G;
  Q.block(0, k, Q.rows(), 2) = Q.block(0, k, Q.rows(), 2) * G;
  T(k + 1, k) = 0.0;
}

// Move the selected diagonal positions to the top, preserving their order.
inline void schur_select_top(Mat& T, Mat& Q, const std::vector<bool>& select) {
  int target = 0;
  const int n = static_cast<int>(select.size());
  std::vector<bool> sel = select;
  for (int i = 0; i < n; ++i) {
    if (!sel[i]) continue;
    for (int k = i; k > target; --k) {
      schur_swap_adjacent(T, Q, k - 1);
      std::swap(sel[k - 1], sel[k]);
    }
    ++target;
  }
}

// Solve T11 R - R T22 = T12 with T11 (p x p) and T22 (q x q) upper triangular,
// by back-substitution over columns of R (right to left in T22? actually
// columns left to right, rows bottom to top).
inline Mat triangular_sylvester(const Mat& T11, const Mat& T22, const Mat& T12) {
  const int p = static_cast<int>(T11.rows());
  const int q = static_cast<int>(T22.rows());
  Mat R = Mat::Zero(p, q);
  for (int j = 0; j < q; ++j) {
    for (int i = p - 1; i >= 0; --i) {
      cxd rhs = T12(i, j);
      for (int l = i + 1; l < p; ++l) rhs -= T11(i, l) * R(l, j);
      for (int l = 0; l < j; ++l) rhs += R(i, l) * T22(l, j);
      R(i, j) = rhs / (T11(i, i) - T22(j, j));
    }
  }
  return R;
}

namespace detail {
inline std::vector<int> cluster_indices(const std::vector<cxd>& eigs, double kappa) {
  const int n = static_cast<int>(eigs.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(eigs[i] - eigs[j]) <= kappa) parent[find(i)] = find(j);
  std::vector<int> root(n);
  for (int i = 0; i < n; ++i) root[i] = find(i);
  return root;
}
}  // namespace detail

inline void classify_decomposition(Decomposition& dec, double tol = 1e-8);

// Finest invariant decomposition whose clusters are the transitive closure of
// eigenvalue gaps <= kappa'. Projections come from an ordered Schur form.
inline Decomposition eigen_clusters(const Mat& A, double kappa_prime) {
  const int n = static_cast<int>(A.rows());
  if (!A.allFinite()) throw std::runtime_error("eigen_clusters: non-finite entries");
  Eigen::ComplexSchur<Mat> schur(A, /*computeU=*/true);
  if (schur.info() != Eigen::Success)
    throw std::runtime_error("eigen_clusters: Schur decomposition failed");
  Mat T0 = schur.matrixT(), Q0 = schur.matrixU();

  std::vector<cxd> eigs(n);
  for (int i = 0; i < n; ++i) eigs[i] = T0(i, i);
  std::vector<int> root = detail::cluster_indices(eigs, kappa_prime);

  // stable cluster order: by first occurrence along the Schur diagonal
  std::vector<int> reps;
  for (int i = 0; i < n; ++i)
    if (std::find(reps.begin(), reps.end(), root[i]) == reps.end()) reps.push_back(root[i]);

  Decomposition dec;
  dec.n = n;
  dec.gap = kappa_prime;
  dec.gamma_cert = n * (n + 1);
  dec.source_hash = matrix_hash(A);

  for (size_t c = 0; c < reps.size(); ++c) {
    Mat T = T0, Q = Q0;
    std::vector<bool> select(n, false);
    int k = 0;
    for (int i = 0; i < n; ++i)
      if (root[i] == reps[c]) { select[i] = true; ++k; }
    schur_select_top(T, Q, select);
    Subspace s;
    s.label = static_cast<int>(c);
    s.basis = Q.leftCols(k);
    for (int i = 0; i < k; ++i) s.eigenvalues.push_back(T(i, i));
    if (k == n) {
      s.projection = Mat::Identity(n, n);
    } else {
      Mat R = triangular_sylvester(T.topLeftCorner(k, k), T.bottomRightCorner(n - k, n - k),
                                   T.topRightCorner(k, n - k));
      Mat Pschur = Mat::Zero(n, n);
      Pschur.topLeftCorner(k, k) = Mat::Identity(k, k);
      Pschur.topRightCorner(k, n - k) = R;
      s.projection = Q * Pschur * Q.adjoint();
    }
    dec.subspaces.push_back(std::move(s));
  }
  classify_decomposition(dec);
  return dec;
}

struct NilpotentPart {
  Mat AN;
  Mat semisimple;
  bool defective_flag = false;
};

inline NilpotentPart nilpotent_part(const Mat& A, double jordan_tol = -1.0) {
  const int n = static_cast<int>(A.rows());
  double na = opnorm(A);
  if (jordan_tol <= 0.0) jordan_tol = 1e-8 * (1.0 + na);
  Decomposition dec = eigen_clusters(A, jordan_tol);
  Mat S = Mat::Zero(n, n);
  for (const auto& s : dec.subspaces) S += s.eigenvalue_mean() * s.projection;
  NilpotentPart out;
  out.AN = A - S;
  out.semisimple = S;
  Mat p = Mat::Identity(n, n);
  for (int i = 0; i < n; ++i) p = p * out.AN;
  out.defective_flag = opnorm(p) > 1e-6 * std::pow(1.0 + na, n);
  return out;
}

inline void classify_decomposition(Decomposition& dec, double tol) {
  const int n = dec.n;
  // real: the conjugate of every subspace appears in the list
  bool real = true;
  for (const auto& s : dec.subspaces) {
    bool found = false;
    for (const auto& t : dec.subspaces)
      if ((s.projection.conjugate() - t.projection).norm() <= tol * n) { found = true; break; }
    if (!found) { real = false; break; }
  }
  dec.real_flag = real;
  bool unitary = true;
  for (size_t i = 0; i < dec.subspaces.size() && unitary; ++i)
    for (size_t j = 0; j < dec.subspaces.size(); ++j)
      if (i != j &&
          (dec.subspaces[i].basis.adjoint() * dec.subspaces[j].basis).norm() > tol) {
        unitary = false;
        break;
      }
  dec.unitary_flag = unitary;
  bool symplectic = false;
  if (n % 2 == 0) {
    symplectic = true;
    Mat J = symplectic_J(n);
    for (const auto& s : dec.subspaces) {
      int partners = 0;
      for (const auto& t : dec.subspaces)
        if ((s.basis.transpose() * J * t.basis).norm() > tol) ++partners;
      if (partners != 1) { symplectic = false; break; }
    }
  }
  dec.symplectic_flag = symplectic;
}

struct ProjectionCertificate {
  std::vector<double> measured;
  double bound = 0.0;
  double worst_ratio = 0.0;  // measured / bound
  bool ok = true;
};

inline ProjectionCertificate spectral_projections(const Decomposition& dec, const Mat& A,
                                                  double C0 = 8.0) {
  if (dec.source_hash != matrix_hash(A))
    throw std::invalid_argument("spectral_projections: decomposition does not match matrix");
  ProjectionCertificate cert;
  double an = opnorm(nilpotent_part(A).AN);
  double kappa = std::max(dec.gap, 1e-300);
  cert.bound = dec.unitary_flag ? 1.0 + 1e-10
                                : C0 * std::pow((1.0 + an) / kappa, dec.gamma_cert);
  for (const auto& s : dec.subspaces) {
    double m = opnorm(s.projection);
    cert.measured.push_back(m);
    cert.worst_ratio = std::max(cert.worst_ratio, m / cert.bound);
  }
  cert.ok = cert.worst_ratio <= 1.0;
  return cert;
}

// Merge dec under the relation "the (L,L') block of H is torus-periodic",
// requiring that blocks of Aprime - A are nonzero only on torus-periodic blocks.
inline Decomposition coarsen_decomposition(const TorusSeries& H, const Mat& A,
                                           const Mat& Aprime, const Decomposition& dec,
                                           double tol = 1e-10) {
  const int count = static_cast<int>(dec.subspaces.size());
  // torus_block(i,j): no half-integer mode of H survives compression by (P_i, P_j)
  auto torus_block = [&](int i, int j) {
    for (const auto& [m, C] : H.coeffs) {
      if (m.is_integer()) continue;
      Mat B = dec.subspaces[i].projection * C * dec.subspaces[j].projection;
      if (opnorm(B) > tol) return false;
    }
    return true;
  };
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j) {
      Mat dA = dec.subspaces[i].projection * (Aprime - A) * dec.subspaces[j].projection;
      if (opnorm(dA) > tol && !torus_block(i, j))
        throw std::runtime_error("coarsen_decomposition: constant-part change on a "
                                 "non-torus-periodic block (" +
                                 std::to_string(dec.subspaces[i].label) + "," +
                                 std::to_string(dec.subspaces[j].label) + ")");
    }
  std::vector<int> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  // merge pairs whose H-block is torus-periodic (zero blocks included); labels
  // carrying half-integer cross content must keep distinct exponents
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j)
      if (i != j && torus_block(i, j) && torus_block(j, i)) parent[find(i)] = find(j);

  Decomposition out;
  out.n = dec.n;
  out.gap = dec.gap;
  out.gamma_cert = dec.gamma_cert;
  out.source_hash = matrix_hash(Aprime);
  std::vector<int> seen;
  for (int i = 0; i < count; ++i) {
    int r = find(i);
    if (std::find(seen.begin(), seen.end(), r) != seen.end()) continue;
    seen.push_back(r);
    Subspace s;
    s.label = static_cast<int>(out.subspaces.size());
    s.projection = Mat::Zero(dec.n, dec.n);
    int cols = 0;
    for (int j = 0; j < count; ++j)
      if (find(j) == r) cols += static_cast<int>(dec.subspaces[j].basis.cols());
    s.basis = Mat::Zero(dec.n, cols);
    int at = 0;
    for (int j = 0; j < count; ++j)
      if (find(j) == r) {
        s.projection += dec.subspaces[j].projection;
        s.basis.middleCols(at, dec.subspaces[j].basis.cols()) = dec.subspaces[j].basis;
        at += static_cast<int>(dec.subspaces[j].basis.cols());
        for (cxd a : dec.subspaces[j].eigenvalues) s.eigenvalues.push_back(a);
      }
    out.subspaces.push_back(std::move(s));
  }
  classify_decomposition(out);
  return out;
}

}  // namespace qpkam
