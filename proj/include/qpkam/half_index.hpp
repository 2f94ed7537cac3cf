#pragma once

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpkam {

// Index m in (1/2)Z^d stored as doubled integers, so |m| and parity are exact.
// An integer index (torus-periodic mode) has all components even.
struct HalfIndex {
  std::vector<int> doubled;

  HalfIndex() = default;
  explicit HalfIndex(std::vector<int> k) : doubled(std::move(k)) {}

  static HalfIndex zero(int d) { return HalfIndex(std::vector<int>(d, 0)); }
  // from an integer lattice vector
  static HalfIndex integer(const std::vector<int>& m) {
    std::vector<int> k(m.size());
    for (size_t i = 0; i < m.size(); ++i) k[i] = 2 * m[i];
    return HalfIndex(k);
  }

  int d() const { return static_cast<int>(doubled.size()); }

  // |m| = sum |m_j|, exact in halves
  int abs_doubled() const {
    int s = 0;
    for (int k : doubled) s += std::abs(k);
    return s;
  }
  double abs() const { return abs_doubled() / 2.0; }

  double component(int j) const { return doubled[j] / 2.0; }

  bool is_integer() const {
    for (int k : doubled) if (k % 2 != 0) return false;
    return true;
  }
  bool is_zero() const {
    for (int k : doubled) if (k != 0) return false;
    return true;
  }

  double dot(const std::vector<double>& omega) const {
    double s = 0.0;
    for (size_t j = 0; j < doubled.size(); ++j) s += 0.5 * doubled[j] * omega[j];
    return s;
  }

  HalfIndex operator+(const HalfIndex& o) const {
    std::vector<int> k(doubled.size());
    for (size_t j = 0; j < doubled.size(); ++j) k[j] = doubled[j] + o.doubled[j];
    return HalfIndex(std::move(k));
  }
  HalfIndex operator-(const HalfIndex& o) const {
    std::vector<int> k(doubled.size());
    for (size_t j = 0; j < doubled.size(); ++j) k[j] = doubled[j] - o.doubled[j];
    return HalfIndex(std::move(k));
  }
  HalfIndex operator-() const {
    std::vector<int> k(doubled.size());
    for (size_t j = 0; j < doubled.size(); ++j) k[j] = -doubled[j];
    return HalfIndex(std::move(k));
  }

  bool operator==(const HalfIndex& o) const { return doubled == o.doubled; }
  bool operator!=(const HalfIndex& o) const { return doubled != o.doubled; }
  // lexicographic; gives the deterministic coefficient ordering everywhere
  bool operator<(const HalfIndex& o) const { return doubled < o.doubled; }

  std::string str() const {
    std::string s = "(";
    for (size_t j = 0; j < doubled.size(); ++j) {
      if (j) s += ",";
      if (doubled[j] % 2 == 0) s += std::to_string(doubled[j] / 2);
      else s += std::to_string(doubled[j]) + "/2";
    }
    return s + ")";
  }
};

}  // namespace qpkam
