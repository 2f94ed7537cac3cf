#pragma once

#include <fstream>
#include <random>
#include <sstream>

#include "groups.hpp"
#include "io.hpp"
#include "schedule.hpp"

namespace qpkam {

// flat `key = value` file with bracketed [section] headers and # comments
struct ConfigFile {
  std::map<std::string, std::string> kv;  // "section.key" -> value

  static ConfigFile parse(std::istream& is) {
    ConfigFile cfg;
    std::string line, section;
    while (std::getline(is, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      auto last = line.find_last_not_of(" \t\r");
      line = line.substr(first, last - first + 1);
      if (line.front() == '[') {
        if (line.back() != ']') throw std::runtime_error("malformed section header: " + line);
        section = line.substr(1, line.size() - 2);
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error("expected key = value: " + line);
      auto ks = line.substr(0, eq);
      auto vs = line.substr(eq + 1);
      auto trim = [](std::string s) {
        auto a = s.find_first_not_of(" \t");
        auto b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      cfg.kv[section + "." + trim(ks)] = trim(vs);
    }
    return cfg;
  }
  static ConfigFile load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    return parse(is);
  }

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("missing config key: " + key);
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& def) const {
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
  }
  double get_double(const std::string& key) const { return std::stod(get(key)); }
  double get_double_or(const std::string& key, double def) const {
    return has(key) ? std::stod(get(key)) : def;
  }
  int get_int(const std::string& key) const { return std::stoi(get(key)); }
  int get_int_or(const std::string& key, int def) const {
    return has(key) ? std::stoi(get(key)) : def;
  }
};

struct ExperimentConfig {
  std::string name;
  LieGroupTag group;
  int n = 0, d = 0;
  Frequency freq;
  Mat A;
  std::string F_spec;  // "random", "zero", or "file <path>"
  std::uint64_t F_seed = 0;
  int F_degree = 1;
  double F_amplitude = 0.0;
  double r = 0.5, r_prime = 0.25;
  Regularity reg;
  RunMode mode = RunMode::practical;
  double target_eps = 1e-18;
  int step_budget = 8;
  int grid = 16;
};

namespace detail {

inline std::vector<double> parse_vector(const std::string& s) {
  std::istringstream is(s);
  std::vector<double> v;
  double x;
  while (is >> x) v.push_back(x);
  return v;
}

inline Mat parse_matrix_literal(const std::string& s, int n) {
  std::vector<double> v = parse_vector(s);
  if (static_cast<int>(v.size()) != 2 * n * n)
    throw std::runtime_error("matrix literal needs 2n^2 numbers (re im pairs, row-major)");
  Mat A(n, n);
  int at = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      A(i, j) = cxd(v[at], v[at + 1]);
      at += 2;
    }
  return A;
}

}  // namespace detail

inline Mat named_constant_matrix(const std::string& name, int n) {
  const double pi = kTwoPi / 2.0;
  if (name == "zero") return Mat::Zero(n, n);
  if (name == "rotation_pi") {
    if (n != 2) throw std::runtime_error("rotation_pi needs n = 2");
    Mat A(2, 2);
    A << cxd(0, 0), cxd(-pi, 0), cxd(pi, 0), cxd(0, 0);
    return A;
  }
  if (name == "scalar03i") {
    if (n != 1) throw std::runtime_error("scalar03i needs n = 1");
    Mat A(1, 1);
    A(0, 0) = cxd(0.0, 0.3);
    return A;
  }
  if (name == "u2_diag") {
    if (n != 2) throw std::runtime_error("u2_diag needs n = 2");
    Mat A = Mat::Zero(2, 2);
    A(0, 0) = cxd(0.0, 0.31);
    A(1, 1) = cxd(0.0, -0.17);
    return A;
  }
  if (name == "gl2c_generic") {
    if (n != 2) throw std::runtime_error("gl2c_generic needs n = 2");
    Mat A = Mat::Zero(2, 2);
    A(0, 0) = cxd(0.2, 0.31);
    A(1, 1) = cxd(-0.1, -0.17);
    return A;
  }
  throw std::runtime_error("unknown named matrix: " + name);
}

// project a constant matrix onto the Lie algebra of G (pointwise structure;
// reality is handled separately by conjugate mode pairing)
inline Mat algebra_project(const Mat& C, const LieGroupTag& G) {
  const int n = G.n;
  switch (G.id) {
    case GroupId::GL_C:
    case GroupId::GL_R:
      return C;
    case GroupId::SL2_C:
    case GroupId::SL_R:
      return C - (C.trace() / static_cast<double>(n)) * Mat::Identity(n, n);
    case GroupId::O:
      return 0.5 * (C - C.transpose());
    case GroupId::Sp_R: {
      Mat J = symplectic_J(n);
      Mat S = J * C;
      S = 0.5 * (S + S.transpose()).eval();
      return -J * S;  // J^{-1} = -J
    }
    case GroupId::U:
      return 0.5 * (C - C.adjoint());
  }
  return C;
}

// deterministic random algebra-valued trigonometric polynomial with the
// symmetries the declared group requires
inline TorusSeries random_algebra_series(const LieGroupTag& G, int d, int degree,
                                         double amplitude, std::uint64_t seed, double r,
                                         Regularity reg = Regularity::analytic()) {
  const int n = G.n;
  TorusSeries F = TorusSeries::zero(n, d, r, reg);
  F.real_flag = G.real_group();
  if (amplitude == 0.0) return F;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto draw = [&]() {
    Mat C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = cxd(u(rng), u(rng));
    return C;
  };
  std::vector<HalfIndex> positive;  // lexicographically positive integer modes
  std::function<void(std::vector<int>&, int, int)> rec = [&](std::vector<int>& k, int j,
                                                             int left) {
    if (j == d) {
      HalfIndex m = HalfIndex::integer(k);
      if (!m.is_zero() && HalfIndex::zero(d) < m) positive.push_back(m);
      return;
    }
    for (k[j] = -left; k[j] <= left; ++k[j]) rec(k, j + 1, left - std::abs(k[j]));
  };
  std::vector<int> k(d, 0);
  rec(k, 0, degree);

  for (const auto& m : positive) {
    Mat C = amplitude * algebra_project(draw(), G);
    if (G.id == GroupId::U) {
      F.set(m, C);
      F.set(-m, Mat(-C.adjoint()));  // pointwise skew-hermitian
    } else if (G.real_group()) {
      F.set(m, C);
      F.set(-m, C.conjugate());  // pointwise real
    } else {
      F.set(m, C);
      F.set(-m, amplitude * algebra_project(draw(), G));
    }
  }
  // zero mode: structure-compatible and compatible with the pairing above
  Mat C0 = amplitude * algebra_project(draw(), G);
  if (G.id == GroupId::U) C0 = 0.5 * (C0 - C0.adjoint()).eval();
  else if (G.real_group()) C0 = C0.real().cast<cxd>().eval();
  F.set(HalfIndex::zero(d), algebra_project(C0, G));
  return F;
}

inline ExperimentConfig load_experiment(const ConfigFile& cfg) {
  ExperimentConfig ex;
  ex.name = cfg.get_or("experiment.name", "experiment");
  ex.n = cfg.get_int("experiment.n");
  ex.d = cfg.get_int("experiment.d");
  ex.group = LieGroupTag::parse(cfg.get("experiment.group"), ex.n);
  std::string md = cfg.get_or("experiment.mode", "practical");
  if (md == "practical") ex.mode = RunMode::practical;
  else if (md == "theoretical") ex.mode = RunMode::theoretical;
  else throw std::runtime_error("unknown mode: " + md);
  ex.target_eps = cfg.get_double_or("experiment.target_eps", 1e-18);
  ex.step_budget = cfg.get_int_or("experiment.step_budget", 8);
  ex.grid = cfg.get_int_or("experiment.grid", 16);

  std::string om = cfg.get("frequency.omega");
  if (om == "golden2") ex.freq.omega = {1.0, (std::sqrt(5.0) - 1.0) / 2.0};
  else ex.freq.omega = detail::parse_vector(om);
  if (static_cast<int>(ex.freq.omega.size()) != ex.d)
    throw std::runtime_error("omega dimension does not match d");
  ex.freq.kappa = cfg.get_double("frequency.kappa");
  ex.freq.tau = cfg.get_double("frequency.tau");
  if (!(ex.freq.kappa > 0.0 && ex.freq.kappa < 1.0))
    throw std::runtime_error("kappa must be in (0,1)");

  ex.r = cfg.get_double("system.r");
  ex.r_prime = cfg.get_double("system.r_prime");
  if (!(ex.r_prime < ex.r && ex.r <= 0.5))
    throw std::runtime_error("need r' < r <= 1/2");
  std::string rg = cfg.get_or("system.regularity", "analytic");
  if (rg == "analytic") ex.reg = Regularity::analytic();
  else if (rg.rfind("gevrey:", 0) == 0) ex.reg = Regularity::gevrey_class(std::stod(rg.substr(7)));
  else throw std::runtime_error("unknown regularity: " + rg);

  std::string aspec = cfg.get("system.A");
  if (aspec.rfind("literal ", 0) == 0)
    ex.A = detail::parse_matrix_literal(aspec.substr(8), ex.n);
  else ex.A = named_constant_matrix(aspec, ex.n);

  ex.F_spec = cfg.get("system.F");
  if (ex.F_spec != "zero" && ex.F_spec != "random" && ex.F_spec.rfind("file ", 0) != 0)
    throw std::runtime_error("unknown F spec: " + ex.F_spec);
  ex.F_seed = std::stoull(cfg.get_or("system.F_seed", "1"));
  ex.F_degree = cfg.get_int_or("system.F_degree", 1);
  ex.F_amplitude = cfg.get_double_or("system.F_amplitude", 0.0);
  if (ex.F_amplitude < 0.0) throw std::runtime_error("amplitude must be >= 0");
  return ex;
}

inline TorusSeries build_perturbation(const ExperimentConfig& ex) {
  if (ex.F_spec == "zero")
    return TorusSeries::zero(ex.n, ex.d, ex.r, ex.reg);
  if (ex.F_spec == "random")
    return random_algebra_series(ex.group, ex.d, ex.F_degree, ex.F_amplitude, ex.F_seed,
                                 ex.r, ex.reg);
  if (ex.F_spec.rfind("file ", 0) == 0) return load_series(ex.F_spec.substr(5));
  throw std::runtime_error("unknown F spec: " + ex.F_spec);
}

}  // namespace qpkam
