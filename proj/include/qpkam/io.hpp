#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>

#include "diophantine.hpp"
#include "homology.hpp"
#include "trivial_map.hpp"

namespace qpkam {

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::map<std::string, std::string> parse_header(const std::string& line,
                                                       const std::string& tag) {
  std::istringstream is(line);
  std::string word, version;
  is >> word >> version;
  if (word != tag || version != "v1")
    throw std::runtime_error("expected header '" + tag + " v1', got: " + line);
  std::map<std::string, std::string> kv;
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed header token: " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

}  // namespace detail

inline void write_series(std::ostream& os, const TorusSeries& F) {
  os << "torus-series v1 n=" << F.n << " d=" << F.d << " r=" << detail::fmt(F.declared_r)
     << " regularity="
     << (F.reg.gevrey ? "gevrey:" + detail::fmt(F.reg.beta) : std::string("analytic"))
     << "\n";
  for (const auto& [m, C] : F.coeffs) {
    for (int j = 0; j < F.d; ++j) os << m.doubled[j] << ' ';
    os << ' ';
    for (int i = 0; i < F.n; ++i)
      for (int j = 0; j < F.n; ++j)
        os << detail::fmt(C(i, j).real()) << ' ' << detail::fmt(C(i, j).imag()) << ' ';
    os << "\n";
  }
}

inline TorusSeries read_series(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty series stream");
  auto kv = detail::parse_header(line, "torus-series");
  int n = std::stoi(kv.at("n")), d = std::stoi(kv.at("d"));
  double r = std::stod(kv.at("r"));
  Regularity reg;
  std::string rg = kv.at("regularity");
  if (rg == "analytic") reg = Regularity::analytic();
  else if (rg.rfind("gevrey:", 0) == 0) reg = Regularity::gevrey_class(std::stod(rg.substr(7)));
  else throw std::runtime_error("unknown regularity tag: " + rg);
  TorusSeries F = TorusSeries::zero(n, d, r, reg);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<int> doubled(d);
    for (int j = 0; j < d; ++j)
      if (!(ls >> doubled[j])) throw std::runtime_error("malformed index line: " + line);
    Mat C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double re, im;
        if (!(ls >> re >> im)) throw std::runtime_error("malformed coefficient line: " + line);
        C(i, j) = cxd(re, im);
      }
    F.set(HalfIndex(doubled), C);
  }
  return F;
}

inline void write_decomposition(std::ostream& os, const Decomposition& dec) {
  os << "decomposition v1 n=" << dec.n << " count=" << dec.subspaces.size()
     << " gap=" << detail::fmt(dec.gap) << " gamma=" << detail::fmt(dec.gamma_cert)
     << " hash=" << dec.source_hash << "\n";
  for (const auto& s : dec.subspaces) {
    os << "subspace " << s.label << ' ' << s.basis.cols() << "\n";
    auto dump = [&](const Mat& M) {
      for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j)
          os << detail::fmt(M(i, j).real()) << ' ' << detail::fmt(M(i, j).imag()) << ' ';
        os << "\n";
      }
    };
    dump(s.basis);
    dump(s.projection);
    os << "eigs ";
    for (cxd e : s.eigenvalues) os << detail::fmt(e.real()) << ' ' << detail::fmt(e.imag()) << ' ';
    os << "\n";
  }
}

inline Decomposition read_decomposition(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty decomposition stream");
  auto kv = detail::parse_header(line, "decomposition");
  Decomposition dec;
  dec.n = std::stoi(kv.at("n"));
  dec.gap = std::stod(kv.at("gap"));
  dec.gamma_cert = std::stod(kv.at("gamma"));
  dec.source_hash = std::stoull(kv.at("hash"));
  int count = std::stoi(kv.at("count"));
  auto read_mat = [&](int rows, int cols) {
    Mat M(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (!std::getline(is, line)) throw std::runtime_error("truncated decomposition stream");
      std::istringstream ls(line);
      for (int j = 0; j < cols; ++j) {
        double re, im;
        if (!(ls >> re >> im)) throw std::runtime_error("malformed matrix row: " + line);
        M(i, j) = cxd(re, im);
      }
    }
    return M;
  };
  for (int c = 0; c < count; ++c) {
    if (!std::getline(is, line)) throw std::runtime_error("truncated decomposition stream");
    std::istringstream ls(line);
    std::string word;
    Subspace s;
    int dim;
    if (!(ls >> word >> s.label >> dim) || word != "subspace")
      throw std::runtime_error("expected subspace line, got: " + line);
    s.basis = read_mat(dec.n, dim);
    s.projection = read_mat(dec.n, dec.n);
    if (!std::getline(is, line)) throw std::runtime_error("truncated decomposition stream");
    std::istringstream es(line);
    if (!(es >> word) || word != "eigs") throw std::runtime_error("expected eigs line");
    double re, im;
    while (es >> re >> im) s.eigenvalues.emplace_back(re, im);
    dec.subspaces.push_back(std::move(s));
  }
  return dec;
}

inline void write_trivial_map(std::ostream& os, const TrivialMap& phi) {
  os << "trivial-map v1 d=" << phi.d << "\n";
  write_decomposition(os, phi.dec);
  for (const auto& [label, m] : phi.exponents) {
    os << "exponent " << label;
    for (int j = 0; j < phi.d; ++j) os << ' ' << m.doubled[j];
    os << "\n";
  }
}

inline TrivialMap read_trivial_map(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty trivial-map stream");
  auto kv = detail::parse_header(line, "trivial-map");
  TrivialMap phi;
  phi.d = std::stoi(kv.at("d"));
  phi.dec = read_decomposition(is);
  for (size_t c = 0; c < phi.dec.subspaces.size(); ++c) {
    if (!std::getline(is, line)) throw std::runtime_error("truncated trivial-map stream");
    std::istringstream ls(line);
    std::string word;
    int label;
    if (!(ls >> word >> label) || word != "exponent")
      throw std::runtime_error("expected exponent line, got: " + line);
    std::vector<int> doubled(phi.d);
    for (int j = 0; j < phi.d; ++j)
      if (!(ls >> doubled[j])) throw std::runtime_error("malformed exponent line: " + line);
    phi.exponents[label] = HalfIndex(doubled);
  }
  return phi;
}

inline std::string dc_report_line(const DcReport& rep) {
  std::ostringstream os;
  os << (rep.holds ? "holds" : "fails") << " worst_m=" << rep.worst_m.str()
     << " margin=" << detail::fmt(rep.worst_margin) << " N=" << rep.N << " nu=" << rep.nu;
  return os.str();
}

inline std::string dc_report_json(const DcReport& rep) {
  std::ostringstream os;
  os << "{\"holds\": " << (rep.holds ? "true" : "false") << ", \"worst_m\": [";
  for (int j = 0; j < rep.worst_m.d(); ++j)
    os << (j ? ", " : "") << rep.worst_m.doubled[j] / 2.0;
  os << "], \"margin\": " << detail::fmt(rep.worst_margin) << ", \"N\": " << detail::fmt(rep.N)
     << ", \"nu\": " << rep.nu << "}";
  return os.str();
}

inline void write_divisor_csv(std::ostream& os, const std::vector<DivisorEntry>& log, int d) {
  for (int j = 0; j < d; ++j) os << "m_doubled_" << j + 1 << ",";
  os << "L,L',divisor_modulus,bound\n";
  for (const auto& e : log) {
    for (int j = 0; j < d; ++j) os << e.m.doubled[j] << ",";
    os << e.L << "," << e.Lp << "," << detail::fmt(e.divisor_modulus) << ","
       << detail::fmt(e.bound) << "\n";
  }
}

inline void save_series(const std::string& path, const TorusSeries& F) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_series(os, F);
}

inline TorusSeries load_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_series(is);
}

}  // namespace qpkam
