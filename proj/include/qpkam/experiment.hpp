#pragma once

#include <iostream>

#include <json.hpp>

#include "config.hpp"
#include "kam.hpp"

namespace qpkam {

struct ExperimentOptions {
  std::string out_dir = ".";
  bool verbose = false;
};

inline std::string run_csv(const KamRun& run) {
  std::ostringstream os;
  os << "k,r_k,eps_measured,eps_scheduled,normA_k,resonance_flag,Nbar_k,kappa2_k,"
        "residual,group_defect\n";
  for (const auto& st : run.states) {
    os << st.k << "," << detail::fmt(st.r_k) << "," << detail::fmt(st.eps_k) << ","
       << detail::fmt(st.eps_scheduled) << "," << detail::fmt(opnorm(st.A_k)) << ","
       << (st.resonance_flag ? 1 : 0) << "," << detail::fmt(st.Nbar_k) << ","
       << detail::fmt(st.kappa2_k) << "," << detail::fmt(st.residual) << ","
       << detail::fmt(st.group_defect_k) << "\n";
  }
  return os.str();
}

inline nlohmann::json run_report(const ExperimentConfig& ex, const KamRun& run,
                                 const std::string& version) {
  nlohmann::json rep;
  rep["version"] = version;
  rep["config"] = {
      {"name", ex.name},          {"group", ex.group.name()},
      {"n", ex.n},                {"d", ex.d},
      {"kappa", ex.freq.kappa},   {"tau", ex.freq.tau},
      {"omega", ex.freq.omega},   {"r", ex.r},
      {"r_prime", ex.r_prime},
      {"regularity", ex.reg.gevrey ? "gevrey:" + std::to_string(ex.reg.beta)
                                   : std::string("analytic")},
      {"mode", ex.mode == RunMode::practical ? "practical" : "theoretical"},
      {"target_eps", ex.target_eps}, {"step_budget", ex.step_budget},
      {"F_spec", ex.F_spec},      {"F_seed", ex.F_seed},
      {"F_degree", ex.F_degree},  {"F_amplitude", ex.F_amplitude}};
  rep["states"] = nlohmann::json::array();
  for (const auto& st : run.states)
    rep["states"].push_back({{"k", st.k},
                             {"r_k", st.r_k},
                             {"eps", st.eps_k},
                             {"eps_scheduled", st.eps_scheduled},
                             {"normA", opnorm(st.A_k)},
                             {"resonance_flag", st.resonance_flag},
                             {"Nbar", st.Nbar_k},
                             {"kappa2", st.kappa2_k},
                             {"gamma", st.gamma_k},
                             {"b", st.b_k},
                             {"group_defect", st.group_defect_k}});
  rep["certificates"] = {
      {"target_reached", run.target_reached},
      {"final_eps", run.norm_log.empty() ? 0.0 : run.norm_log.back()},
      {"cauchy_log", run.cauchy_log},
      {"norm_log", run.norm_log}};
  rep["residuals"] = run.residual_log;
  return rep;
}

// exit codes: 0 target reached, 1 config error, 2 contraction failure
inline int run_experiment(const std::string& config_path, const ExperimentOptions& opt,
                          const std::map<std::string, std::string>& overrides = {}) {
  static const std::string version = "1.0.0";
  ExperimentConfig ex;
  try {
    ConfigFile cfg = ConfigFile::load(config_path);
    for (const auto& [k, v] : overrides) cfg.kv[k] = v;
    ex = load_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  try {
    TorusSeries F = build_perturbation(ex);
    ScheduleParams params = ScheduleParams::from(ex.freq, ex.n, ex.mode);
    if (opt.verbose)
      std::cerr << "running " << ex.name << ": |F|_r = " << class_norm(F, ex.r) << "\n";
    KamRun run = almost_reduce(ex.A, F, ex.group, ex.r, ex.r_prime, ex.target_eps,
                               params, ex.freq, ex.step_budget, ex.grid);

    std::ofstream csv(opt.out_dir + "/run.csv");
    if (!csv) throw std::runtime_error("cannot write to " + opt.out_dir);
    csv << run_csv(run);
    std::ofstream js(opt.out_dir + "/report.json");
    js << run_report(ex, run, version).dump(2) << "\n";
    const KamState& fin = run.states.back();
    save_series(opt.out_dir + "/Z.series", run.Z_total);
    save_series(opt.out_dir + "/Abar.series", fin.Abar_k);
    save_series(opt.out_dir + "/Fbar.series", fin.Fbar_k);
    save_series(opt.out_dir + "/Psi.series", fin.Psi_k);
    save_series(opt.out_dir + "/A.series",
                TorusSeries::constant(fin.A_k, ex.d, ex.r_prime, ex.reg));
    if (opt.verbose)
      std::cerr << "final eps = " << fin.eps_k << " after " << fin.k << " steps\n";
    return run.target_reached ? 0 : 2;
  } catch (const ContractionFailure& e) {
    std::cerr << "contraction failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace qpkam
