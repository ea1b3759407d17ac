#pragma once

// Command-line surface. Exit codes: 0 success, 1 invalid input, 2 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "psd/checks.hpp"
#include "psd/ensemble.hpp"
#include "psd/io.hpp"
#include "psd/master.hpp"
#include "psd/noise.hpp"
#include "psd/spacetime.hpp"

namespace psd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 1;
inline constexpr int kExitNumericalFailure = 2;

namespace cli_detail {

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trajectories;
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
};

inline void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON simulation config")->required();
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--trajectories", o.trajectories, "number of trajectories");
  cmd->add_option("--dt", o.dt, "time step");
  cmd->add_option("--t-final", o.t_final, "final time");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "worker threads");
}

inline SimulationConfig load_config(const RunOptions& o) {
  std::ifstream in(o.config_path);
  if (!in) throw InvalidParameter("cannot open config " + o.config_path);
  SimulationConfig c = config_from_json(json::parse(in));
  if (o.seed) c.master_seed = *o.seed;
  if (o.trajectories) c.n_trajectories = *o.trajectories;
  if (o.dt) c.dt = *o.dt;
  if (o.t_final) c.t_final = *o.t_final;
  if (o.out) c.outputs.dir = *o.out;
  if (o.workers) c.workers = *o.workers;
  c.validate();
  return c;
}

inline std::filesystem::path output_dir(const SimulationConfig& c) {
  std::filesystem::path dir = c.outputs.dir.empty() ? std::filesystem::path(".") : std::filesystem::path(c.outputs.dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InvalidParameter("cannot write " + path.string());
  return os;
}

inline TrajectoryRecord single_trajectory(const SimulationConfig& c, std::size_t index) {
  const ResolvedProblem p = resolve(c);
  NoiseStream stream(c.master_seed, index);
  return run_trajectory(p.trajectory_config(), PsdDynamics{p.hamiltonian}, p.initial_state,
                        stream);
}

inline void write_trajectory_files(const SimulationConfig& c, std::size_t index,
                                   const std::filesystem::path& dir) {
  const TrajectoryRecord record = single_trajectory(c, index);
  const std::string stem = "trajectory_" + std::to_string(index);
  auto csv = open_output(dir / (stem + ".csv"));
  write_trajectory_csv(record, csv, resolve(c).units_log);
  auto js = open_output(dir / (stem + ".json"));
  json j = trajectory_to_json(record);
  j["units"] = resolve(c).units_log;
  js << j.dump(2) << '\n';
}

inline void write_ensemble_files(const EnsembleSummary& s, const std::filesystem::path& dir) {
  auto js = open_output(dir / "summary.json");
  js << summary_to_json(s).dump(2) << '\n';
  auto csv = open_output(dir / "ensemble.csv");
  write_ensemble_csv(s, csv);
}

inline double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

}  // namespace cli_detail

/// Parses argv and runs one subcommand, writing human output to `out` and
/// diagnostics to `err`.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Primary state diffusion and quantum state diffusion simulator", "psd"};
  app.require_subcommand(1);

  RunOptions traj_opts, ens_opts, master_opts, compare_opts;
  std::size_t traj_index = 0;
  auto* traj = app.add_subcommand("trajectory", "run one PSD trajectory");
  add_run_options(traj, traj_opts);
  traj->add_option("--index", traj_index, "trajectory (noise stream) index");

  auto* ens = app.add_subcommand("ensemble", "run a PSD trajectory ensemble");
  add_run_options(ens, ens_opts);

  auto* master = app.add_subcommand("master", "integrate the PSD master equation");
  add_run_options(master, master_opts);

  auto* compare = app.add_subcommand("compare", "ensemble vs master-equation trace distance");
  add_run_options(compare, compare_opts);

  std::uint64_t check_seed = 7;
  std::size_t check_samples = 500;
  double check_dt = 1e-3;
  double check_tau1 = 0.5;
  auto* check = app.add_subcommand("spacetime-check",
                                   "fluctuating-time propagator vs PSD step equivalence suite");
  check->add_option("--seed", check_seed, "seed");
  check->add_option("--samples", check_samples, "random (psi, H, dxi) samples");
  check->add_option("--dt", check_dt, "time step");
  check->add_option("--tau1", check_tau1, "tau1 in internal units");

  std::optional<double> est_delta_e, est_mass, est_v1, est_v2, est_height, est_tau0;
  double est_g = kStandardGravity;
  double est_c = 1.0;
  auto* estimate = app.add_subcommand("estimate", "Planck-scale decoherence rate (SI units)");
  estimate->add_option("--delta-e", est_delta_e, "energy difference in J");
  estimate->add_option("--mass", est_mass, "mass in kg");
  estimate->add_option("--v1", est_v1, "first velocity in m/s");
  estimate->add_option("--v2", est_v2, "second velocity in m/s");
  estimate->add_option("--height", est_height, "height difference in m");
  estimate->add_option("--g", est_g, "gravitational acceleration in m/s^2");
  estimate->add_option("--C", est_c, "tau0 = C * T_Pl");
  estimate->add_option("--tau0", est_tau0, "explicit tau0 in s (overrides --C)");

  auto* constants = app.add_subcommand("constants", "print physical constants and the Planck time");

  std::vector<double> audit_dt{1e-3};
  std::size_t audit_n = 1000000;
  std::uint64_t audit_seed = 42;
  auto* audit = app.add_subcommand("noise-audit", "moments of the complex Wiener increment");
  audit->group("");
  audit->add_option("--dt", audit_dt, "time steps (repeatable)");
  audit->add_option("--n", audit_n, "samples per time step");
  audit->add_option("--seed", audit_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitInvalidInput;
  }

  try {
    if (*traj) {
      const SimulationConfig c = load_config(traj_opts);
      if (c.outputs.dir.empty()) {
        write_trajectory_csv(single_trajectory(c, traj_index), out, resolve(c).units_log);
      } else {
        write_trajectory_files(c, traj_index, output_dir(c));
      }
    } else if (*ens || *compare) {
      SimulationConfig c = load_config(*ens ? ens_opts : compare_opts);
      EnsembleSummary s = run_ensemble(c);
      if (*compare || c.compare_master) s.trace_distance_to_master = compare_ensemble_to_master(s, c);
      const auto dir = output_dir(c);
      write_ensemble_files(s, dir);
      for (std::size_t k : c.outputs.trajectories) write_trajectory_files(c, k, dir);
      out << "trajectories=" << s.n_trajectories << " records=" << s.times.size();
      if (!s.trace_distance_to_master.empty()) {
        out << " max_trace_distance=" << max_of(s.trace_distance_to_master);
      }
      out << " output=" << dir.string() << '\n';
    } else if (*master) {
      const SimulationConfig c = load_config(master_opts);
      const ResolvedProblem p = resolve(c);
      const MasterSolution sol = master_for(p);
      if (sol.positivity_warnings > 0) {
        err << "warning: min eigenvalue " << sol.min_eigenvalue << " below "
            << kPositivityWarning << '\n';
      }
      if (c.outputs.dir.empty()) {
        out << "# " << p.units_log << '\n';
        write_master_csv(sol, out);
      } else {
        const auto dir = output_dir(c);
        auto csv = open_output(dir / "master.csv");
        csv << "# " << p.units_log << '\n';
        write_master_csv(sol, csv);
        auto js = open_output(dir / "master.json");
        json j = master_to_json(sol);
        j["units"] = p.units_log;
        js << j.dump(2) << '\n';
      }
    } else if (*check) {
      const EquivalenceReport r = check_spacetime_equivalence(check_seed, check_samples, check_dt,
                                                              check_tau1);
      const bool ok = r.passed();
      out.precision(6);
      out << "samples=" << r.samples << " max_deviation=" << r.max_deviation
          << " completion_residual=" << r.max_completion_residual
          << " perturbed_rms_per_dt=" << r.min_perturbed_rms_per_dt
          << " perturbed_R_rms_per_dt=" << r.min_perturbed_r_rms_per_dt
          << " perturbed_s_rms_per_dt=" << r.min_perturbed_s_rms_per_dt << ' '
          << (ok ? "PASS" : "FAIL") << '\n';
      return ok ? kExitOk : kExitNumericalFailure;
    } else if (*estimate) {
      const PhysicalConstants k;
      double delta_e = 0.0;
      if (est_delta_e) {
        delta_e = *est_delta_e;
      } else if (est_mass && est_v1 && est_v2) {
        delta_e = kinetic_energy_difference(*est_mass, *est_v1, *est_v2);
      } else if (est_mass && est_height) {
        delta_e = gravitational_energy_difference(*est_mass, *est_height, est_g);
      } else {
        throw InvalidParameter("give --delta-e, or --mass with --v1 --v2, or --mass with --height");
      }
      const double t_pl = planck_time(k);
      const double tau0 = est_tau0 ? *est_tau0 : tau1(est_c, k);
      const DecoherenceEstimate d = decoherence_rate(delta_e, tau0, k);
      const json j = {{"tau0_s", tau0},
                      {"delta_E_J", delta_e},
                      {"rate_per_s", d.rate},
                      {"decoherence_time_s", io::number_or_null(d.time)},
                      {"planck_time_s", t_pl},
                      {"C", est_tau0 ? tau0 / t_pl : est_c}};
      out << j.dump(2) << '\n';
    } else if (*constants) {
      const PhysicalConstants k;
      const double t_pl = planck_time(k);
      const auto precision = out.precision();
      out << "hbar = " << k.hbar << " J s\n"
          << "G = " << k.G << " m^3 kg^-1 s^-2\n"
          << "c = " << k.c << " m/s\n";
      out.precision(3);
      out << "T_Pl = " << t_pl << " s\n";
      out.precision(17);
      out << "T_Pl_exact = " << t_pl << " s\n";
      out.precision(precision);
    } else if (*audit) {
      out.precision(17);
      out << "dt,n,mean_re,mean_im,mean_sq_re,mean_sq_im,mean_abs_sq\n";
      for (std::size_t i = 0; i < audit_dt.size(); ++i) {
        NoiseStream stream(audit_seed, i);
        const NoiseMoments m = measure_dxi_moments(audit_dt[i], audit_n, stream);
        out << m.dt << ',' << m.n << ',' << m.mean_re << ',' << m.mean_im << ',' << m.mean_sq_re
            << ',' << m.mean_sq_im << ',' << m.mean_abs_sq << '\n';
      }
    }
  } catch (const DegenerateState& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const IntegrationFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const TrajectoryFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }
  return kExitOk;
}

}  // namespace psd
