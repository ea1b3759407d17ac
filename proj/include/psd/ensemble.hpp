#pragma once

// Trajectory ensembles: configuration, unit rescaling, deterministic parallel
// reduction, comparison against the master equation and localization
// statistics.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "psd/diffusion.hpp"
#include "psd/error.hpp"
#include "psd/io.hpp"
#include "psd/master.hpp"
#include "psd/noise.hpp"
#include "psd/quantum.hpp"
#include "psd/spacetime.hpp"

namespace psd {

enum class UnitSystem { natural, si };
enum class Tau0Mode { planck, explicit_value };

struct OutputSpec {
  std::string dir;
  std::vector<std::size_t> trajectories;
};

struct SimulationConfig {
  UnitSystem units = UnitSystem::natural;
  OperatorMatrix hamiltonian = OperatorMatrix::diagonal({0.0, 1.0});
  StateVector initial_state = StateVector(Vector::Ones(2));
  Tau0Mode tau0_mode = Tau0Mode::explicit_value;
  double tau0_value = 1.0;
  double C = 1.0;
  double dt = 1e-3;
  double t_final = 1.0;
  std::size_t n_trajectories = 100;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;
  std::size_t max_records = 10000;
  bool compare_master = false;
  OutputSpec outputs;
  PhysicalConstants constants;

  void validate() const {
    require_hermitian(hamiltonian, "hamiltonian");
    detail::require_same_dim(hamiltonian.dim(), initial_state.dim(), "config");
    detail::require_positive_duration(dt, "dt");
    detail::require_positive_duration(t_final, "t_final");
    if (dt > t_final) throw InvalidParameter("dt must not exceed t_final");
    if (n_trajectories < 1) throw InvalidParameter("n_trajectories must be >= 1");
    if (workers < 1) throw InvalidParameter("workers must be >= 1");
    if (max_records < 2) throw InvalidParameter("max_records must be >= 2");
    if (tau0_mode == Tau0Mode::explicit_value) {
      detail::require_positive_duration(tau0_value, "tau0_value");
    } else if (!(C > 0.0)) {
      throw InvalidParameter("C must be positive");
    }
  }
};

/// The config expressed in internal units: ħ = 1, energies in units of E₀,
/// times in units of ħ/E₀.
struct ResolvedProblem {
  OperatorMatrix hamiltonian = OperatorMatrix::identity(1);
  StateVector initial_state = StateVector::basis(1, 0);
  double tau0 = 0.0;
  double dt = 0.0;
  double t_final = 0.0;
  std::size_t n_steps = 0;
  std::size_t record_stride = 1;
  double energy_unit = 1.0;  // E₀ (J under SI, 1 otherwise)
  double time_unit = 1.0;    // ħ/E₀ (s under SI, 1 otherwise)
  std::string units_log;

  TrajectoryConfig trajectory_config() const { return {dt, n_steps, tau0, 1.0, record_stride}; }
  MasterRunConfig master_config() const { return {dt, t_final, tau0, 1.0, record_stride}; }
};

inline std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

/// Rescales to internal units and fixes the step grid.
///
/// n_steps is rounded up to a multiple of the record stride so trajectory and
/// master records share the same time points; dt shrinks to t_final/n_steps.
inline ResolvedProblem resolve(const SimulationConfig& config) {
  config.validate();
  double tau0_phys = config.tau0_value;
  if (config.tau0_mode == Tau0Mode::planck) {
    if (config.units != UnitSystem::si) {
      throw InvalidParameter("tau0_mode \"planck\" requires SI units");
    }
    tau0_phys = tau1(config.C, config.constants);
  }

  double e0 = 1.0;
  double t0 = 1.0;
  if (config.units == UnitSystem::si) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(config.hamiltonian.entries(),
                                                 Eigen::EigenvaluesOnly);
    const double largest = solver.eigenvalues().cwiseAbs().maxCoeff();
    e0 = largest > 0.0 ? largest : 1.0;
    t0 = config.constants.hbar / e0;
  }

  ResolvedProblem p{config.hamiltonian.scaled(1.0 / e0), config.initial_state};
  p.tau0 = tau0_phys / t0;
  p.t_final = config.t_final / t0;
  const double dt = config.dt / t0;
  const auto raw_steps = static_cast<std::size_t>(std::ceil(p.t_final / dt * (1.0 - 1e-12)));
  p.record_stride = std::max<std::size_t>(
      1, (raw_steps + config.max_records - 2) / (config.max_records - 1));
  p.n_steps = ((raw_steps + p.record_stride - 1) / p.record_stride) * p.record_stride;
  p.dt = p.t_final / static_cast<double>(p.n_steps);
  p.energy_unit = e0;
  p.time_unit = t0;
  if (!(p.tau0 > 0.0)) throw InvalidParameter("tau0 must resolve to a positive value");

  std::ostringstream log;
  log.precision(17);
  if (config.units == UnitSystem::si) {
    log << "units=SI energy_unit_J=" << e0 << " time_unit_s=" << t0 << " tau0_s=" << tau0_phys;
  } else {
    log << "units=natural energy_unit=1 time_unit=1";
  }
  log << " tau0=" << p.tau0 << " dt=" << p.dt << " n_steps=" << p.n_steps
      << " record_stride=" << p.record_stride;
  p.units_log = log.str();
  return p;
}

/// Energy levels of H: distinct eigenvalues and the projectors onto them.
struct EnergyLevels {
  std::vector<double> energies;
  std::vector<Matrix> basis;  // columns span each level
  bool degenerate = false;
};

inline EnergyLevels energy_levels(const OperatorMatrix& h, double relative_tolerance = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.entries());
  const auto& values = solver.eigenvalues();
  const Matrix& vectors = solver.eigenvectors();
  const double scale = std::max(values.cwiseAbs().maxCoeff(), 1e-300);
  EnergyLevels out;
  Eigen::Index start = 0;
  while (start < values.size()) {
    Eigen::Index end = start + 1;
    while (end < values.size() && values(end) - values(start) <= relative_tolerance * scale) ++end;
    out.energies.push_back(values.segment(start, end - start).mean());
    out.basis.push_back(vectors.middleCols(start, end - start));
    if (end - start > 1) out.degenerate = true;
    start = end;
  }
  return out;
}

inline std::vector<double> level_populations(const EnergyLevels& levels, const StateVector& psi) {
  std::vector<double> p;
  p.reserve(levels.basis.size());
  for (const Matrix& b : levels.basis) p.push_back((b.adjoint() * psi.amplitudes()).squaredNorm());
  return p;
}

struct EnsembleSummary {
  std::vector<double> times;
  std::vector<Matrix> mean_projector;
  std::vector<double> mean_energy;
  std::vector<double> mean_energy_variance;
  /// Standard error of M[Var H](t_{k+1}) - M[Var H](t_k), one per interval.
  std::vector<double> energy_variance_step_stderr;
  std::vector<double> level_energies;
  std::vector<double> initial_populations;
  std::vector<double> born_frequencies;
  std::vector<double> terminal_variances;
  std::vector<std::size_t> terminal_levels;
  bool degenerate_spectrum = false;
  std::vector<double> trace_distance_to_master;
  std::size_t n_trajectories = 0;
  std::uint64_t master_seed = 0;
  ResolvedProblem problem;
};

namespace detail {

inline constexpr std::size_t kEnsembleBlock = 64;

/// Per-record partial sums over a contiguous block of trajectories.
struct BlockSums {
  std::vector<Matrix> projector;
  std::vector<double> energy;
  std::vector<double> variance;
  std::vector<double> variance_step;
  std::vector<double> variance_step_sq;

  BlockSums() = default;
  BlockSums(std::size_t records, Eigen::Index n)
      : projector(records, Matrix::Zero(n, n)),
        energy(records, 0.0),
        variance(records, 0.0),
        variance_step(records, 0.0),
        variance_step_sq(records, 0.0) {}

  void add(const BlockSums& other) {
    for (std::size_t k = 0; k < energy.size(); ++k) {
      projector[k] += other.projector[k];
      energy[k] += other.energy[k];
      variance[k] += other.variance[k];
      variance_step[k] += other.variance_step[k];
      variance_step_sq[k] += other.variance_step_sq[k];
    }
  }
};

/// Pairwise tree over blocks in index order; independent of scheduling.
inline BlockSums reduce_pairwise(std::vector<BlockSums>& blocks, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(blocks[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  BlockSums left = reduce_pairwise(blocks, lo, mid);
  const BlockSums right = reduce_pairwise(blocks, mid, hi);
  left.add(right);
  return left;
}

}  // namespace detail

/// Runs n_trajectories PSD trajectories, trajectory k on noise stream k.
///
/// Trajectories are grouped in fixed blocks of 64; each block is summed in
/// index order and blocks are combined by a pairwise tree, so the summary is
/// bit-identical for any worker count. The first failing trajectory aborts
/// the run.
inline EnsembleSummary run_ensemble(const SimulationConfig& config) {
  const ResolvedProblem problem = resolve(config);
  const TrajectoryConfig tcfg = problem.trajectory_config();
  const Dynamics dynamics = PsdDynamics{problem.hamiltonian};
  const EnergyLevels levels = energy_levels(problem.hamiltonian);
  const std::size_t records = problem.n_steps / problem.record_stride + 1;
  const Eigen::Index dim = problem.hamiltonian.dim();
  const std::size_t m = config.n_trajectories;
  const std::size_t n_blocks = (m + detail::kEnsembleBlock - 1) / detail::kEnsembleBlock;

  std::vector<detail::BlockSums> blocks(n_blocks);
  std::vector<double> terminal_var(m, 0.0);
  std::vector<std::size_t> terminal_level(m, 0);
  std::atomic<std::size_t> next_block{0};
  std::atomic<bool> stop{false};
  std::mutex failure_mutex;
  std::optional<std::size_t> failed_index;
  std::string failure_message;

  auto run_block = [&](std::size_t b) {
    detail::BlockSums sums(records, dim);
    const std::size_t first = b * detail::kEnsembleBlock;
    const std::size_t last = std::min(m, first + detail::kEnsembleBlock);
    for (std::size_t k = first; k < last && !stop.load(); ++k) {
      try {
        NoiseStream stream(config.master_seed, k);
        std::size_t slot = 0;
        double previous_var = 0.0;
        const StateVector final_state = integrate_trajectory(
            tcfg, dynamics, problem.initial_state, stream,
            [&](std::size_t, double, const StateVector& psi, double) {
              const Vector& v = psi.amplitudes();
              sums.projector[slot] += v * v.adjoint();
              sums.energy[slot] += expectation(problem.hamiltonian, psi).real();
              const double var = variance(problem.hamiltonian, psi);
              sums.variance[slot] += var;
              if (slot > 0) {
                const double step = var - previous_var;
                sums.variance_step[slot] += step;
                sums.variance_step_sq[slot] += step * step;
              }
              previous_var = var;
              ++slot;
            });
        terminal_var[k] = variance(problem.hamiltonian, final_state);
        const std::vector<double> pops = level_populations(levels, final_state);
        terminal_level[k] = static_cast<std::size_t>(
            std::max_element(pops.begin(), pops.end()) - pops.begin());
      } catch (const std::exception& e) {
        stop.store(true);
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failed_index || k < *failed_index) {
          failed_index = k;
          failure_message = e.what();
        }
        return;
      }
    }
    blocks[b] = std::move(sums);
  };

  auto worker = [&]() {
    for (std::size_t b = next_block.fetch_add(1); b < n_blocks && !stop.load();
         b = next_block.fetch_add(1)) {
      run_block(b);
    }
  };

  const std::size_t n_workers = std::min(config.workers, n_blocks);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed_index) throw TrajectoryFailure(*failed_index, failure_message);

  const detail::BlockSums total = detail::reduce_pairwise(blocks, 0, n_blocks);
  const double inv_m = 1.0 / static_cast<double>(m);

  EnsembleSummary s;
  s.n_trajectories = m;
  s.master_seed = config.master_seed;
  s.problem = problem;
  s.times.reserve(records);
  for (std::size_t k = 0; k < records; ++k) {
    s.times.push_back(static_cast<double>(k * problem.record_stride) * problem.dt);
    s.mean_projector.push_back(total.projector[k] * inv_m);
    s.mean_energy.push_back(total.energy[k] * inv_m);
    s.mean_energy_variance.push_back(total.variance[k] * inv_m);
    if (k > 0) {
      const double mean = total.variance_step[k] * inv_m;
      const double second = total.variance_step_sq[k] * inv_m;
      const double spread = m > 1 ? std::max(0.0, second - mean * mean) * m / (m - 1.0) : 0.0;
      s.energy_variance_step_stderr.push_back(std::sqrt(spread * inv_m));
    }
  }
  s.level_energies = levels.energies;
  s.degenerate_spectrum = levels.degenerate;
  s.initial_populations = level_populations(levels, problem.initial_state);
  s.born_frequencies.assign(levels.energies.size(), 0.0);
  for (std::size_t level : terminal_level) s.born_frequencies[level] += inv_m;
  s.terminal_variances = std::move(terminal_var);
  s.terminal_levels = std::move(terminal_level);
  return s;
}

/// Integrates the PSD master equation on the ensemble's record grid.
inline MasterSolution master_for(const ResolvedProblem& p) {
  return integrate_master(pure_projector(p.initial_state), PsdMasterModel{p.hamiltonian},
                          p.master_config());
}

/// Trace distance between the ensemble mean projector and the master solution
/// at every record time.
inline std::vector<double> compare_ensemble_to_master(const EnsembleSummary& summary,
                                                      const SimulationConfig& config) {
  const ResolvedProblem p = resolve(config);
  const ResolvedProblem& q = summary.problem;
  const bool same = p.hamiltonian.dim() == q.hamiltonian.dim() &&
                    p.hamiltonian.entries() == q.hamiltonian.entries() &&
                    p.initial_state.amplitudes() == q.initial_state.amplitudes() &&
                    p.tau0 == q.tau0 && p.dt == q.dt && p.n_steps == q.n_steps &&
                    p.record_stride == q.record_stride;
  if (!same) throw InvalidComparison("ensemble summary was produced by a different configuration");
  const MasterSolution master = master_for(p);
  if (master.states.size() != summary.mean_projector.size()) {
    throw InvalidComparison("record grids differ");
  }
  std::vector<double> distance;
  distance.reserve(master.states.size());
  for (std::size_t k = 0; k < master.states.size(); ++k) {
    distance.push_back(trace_distance(summary.mean_projector[k], master.states[k]));
  }
  return distance;
}

struct BornCheck {
  double energy = 0.0;
  double initial_population = 0.0;
  double frequency = 0.0;
  double half_width = 0.0;  // 4 binomial standard errors
  bool within = false;
};

struct LocalizationReport {
  bool applicable = true;
  std::string note;
  /// Largest increase of M[Var H] between consecutive records.
  double monotonicity_defect = 0.0;
  /// Largest such increase in units of its standard error.
  double monotonicity_max_z = 0.0;
  bool monotone_within_tolerance = true;
  std::vector<double> terminal_variances;
  double max_terminal_variance = 0.0;
  std::vector<BornCheck> born;
  bool born_within = true;
};

/// Localization and Born-rule statistics of a PSD ensemble. Increases of
/// M[Var H] up to `z_tolerance` standard errors are treated as noise.
inline LocalizationReport localization_stats(const EnsembleSummary& summary,
                                             double z_tolerance = 4.0) {
  LocalizationReport r;
  if (summary.degenerate_spectrum) {
    r.applicable = false;
    r.note = "degenerate spectrum: localization does not resolve states within a degenerate level";
  }
  for (std::size_t k = 1; k < summary.mean_energy_variance.size(); ++k) {
    const double rise = summary.mean_energy_variance[k] - summary.mean_energy_variance[k - 1];
    const double se = summary.energy_variance_step_stderr[k - 1];
    r.monotonicity_defect = std::max(r.monotonicity_defect, rise);
    if (rise > 0.0) {
      const double z = se > 0.0 ? rise / se : std::numeric_limits<double>::infinity();
      r.monotonicity_max_z = std::max(r.monotonicity_max_z, z);
    }
  }
  r.monotone_within_tolerance = r.monotonicity_max_z <= z_tolerance;
  r.terminal_variances = summary.terminal_variances;
  for (double v : r.terminal_variances) r.max_terminal_variance = std::max(r.max_terminal_variance, v);
  const double m = static_cast<double>(summary.n_trajectories);
  for (std::size_t j = 0; j < summary.level_energies.size(); ++j) {
    BornCheck b;
    b.energy = summary.level_energies[j];
    b.initial_population = summary.initial_populations[j];
    b.frequency = summary.born_frequencies[j];
    const double p = std::clamp(b.initial_population, 0.0, 1.0);
    b.half_width = 4.0 * std::sqrt(p * (1.0 - p) / m);
    b.within = std::abs(b.frequency - b.initial_population) <= b.half_width + 1e-12;
    r.born_within = r.born_within && b.within;
    r.born.push_back(b);
  }
  return r;
}

inline json summary_to_json(const EnsembleSummary& s) {
  json projectors = json::array();
  for (const Matrix& m : s.mean_projector) projectors.push_back(io::matrix_to_json(m));
  return {{"units", s.problem.units_log},
          {"n_trajectories", s.n_trajectories},
          {"master_seed", s.master_seed},
          {"tau0", s.problem.tau0},
          {"dt", s.problem.dt},
          {"n_steps", s.problem.n_steps},
          {"record_stride", s.problem.record_stride},
          {"energy_unit", s.problem.energy_unit},
          {"time_unit", s.problem.time_unit},
          {"times", s.times},
          {"mean_energy", s.mean_energy},
          {"mean_energy_variance", s.mean_energy_variance},
          {"mean_projector", std::move(projectors)},
          {"level_energies", s.level_energies},
          {"initial_populations", s.initial_populations},
          {"born_frequencies", s.born_frequencies},
          {"degenerate_spectrum", s.degenerate_spectrum},
          {"trace_distance_to_master", s.trace_distance_to_master}};
}

/// Columns t, e_mean, e_var_mean, trace_dist (empty when not compared).
inline void write_ensemble_csv(const EnsembleSummary& s, std::ostream& os) {
  const auto precision = os.precision(17);
  os << "# " << s.problem.units_log << '\n';
  os << "t,e_mean,e_var_mean,trace_dist\n";
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    os << s.times[k] << ',' << s.mean_energy[k] << ',' << s.mean_energy_variance[k] << ',';
    if (k < s.trace_distance_to_master.size()) os << s.trace_distance_to_master[k];
    os << '\n';
  }
  os.precision(precision);
}

inline SimulationConfig config_from_json(const json& j) {
  SimulationConfig c;
  const std::string units = j.value("units", std::string("natural"));
  if (units == "natural") {
    c.units = UnitSystem::natural;
  } else if (units == "SI" || units == "si") {
    c.units = UnitSystem::si;
  } else {
    throw InvalidParameter("units must be \"natural\" or \"SI\"");
  }
  c.hamiltonian = io::operator_from_json(j.at("hamiltonian"), true);
  c.initial_state = io::state_from_json(j.at("initial_state"));
  const std::string mode = j.value("tau0_mode", std::string("explicit"));
  if (mode == "explicit") {
    c.tau0_mode = Tau0Mode::explicit_value;
  } else if (mode == "planck") {
    c.tau0_mode = Tau0Mode::planck;
  } else {
    throw InvalidParameter("tau0_mode must be \"planck\" or \"explicit\"");
  }
  c.tau0_value = j.value("tau0_value", c.tau0_value);
  c.C = j.value("C", c.C);
  c.dt = j.value("dt", c.dt);
  c.t_final = j.value("t_final", c.t_final);
  c.n_trajectories = j.value("n_trajectories", c.n_trajectories);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.workers = j.value("workers", c.workers);
  c.max_records = j.value("max_records", c.max_records);
  c.compare_master = j.value("compare_master", c.compare_master);
  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    c.outputs.dir = o.value("dir", std::string());
    c.outputs.trajectories = o.value("trajectories", std::vector<std::size_t>{});
  }
  if (j.contains("constants")) {
    const json& k = j.at("constants");
    c.constants.hbar = k.value("hbar", c.constants.hbar);
    c.constants.G = k.value("G", c.constants.G);
    c.constants.c = k.value("c", c.constants.c);
  }
  c.validate();
  return c;
}

}  // namespace psd
