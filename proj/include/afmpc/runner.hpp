#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afmpc/afrit.hpp"
#include "afmpc/frit.hpp"
#include "afmpc/mpc.hpp"
#include "afmpc/pid.hpp"
#include "afmpc/plant.hpp"
#include "afmpc/timeseries.hpp"
#include "afmpc/types.hpp"

namespace afmpc {

/// Controller configurations the runner can exercise:
///  - kPid:   fixed-gain PID tracking r directly
///  - kAfrit: adaptive PID (DF-RLS model matching) tracking r directly
///  - kFmpc:  fixed pretuned PID inside the predictive outer loop
///  - kAfmpc: adaptive PID inside the predictive outer loop
enum class Mode { kPid, kAfrit, kFmpc, kAfmpc };

enum class TrajectoryKind { kSine, kStaircase };

const char* to_string(Mode m);
const char* to_string(TrajectoryKind k);
Mode mode_from_string(const std::string& s);
TrajectoryKind trajectory_from_string(const std::string& s);

struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::kStaircase;
  Scalar amplitude = 20.0;  ///< [mm]
  Scalar offset = 30.0;     ///< [mm]
  Scalar freq = 0.3;        ///< [Hz]; staircase period = 1/freq
};

struct RlsConfig {
  Scalar mu = 0.99;
  Scalar eps = 1e-3;
  Scalar p0_scale = 1e3;
  Scalar r0_scale = 1e-3;
};

struct ExperimentConfig {
  Mode mode = Mode::kAfmpc;
  Scalar ts = 1e-3;        ///< control interval [s]
  Scalar duration = 100.0; ///< experiment length [s]
  TrajectoryConfig trajectory;          ///< control target
  TrajectoryConfig pretune_trajectory;  ///< prior-experiment target
  Scalar pretune_duration = 30.0;       ///< prior-experiment length [s]
  /// When false (default) the pretune searches gains only and the reference
  /// model stays at tc0, so a lambda sweep degrades the gains but not the
  /// matching target; true co-tunes tc (joint 4-parameter search).
  bool pretune_optimize_tc = false;
  Scalar lambda = 100.0;   ///< tuning regularization weight
  PidGains theta0{0.1, 0.1, 0.01};  ///< initial/prior-experiment gains
  Scalar tc0 = 0.05;       ///< reference-model time constant [s]
  std::optional<ExtendedGains> tuned;  ///< pretuned gains + tc, required for MPC modes
  PlantParams plant;
  MpcConfig mpc;
  RlsConfig rls;
  std::uint64_t seed = 1;
  Scalar steady_start = 55.0;  ///< steady-state MAE window [s]
  Scalar steady_end = 65.0;
  Scalar y_init = 0.0;  ///< initial displacement [mm]
};

/// Stage-gain presets for the two documented starting points.
PidGains case_gains(int case_id);

/// The nine-point regularization grid used by the sweep preset.
std::vector<Scalar> default_lambda_grid();

struct RunSummary {
  Scalar mae_full = 0.0;
  Scalar mae_steady = 0.0;
  Scalar overshoot = 0.0;
  long violations = 0;
  Scalar wall_time_s = 0.0;
};

struct RunRecord {
  TimeSeries r;  ///< target [mm]
  TimeSeries y;  ///< measured displacement [mm]
  VecX u_applied, u_c, kp_hat, ki_hat, kd_hat, match_err, j_mpc;
  std::vector<int> active;
  VecX r_min_eig;  ///< estimator information-matrix floor per step (adaptive modes)
  RunSummary summary;
};

/// Runs one closed-loop experiment. kFmpc/kAfmpc require cfg.tuned.
RunRecord run_closed_loop(const ExperimentConfig& cfg);

/// Fixed-gain prior experiment on the surrogate followed by offline tuning.
/// Throws when theta0 produces no excitation or non-finite data.
std::pair<PriorData, TuneReport> run_pretune(const ExperimentConfig& cfg);

struct MatrixSpec {
  std::vector<Scalar> lambdas = default_lambda_grid();
  std::vector<TrajectoryKind> trajectories{TrajectoryKind::kSine, TrajectoryKind::kStaircase};
  std::vector<int> cases{1, 2};
  std::vector<Mode> modes{Mode::kFmpc, Mode::kAfmpc};
  int repeats = 5;
};

struct StatsRow {
  std::string cell_id;
  Mode mode = Mode::kFmpc;
  Scalar lambda = 0.0;
  TrajectoryKind trajectory = TrajectoryKind::kSine;
  int case_id = 1;
  int repeat = 0;
  RunSummary summary;
  bool failed = false;
  std::string error;
};

struct CellQuartiles {
  std::string cell_id;
  Mode mode;
  Scalar lambda;
  TrajectoryKind trajectory;
  int case_id;
  int count = 0;
  Scalar mae_steady_q1 = 0, mae_steady_med = 0, mae_steady_q3 = 0;
  Scalar mae_full_q1 = 0, mae_full_med = 0, mae_full_q3 = 0;
};

struct MatrixResult {
  std::vector<StatsRow> rows;
  std::vector<CellQuartiles> cells;
};

/// Sweeps lambda x pretune-trajectory x gain-case x mode with `repeats`
/// repetitions per cell. Each (lambda, trajectory, case, repeat) tuple is
/// pretuned once and shared by all modes; every repeat gets a distinct
/// deterministic seed derived from cfg.seed. Cells run on a worker pool
/// (n_threads = 0 picks the hardware count); failures are recorded per cell
/// and the sweep continues.
MatrixResult run_matrix(const ExperimentConfig& base, const MatrixSpec& spec,
                        int n_threads = 0);

/// Per-step trace with the pinned header
/// t,r,y,u_applied,u_c,kp_hat,ki_hat,kd_hat,match_err,j_mpc,active.
void write_trace_csv(const RunRecord& rec, const std::string& path);

/// Estimator log: k,kp_hat,ki_hat,kd_hat,r_min_eig.
void write_estimator_csv(const RunRecord& rec, const std::string& path);

struct TraceSummary {
  Scalar mae_full = 0.0;
  Scalar mae_steady = 0.0;
  Scalar overshoot = 0.0;
};

/// Recomputes summary statistics from a trace CSV (no plant needed).
TraceSummary replay_trace(const std::string& path, Scalar steady_start, Scalar steady_end);

void write_stats_csv(const std::vector<StatsRow>& rows, const std::string& path);
void write_quartiles_csv(const std::vector<CellQuartiles>& cells, const std::string& path);

/// Deterministic seed mixing for matrix cells (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace afmpc
