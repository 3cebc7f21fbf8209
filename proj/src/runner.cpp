#include "afmpc/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace afmpc {

namespace {

constexpr Scalar kValveMin = 0.0;   // hard actuator limits [V]
constexpr Scalar kValveMax = 10.0;
constexpr Scalar kMinLoopSlope = 1e-2;  // floor on kp + ki*ts + kd/ts [V/mm]

// Parameter projection for the adaptive modes: clamp the estimate to the set
// where the controller inverse stays well-posed (nonnegative gains, loop
// slope bounded away from zero). kd enters the slope as kd/ts, so estimator
// noise around a near-zero matching kd can otherwise flip the sign of the
// command direction, which the predictive layer cannot survive.
void project_gains(Vec3& theta, Scalar ts) {
  theta = theta.cwiseMax(Scalar(0));
  const Scalar slope = theta[0] + theta[1] * ts + theta[2] / ts;
  if (slope < kMinLoopSlope) theta[2] += (kMinLoopSlope - slope) * ts;
}

std::string fmt(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_compact(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

TimeSeries gen_trajectory(const TrajectoryConfig& t, Scalar ts, Scalar duration) {
  if (t.kind == TrajectoryKind::kSine)
    return gen_sine(t.amplitude, t.offset, t.freq, ts, duration);
  if (!(t.freq > 0.0)) throw std::invalid_argument("staircase needs freq > 0");
  return gen_staircase(t.amplitude, t.offset, 1.0 / t.freq, ts, duration);
}

Scalar window_mae(const TimeSeries& err, Scalar start, Scalar end) {
  const Scalar lo = std::max(start, err.t0);
  const Scalar hi = std::min(end, err.t_end());
  if (lo > hi) return mae(err, err.t0, err.t_end());  // window outside extent
  return mae(err, lo, hi);
}

}  // namespace

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kPid: return "PID";
    case Mode::kAfrit: return "AFRIT";
    case Mode::kFmpc: return "FMPC";
    case Mode::kAfmpc: return "AFMPC";
  }
  return "?";
}

const char* to_string(TrajectoryKind k) {
  return k == TrajectoryKind::kSine ? "sine" : "staircase";
}

Mode mode_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (t == "PID") return Mode::kPid;
  if (t == "AFRIT") return Mode::kAfrit;
  if (t == "FMPC") return Mode::kFmpc;
  if (t == "AFMPC") return Mode::kAfmpc;
  throw std::invalid_argument("unknown mode: " + s);
}

TrajectoryKind trajectory_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "sine") return TrajectoryKind::kSine;
  if (t == "staircase") return TrajectoryKind::kStaircase;
  throw std::invalid_argument("unknown trajectory: " + s);
}

PidGains case_gains(int case_id) {
  if (case_id == 1) return PidGains{0.1, 0.1, 0.01};
  if (case_id == 2) return PidGains{0.1, 0.1, 0.001};
  throw std::invalid_argument("case must be 1 or 2");
}

std::vector<Scalar> default_lambda_grid() {
  return {1.0, 2.5, 5.0, 10.0, 50.0, 100.0, 250.0, 500.0, 1000.0};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

RunRecord run_closed_loop(const ExperimentConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  validate(cfg.plant);
  validate(cfg.mpc);
  const bool outer_mpc = cfg.mode == Mode::kFmpc || cfg.mode == Mode::kAfmpc;
  const bool adaptive = cfg.mode == Mode::kAfrit || cfg.mode == Mode::kAfmpc;
  if (outer_mpc && !cfg.tuned)
    throw std::invalid_argument("predictive modes require tuned gains (run pretune first)");

  const TimeSeries r = gen_trajectory(cfg.trajectory, cfg.ts, cfg.duration);
  const Eigen::Index n = r.size();
  const Scalar tc_used = cfg.tuned ? cfg.tuned->tc : cfg.tc0;

  RunRecord rec;
  rec.r = r;
  rec.y = make_series(VecX::Zero(n), cfg.ts);
  rec.u_applied = VecX::Zero(n);
  rec.u_c = VecX::Zero(n);
  rec.kp_hat = VecX::Zero(n);
  rec.ki_hat = VecX::Zero(n);
  rec.kd_hat = VecX::Zero(n);
  rec.match_err = VecX::Zero(n);
  rec.j_mpc = VecX::Zero(n);
  rec.active.assign(static_cast<size_t>(n), 0);
  rec.r_min_eig = VecX::Zero(n);

  std::mt19937_64 rng(cfg.seed);
  PlantState plant = plant_reset(cfg.plant, cfg.y_init);
  Scalar y = plant_measure(plant, cfg.plant, rng);

  PidState pid_state;
  PidGains gains = cfg.tuned ? cfg.tuned->gains : cfg.theta0;
  RegressorFilter reg_filter(tc_used, cfg.ts);
  DfRlsState rls =
      make_df_rls(gains.vec(), cfg.rls.p0_scale, cfg.rls.r0_scale, cfg.rls.mu, cfg.rls.eps);
  if (adaptive) project_gains(rls.theta_hat, cfg.ts);  // start inside the admissible set
  PlModel predictor = make_pl(tc_used, cfg.ts);
  PlModel matcher = make_pl(tc_used, cfg.ts);  // open-loop matching-error log

  // Start from the actuator's equilibrium for the initial displacement.
  Scalar u_applied_prev = std::clamp(cfg.y_init / cfg.plant.gain, kValveMin, kValveMax);
  Scalar u_c_prev = cfg.y_init;
  long violations = 0;

  VecX r_preview(cfg.mpc.hp);
  Eigen::SelfAdjointEigenSolver<Mat3> eig;

  for (Eigen::Index k = 0; k < n; ++k) {
    if (adaptive) {
      const RegressorSample sample = reg_filter.step(y, u_applied_prev);
      df_rls_update(rls, sample);
      project_gains(rls.theta_hat, cfg.ts);
      gains = PidGains::from_vec(rls.theta_hat);
      eig.computeDirect(rls.r_mat);
      rec.r_min_eig[k] = eig.eigenvalues().minCoeff();
    }

    Scalar u_c;
    if (outer_mpc) {
      for (int i = 0; i < cfg.mpc.hp; ++i)
        r_preview[i] = r.values[std::min<Eigen::Index>(k + 1 + i, n - 1)];
      const MpcSolution sol = solve_mpc(cfg.mpc, predictor, y, r_preview, gains, pid_state,
                                        u_c_prev, u_applied_prev);
      u_c = sol.u_c_plan[0];
      rec.j_mpc[k] = sol.j;
      rec.active[static_cast<size_t>(k)] = sol.active_constraints > 0 ? 1 : 0;
    } else {
      u_c = r.values[k];
    }

    const Scalar e = u_c - y;
    const Scalar u_raw = pid_step(gains, pid_state, e, cfg.ts);
    if (u_raw < cfg.mpc.u_min || u_raw > cfg.mpc.u_max) ++violations;
    const Scalar u = std::clamp(u_raw, kValveMin, kValveMax);

    rec.y.values[k] = y;
    rec.u_applied[k] = u;
    rec.u_c[k] = u_c;
    rec.kp_hat[k] = gains.kp;
    rec.ki_hat[k] = gains.ki;
    rec.kd_hat[k] = gains.kd;
    rec.match_err[k] = y - pl_step(matcher, outer_mpc ? u_c : r.values[k]);

    y = plant_step(plant, cfg.plant, u, cfg.ts, rng);
    u_c_prev = u_c;
    u_applied_prev = u;
  }

  TimeSeries err = rec.r;
  err.values -= rec.y.values;
  rec.summary.mae_full = mae(err, err.t0, err.t_end());
  rec.summary.mae_steady = window_mae(err, cfg.steady_start, cfg.steady_end);
  rec.summary.overshoot = overshoot(rec.y, rec.r);
  rec.summary.violations = violations;
  rec.summary.wall_time_s =
      std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t_begin).count();
  return rec;
}

std::pair<PriorData, TuneReport> run_pretune(const ExperimentConfig& cfg) {
  ExperimentConfig pcfg = cfg;
  pcfg.mode = Mode::kPid;
  pcfg.trajectory = cfg.pretune_trajectory;
  pcfg.duration = cfg.pretune_duration;
  pcfg.seed = mix_seed(cfg.seed, 0x70726574);  // distinct prior-experiment stream
  pcfg.tuned.reset();

  const RunRecord rec = run_closed_loop(pcfg);
  const Scalar span = rec.u_applied.maxCoeff() - rec.u_applied.minCoeff();
  if (!(span > 1e-9))
    throw std::runtime_error("pretune produced no excitation (flat input record)");

  PriorData prior = make_prior(make_series(rec.u_applied, pcfg.ts),
                               make_series(rec.y.values, pcfg.ts));
  TuneOptions opts;
  opts.optimize_tc = cfg.pretune_optimize_tc;
  TuneReport report = tune(ExtendedGains{cfg.theta0, cfg.tc0}, prior, cfg.lambda, opts);
  return {std::move(prior), std::move(report)};
}

namespace {

std::string make_cell_id(Scalar lambda, TrajectoryKind traj, int case_id) {
  std::ostringstream out;
  out << "lam" << fmt_compact(lambda) << '_' << to_string(traj) << "_case" << case_id;
  return out.str();
}

Scalar quantile_sorted(const std::vector<Scalar>& sorted, Scalar p) {
  if (sorted.empty()) return std::nan("");
  const Scalar pos = p * static_cast<Scalar>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const Scalar frac = pos - static_cast<Scalar>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

MatrixResult run_matrix(const ExperimentConfig& base, const MatrixSpec& spec, int n_threads) {
  if (spec.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (spec.lambdas.empty() || spec.trajectories.empty() || spec.cases.empty() ||
      spec.modes.empty())
    throw std::invalid_argument("matrix sweep must not be empty");

  struct Task {
    size_t il, it, ic, rep;
  };
  std::vector<Task> tasks;
  for (size_t il = 0; il < spec.lambdas.size(); ++il)
    for (size_t it = 0; it < spec.trajectories.size(); ++it)
      for (size_t ic = 0; ic < spec.cases.size(); ++ic)
        for (size_t rep = 0; rep < static_cast<size_t>(spec.repeats); ++rep)
          tasks.push_back(Task{il, it, ic, rep});

  const size_t n_modes = spec.modes.size();
  std::vector<StatsRow> rows(tasks.size() * n_modes);

  auto run_task = [&](const Task& t) {
    ExperimentConfig cfg = base;
    cfg.lambda = spec.lambdas[t.il];
    cfg.pretune_trajectory.kind = spec.trajectories[t.it];
    cfg.theta0 = case_gains(spec.cases[t.ic]);
    cfg.tuned.reset();
    std::uint64_t s = base.seed;
    for (std::uint64_t part : {t.il + 1, t.it + 1, t.ic + 1, t.rep + 1}) s = mix_seed(s, part);
    cfg.seed = s;

    const size_t row0 =
        ((t.il * spec.trajectories.size() + t.it) * spec.cases.size() + t.ic) *
            static_cast<size_t>(spec.repeats) * n_modes +
        t.rep * n_modes;
    const std::string cell = make_cell_id(cfg.lambda, spec.trajectories[t.it], spec.cases[t.ic]);

    std::string pretune_error;
    std::optional<ExtendedGains> tuned;
    try {
      auto [prior, report] = run_pretune(cfg);
      tuned = report.theta_star;
    } catch (const std::exception& ex) {
      pretune_error = ex.what();
    }

    for (size_t im = 0; im < n_modes; ++im) {
      StatsRow& row = rows[row0 + im];
      row.cell_id = cell;
      row.mode = spec.modes[im];
      row.lambda = cfg.lambda;
      row.trajectory = spec.trajectories[t.it];
      row.case_id = spec.cases[t.ic];
      row.repeat = static_cast<int>(t.rep);
      if (!pretune_error.empty()) {
        row.failed = true;
        row.error = "pretune: " + pretune_error;
        continue;
      }
      ExperimentConfig mcfg = cfg;
      mcfg.mode = spec.modes[im];
      mcfg.tuned = tuned;
      mcfg.seed = mix_seed(cfg.seed, 1000 + im);
      try {
        row.summary = run_closed_loop(mcfg).summary;
      } catch (const std::exception& ex) {
        row.failed = true;
        row.error = ex.what();
      }
    }
  };

  unsigned workers = n_threads > 0 ? static_cast<unsigned>(n_threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));
  if (workers <= 1) {
    for (const Task& t : tasks) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
          run_task(tasks[i]);
      });
    }
    for (auto& th : pool) th.join();
  }

  MatrixResult result;
  result.rows = std::move(rows);

  for (size_t il = 0; il < spec.lambdas.size(); ++il)
    for (size_t it = 0; it < spec.trajectories.size(); ++it)
      for (size_t ic = 0; ic < spec.cases.size(); ++ic)
        for (size_t im = 0; im < n_modes; ++im) {
          CellQuartiles cq;
          cq.cell_id = make_cell_id(spec.lambdas[il], spec.trajectories[it], spec.cases[ic]);
          cq.mode = spec.modes[im];
          cq.lambda = spec.lambdas[il];
          cq.trajectory = spec.trajectories[it];
          cq.case_id = spec.cases[ic];
          std::vector<Scalar> steady, full;
          for (int rep = 0; rep < spec.repeats; ++rep) {
            const size_t idx =
                ((il * spec.trajectories.size() + it) * spec.cases.size() + ic) *
                    static_cast<size_t>(spec.repeats) * n_modes +
                static_cast<size_t>(rep) * n_modes + im;
            const StatsRow& row = result.rows[idx];
            if (row.failed) continue;
            steady.push_back(row.summary.mae_steady);
            full.push_back(row.summary.mae_full);
          }
          std::sort(steady.begin(), steady.end());
          std::sort(full.begin(), full.end());
          cq.count = static_cast<int>(steady.size());
          cq.mae_steady_q1 = quantile_sorted(steady, 0.25);
          cq.mae_steady_med = quantile_sorted(steady, 0.5);
          cq.mae_steady_q3 = quantile_sorted(steady, 0.75);
          cq.mae_full_q1 = quantile_sorted(full, 0.25);
          cq.mae_full_med = quantile_sorted(full, 0.5);
          cq.mae_full_q3 = quantile_sorted(full, 0.75);
          result.cells.push_back(std::move(cq));
        }
  return result;
}

void write_trace_csv(const RunRecord& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,r,y,u_applied,u_c,kp_hat,ki_hat,kd_hat,match_err,j_mpc,active\n";
  for (Eigen::Index k = 0; k < rec.r.size(); ++k) {
    out << fmt(rec.r.time_at(k)) << ',' << fmt(rec.r.values[k]) << ',' << fmt(rec.y.values[k])
        << ',' << fmt(rec.u_applied[k]) << ',' << fmt(rec.u_c[k]) << ','
        << fmt(rec.kp_hat[k]) << ',' << fmt(rec.ki_hat[k]) << ',' << fmt(rec.kd_hat[k]) << ','
        << fmt(rec.match_err[k]) << ',' << fmt(rec.j_mpc[k]) << ','
        << rec.active[static_cast<size_t>(k)] << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_estimator_csv(const RunRecord& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "k,kp_hat,ki_hat,kd_hat,r_min_eig\n";
  for (Eigen::Index k = 0; k < rec.kp_hat.size(); ++k) {
    out << k << ',' << fmt(rec.kp_hat[k]) << ',' << fmt(rec.ki_hat[k]) << ','
        << fmt(rec.kd_hat[k]) << ',' << fmt(rec.r_min_eig[k]) << '\n';
  }
}

TraceSummary replay_trace(const std::string& path, Scalar steady_start, Scalar steady_end) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace: " + path);

  std::vector<Scalar> tv, rv, yv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<Scalar> vals;
    while (std::getline(row, field, ',')) vals.push_back(std::stod(field));
    if (vals.size() < 3) throw std::runtime_error("malformed trace row: " + line);
    tv.push_back(vals[0]);
    rv.push_back(vals[1]);
    yv.push_back(vals[2]);
  }
  if (tv.size() < 2) throw std::runtime_error("trace needs at least two rows");
  const Scalar dt = tv[1] - tv[0];
  TimeSeries r = make_series(
      Eigen::Map<VecX>(rv.data(), static_cast<Eigen::Index>(rv.size())), dt, tv[0]);
  TimeSeries y = make_series(
      Eigen::Map<VecX>(yv.data(), static_cast<Eigen::Index>(yv.size())), dt, tv[0]);

  TimeSeries err = r;
  err.values -= y.values;
  TraceSummary s;
  s.mae_full = mae(err, err.t0, err.t_end());
  s.mae_steady = window_mae(err, steady_start, steady_end);
  s.overshoot = overshoot(y, r);
  return s;
}

void write_stats_csv(const std::vector<StatsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "cell_id,mode,lambda,trajectory,case,repeat,mae_full,mae_steady,overshoot,violations\n";
  for (const StatsRow& row : rows) {
    const Scalar nanv = std::nan("");
    const RunSummary& s = row.summary;
    out << row.cell_id << ',' << to_string(row.mode) << ',' << fmt_compact(row.lambda) << ','
        << to_string(row.trajectory) << ',' << row.case_id << ',' << row.repeat << ','
        << fmt(row.failed ? nanv : s.mae_full) << ',' << fmt(row.failed ? nanv : s.mae_steady)
        << ',' << fmt(row.failed ? nanv : s.overshoot) << ','
        << (row.failed ? -1 : s.violations) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_quartiles_csv(const std::vector<CellQuartiles>& cells, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "cell_id,mode,lambda,trajectory,case,count,"
         "mae_steady_q1,mae_steady_med,mae_steady_q3,mae_full_q1,mae_full_med,mae_full_q3\n";
  for (const CellQuartiles& c : cells) {
    out << c.cell_id << ',' << to_string(c.mode) << ',' << fmt_compact(c.lambda) << ','
        << to_string(c.trajectory) << ',' << c.case_id << ',' << c.count << ','
        << fmt(c.mae_steady_q1) << ',' << fmt(c.mae_steady_med) << ',' << fmt(c.mae_steady_q3)
        << ',' << fmt(c.mae_full_q1) << ',' << fmt(c.mae_full_med) << ',' << fmt(c.mae_full_q3)
        << '\n';
  }
}

}  // namespace afmpc
