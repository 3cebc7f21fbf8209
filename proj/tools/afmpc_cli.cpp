// Command-line front end: run / pretune / matrix / replay.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "afmpc/config.hpp"
#include "afmpc/runner.hpp"

namespace {

using namespace afmpc;

void print_summary(const RunSummary& s) {
  std::printf("mae_full      = %.10g\n", s.mae_full);
  std::printf("mae_steady    = %.10g\n", s.mae_steady);
  std::printf("overshoot     = %.10g\n", s.overshoot);
  std::printf("violations    = %ld\n", s.violations);
  std::printf("wall_time_s   = %.3f\n", s.wall_time_s);
}

void print_tuned(const ExtendedGains& g, const TuneReport& rep) {
  std::printf("tuned: kp=%.10g ki=%.10g kd=%.10g tc=%.10g\n", g.gains.kp, g.gains.ki,
              g.gains.kd, g.tc);
  std::printf("tune: j=%.10g (tracking=%.10g, input=%.10g) iters=%d converged=%d\n",
              rep.j_value, rep.j_tracking, rep.j_input, rep.iterations,
              rep.converged ? 1 : 0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical adaptive control toolkit"};
  app.require_subcommand(1);

  std::string config_path, mode_s, traj_s, est_path;
  std::string out_path = "trace.csv";
  std::string tuned_out, out_dir = ".", replay_in;
  double lambda = 0.0;
  unsigned long long seed = 0;
  int case_id = 1, repeats = 0, threads = 0;
  bool paper_ts = false;
  double steady_start = 55.0, steady_end = 65.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (flat key = value lines)");
    sub->add_option("--mode", mode_s, "PID | AFRIT | FMPC | AFMPC");
    sub->add_option("--lambda", lambda, "input-penalty weight for offline tuning");
    sub->add_option("--trajectory", traj_s, "sine | staircase");
    sub->add_option("--case", case_id, "initial-gain case (1 or 2)")->check(CLI::Range(1, 2));
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_flag("--paper-ts", paper_ts, "use the 0.1 ms sample period");
  };

  auto build_cfg = [&](CLI::App* sub, bool traj_is_pretune) {
    ConfigFile file;
    if (sub->count("--config")) file = load_config(config_path);
    ExperimentConfig& cfg = file.experiment;
    if (sub->count("--case")) cfg.theta0 = case_gains(case_id);
    if (sub->count("--mode")) cfg.mode = mode_from_string(mode_s);
    if (sub->count("--lambda")) cfg.lambda = lambda;
    if (sub->count("--trajectory")) {
      const TrajectoryKind kind = trajectory_from_string(traj_s);
      if (traj_is_pretune)
        cfg.pretune_trajectory.kind = kind;
      else
        cfg.trajectory.kind = kind;
    }
    if (sub->count("--seed")) cfg.seed = seed;
    if (paper_ts) cfg.ts = 1e-4;
    return file;
  };

  int rc = 0;

  CLI::App* sub_run = app.add_subcommand("run", "closed-loop experiment; writes a trace CSV");
  add_common(sub_run);
  sub_run->add_option("--out", out_path, "trace CSV path (default trace.csv)");
  sub_run->add_option("--estimator-log", est_path, "also write per-step estimator CSV");
  sub_run->callback([&]() {
    ExperimentConfig cfg = build_cfg(sub_run, false).experiment;
    const bool needs_tuned = cfg.mode == Mode::kFmpc || cfg.mode == Mode::kAfmpc;
    if (needs_tuned && !cfg.tuned) {
      std::printf("no tuned gains in config; pretuning (lambda=%g)...\n", cfg.lambda);
      auto [prior, rep] = run_pretune(cfg);
      (void)prior;
      cfg.tuned = rep.theta_star;
      print_tuned(rep.theta_star, rep);
    }
    const RunRecord rec = run_closed_loop(cfg);
    write_trace_csv(rec, out_path);
    if (!est_path.empty()) write_estimator_csv(rec, est_path);
    std::printf("mode=%s lambda=%g seed=%llu\n", to_string(cfg.mode), cfg.lambda,
                static_cast<unsigned long long>(cfg.seed));
    print_summary(rec.summary);
    std::printf("trace: %s\n", out_path.c_str());
    if (!est_path.empty()) std::printf("estimator log: %s\n", est_path.c_str());
  });

  CLI::App* sub_pre = app.add_subcommand("pretune", "offline model-matching tune from a prior run");
  add_common(sub_pre);
  sub_pre->add_option("--out", tuned_out, "write tuned gains as a config fragment");
  sub_pre->callback([&]() {
    const ExperimentConfig cfg = build_cfg(sub_pre, true).experiment;
    auto [prior, rep] = run_pretune(cfg);
    std::printf("prior: %td samples at ts=%g\n",
                static_cast<std::ptrdiff_t>(prior.u0.size()), cfg.ts);
    print_tuned(rep.theta_star, rep);
    if (!tuned_out.empty()) {
      std::FILE* f = std::fopen(tuned_out.c_str(), "w");
      if (!f) throw std::runtime_error("cannot open for writing: " + tuned_out);
      std::fprintf(f, "tuned.kp = %.17g\ntuned.ki = %.17g\ntuned.kd = %.17g\ntuned.tc = %.17g\n",
                   rep.theta_star.gains.kp, rep.theta_star.gains.ki, rep.theta_star.gains.kd,
                   rep.theta_star.tc);
      std::fclose(f);
      std::printf("tuned fragment: %s\n", tuned_out.c_str());
    }
  });

  CLI::App* sub_mat = app.add_subcommand("matrix", "full evaluation sweep; writes stats CSVs");
  sub_mat->add_option("--config", config_path, "config file (flat key = value lines)");
  sub_mat->add_option("--seed", seed, "RNG seed");
  sub_mat->add_option("--repeats", repeats, "repeats per cell")->check(CLI::PositiveNumber);
  sub_mat->add_option("--threads", threads, "worker threads (0 = hardware)");
  sub_mat->add_option("--out", out_dir, "output directory for stats.csv / quartiles.csv");
  sub_mat->add_flag("--paper-ts", paper_ts, "use the 0.1 ms sample period");
  sub_mat->callback([&]() {
    ConfigFile file;
    if (sub_mat->count("--config")) file = load_config(config_path);
    if (sub_mat->count("--seed")) file.experiment.seed = seed;
    if (paper_ts) file.experiment.ts = 1e-4;
    MatrixSpec spec;
    spec.repeats = sub_mat->count("--repeats") ? repeats : file.matrix_repeats;
    std::filesystem::create_directories(out_dir);
    const MatrixResult result = run_matrix(file.experiment, spec, threads);
    const std::string stats_path = out_dir + "/stats.csv";
    const std::string quart_path = out_dir + "/quartiles.csv";
    write_stats_csv(result.rows, stats_path);
    write_quartiles_csv(result.cells, quart_path);
    long failed = 0;
    for (const StatsRow& row : result.rows)
      if (row.failed) {
        ++failed;
        std::fprintf(stderr, "FAILED %s %s rep=%d: %s\n", row.cell_id.c_str(),
                     to_string(row.mode), row.repeat, row.error.c_str());
      }
    std::printf("runs: %zu total, %ld failed\n", result.rows.size(), failed);
    std::printf("stats: %s\nquartiles: %s\n", stats_path.c_str(), quart_path.c_str());
    if (failed > 0) rc = 1;
  });

  CLI::App* sub_rep = app.add_subcommand("replay", "recompute summary stats from a trace CSV");
  sub_rep->add_option("--in", replay_in, "trace CSV path")->required();
  sub_rep->add_option("--steady-start", steady_start, "steady-state window start [s]");
  sub_rep->add_option("--steady-end", steady_end, "steady-state window end [s]");
  sub_rep->callback([&]() {
    const TraceSummary s = replay_trace(replay_in, steady_start, steady_end);
    std::printf("mae_full      = %.10g\n", s.mae_full);
    std::printf("mae_steady    = %.10g\n", s.mae_steady);
    std::printf("overshoot     = %.10g\n", s.overshoot);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
