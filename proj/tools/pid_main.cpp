#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "pid/checkpoint.hpp"
#include "pid/errors.hpp"
#include "pid/evaluation.hpp"
#include "pid/io.hpp"
#include "pid/trainer.hpp"

namespace fs = std::filesystem;
using namespace pid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

std::string sample_header(int dim) {
  std::ostringstream os;
  for (int j = 0; j < dim; ++j) os << (j ? "," : "") << "x_" << j;
  os << "\n";
  return os.str();
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& resume_path) {
  const ResolvedConfig cfg = load_config(config_path);
  fs::create_directories(out_dir);
  write_file_atomic((fs::path(out_dir) / "config.resolved.json").string(), dump_config(cfg));

  Checkpoint resume;
  const bool resuming = !resume_path.empty();
  if (resuming) resume = load_checkpoint(resume_path);

  std::ostringstream log_csv;
  log_csv << "step,loss,grad_norm,wall_ms\n";
  const std::string log_path = (fs::path(out_dir) / "log.csv").string();

  TrainHooks hooks;
  hooks.on_log = [&](const LogRecord& rec) {
    log_csv << rec.step << "," << format_double(rec.loss) << "," << format_double(rec.grad_norm)
            << "," << format_double(rec.wall_ms) << "\n";
  };
  hooks.on_checkpoint = [&](const Checkpoint& ckpt) {
    const std::string name = "ckpt_" + std::to_string(ckpt.step) + ".json";
    save_checkpoint((fs::path(out_dir) / name).string(), ckpt);
    write_file_atomic(log_path, log_csv.str());
  };

  try {
    train(cfg, hooks, resuming ? &resume : nullptr);
  } catch (const NumericalError&) {
    write_file_atomic(log_path, log_csv.str());  // keep the partial log next to the last-good ckpt
    throw;
  }
  write_file_atomic(log_path, log_csv.str());
  std::cout << "trained " << cfg.train.steps << " steps -> " << out_dir << "\n";
  return kExitOk;
}

int cmd_sample(const std::string& ckpt_path, int n, const std::string& out_csv,
               std::uint64_t seed, double t_min) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  TimeGrid grid = edm_grid(2, t_min, ckpt.student_cfg.t_max, 7.0);
  Rng rng(seed);
  std::ostringstream os;
  os << sample_header(ckpt.student_cfg.input_dim);
  os.precision(17);
  for (int k = 0; k < n; ++k) {
    const Vec z = rng.normal_vec(ckpt.student_cfg.input_dim, ckpt.student_cfg.t_max);
    const Vec x = single_step_sample(ckpt.ema, ckpt.student_cfg, grid, z);
    for (int j = 0; j < ckpt.student_cfg.input_dim; ++j) os << (j ? "," : "") << x[j];
    os << "\n";
  }
  write_file_atomic(out_csv, os.str());
  std::cout << "wrote " << n << " samples -> " << out_csv << "\n";
  return kExitOk;
}

int cmd_traj(const std::string& config_path, int n_seeds, const std::string& solver,
             const std::string& out_csv) {
  const ResolvedConfig cfg = load_config(config_path);
  const TimeGrid grid = cfg.grid.build();
  std::ostringstream os;
  os << "seed,i,t," << sample_header(cfg.teacher.dim);
  os.precision(17);
  for (int s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = cfg.eval.seed + s;
    const Vec z = seed_to_z(seed, cfg.teacher.dim, cfg.grid.t_max);
    const Trajectory traj =
        solver == "heun" ? heun_solve(cfg.teacher, grid, z) : euler_solve(cfg.teacher, grid, z);
    for (int i = 0; i < grid.n(); ++i) {
      os << seed << "," << i << "," << grid.times[i];
      for (int j = 0; j < cfg.teacher.dim; ++j) os << "," << traj.states[i][j];
      os << "\n";
    }
  }
  write_file_atomic(out_csv, os.str());
  std::cout << "wrote " << n_seeds << " trajectories -> " << out_csv << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_path,
             const std::string& out_dir, const std::string& ablation) {
  const ResolvedConfig cfg = load_config(config_path);
  fs::create_directories(out_dir);
  nlohmann::json summary;

  if (!ckpt_path.empty()) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const TimeGrid grid = cfg.grid.build();
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < 8; ++s) seeds.push_back(cfg.eval.seed + 100 + s);
    const auto rep = trajectory_error(ckpt.ema, ckpt.student_cfg, cfg.teacher, grid, seeds);
    std::ostringstream os;
    os << "i,t,mean_err,max_err\n";
    os.precision(17);
    for (int i = 0; i < grid.n(); ++i)
      os << i << "," << rep.times[i] << "," << rep.mean_per_t[i] << "," << rep.max_per_t[i]
         << "\n";
    write_file_atomic((fs::path(out_dir) / "trajectory_error.csv").string(), os.str());
    summary["trajectory_sup_error"] = rep.sup;

    const SampleQuality q = sample_quality(ckpt.ema, ckpt.student_cfg, grid, cfg.teacher,
                                           cfg.eval, cfg.grid.t_min, cfg.grid.t_max);
    summary["energy_distance"] = q.energy_distance;
    summary["teacher_noise_floor"] = q.noise_floor;
  }

  if (!ablation.empty()) {
    std::vector<AblationArm> arms;
    std::stringstream ss(ablation);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      AblationArm arm;
      arm.name = tok;
      arm.metric = cfg.loss.metric;
      if (tok == "upwind-nostop") {
        arm.diff_mode = DiffMode::upwind;
        arm.stop_grad = false;
      } else {
        arm.diff_mode = parse_diff_mode(tok);
        arm.stop_grad = true;
      }
      arms.push_back(arm);
    }
    const EvalReport report = ablation_compare(cfg, arms);
    write_file_atomic((fs::path(out_dir) / "ablation.csv").string(), report.to_csv());
    summary["ablation"] = report.to_json();
  }

  write_file_atomic((fs::path(out_dir) / "eval_summary.json").string(), summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_sweep_n(const std::string& config_path, const std::string& grid_list,
                const std::string& out_dir) {
  const ResolvedConfig cfg = load_config(config_path);
  std::vector<int> n_values;
  std::stringstream ss(grid_list);
  std::string tok;
  while (std::getline(ss, tok, ',')) n_values.push_back(std::stoi(tok));
  fs::create_directories(out_dir);
  const EvalReport report = sweep_discretization(cfg, n_values);
  write_file_atomic((fs::path(out_dir) / "sweep.csv").string(), report.to_csv());
  write_file_atomic((fs::path(out_dir) / "sweep.json").string(),
                    report.to_json().dump(2) + "\n");
  std::cout << report.to_csv();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"physics-informed distillation of probability-flow ODE teachers"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "run the distillation loop");
  std::string train_config, train_out, train_resume;
  train_cmd->add_option("--config", train_config, "config JSON")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--resume", train_resume, "checkpoint to resume from");

  auto* sample_cmd = app.add_subcommand("sample", "single-step samples from a checkpoint");
  std::string sample_ckpt, sample_out;
  int sample_n = 1000;
  std::uint64_t sample_seed = 0;
  double sample_tmin = 0.002;
  sample_cmd->add_option("--ckpt", sample_ckpt, "checkpoint JSON")->required();
  sample_cmd->add_option("--n", sample_n, "number of samples");
  sample_cmd->add_option("--out", sample_out, "output CSV")->required();
  sample_cmd->add_option("--seed", sample_seed, "noise seed");
  sample_cmd->add_option("--t-min", sample_tmin, "query time");

  auto* traj_cmd = app.add_subcommand("traj", "dump teacher solver trajectories as CSV");
  std::string traj_config, traj_out, traj_solver = "euler";
  int traj_seeds = 4;
  traj_cmd->add_option("--config", traj_config, "config JSON")->required();
  traj_cmd->add_option("--seeds", traj_seeds, "number of initial noise draws");
  traj_cmd->add_option("--solver", traj_solver, "euler or heun")
      ->check(CLI::IsMember({"euler", "heun"}));
  traj_cmd->add_option("--out", traj_out, "output CSV")->required();

  auto* eval_cmd = app.add_subcommand("eval", "trajectory/sample-quality evaluation");
  std::string eval_config, eval_ckpt, eval_out, eval_ablation;
  eval_cmd->add_option("--config", eval_config, "config JSON")->required();
  eval_cmd->add_option("--ckpt", eval_ckpt, "trained checkpoint");
  eval_cmd->add_option("--out", eval_out, "output directory")->required();
  eval_cmd->add_option("--ablation", eval_ablation,
                       "comma list of arms (upwind, central, central3, exact, upwind-nostop)");

  auto* sweep_cmd = app.add_subcommand("sweep-n", "train across discretization numbers");
  std::string sweep_config, sweep_grid = "16,64,256", sweep_out;
  sweep_cmd->add_option("--config", sweep_config, "config JSON")->required();
  sweep_cmd->add_option("--grid", sweep_grid, "comma list of N values");
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();

  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_config, train_out, train_resume);
    if (sample_cmd->parsed())
      return cmd_sample(sample_ckpt, sample_n, sample_out, sample_seed, sample_tmin);
    if (traj_cmd->parsed()) return cmd_traj(traj_config, traj_seeds, traj_solver, traj_out);
    if (eval_cmd->parsed()) return cmd_eval(eval_config, eval_ckpt, eval_out, eval_ablation);
    if (sweep_cmd->parsed()) return cmd_sweep_n(sweep_config, sweep_grid, sweep_out);
    if (verify_cmd->parsed()) {
      const int failures = verify_suite(std::cout);
      std::cout << (failures == 0 ? "verify: all checks passed\n"
                                  : "verify: " + std::to_string(failures) + " check(s) failed\n");
      return failures == 0 ? kExitOk : kExitNumerical;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
