#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <ostream>

#include "pid/checkpoint.hpp"
#include "pid/evaluation.hpp"
#include "pid/io.hpp"
#include "pid/loss.hpp"
#include "pid/trainer.hpp"

namespace pid {
namespace {

struct Harness {
  std::ostream& out;
  int failures = 0;

  void run(const std::string& name, const std::function<bool()>& check) {
    bool ok = false;
    std::string detail;
    try {
      ok = check();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    out << (ok ? "PASS " : "FAIL ") << name;
    if (!ok && !detail.empty()) out << " (" << detail << ")";
    out << "\n";
    if (!ok) ++failures;
  }
};

ResolvedConfig small_config() {
  ResolvedConfig cfg;
  cfg.teacher = TeacherSpec::two_modes_1d(2.0, 0.5);
  cfg.grid.n = 16;
  cfg.student.hidden_dims = {16, 16};
  cfg.train.steps = 40;
  cfg.train.batch = 8;
  cfg.train.log_every = 10;
  return cfg;
}

}  // namespace

int verify_suite(std::ostream& out) {
  Harness h{out};

  h.run("teacher.denoise_score_identity", [] {
    for (const auto& teacher :
         {TeacherSpec::single_gaussian({0.0}, 1.0), TeacherSpec::two_modes_1d(2.0, 0.5)}) {
      Rng rng(1);
      for (int k = 0; k < 50; ++k) {
        const Vec x = rng.normal_vec(teacher.dim, 5.0);
        const double t = 0.002 + 79.998 * rng.uniform();
        const Vec d = denoise(teacher, x, t);
        const Vec s = score(teacher, x, t);
        for (int j = 0; j < teacher.dim; ++j)
          if (std::fabs(d[j] - (x[j] + t * t * s[j])) > 1e-10) return false;
      }
    }
    return true;
  });

  h.run("teacher.score_matches_fd_log_density", [] {
    const auto teacher = TeacherSpec::ring_2d(8, 6.0, 0.3);
    Rng rng(2);
    for (int k = 0; k < 40; ++k) {
      const Vec x = rng.normal_vec(2, 4.0);
      const double t = 0.05 + 5.0 * rng.uniform();
      const Vec s = score(teacher, x, t);
      for (int j = 0; j < 2; ++j) {
        Vec xp = x, xm = x;
        xp[j] += 1e-5;
        xm[j] -= 1e-5;
        const double fd = (log_density(teacher, xp, t) - log_density(teacher, xm, t)) / 2e-5;
        if (std::fabs(s[j] - fd) > 1e-5 * (1.0 + norm_linf(s))) return false;
      }
    }
    return true;
  });

  h.run("teacher.log_density_stable_far_out", [] {
    const auto teacher = TeacherSpec::ring_2d(8, 6.0, 0.3);
    return std::isfinite(log_density(teacher, {1e6, -1e6}, 80.0)) &&
           std::isfinite(log_density(teacher, {1e6, 1e6}, 0.002));
  });

  h.run("teacher.jacobian_matches_analytic", [] {
    const auto teacher = TeacherSpec::single_gaussian({0.0, 0.0}, 1.0);
    const Mat jac = denoiser_jacobian(teacher, {0.4, -0.1}, 1.0);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        if (std::fabs(jac[r][c] - (r == c ? 0.5 : 0.0)) > 1e-4) return false;
    return true;
  });

  h.run("grid.endpoints_and_monotonicity", [] {
    for (int n : {2, 16, 128}) {
      const TimeGrid g = edm_grid(n, 0.002, 80.0, 7.0);
      if (g.times.front() != 80.0 || g.times.back() != 0.002) return false;
      for (int i = 0; i + 1 < g.n(); ++i)
        if (g.times[i] <= g.times[i + 1]) return false;
    }
    return edm_grid(64, 0.002, 80.0, 7.0).dt_max() >
           edm_grid(128, 0.002, 80.0, 7.0).dt_max();
  });

  h.run("solvers.orders_euler_1_heun_2", [] {
    const auto res = lemma_scaling_check(TeacherSpec::single_gaussian({0.0}, 1.0),
                                         {100, 1000, 10000}, 2, 50, 0.002, 80.0);
    if (res.fit.slope < 0.9 || res.fit.slope > 1.1) return false;
    const auto teacher = TeacherSpec::single_gaussian({0.0}, 1.0);
    const Vec z = {8.0};
    const Vec ref = closed_form_single_gaussian({0.0}, 1.0, z, 0.002, 80.0);
    std::vector<double> dt, err;
    for (int n : {100, 1000, 10000}) {
      const TimeGrid grid = uniform_grid(n, 0.002, 80.0);
      dt.push_back(grid.dt_max());
      err.push_back(std::fabs(heun_solve(teacher, grid, z).states.back()[0] - ref[0]));
    }
    const SlopeFit fit = fit_loglog(dt, err);
    return fit.slope > 1.8 && fit.slope < 2.2;
  });

  h.run("student.hard_boundary_at_T", [] {
    StudentConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden_dims = {16, 16};
    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
      const StudentParams p = init_params(cfg, rng);
      const Vec z = rng.normal_vec(2, 80.0);
      const Vec x = student_forward(p, cfg, z, cfg.t_max);
      for (int j = 0; j < 2; ++j)
        if (std::fabs(x[j] - z[j]) > 1e-12) return false;
    }
    return true;
  });

  h.run("student.gradients_match_fd", [] {
    StudentConfig cfg;
    cfg.input_dim = 1;
    cfg.hidden_dims = {8};
    Rng rng(4);
    const StudentParams params = init_params(cfg, rng);
    const Vec z = {5.0}, upstream = {1.3};
    const Vec grad = student_backward(params, cfg, z, 2.0, upstream);
    StudentParams p = params;
    for (std::size_t k = 0; k < p.data.size(); ++k) {
      const double orig = p.data[k];
      p.data[k] = orig + 1e-6;
      const double fp = dot(upstream, student_forward(p, cfg, z, 2.0));
      p.data[k] = orig - 1e-6;
      const double fm = dot(upstream, student_forward(p, cfg, z, 2.0));
      p.data[k] = orig;
      if (std::fabs(grad[k] - (fp - fm) / 2e-6) > 1e-5 * (1.0 + std::fabs(grad[k])))
        return false;
    }
    const Vec d = student_dt_exact(params, cfg, z, 2.0);
    const Vec xp = student_forward(params, cfg, z, 2.0 + 2e-4);
    const Vec xm = student_forward(params, cfg, z, 2.0 - 2e-4);
    return std::fabs(d[0] - (xp[0] - xm[0]) / 4e-4) <= 1e-5 * (1.0 + std::fabs(d[0]));
  });

  h.run("loss.euler_lookup_residual_zero", [] {
    const auto teacher = TeacherSpec::two_modes_1d(2.0, 0.5);
    const TimeGrid grid = edm_grid(32, 0.002, 80.0, 7.0);
    Rng rng(5);
    for (int trial = 0; trial < 4; ++trial) {
      const Trajectory traj = euler_solve(teacher, grid, rng.normal_vec(1, 80.0));
      for (int i = 0; i + 1 < grid.n(); ++i)
        if (residual_value(teacher, grid.times[i], grid.times[i + 1], traj.states[i],
                           traj.states[i + 1], DiffMode::upwind, Metric::squared_l2) > 1e-20)
          return false;
    }
    return true;
  });

  h.run("loss.distance_axioms", [] {
    for (Metric m : {Metric::squared_l2, Metric::l2, Metric::l1}) {
      if (distance(m, {1.0, -2.0}, {1.0, -2.0}).first != 0.0) return false;
      if (distance(m, {1.0, 0.0}, {0.0, 1.0}).first < 0.0) return false;
      if (std::fabs(distance(m, {1.0, 3.0}, {0.5, -1.0}).first -
                    distance(m, {0.5, -1.0}, {1.0, 3.0}).first) > 1e-15)
        return false;
    }
    return true;
  });

  h.run("trainer.single_step_equals_trajectory_endpoint", [] {
    const ResolvedConfig cfg = small_config();
    const StudentConfig scfg = cfg.student_config();
    const TimeGrid grid = cfg.grid.build();
    Rng rng(6);
    const StudentParams p = init_params(scfg, rng);
    const Vec z = rng.normal_vec(1, 80.0);
    const Vec one = single_step_sample(p, scfg, grid, z);
    const Vec traj_end = student_source(p, scfg, grid)(z).back();
    return one == traj_end;
  });

  h.run("trainer.same_seed_same_run", [] {
    const ResolvedConfig cfg = small_config();
    const TrainResult a = train(cfg);
    const TrainResult b = train(cfg);
    if (a.params.data != b.params.data || a.ema.data != b.ema.data) return false;
    if (a.log.records.size() != b.log.records.size()) return false;
    for (std::size_t i = 0; i < a.log.records.size(); ++i)
      if (a.log.records[i].loss != b.log.records[i].loss ||
          a.log.records[i].grad_norm != b.log.records[i].grad_norm)
        return false;
    return true;
  });

  h.run("trainer.checkpoint_resume_bit_identical", [] {
    ResolvedConfig cfg = small_config();
    const TrainResult full = train(cfg);

    ResolvedConfig half = cfg;
    half.train.steps = 20;
    Checkpoint mid;
    TrainHooks hooks;
    hooks.on_checkpoint = [&](const Checkpoint& c) { mid = c; };
    train(half, hooks);
    const TrainResult resumed = train(cfg, {}, &mid);
    return resumed.params.data == full.params.data && resumed.ema.data == full.ema.data;
  });

  h.run("io.checkpoint_roundtrip_lossless", [] {
    StudentConfig scfg;
    scfg.input_dim = 2;
    scfg.hidden_dims = {5, 3};
    Rng rng(7);
    Checkpoint ckpt;
    ckpt.student_cfg = scfg;
    ckpt.params = init_params(scfg, rng);
    ckpt.ema = init_params(scfg, rng);
    ckpt.step = 17;
    ckpt.rng_state = rng.state();
    ckpt.opt.reset(ckpt.params.data.size());
    ckpt.opt.m[0] = 0.1234567890123456789;
    const auto tmp = std::filesystem::temp_directory_path() / "pid_verify_ckpt.json";
    save_checkpoint(tmp.string(), ckpt);
    const Checkpoint back = load_checkpoint(tmp.string());
    std::filesystem::remove(tmp);
    return back.params.data == ckpt.params.data && back.ema.data == ckpt.ema.data &&
           back.rng_state == ckpt.rng_state && back.opt.m == ckpt.opt.m &&
           back.step == ckpt.step;
  });

  h.run("io.config_roundtrip_idempotent", [] {
    const std::string text = R"({"teacher": {"type": "gmm", "dim": 1,
      "components": [{"weight": 1.0, "mean": [0.0], "sigma0": 1.0}]}})";
    const ResolvedConfig cfg = parse_config(text);
    if (cfg.grid.t_max != 80.0 || cfg.grid.t_min != 0.002 || cfg.grid.n != 128) return false;
    const std::string once = dump_config(cfg);
    const std::string twice = dump_config(parse_config(once));
    return once == twice;
  });

  h.run("eval.energy_distance_axioms", [] {
    Rng rng(8);
    std::vector<Vec> a;
    for (int k = 0; k < 64; ++k) a.push_back(rng.normal_vec(2, 1.0));
    std::vector<Vec> b;
    for (int k = 0; k < 80; ++k) b.push_back(rng.normal_vec(2, 1.0));
    if (energy_distance(a, a) != 0.0) return false;
    if (std::fabs(energy_distance(a, b) - energy_distance(b, a)) > 1e-12) return false;
    return energy_distance(a, b) >= 0.0 || std::fabs(energy_distance(a, b)) < 1e-9;
  });

  h.run("eval.trajectory_error_self_zero", [] {
    const auto teacher = TeacherSpec::two_modes_1d(2.0, 0.5);
    const TimeGrid grid = edm_grid(16, 0.002, 80.0, 7.0);
    const auto src = euler_source(teacher, grid);
    const auto rep = trajectory_error(src, src, grid, {1, 2, 3}, 1);
    return rep.sup == 0.0;
  });

  return h.failures;
}

}  // namespace pid
