#include "pid/trainer.hpp"

#include <chrono>
#include <cstdlib>
#include <exception>
#include <thread>

#include "pid/errors.hpp"
#include "pid/loss.hpp"

namespace pid {
namespace {

// Fixed chunk count keeps the floating-point reduction order independent of
// the worker count.
constexpr int kChunks = 16;

struct BatchDraws {
  std::vector<int> idx;
  std::vector<Vec> z;
};

BatchDraws draw_batch(const ResolvedConfig& cfg, const TimeGrid& grid,
                      const std::vector<Vec>& zpool, Rng& rng) {
  BatchDraws d;
  d.idx.resize(cfg.train.batch);
  d.z.resize(cfg.train.batch);
  for (int b = 0; b < cfg.train.batch; ++b) {
    d.idx[b] = sample_index(grid, rng);
    if (zpool.empty())
      d.z[b] = rng.normal_vec(cfg.teacher.dim, cfg.grid.t_max);
    else
      d.z[b] = zpool[rng.uniform_index(static_cast<int>(zpool.size()))];
  }
  return d;
}

}  // namespace

int worker_threads() {
  if (const char* env = std::getenv("PID_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<Vec> fixed_z_pool(const ResolvedConfig& cfg) {
  std::vector<Vec> pool;
  if (cfg.train.fixed_z_count <= 0) return pool;
  Rng pool_rng(cfg.train.seed ^ 0x9e3779b97f4a7c15ull);
  pool.reserve(cfg.train.fixed_z_count);
  for (int k = 0; k < cfg.train.fixed_z_count; ++k)
    pool.push_back(pool_rng.normal_vec(cfg.teacher.dim, cfg.grid.t_max));
  return pool;
}

TrainResult train(const ResolvedConfig& cfg, const TrainHooks& hooks, const Checkpoint* resume) {
  const TimeGrid grid = cfg.grid.build();
  const StudentConfig scfg = cfg.student_config();
  const std::size_t n_params = param_count(scfg);

  Rng rng(cfg.train.seed);
  StudentParams params, ema;
  OptState opt;
  long start_step = 0;

  if (resume) {
    if (resume->params.data.size() != n_params)
      throw ConfigError("train: checkpoint has " + std::to_string(resume->params.data.size()) +
                        " params, config expects " + std::to_string(n_params));
    params = resume->params;
    ema = resume->ema;
    opt = resume->opt;
    if (opt.m.size() != n_params) opt.reset(n_params);
    rng.set_state(resume->rng_state);
    start_step = resume->step;
  } else {
    params = init_params(scfg, rng);
    ema = params;
    opt.reset(n_params);
  }

  const std::vector<Vec> zpool = fixed_z_pool(cfg);
  const int batch = cfg.train.batch;
  const int chunks = std::min(batch, kChunks);
  const int workers = std::min(worker_threads(), chunks);

  TrainResult result;
  std::vector<Vec> chunk_grad(chunks, Vec(n_params, 0.0));
  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<std::exception_ptr> chunk_err(chunks);

  auto make_checkpoint = [&](long step) {
    Checkpoint ckpt;
    ckpt.student_cfg = scfg;
    ckpt.params = params;
    ckpt.ema = ema;
    ckpt.step = step;
    ckpt.rng_state = rng.state();
    ckpt.opt = opt;
    return ckpt;
  };

  for (long step = start_step + 1; step <= cfg.train.steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    const BatchDraws draws = draw_batch(cfg, grid, zpool, rng);

    auto run_chunk = [&](int c) {
      try {
        const int lo = static_cast<int>(static_cast<long>(batch) * c / chunks);
        const int hi = static_cast<int>(static_cast<long>(batch) * (c + 1) / chunks);
        chunk_loss[c] = 0.0;
        Vec& g = chunk_grad[c];
        std::fill(g.begin(), g.end(), 0.0);
        for (int b = lo; b < hi; ++b) {
          const ResidualResult r =
              pid_residual(params, scfg, cfg.teacher, grid, draws.idx[b], draws.z[b],
                           cfg.loss.diff_mode, cfg.loss.metric, cfg.loss.stop_grad);
          chunk_loss[c] += r.loss;
          axpy(1.0, r.grad, g);
        }
      } catch (...) {
        chunk_err[c] = std::current_exception();
      }
    };

    if (workers <= 1) {
      for (int c = 0; c < chunks; ++c) run_chunk(c);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (int c = w; c < chunks; c += workers) run_chunk(c);
        });
      for (auto& th : pool) th.join();
    }
    for (int c = 0; c < chunks; ++c)
      if (chunk_err[c]) {
        auto err = chunk_err[c];
        std::fill(chunk_err.begin(), chunk_err.end(), nullptr);
        std::rethrow_exception(err);
      }

    double loss = 0.0;
    Vec grad(n_params, 0.0);
    for (int c = 0; c < chunks; ++c) {
      loss += chunk_loss[c];
      axpy(1.0, chunk_grad[c], grad);
    }
    loss /= batch;
    for (double& g : grad) g /= batch;
    const double gnorm = norm_l2(grad);
    if (!std::isfinite(loss) || !std::isfinite(gnorm))
      throw NumericalError("train: non-finite loss/gradient at step " + std::to_string(step));

    optimizer_step(cfg.train.opt, opt, params.data, grad);
    ema_update(ema, params, cfg.train.ema_decay);

    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (step % cfg.train.log_every == 0 || step == cfg.train.steps) {
      const LogRecord rec{step, loss, gnorm, wall_ms};
      result.log.records.push_back(rec);
      if (hooks.on_log) hooks.on_log(rec);
    }
    if (hooks.on_checkpoint &&
        ((cfg.train.ckpt_every > 0 && step % cfg.train.ckpt_every == 0) ||
         step == cfg.train.steps))
      hooks.on_checkpoint(make_checkpoint(step));
  }

  result.params = std::move(params);
  result.ema = std::move(ema);
  return result;
}

double mean_residual_over_pool(const StudentParams& params, const StudentConfig& scfg,
                               const TeacherSpec& teacher, const TimeGrid& grid,
                               const std::vector<Vec>& zpool, DiffMode mode, Metric metric) {
  double total = 0.0;
  long count = 0;
  for (const Vec& z : zpool)
    for (int i = 0; i + 1 < grid.n(); ++i) {
      total += pid_residual(params, scfg, teacher, grid, i, z, mode, metric, true).loss;
      ++count;
    }
  return total / static_cast<double>(count);
}

Vec single_step_sample(const StudentParams& ema, const StudentConfig& cfg, const TimeGrid& grid,
                       const Vec& z) {
  return student_forward(ema, cfg, z, grid.times.back());
}

}  // namespace pid
