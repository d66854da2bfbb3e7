#pragma once

#include <functional>
#include <vector>

#include "pid/checkpoint.hpp"
#include "pid/config.hpp"
#include "pid/student.hpp"
#include "pid/time_grid.hpp"
#include "pid/vec.hpp"

namespace pid {

struct LogRecord {
  long step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;  // wall-clock; everything else is deterministic given the seed
};

struct RunLog {
  std::vector<LogRecord> records;
};

struct TrainHooks {
  std::function<void(const LogRecord&)> on_log;
  std::function<void(const Checkpoint&)> on_checkpoint;
};

struct TrainResult {
  StudentParams params;
  StudentParams ema;
  RunLog log;
};

// The distillation loop: per step, draw batch pairs (i, z) with i uniform over
// the valid grid indices and z ~ N(0, T^2 I), average the residual gradient
// over the batch in fixed order, take an optimizer step and update the EMA
// snapshot. Deterministic given the seed, including under any PID_THREADS
// setting. Pass a checkpoint to resume; the stream state stored there makes
// split runs bit-identical to uninterrupted ones.
TrainResult train(const ResolvedConfig& cfg, const TrainHooks& hooks = {},
                  const Checkpoint* resume = nullptr);

// Mean residual over a fixed (z, i) collocation set; the convergence measure
// used by the overfitting experiments.
double mean_residual_over_pool(const StudentParams& params, const StudentConfig& scfg,
                               const TeacherSpec& teacher, const TimeGrid& grid,
                               const std::vector<Vec>& zpool, DiffMode mode, Metric metric);

// Frozen z pool used when train.fixed_z_count > 0; derived from the seed but
// not from the live stream, so resumed runs rebuild it identically.
std::vector<Vec> fixed_z_pool(const ResolvedConfig& cfg);

// One network evaluation at t_min.
Vec single_step_sample(const StudentParams& ema, const StudentConfig& cfg, const TimeGrid& grid,
                       const Vec& z);

// Worker-thread cap: PID_THREADS when set, hardware concurrency otherwise.
int worker_threads();

}  // namespace pid
