#pragma once

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pid/loss.hpp"
#include "pid/optimizer.hpp"
#include "pid/student.hpp"
#include "pid/teacher.hpp"
#include "pid/time_grid.hpp"

namespace pid {

struct GridConfig {
  int n = 128;
  double rho = 7.0;
  double t_min = 0.002;
  double t_max = 80.0;
  std::string kind = "edm";  // or "uniform"

  TimeGrid build() const;
  void validate() const;
};

struct LossConfig {
  Metric metric = Metric::squared_l2;
  DiffMode diff_mode = DiffMode::upwind;
  bool stop_grad = true;
};

struct StudentSection {
  std::vector<int> hidden_dims{64, 64, 64};
  std::string activation = "silu";
  double sigma_data = 0.5;
  int embed_freqs = 0;
};

struct TrainSection {
  long steps = 2000;
  int batch = 64;
  OptConfig opt;
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
  long log_every = 100;
  long ckpt_every = 0;   // 0: final checkpoint only
  int fixed_z_count = 0;  // >0: draw z from a frozen pool of this size

  void validate() const;
};

struct EvalSection {
  int samples = 4096;
  int ref_grid_n = 1280;  // Heun reference grid for ground-truth sampling
  std::uint64_t seed = 1000;

  void validate() const;
};

// Fully-defaulted, validated configuration. Field provenance (user-set vs
// default) is kept in user_keys as dotted paths; it is metadata and is not
// serialized, so resolved configs round-trip unchanged.
struct ResolvedConfig {
  TeacherSpec teacher;
  GridConfig grid;
  StudentSection student;
  LossConfig loss;
  TrainSection train;
  EvalSection eval;
  std::set<std::string> user_keys;

  StudentConfig student_config() const;
  nlohmann::json to_json() const;
  static ResolvedConfig from_json(const nlohmann::json& j);

  bool is_user_set(const std::string& dotted_path) const {
    return user_keys.count(dotted_path) > 0;
  }
};

// Parses, applies defaults, validates. Throws ConfigError with a line/column
// position on parse errors and with the offending field path on validation
// errors. Unknown keys are rejected.
ResolvedConfig load_config(const std::string& path);
ResolvedConfig parse_config(const std::string& text);

// Canonical serialization (sorted keys, full-precision floats).
std::string dump_config(const ResolvedConfig& cfg);

}  // namespace pid
