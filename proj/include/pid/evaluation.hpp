#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pid/config.hpp"
#include "pid/solvers.hpp"
#include "pid/student.hpp"
#include "pid/teacher.hpp"
#include "pid/time_grid.hpp"

namespace pid {

// A trajectory source maps an initial state z to states at every grid time.
// Students, solvers and closed forms all fit behind it, so any two can be
// compared with the same machinery.
using TrajSource = std::function<std::vector<Vec>(const Vec& z)>;

TrajSource student_source(const StudentParams& params, const StudentConfig& cfg,
                          const TimeGrid& grid);
TrajSource euler_source(const TeacherSpec& teacher, const TimeGrid& grid);
TrajSource heun_source(const TeacherSpec& teacher, const TimeGrid& grid);
// Heun with `substeps` sub-steps per grid interval: the near-exact reference
// for teachers without a closed form.
TrajSource fine_reference_source(const TeacherSpec& teacher, const TimeGrid& grid, int substeps);
// Single-component teachers only.
TrajSource closed_form_source(const TeacherSpec& teacher, const TimeGrid& grid);

// z draws used by trajectory comparisons: seed k -> N(0, T^2 I) via Rng(k).
Vec seed_to_z(std::uint64_t seed, int dim, double t_max);

struct TrajectoryErrorReport {
  std::vector<double> times;
  std::vector<double> mean_per_t;  // mean L-inf error over seeds, per grid time
  std::vector<double> max_per_t;
  double sup = 0.0;  // over all (seed, time)
};

TrajectoryErrorReport trajectory_error(const TrajSource& candidate, const TrajSource& reference,
                                       const TimeGrid& grid, const std::vector<std::uint64_t>& seeds,
                                       int dim);

// Spec-shaped form: student against the Euler trajectories of the teacher.
TrajectoryErrorReport trajectory_error(const StudentParams& params, const StudentConfig& cfg,
                                       const TeacherSpec& teacher, const TimeGrid& grid,
                                       const std::vector<std::uint64_t>& seeds);

// 2 E|a-b| - E|a-a'| - E|b-b'| over exact double sums (sets capped at 8192).
double energy_distance(const std::vector<Vec>& a, const std::vector<Vec>& b);

// z ~ N(0, T^2 I) pushed through one student evaluation at t_min.
std::vector<Vec> student_samples(const StudentParams& ema, const StudentConfig& cfg,
                                 const TimeGrid& grid, int n, std::uint64_t seed);
// z ~ N(0, T^2 I) integrated with Heun on the given (reference) grid.
std::vector<Vec> heun_samples(const TeacherSpec& teacher, const TimeGrid& ref_grid, int n,
                              std::uint64_t seed);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;  // worst |log y - fit|
};

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct LemmaScalingResult {
  std::vector<int> n_values;
  std::vector<double> dt_max;
  std::vector<double> sup_err;
  SlopeFit fit;
};

// Builds the residual-zero student (the Euler lookup) on a uniform grid for
// each N and measures its sup error against the closed form; the fitted
// log-log slope is the observable content of the O(dt) bound.
LemmaScalingResult lemma_scaling_check(const TeacherSpec& single_gaussian,
                                       const std::vector<int>& n_values, int n_seeds,
                                       std::uint64_t seed_base, double t_min, double t_max);

struct EvalRow {
  std::string name;
  std::map<std::string, std::string> params;
  std::map<std::string, double> metrics;
  std::string note;  // non-empty when the arm failed
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Final-sample quality metrics for one trained student against a fixed
// teacher reference set.
struct SampleQuality {
  double energy_distance = 0.0;
  double noise_floor = 0.0;  // teacher-vs-teacher with independent seeds
};

SampleQuality sample_quality(const StudentParams& ema, const StudentConfig& scfg,
                             const TimeGrid& grid, const TeacherSpec& teacher,
                             const EvalSection& eval, double t_min, double t_max);

// Trains one student per N at the shared budget and reports the final energy
// distance per arm against one fixed Heun reference set.
EvalReport sweep_discretization(const ResolvedConfig& base, const std::vector<int>& n_values);

struct AblationArm {
  std::string name;
  DiffMode diff_mode = DiffMode::upwind;
  bool stop_grad = true;
  Metric metric = Metric::squared_l2;
};

// Paired runs sharing seed and budget; reports final loss, energy distance
// and trajectory sup-error (against the fine Heun reference) side by side.
EvalReport ablation_compare(const ResolvedConfig& base, const std::vector<AblationArm>& arms);

// Named invariant checks, one PASS/FAIL line each; returns the failure count.
int verify_suite(std::ostream& out);

}  // namespace pid
