#include "pid/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pid/errors.hpp"
#include "pid/loss.hpp"
#include "pid/trainer.hpp"

namespace pid {

TrajSource student_source(const StudentParams& params, const StudentConfig& cfg,
                          const TimeGrid& grid) {
  return [params, cfg, grid](const Vec& z) {
    std::vector<Vec> states;
    states.reserve(grid.n());
    for (double t : grid.times) states.push_back(student_forward(params, cfg, z, t));
    return states;
  };
}

TrajSource euler_source(const TeacherSpec& teacher, const TimeGrid& grid) {
  return [teacher, grid](const Vec& z) { return euler_solve(teacher, grid, z).states; };
}

TrajSource heun_source(const TeacherSpec& teacher, const TimeGrid& grid) {
  return [teacher, grid](const Vec& z) { return heun_solve(teacher, grid, z).states; };
}

TrajSource fine_reference_source(const TeacherSpec& teacher, const TimeGrid& grid, int substeps) {
  if (substeps < 1) throw std::invalid_argument("fine_reference_source: substeps must be >= 1");
  return [teacher, grid, substeps](const Vec& z) {
    std::vector<Vec> states;
    states.reserve(grid.n());
    states.push_back(z);
    Vec x = z;
    for (int i = 0; i + 1 < grid.n(); ++i) {
      const double t_hi = grid.times[i], t_lo = grid.times[i + 1];
      for (int s = 0; s < substeps; ++s) {
        const double ta = t_hi + (t_lo - t_hi) * s / substeps;
        const double tb = t_hi + (t_lo - t_hi) * (s + 1) / substeps;
        const double h = tb - ta;
        const Vec d1 = ode_rhs(teacher, x, ta);
        Vec pred = x;
        axpy(h, d1, pred);
        const Vec d2 = ode_rhs(teacher, pred, tb);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += 0.5 * h * (d1[j] + d2[j]);
      }
      states.push_back(x);
    }
    return states;
  };
}

TrajSource closed_form_source(const TeacherSpec& teacher, const TimeGrid& grid) {
  if (teacher.components.size() != 1)
    throw ConfigError("closed_form_source: teacher must have exactly one component");
  const Vec mu = teacher.components[0].mean;
  const double sigma0 = teacher.components[0].sigma0;
  const double T = grid.t_max;
  return [mu, sigma0, grid, T](const Vec& z) {
    std::vector<Vec> states;
    states.reserve(grid.n());
    for (double t : grid.times)
      states.push_back(closed_form_single_gaussian(mu, sigma0, z, t, T));
    return states;
  };
}

Vec seed_to_z(std::uint64_t seed, int dim, double t_max) {
  Rng rng(seed);
  return rng.normal_vec(dim, t_max);
}

TrajectoryErrorReport trajectory_error(const TrajSource& candidate, const TrajSource& reference,
                                       const TimeGrid& grid, const std::vector<std::uint64_t>& seeds,
                                       int dim) {
  TrajectoryErrorReport rep;
  rep.times = grid.times;
  rep.mean_per_t.assign(grid.n(), 0.0);
  rep.max_per_t.assign(grid.n(), 0.0);
  for (std::uint64_t seed : seeds) {
    const Vec z = seed_to_z(seed, dim, grid.t_max);
    const std::vector<Vec> cand = candidate(z);
    const std::vector<Vec> ref = reference(z);
    for (int i = 0; i < grid.n(); ++i) {
      double err = 0.0;
      for (int j = 0; j < dim; ++j) err = std::max(err, std::fabs(cand[i][j] - ref[i][j]));
      rep.mean_per_t[i] += err;
      rep.max_per_t[i] = std::max(rep.max_per_t[i], err);
      rep.sup = std::max(rep.sup, err);
    }
  }
  for (double& m : rep.mean_per_t) m /= static_cast<double>(seeds.size());
  return rep;
}

TrajectoryErrorReport trajectory_error(const StudentParams& params, const StudentConfig& cfg,
                                       const TeacherSpec& teacher, const TimeGrid& grid,
                                       const std::vector<std::uint64_t>& seeds) {
  return trajectory_error(student_source(params, cfg, grid), euler_source(teacher, grid), grid,
                          seeds, teacher.dim);
}

double energy_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("energy_distance: empty sample set");
  if (a.size() > 8192 || b.size() > 8192)
    throw ConfigError("energy_distance: sets capped at 8192 for exact pair sums");
  if (a[0].size() != b[0].size())
    throw std::invalid_argument("energy_distance: dimension mismatch");
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  // All three terms run over ordered pairs in the same order, so two
  // identical sets cancel to exactly zero in floating point.
  double cross = 0.0, within_a = 0.0, within_b = 0.0;
  for (const auto& x : a)
    for (const auto& y : b) cross += dist_l2(x, y);
  for (const auto& x : a)
    for (const auto& y : a) within_a += dist_l2(x, y);
  for (const auto& x : b)
    for (const auto& y : b) within_b += dist_l2(x, y);
  return 2.0 * cross / (n * m) - within_a / (n * n) - within_b / (m * m);
}

std::vector<Vec> student_samples(const StudentParams& ema, const StudentConfig& cfg,
                                 const TimeGrid& grid, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k)
    out.push_back(single_step_sample(ema, cfg, grid, rng.normal_vec(cfg.input_dim, grid.t_max)));
  return out;
}

std::vector<Vec> heun_samples(const TeacherSpec& teacher, const TimeGrid& ref_grid, int n,
                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const Vec z = rng.normal_vec(teacher.dim, ref_grid.t_max);
    out.push_back(heun_solve(teacher, ref_grid, z).states.back());
  }
  return out;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("fit_loglog: need at least 3 points");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  for (int i = 0; i < n; ++i) {
    const double pred = fit.intercept + fit.slope * std::log(x[i]);
    fit.max_residual = std::max(fit.max_residual, std::fabs(std::log(y[i]) - pred));
  }
  return fit;
}

LemmaScalingResult lemma_scaling_check(const TeacherSpec& single_gaussian,
                                       const std::vector<int>& n_values, int n_seeds,
                                       std::uint64_t seed_base, double t_min, double t_max) {
  if (single_gaussian.components.size() != 1)
    throw ConfigError("lemma_scaling_check: teacher must have exactly one component");
  if (n_values.size() < 3)
    throw std::invalid_argument("lemma_scaling_check: need at least 3 grid sizes for the fit");
  // Modest-magnitude draws (scale 8, not T) keep the error constant
  // comparable across N; the fitted slope is scale-free either way.
  std::vector<Vec> zs;
  for (int s = 0; s < n_seeds; ++s) {
    Rng rng(seed_base + s);
    zs.push_back(rng.normal_vec(single_gaussian.dim, 8.0));
  }
  LemmaScalingResult res;
  res.n_values = n_values;
  for (int n : n_values) {
    const TimeGrid grid = uniform_grid(n, t_min, t_max);
    const auto euler = euler_source(single_gaussian, grid);
    const auto exact = closed_form_source(single_gaussian, grid);
    double sup = 0.0;
    for (const Vec& z : zs) {
      const auto cand = euler(z);
      const auto ref = exact(z);
      for (int i = 0; i < grid.n(); ++i)
        for (int j = 0; j < single_gaussian.dim; ++j)
          sup = std::max(sup, std::fabs(cand[i][j] - ref[i][j]));
    }
    res.dt_max.push_back(grid.dt_max());
    res.sup_err.push_back(sup);
  }
  res.fit = fit_loglog(res.dt_max, res.sup_err);
  return res;
}

std::string EvalReport::to_csv() const {
  std::set<std::string> pkeys, mkeys;
  for (const auto& row : rows) {
    for (const auto& [k, v] : row.params) pkeys.insert(k);
    for (const auto& [k, v] : row.metrics) mkeys.insert(k);
  }
  std::ostringstream os;
  os << "name";
  for (const auto& k : pkeys) os << "," << k;
  for (const auto& k : mkeys) os << "," << k;
  os << ",note\n";
  os.precision(17);
  for (const auto& row : rows) {
    os << row.name;
    for (const auto& k : pkeys) {
      auto it = row.params.find(k);
      os << "," << (it == row.params.end() ? "" : it->second);
    }
    for (const auto& k : mkeys) {
      auto it = row.metrics.find(k);
      if (it == row.metrics.end())
        os << ",";
      else
        os << "," << it->second;
    }
    os << "," << row.note << "\n";
  }
  return os.str();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r{{"name", row.name},
                     {"params", row.params},
                     {"metrics", row.metrics}};
    if (!row.note.empty()) r["note"] = row.note;
    out.push_back(std::move(r));
  }
  return out;
}

SampleQuality sample_quality(const StudentParams& ema, const StudentConfig& scfg,
                             const TimeGrid& grid, const TeacherSpec& teacher,
                             const EvalSection& eval, double t_min, double t_max) {
  const TimeGrid ref_grid = edm_grid(eval.ref_grid_n, t_min, t_max, 7.0);
  const auto stu = student_samples(ema, scfg, grid, eval.samples, eval.seed + 1);
  const auto ref = heun_samples(teacher, ref_grid, eval.samples, eval.seed + 2);
  SampleQuality q;
  q.energy_distance = energy_distance(stu, ref);
  const auto floor_a = heun_samples(teacher, ref_grid, eval.samples, eval.seed + 3);
  q.noise_floor = std::fabs(energy_distance(floor_a, ref));
  return q;
}

EvalReport sweep_discretization(const ResolvedConfig& base, const std::vector<int>& n_values) {
  for (std::size_t i = 0; i + 1 < n_values.size(); ++i)
    if (n_values[i] >= n_values[i + 1])
      throw std::invalid_argument("sweep_discretization: n_values must be ascending");

  // One reference set shared by every arm.
  const TimeGrid ref_grid = edm_grid(base.eval.ref_grid_n, base.grid.t_min, base.grid.t_max, 7.0);
  const auto ref = heun_samples(base.teacher, ref_grid, base.eval.samples, base.eval.seed + 2);

  EvalReport report;
  for (int n : n_values) {
    ResolvedConfig cfg = base;
    cfg.grid.n = n;
    EvalRow row;
    row.name = "N=" + std::to_string(n);
    row.params["grid.n"] = std::to_string(n);
    row.params["train.steps"] = std::to_string(cfg.train.steps);
    row.params["train.batch"] = std::to_string(cfg.train.batch);
    row.params["train.seed"] = std::to_string(cfg.train.seed);
    try {
      const TrainResult result = train(cfg);
      const StudentConfig scfg = cfg.student_config();
      const TimeGrid grid = cfg.grid.build();
      const auto stu = student_samples(result.ema, scfg, grid, cfg.eval.samples, cfg.eval.seed + 1);
      row.metrics["energy_distance"] = energy_distance(stu, ref);
      row.metrics["final_loss"] = result.log.records.back().loss;
    } catch (const std::exception& e) {
      row.note = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

EvalReport ablation_compare(const ResolvedConfig& base, const std::vector<AblationArm>& arms) {
  const TimeGrid grid = base.grid.build();
  const TimeGrid ref_grid = edm_grid(base.eval.ref_grid_n, base.grid.t_min, base.grid.t_max, 7.0);
  const auto ref = heun_samples(base.teacher, ref_grid, base.eval.samples, base.eval.seed + 2);
  std::vector<std::uint64_t> traj_seeds;
  for (int s = 0; s < 8; ++s) traj_seeds.push_back(base.eval.seed + 100 + s);

  EvalReport report;
  for (const AblationArm& arm : arms) {
    ResolvedConfig cfg = base;
    cfg.loss.diff_mode = arm.diff_mode;
    cfg.loss.stop_grad = arm.stop_grad;
    cfg.loss.metric = arm.metric;
    EvalRow row;
    row.name = arm.name;
    row.params["diff_mode"] = to_string(arm.diff_mode);
    row.params["stop_grad"] = arm.stop_grad ? "true" : "false";
    row.params["metric"] = to_string(arm.metric);
    row.params["train.seed"] = std::to_string(cfg.train.seed);
    try {
      const TrainResult result = train(cfg);
      const StudentConfig scfg = cfg.student_config();
      const auto stu = student_samples(result.ema, scfg, grid, cfg.eval.samples, cfg.eval.seed + 1);
      row.metrics["final_loss"] = result.log.records.back().loss;
      row.metrics["energy_distance"] = energy_distance(stu, ref);
      row.metrics["traj_sup_error"] =
          trajectory_error(student_source(result.ema, scfg, grid),
                           fine_reference_source(base.teacher, grid, 10), grid, traj_seeds,
                           base.teacher.dim)
              .sup;
    } catch (const std::exception& e) {
      row.note = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace pid
