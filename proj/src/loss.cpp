#include "pid/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "pid/errors.hpp"

namespace pid {
namespace {

// grad += d<cot, D(x_at, t_at)>/dtheta routed through the student evaluations
// that produced x_at. Weights w_evals pair each contributing eval with its
// share of x_at (1 for a plain state, 0.5 each for an averaged state).
void add_teacher_path(const StudentParams& params, const StudentConfig& cfg,
                      const TeacherSpec& teacher, const Vec& x_at, double t_at, const Vec& cot,
                      const std::vector<std::pair<const StudentEval*, double>>& w_evals,
                      Vec& grad) {
  const Mat jac = denoiser_jacobian(teacher, x_at, t_at);
  Vec w(teacher.dim, 0.0);
  for (int r = 0; r < teacher.dim; ++r)
    for (int c = 0; c < teacher.dim; ++c) w[c] += jac[r][c] * cot[r];
  for (const auto& [ev, share] : w_evals) {
    Vec g(teacher.dim);
    for (int j = 0; j < teacher.dim; ++j) g[j] = share * w[j];
    accumulate_backward(params, cfg, *ev, g, {}, grad);
  }
}

}  // namespace

DiffMode parse_diff_mode(const std::string& s) {
  if (s == "upwind") return DiffMode::upwind;
  if (s == "central") return DiffMode::central;
  if (s == "central3") return DiffMode::central3;
  if (s == "exact") return DiffMode::exact;
  throw ConfigError("loss.diff_mode: \"" + s +
                    "\" is not one of upwind, central, central3, exact");
}

Metric parse_metric(const std::string& s) {
  if (s == "squared_l2") return Metric::squared_l2;
  if (s == "l2") return Metric::l2;
  if (s == "l1") return Metric::l1;
  throw ConfigError("loss.metric: \"" + s + "\" is not one of squared_l2, l2, l1");
}

std::string to_string(DiffMode m) {
  switch (m) {
    case DiffMode::upwind: return "upwind";
    case DiffMode::central: return "central";
    case DiffMode::central3: return "central3";
    case DiffMode::exact: return "exact";
  }
  return "?";
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::squared_l2: return "squared_l2";
    case Metric::l2: return "l2";
    case Metric::l1: return "l1";
  }
  return "?";
}

std::pair<double, Vec> distance(Metric metric, const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance: length mismatch");
  Vec cot(a.size(), 0.0);
  switch (metric) {
    case Metric::squared_l2: {
      double v = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        v += d * d;
        cot[i] = 2.0 * d;
      }
      return {v, cot};
    }
    case Metric::l2: {
      double v = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        v += d * d;
      }
      v = std::sqrt(v);
      if (v > 0.0)
        for (std::size_t i = 0; i < a.size(); ++i) cot[i] = (a[i] - b[i]) / v;
      return {v, cot};
    }
    case Metric::l1: {
      double v = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        v += std::fabs(d);
        cot[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      }
      return {v, cot};
    }
  }
  throw std::logic_error("distance: unreachable");
}

Vec numerical_dt_upwind(const Vec& x_i, const Vec& x_j, double t_i, double t_j) {
  if (x_i.size() != x_j.size()) throw std::invalid_argument("numerical_dt_upwind: length mismatch");
  if (!(t_i > t_j)) throw std::invalid_argument("numerical_dt_upwind: degenerate step t_i <= t_j");
  Vec d(x_i.size());
  for (std::size_t k = 0; k < x_i.size(); ++k) d[k] = (x_i[k] - x_j[k]) / (t_i - t_j);
  return d;
}

double residual_value(const TeacherSpec& teacher, double t_i, double t_j, const Vec& x_i,
                      const Vec& x_j, DiffMode mode, Metric metric) {
  const Vec deriv = numerical_dt_upwind(x_i, x_j, t_i, t_j);
  Vec left(x_i.size());
  Vec target;
  if (mode == DiffMode::upwind) {
    for (std::size_t k = 0; k < x_i.size(); ++k) left[k] = x_i[k] - t_i * deriv[k];
    target = denoise(teacher, x_i, t_i);
  } else if (mode == DiffMode::central) {
    const double t_mid = 0.5 * (t_i + t_j);
    Vec xbar(x_i.size());
    for (std::size_t k = 0; k < x_i.size(); ++k) xbar[k] = 0.5 * (x_i[k] + x_j[k]);
    for (std::size_t k = 0; k < x_i.size(); ++k) left[k] = xbar[k] - t_mid * deriv[k];
    target = denoise(teacher, xbar, t_mid);
  } else {
    throw std::invalid_argument("residual_value: only upwind/central work from bare states");
  }
  return distance(metric, left, target).first;
}

ResidualResult pid_residual(const StudentParams& params, const StudentConfig& cfg,
                            const TeacherSpec& teacher, const TimeGrid& grid, int i, const Vec& z,
                            DiffMode mode, Metric metric, bool stop_grad) {
  const int n = grid.n();
  if (i < 0 || i > n - 2)
    throw std::invalid_argument("pid_residual: index " + std::to_string(i) +
                                " outside {0, ..., N-2}");
  if (mode == DiffMode::central3 && i == 0) i = 1;  // neighbor form needs t_{i-1}

  ResidualResult res;
  res.grad.assign(param_count(cfg), 0.0);
  Vec left, cot;

  switch (mode) {
    case DiffMode::upwind: {
      const double t_i = grid.times[i], t_j = grid.times[i + 1];
      const double span = t_i - t_j;
      const StudentEval ev_i = student_eval(params, cfg, z, t_i, false);
      const StudentEval ev_j = student_eval(params, cfg, z, t_j, false);
      const double a_i = 1.0 - t_i / span;
      const double a_j = t_i / span;
      left.resize(cfg.input_dim);
      for (int k = 0; k < cfg.input_dim; ++k) left[k] = a_i * ev_i.x[k] + a_j * ev_j.x[k];
      const Vec target = denoise(teacher, ev_i.x, t_i);
      std::tie(res.loss, cot) = distance(metric, left, target);
      Vec g(cfg.input_dim);
      for (int k = 0; k < cfg.input_dim; ++k) g[k] = a_i * cot[k];
      accumulate_backward(params, cfg, ev_i, g, {}, res.grad);
      for (int k = 0; k < cfg.input_dim; ++k) g[k] = a_j * cot[k];
      accumulate_backward(params, cfg, ev_j, g, {}, res.grad);
      if (!stop_grad) {
        Vec mcot(cfg.input_dim);
        for (int k = 0; k < cfg.input_dim; ++k) mcot[k] = -cot[k];
        add_teacher_path(params, cfg, teacher, ev_i.x, t_i, mcot, {{&ev_i, 1.0}}, res.grad);
      }
      break;
    }
    case DiffMode::central: {
      const double t_i = grid.times[i], t_j = grid.times[i + 1];
      const double span = t_i - t_j;
      const double t_mid = 0.5 * (t_i + t_j);
      const StudentEval ev_i = student_eval(params, cfg, z, t_i, false);
      const StudentEval ev_j = student_eval(params, cfg, z, t_j, false);
      const double b_i = 0.5 - t_mid / span;
      const double b_j = 0.5 + t_mid / span;
      Vec xbar(cfg.input_dim);
      left.resize(cfg.input_dim);
      for (int k = 0; k < cfg.input_dim; ++k) {
        xbar[k] = 0.5 * (ev_i.x[k] + ev_j.x[k]);
        left[k] = b_i * ev_i.x[k] + b_j * ev_j.x[k];
      }
      const Vec target = denoise(teacher, xbar, t_mid);
      std::tie(res.loss, cot) = distance(metric, left, target);
      Vec g(cfg.input_dim);
      for (int k = 0; k < cfg.input_dim; ++k) g[k] = b_i * cot[k];
      accumulate_backward(params, cfg, ev_i, g, {}, res.grad);
      for (int k = 0; k < cfg.input_dim; ++k) g[k] = b_j * cot[k];
      accumulate_backward(params, cfg, ev_j, g, {}, res.grad);
      if (!stop_grad) {
        Vec mcot(cfg.input_dim);
        for (int k = 0; k < cfg.input_dim; ++k) mcot[k] = -cot[k];
        add_teacher_path(params, cfg, teacher, xbar, t_mid, mcot,
                         {{&ev_i, 0.5}, {&ev_j, 0.5}}, res.grad);
      }
      break;
    }
    case DiffMode::central3: {
      const double t_prev = grid.times[i - 1], t_i = grid.times[i], t_next = grid.times[i + 1];
      const double span = t_prev - t_next;
      const StudentEval ev_p = student_eval(params, cfg, z, t_prev, false);
      const StudentEval ev_i = student_eval(params, cfg, z, t_i, false);
      const StudentEval ev_n = student_eval(params, cfg, z, t_next, false);
      const double c = t_i / span;
      left.resize(cfg.input_dim);
      for (int k = 0; k < cfg.input_dim; ++k)
        left[k] = ev_i.x[k] - c * (ev_p.x[k] - ev_n.x[k]);
      const Vec target = denoise(teacher, ev_i.x, t_i);
      std::tie(res.loss, cot) = distance(metric, left, target);
      Vec g(cfg.input_dim);
      accumulate_backward(params, cfg, ev_i, cot, {}, res.grad);
      for (int k = 0; k < cfg.input_dim; ++k) g[k] = -c * cot[k];
      accumulate_backward(params, cfg, ev_p, g, {}, res.grad);
      for (int k = 0; k < cfg.input_dim; ++k) g[k] = c * cot[k];
      accumulate_backward(params, cfg, ev_n, g, {}, res.grad);
      if (!stop_grad) {
        Vec mcot(cfg.input_dim);
        for (int k = 0; k < cfg.input_dim; ++k) mcot[k] = -cot[k];
        add_teacher_path(params, cfg, teacher, ev_i.x, t_i, mcot, {{&ev_i, 1.0}}, res.grad);
      }
      break;
    }
    case DiffMode::exact: {
      const double t_i = grid.times[i];
      const StudentEval ev_i = student_eval(params, cfg, z, t_i, true);
      left.resize(cfg.input_dim);
      for (int k = 0; k < cfg.input_dim; ++k) left[k] = ev_i.x[k] - t_i * ev_i.dxdt[k];
      const Vec target = denoise(teacher, ev_i.x, t_i);
      std::tie(res.loss, cot) = distance(metric, left, target);
      Vec g_dot(cfg.input_dim);
      for (int k = 0; k < cfg.input_dim; ++k) g_dot[k] = -t_i * cot[k];
      accumulate_backward(params, cfg, ev_i, cot, g_dot, res.grad);
      if (!stop_grad) {
        Vec mcot(cfg.input_dim);
        for (int k = 0; k < cfg.input_dim; ++k) mcot[k] = -cot[k];
        add_teacher_path(params, cfg, teacher, ev_i.x, t_i, mcot, {{&ev_i, 1.0}}, res.grad);
      }
      break;
    }
  }

  if (!std::isfinite(res.loss))
    throw NumericalError("pid_residual: non-finite loss at index " + std::to_string(i) +
                         " (t=" + std::to_string(grid.times[i]) + ")");
  return res;
}

}  // namespace pid
