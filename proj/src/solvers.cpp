#include "pid/solvers.hpp"

#include <cmath>
#include <string>

#include "pid/errors.hpp"

namespace pid {
namespace {

void check_state(const Vec& x, int step, const char* solver) {
  if (!all_finite(x))
    throw NumericalError(std::string(solver) + ": non-finite state at step " +
                         std::to_string(step));
}

}  // namespace

Vec ode_rhs(const TeacherSpec& teacher, const Vec& x, double t) {
  if (!(t > 0.0)) throw std::domain_error("ode_rhs: t must be > 0");
  Vec d = denoise(teacher, x, t);
  for (int j = 0; j < teacher.dim; ++j) d[j] = (x[j] - d[j]) / t;
  return d;
}

Trajectory euler_solve(const TeacherSpec& teacher, const TimeGrid& grid, const Vec& z) {
  if (!all_finite(z)) throw std::invalid_argument("euler_solve: non-finite initial state");
  Trajectory traj;
  traj.z = z;
  traj.times = grid.times;
  traj.states.reserve(grid.n());
  traj.states.push_back(z);
  for (int i = 0; i + 1 < grid.n(); ++i) {
    const double ti = grid.times[i];
    const double tj = grid.times[i + 1];
    const Vec rhs = ode_rhs(teacher, traj.states[i], ti);
    Vec next = traj.states[i];
    axpy(-(ti - tj), rhs, next);
    check_state(next, i + 1, "euler_solve");
    traj.states.push_back(std::move(next));
  }
  return traj;
}

Trajectory heun_solve(const TeacherSpec& teacher, const TimeGrid& grid, const Vec& z) {
  if (!all_finite(z)) throw std::invalid_argument("heun_solve: non-finite initial state");
  Trajectory traj;
  traj.z = z;
  traj.times = grid.times;
  traj.states.reserve(grid.n());
  traj.states.push_back(z);
  for (int i = 0; i + 1 < grid.n(); ++i) {
    const double ti = grid.times[i];
    const double tj = grid.times[i + 1];
    const double h = tj - ti;  // negative: integrating downward
    const Vec d1 = ode_rhs(teacher, traj.states[i], ti);
    Vec pred = traj.states[i];
    axpy(h, d1, pred);
    const Vec d2 = ode_rhs(teacher, pred, tj);
    Vec next = traj.states[i];
    for (int j = 0; j < teacher.dim; ++j) next[j] += 0.5 * h * (d1[j] + d2[j]);
    check_state(next, i + 1, "heun_solve");
    traj.states.push_back(std::move(next));
  }
  return traj;
}

Vec closed_form_single_gaussian(const Vec& mu, double sigma0, const Vec& z, double t, double T) {
  const double s02 = sigma0 * sigma0;
  const double scale = std::sqrt((s02 + t * t) / (s02 + T * T));
  Vec x(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) x[j] = mu[j] + (z[j] - mu[j]) * scale;
  return x;
}

}  // namespace pid
