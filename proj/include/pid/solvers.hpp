#pragma once

#include <vector>

#include "pid/teacher.hpp"
#include "pid/time_grid.hpp"
#include "pid/vec.hpp"

namespace pid {

// States of one probability-flow trajectory sampled on a TimeGrid;
// states[i] = x(z, times[i]) and states[0] == z bit-exactly.
struct Trajectory {
  Vec z;
  std::vector<double> times;
  std::vector<Vec> states;
};

// dx/dt = (x - D(x, t)) / t  ==  -t * score(x, t)
Vec ode_rhs(const TeacherSpec& teacher, const Vec& x, double t);

// Explicit Euler from t_max down to t_min:
// states[i+1] = states[i] - (t_i - t_{i+1}) * ode_rhs(states[i], t_i)
Trajectory euler_solve(const TeacherSpec& teacher, const TimeGrid& grid, const Vec& z);

// Heun predictor-corrector on the same grid; second-order accurate.
Trajectory heun_solve(const TeacherSpec& teacher, const TimeGrid& grid, const Vec& z);

// Exact solution of the single-Gaussian flow dx/dt = t(x - mu)/(sigma0^2 + t^2):
// x(t) = mu + (z - mu) * sqrt((sigma0^2 + t^2) / (sigma0^2 + T^2))
Vec closed_form_single_gaussian(const Vec& mu, double sigma0, const Vec& z, double t, double T);

}  // namespace pid
