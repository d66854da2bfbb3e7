#pragma once

#include <string>
#include <utility>

#include "pid/student.hpp"
#include "pid/teacher.hpp"
#include "pid/time_grid.hpp"
#include "pid/vec.hpp"

namespace pid {

enum class DiffMode {
  upwind,    // one-sided (x_i - x_j)/(t_i - t_j), first order
  central,   // midpoint-anchored pair form, second order, 2 evaluations
  central3,  // neighbor form (x_{i-1} - x_{i+1})/(t_{i-1} - t_{i+1}), 3 evaluations
  exact,     // analytic dx/dt via forward-mode tangents
};

enum class Metric { squared_l2, l2, l1 };

DiffMode parse_diff_mode(const std::string& s);
Metric parse_metric(const std::string& s);
std::string to_string(DiffMode m);
std::string to_string(Metric m);

// (d(a, b), dd/da). L1 uses sign(0) = 0; L2 returns a zero cotangent at a == b.
std::pair<double, Vec> distance(Metric metric, const Vec& a, const Vec& b);

// (x_i - x_j) / (t_i - t_j), requires t_i > t_j.
Vec numerical_dt_upwind(const Vec& x_i, const Vec& x_j, double t_i, double t_j);

// Residual value from two precomputed trajectory states, usable with any
// trajectory source (e.g. an ODE-solver lookup table). upwind and central
// modes only; the other modes need the network itself.
double residual_value(const TeacherSpec& teacher, double t_i, double t_j, const Vec& x_i,
                      const Vec& x_j, DiffMode mode, Metric metric);

struct ResidualResult {
  double loss = 0.0;
  Vec grad;  // d loss / d theta
};

// The distillation residual at grid index i for noise draw z, with its full
// parameter gradient. With stop_grad (default) the teacher output is a
// constant in the gradient; without it the teacher side contributes through
// the finite-difference denoiser Jacobian.
ResidualResult pid_residual(const StudentParams& params, const StudentConfig& cfg,
                            const TeacherSpec& teacher, const TimeGrid& grid, int i, const Vec& z,
                            DiffMode mode, Metric metric, bool stop_grad);

}  // namespace pid
