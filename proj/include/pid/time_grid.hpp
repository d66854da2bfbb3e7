#pragma once

#include <vector>

#include "pid/rng.hpp"

namespace pid {

// Descending noise-level discretization of [t_min, t_max]. times[0] == t_max
// and times[n-1] == t_min exactly; everything in between is strictly
// decreasing.
struct TimeGrid {
  std::vector<double> times;
  double t_min = 0.002;
  double t_max = 80.0;
  double rho = 7.0;  // 0 marks a uniform grid

  int n() const { return static_cast<int>(times.size()); }
  double dt_max() const;
};

// times[i] = (t_max^(1/rho) + i/(n-1) * (t_min^(1/rho) - t_max^(1/rho)))^rho
TimeGrid edm_grid(int n, double t_min, double t_max, double rho);

// Evenly spaced; used for clean solver-order fits.
TimeGrid uniform_grid(int n, double t_min, double t_max);

// Uniform over {0, ..., n-2}; the pair (t_i, t_{i+1}) always exists.
int sample_index(const TimeGrid& grid, Rng& rng);

}  // namespace pid
