#include "pid/time_grid.hpp"

#include <cmath>
#include <string>

#include "pid/errors.hpp"

namespace pid {
namespace {

void check_bounds(int n, double t_min, double t_max) {
  if (n < 2) throw ConfigError("grid.n: must be >= 2, got " + std::to_string(n));
  if (!(t_min > 0.0)) throw ConfigError("grid.t_min: must be > 0");
  if (!(t_max > t_min)) throw ConfigError("grid.t_max: must be > grid.t_min");
}

}  // namespace

double TimeGrid::dt_max() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) m = std::max(m, times[i] - times[i + 1]);
  return m;
}

TimeGrid edm_grid(int n, double t_min, double t_max, double rho) {
  check_bounds(n, t_min, t_max);
  if (!(rho > 0.0)) throw ConfigError("grid.rho: must be > 0");
  TimeGrid grid;
  grid.t_min = t_min;
  grid.t_max = t_max;
  grid.rho = rho;
  grid.times.resize(n);
  const double a = std::pow(t_max, 1.0 / rho);
  const double b = std::pow(t_min, 1.0 / rho);
  for (int i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i) / (n - 1);
    grid.times[i] = std::pow(a + frac * (b - a), rho);
  }
  grid.times.front() = t_max;  // endpoints exact, no pow() drift
  grid.times.back() = t_min;
  return grid;
}

TimeGrid uniform_grid(int n, double t_min, double t_max) {
  check_bounds(n, t_min, t_max);
  TimeGrid grid;
  grid.t_min = t_min;
  grid.t_max = t_max;
  grid.rho = 0.0;
  grid.times.resize(n);
  for (int i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i) / (n - 1);
    grid.times[i] = t_max + frac * (t_min - t_max);
  }
  grid.times.front() = t_max;
  grid.times.back() = t_min;
  return grid;
}

int sample_index(const TimeGrid& grid, Rng& rng) {
  return rng.uniform_index(grid.n() - 1);
}

}  // namespace pid
