#include <cmath>

#include "doctest.h"
#include "pid/errors.hpp"
#include "pid/time_grid.hpp"

using namespace pid;

TEST_CASE("edm_grid: exact endpoints and strict descent") {
  for (int n : {2, 4, 16, 128, 1000}) {
    const TimeGrid g = edm_grid(n, 0.002, 80.0, 7.0);
    CHECK(g.times.front() == 80.0);
    CHECK(g.times.back() == 0.002);
    for (int i = 0; i + 1 < g.n(); ++i) CHECK(g.times[i] > g.times[i + 1]);
    CHECK(g.dt_max() > 0.0);
    CHECK(std::isfinite(g.dt_max()));
  }
}

TEST_CASE("edm_grid: interior values match the formula at n=4") {
  const TimeGrid g = edm_grid(4, 0.002, 80.0, 7.0);
  const double a = std::pow(80.0, 1.0 / 7.0);
  const double b = std::pow(0.002, 1.0 / 7.0);
  for (int i = 1; i <= 2; ++i) {
    const double expected = std::pow(a + (i / 3.0) * (b - a), 7.0);
    CHECK(g.times[i] == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("uniform_grid: even spacing, exact endpoints") {
  const TimeGrid g = uniform_grid(5, 1.0, 9.0);
  CHECK(g.times.front() == 9.0);
  CHECK(g.times.back() == 1.0);
  for (int i = 0; i + 1 < g.n(); ++i)
    CHECK(g.times[i] - g.times[i + 1] == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("doubling n strictly decreases dt_max") {
  for (double rho : {7.0}) {
    double prev = edm_grid(16, 0.002, 80.0, rho).dt_max();
    for (int n : {32, 64, 128}) {
      const double cur = edm_grid(n, 0.002, 80.0, rho).dt_max();
      CHECK(cur < prev);
      prev = cur;
    }
  }
  double prev = uniform_grid(16, 0.002, 80.0).dt_max();
  for (int n : {32, 64, 128}) {
    const double cur = uniform_grid(n, 0.002, 80.0).dt_max();
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("sample_index: n=2 always 0, reproducible, uniform") {
  const TimeGrid g2 = edm_grid(2, 0.002, 80.0, 7.0);
  Rng rng(1);
  for (int k = 0; k < 20; ++k) CHECK(sample_index(g2, rng) == 0);

  const TimeGrid g = edm_grid(9, 0.002, 80.0, 7.0);  // 8 valid indices
  Rng a(5), b(5);
  for (int k = 0; k < 100; ++k) CHECK(sample_index(g, a) == sample_index(g, b));

  // Histogram over 1e5 draws: each bin within 3 sigma of the multinomial std.
  const int draws = 100000;
  const int bins = g.n() - 1;
  std::vector<int> hist(bins, 0);
  Rng h(99);
  for (int k = 0; k < draws; ++k) {
    const int i = sample_index(g, h);
    CHECK(i >= 0);
    CHECK(i <= bins - 1);
    ++hist[i];
  }
  const double p = 1.0 / bins;
  const double sigma = std::sqrt(draws * p * (1.0 - p));
  for (int bin = 0; bin < bins; ++bin)
    CHECK(std::fabs(hist[bin] - draws * p) <= 3.0 * sigma);
}

TEST_CASE("grid validation errors") {
  CHECK_THROWS_AS(edm_grid(1, 0.002, 80.0, 7.0), ConfigError);
  CHECK_THROWS_AS(edm_grid(8, -1.0, 80.0, 7.0), ConfigError);
  CHECK_THROWS_AS(edm_grid(8, 80.0, 0.002, 7.0), ConfigError);
  CHECK_THROWS_AS(edm_grid(8, 0.002, 80.0, 0.0), ConfigError);
  CHECK_THROWS_AS(uniform_grid(8, 2.0, 2.0), ConfigError);
}
