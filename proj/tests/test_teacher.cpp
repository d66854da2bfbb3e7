#include <cmath>

#include "doctest.h"
#include "pid/errors.hpp"
#include "pid/teacher.hpp"

using namespace pid;

namespace {

// Independent finite-difference gradient of log_density, the oracle the score
// implementation is checked against.
Vec fd_score(const TeacherSpec& teacher, const Vec& x, double t, double h = 1e-5) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    g[j] = (log_density(teacher, xp, t) - log_density(teacher, xm, t)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return g;
}

}  // namespace

TEST_CASE("log_density: standard normal mode") {
  auto teacher = TeacherSpec::single_gaussian({0.0}, 1.0);
  const double expected = -0.5 * std::log(2.0 * 3.14159265358979323846);
  CHECK(log_density(teacher, {0.0}, 0.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("log_density: symmetric two-mode mixture invariant under mode swap") {
  auto a = TeacherSpec::two_modes_1d(3.0, 0.5);
  TeacherSpec b = a;
  std::swap(b.components[0], b.components[1]);
  CHECK(log_density(a, {0.0}, 1.0) == log_density(b, {0.0}, 1.0));
}

TEST_CASE("log_density: N(1; 0, 5) at t=2") {
  auto teacher = TeacherSpec::single_gaussian({0.0}, 1.0);
  // var = sigma0^2 + t^2 = 5
  const double expected = -0.5 * std::log(2.0 * 3.14159265358979323846 * 5.0) - 1.0 / 10.0;
  CHECK(log_density(teacher, {1.0}, 2.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("log_density: finite far into the tails and at large t") {
  auto teacher = TeacherSpec::two_modes_1d(4.0, 0.3);
  CHECK(std::isfinite(log_density(teacher, {1e6}, 80.0)));
  CHECK(std::isfinite(log_density(teacher, {-1e6}, 0.002)));
  auto ring = TeacherSpec::ring_2d(8, 6.0, 0.3);
  CHECK(std::isfinite(log_density(ring, {1e6, -1e6}, 80.0)));
}

TEST_CASE("score: zero at the mode of a single Gaussian") {
  auto teacher = TeacherSpec::single_gaussian({2.0, -1.0}, 0.7);
  const Vec s = score(teacher, {2.0, -1.0}, 1.3);
  CHECK(norm_linf(s) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("score: closed form single Gaussian value") {
  auto teacher = TeacherSpec::single_gaussian({0.0}, 1.0);
  const Vec s = score(teacher, {2.0}, 1.0);
  CHECK(s[0] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("score matches finite differences of log_density") {
  const auto teachers = {TeacherSpec::single_gaussian({0.5, -1.5}, 0.8),
                         TeacherSpec::ring_2d(8, 6.0, 0.3)};
  for (const auto& teacher : teachers) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x = rng.normal_vec(teacher.dim, 4.0);
      const double t = 0.05 + 3.0 * rng.uniform();
      const Vec s = score(teacher, x, t);
      const Vec fd = fd_score(teacher, x, t);
      for (int j = 0; j < teacher.dim; ++j)
        CHECK(std::fabs(s[j] - fd[j]) <= 1e-5 * (1.0 + norm_linf(s)));
    }
  }
}

TEST_CASE("denoise: identity at t=0") {
  auto teacher = TeacherSpec::two_modes_1d(2.0, 0.4);
  const Vec x = {0.37};
  CHECK(denoise(teacher, x, 0.0) == x);
}

TEST_CASE("denoise: posterior mean of single Gaussian") {
  auto teacher = TeacherSpec::single_gaussian({0.0}, 1.0);
  const Vec d = denoise(teacher, {2.0}, 1.0);
  CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("denoise: zero at the symmetry point of a two-mode mixture") {
  auto teacher = TeacherSpec::two_modes_1d(3.0, 0.5);
  const Vec d = denoise(teacher, {0.0}, 1.0);
  CHECK(std::fabs(d[0]) < 1e-14);
}

TEST_CASE("denoise == x + t^2 * score everywhere") {
  auto teacher = TeacherSpec::ring_2d(8, 6.0, 0.3);
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = rng.normal_vec(2, 5.0);
    const double t = 0.002 + 79.0 * rng.uniform();
    const Vec d = denoise(teacher, x, t);
    const Vec s = score(teacher, x, t);
    for (int j = 0; j < 2; ++j) CHECK(std::fabs(d[j] - (x[j] + t * t * s[j])) <= 1e-10);
  }
}

TEST_CASE("denoiser_jacobian: analytic single-Gaussian value and t->0 limit") {
  auto teacher = TeacherSpec::single_gaussian({0.0, 0.0}, 1.0);
  const Mat jac = denoiser_jacobian(teacher, {0.3, -0.2}, 1.0);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const double expected = r == c ? 0.5 : 0.0;  // sigma0^2/(sigma0^2+t^2) I
      CHECK(std::fabs(jac[r][c] - expected) <= 1e-4 * 0.5);
    }
  const Mat near0 = denoiser_jacobian(teacher, {0.3, -0.2}, 1e-4);
  CHECK(near0[0][0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(near0[1][1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("denoiser_jacobian: symmetric teacher gives J(x) == J(-x)") {
  auto teacher = TeacherSpec::two_modes_1d(2.0, 0.6);
  const Mat jp = denoiser_jacobian(teacher, {0.9}, 0.8);
  const Mat jm = denoiser_jacobian(teacher, {-0.9}, 0.8);
  CHECK(jp[0][0] == doctest::Approx(jm[0][0]).epsilon(1e-10));
}

TEST_CASE("denoiser_jacobian: dim guard") {
  TeacherSpec teacher;
  teacher.dim = 17;
  teacher.components.push_back({1.0, Vec(17, 0.0), 1.0});
  CHECK_THROWS_AS(denoiser_jacobian(teacher, Vec(17, 0.0), 1.0), ConfigError);
}

TEST_CASE("sample_data: determinism, count, and law of large numbers") {
  auto teacher = TeacherSpec::single_gaussian({1.5}, 1.0);
  Rng a(42), b(42);
  CHECK(sample_data(teacher, 0, a).empty());
  const auto sa = sample_data(teacher, 100, a);
  const auto sb = sample_data(teacher, 100, b);
  CHECK(sa.size() == 100);
  CHECK(sa == sb);

  Rng big(123);
  const auto samples = sample_data(teacher, 100000, big);
  double mean = 0.0;
  for (const auto& s : samples) mean += s[0];
  mean /= static_cast<double>(samples.size());
  CHECK(std::fabs(mean - 1.5) < 0.02);
}

TEST_CASE("validation: weights must sum to one, dims bounded") {
  TeacherSpec bad;
  bad.dim = 1;
  bad.components.push_back({0.6, {0.0}, 1.0});
  bad.components.push_back({0.5, {1.0}, 1.0});
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK_THROWS_AS(log_density(TeacherSpec::single_gaussian({0.0}, 1.0), {0.0, 1.0}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(score(TeacherSpec::single_gaussian({0.0}, 1.0), {0.0}, 0.0),
                  std::domain_error);
}
