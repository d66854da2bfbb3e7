#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "pid/student.hpp"

using namespace pid;

namespace {

StudentConfig tiny_cfg(int dim = 2, std::vector<int> hidden = {8, 8}) {
  StudentConfig cfg;
  cfg.input_dim = dim;
  cfg.hidden_dims = std::move(hidden);
  return cfg;
}

// Central finite difference of a scalar objective over theta.
template <typename F>
Vec fd_grad(StudentParams params, F&& objective, double h = 1e-6) {
  Vec g(params.data.size());
  for (std::size_t k = 0; k < params.data.size(); ++k) {
    const double orig = params.data[k];
    params.data[k] = orig + h;
    const double fp = objective(params);
    params.data[k] = orig - h;
    const double fm = objective(params);
    params.data[k] = orig;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double rel_err(const Vec& a, const Vec& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::fabs(a[i] - b[i]));
    den = std::max(den, std::fabs(b[i]));
  }
  return num / (1.0 + den);
}

}  // namespace

TEST_CASE("skip_coeffs: boundary and midpoint values") {
  StudentConfig cfg = tiny_cfg();
  auto at_T = skip_coeffs(80.0, cfg);
  CHECK(at_T.c_skip == 1.0);
  CHECK(at_T.c_out == 0.0);
  auto mid = skip_coeffs(40.0, cfg);
  CHECK(mid.c_skip == 0.5);
  CHECK(mid.c_out == 0.5);
  auto one = skip_coeffs(1.0, cfg);
  CHECK(one.c_noise == 0.0);
  CHECK(one.c_in == doctest::Approx(1.0 / std::sqrt(6400.25)).epsilon(1e-15));
  CHECK_THROWS_AS(skip_coeffs(0.0, cfg), std::domain_error);
}

TEST_CASE("student_forward: hard boundary x(z, T) == z for any params") {
  StudentConfig cfg = tiny_cfg();
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const StudentParams params = init_params(cfg, rng);
    const Vec z = rng.normal_vec(cfg.input_dim, 80.0);
    const Vec x = student_forward(params, cfg, z, cfg.t_max);
    for (int j = 0; j < cfg.input_dim; ++j) CHECK(std::fabs(x[j] - z[j]) <= 1e-12);
  }
}

TEST_CASE("student_forward: zero-weight network leaves only skip and bias paths") {
  StudentConfig cfg = tiny_cfg();
  StudentParams params;
  params.data.assign(param_count(cfg), 0.0);
  const Vec z = {1.0, -3.0};
  const double t = 20.0;
  const auto cs = skip_coeffs(t, cfg);
  const Vec x = student_forward(params, cfg, z, t);
  // All-zero weights and biases: network output is 0, so x = c_skip z.
  for (int j = 0; j < cfg.input_dim; ++j)
    CHECK(x[j] == doctest::Approx(cs.c_skip * z[j]).epsilon(1e-15));
}

TEST_CASE("student_forward: finite for |z| up to 3T across the grid") {
  StudentConfig cfg = tiny_cfg();
  Rng rng(2);
  const StudentParams params = init_params(cfg, rng);
  for (double t : {0.002, 0.1, 1.0, 10.0, 79.9, 80.0}) {
    for (double mag : {0.0, 80.0, 240.0}) {
      const Vec z = {mag, -mag};
      CHECK(all_finite(student_forward(params, cfg, z, t)));
    }
  }
}

TEST_CASE("student_backward: matches finite differences") {
  StudentConfig cfg = tiny_cfg(2, {8});
  Rng rng(3);
  const StudentParams params = init_params(cfg, rng);
  const Vec z = {0.7, -1.1};
  const Vec upstream = {0.3, -0.8};
  for (double t : {0.01, 1.0, 35.0}) {
    const Vec grad = student_backward(params, cfg, z, t, upstream);
    const Vec fd = fd_grad(params, [&](const StudentParams& p) {
      const Vec x = student_forward(p, cfg, z, t);
      return dot(upstream, x);
    });
    CHECK(rel_err(grad, fd) <= 1e-5);
  }
}

TEST_CASE("student_backward: zero gradient at t == T, linear in upstream") {
  StudentConfig cfg = tiny_cfg();
  Rng rng(4);
  const StudentParams params = init_params(cfg, rng);
  const Vec z = {0.5, 0.5};
  const Vec g = student_backward(params, cfg, z, cfg.t_max, {1.0, 2.0});
  CHECK(norm_linf(g) == 0.0);

  const Vec u1 = {0.2, -0.4}, u2 = {1.1, 0.9};
  Vec u12(2);
  for (int j = 0; j < 2; ++j) u12[j] = u1[j] + u2[j];
  const Vec g1 = student_backward(params, cfg, z, 3.0, u1);
  const Vec g2 = student_backward(params, cfg, z, 3.0, u2);
  const Vec g12 = student_backward(params, cfg, z, 3.0, u12);
  for (std::size_t k = 0; k < g12.size(); ++k)
    CHECK(g12[k] == doctest::Approx(g1[k] + g2[k]).epsilon(1e-9));
}

TEST_CASE("student_dt_exact: matches central differences in t") {
  for (int embed : {0, 4}) {
    StudentConfig cfg = tiny_cfg(2, {8, 8});
    cfg.embed_freqs = embed;
    Rng rng(5);
    const StudentParams params = init_params(cfg, rng);
    const Vec z = {1.4, -0.3};
    for (double t : {0.05, 1.0, 12.0, 60.0}) {
      const Vec d = student_dt_exact(params, cfg, z, t);
      const double h = 1e-4 * t;
      const Vec xp = student_forward(params, cfg, z, t + h);
      const Vec xm = student_forward(params, cfg, z, t - h);
      for (int j = 0; j < 2; ++j) {
        const double fd = (xp[j] - xm[j]) / (2.0 * h);
        CHECK(std::fabs(d[j] - fd) <= 1e-5 * (1.0 + std::fabs(fd)));
      }
    }
  }
}

TEST_CASE("student_dt_exact: zero-parameter network leaves z/T") {
  StudentConfig cfg = tiny_cfg();
  StudentParams params;
  params.data.assign(param_count(cfg), 0.0);
  const Vec z = {2.0, -6.0};
  for (double t : {0.01, 1.0, 50.0}) {
    const Vec d = student_dt_exact(params, cfg, z, t);
    for (int j = 0; j < 2; ++j)
      CHECK(d[j] == doctest::Approx(z[j] / cfg.t_max).epsilon(1e-14));
  }
}

TEST_CASE("accumulate_backward with tangent cotangent matches finite differences") {
  // Objective S = <g, x> + <q, dx/dt>: the reverse-over-forward path used by
  // exact-mode training.
  StudentConfig cfg = tiny_cfg(2, {6});
  Rng rng(6);
  const StudentParams params = init_params(cfg, rng);
  const Vec z = {0.9, 0.4};
  const Vec g = {0.7, -0.2}, q = {-1.3, 0.5};
  for (double t : {0.1, 2.0, 40.0}) {
    const StudentEval ev = student_eval(params, cfg, z, t, true);
    Vec grad(param_count(cfg), 0.0);
    accumulate_backward(params, cfg, ev, g, q, grad);
    const Vec fd = fd_grad(params, [&](const StudentParams& p) {
      const StudentEval e = student_eval(p, cfg, z, t, true);
      return dot(g, e.x) + dot(q, e.dxdt);
    });
    CHECK(rel_err(grad, fd) <= 1e-5);
  }
}

TEST_CASE("ema_update: endpoints and the paper decay value") {
  StudentConfig cfg = tiny_cfg();
  Rng rng(7);
  StudentParams ema = init_params(cfg, rng);
  const StudentParams current = init_params(cfg, rng);
  const StudentParams ema0 = ema;

  StudentParams keep = ema0;
  ema_update(keep, current, 1.0);
  CHECK(keep.data == ema0.data);

  StudentParams copy = ema0;
  ema_update(copy, current, 0.0);
  CHECK(copy.data == current.data);

  StudentParams paper = ema0;
  ema_update(paper, current, 0.99995);
  for (std::size_t k = 0; k < paper.data.size(); ++k)
    CHECK(paper.data[k] ==
          doctest::Approx(0.99995 * ema0.data[k] + 0.00005 * current.data[k]).epsilon(1e-12));

  StudentParams wrong;
  wrong.data.assign(3, 0.0);
  CHECK_THROWS_AS(ema_update(wrong, current, 0.5), std::invalid_argument);
}

TEST_CASE("determinism: same params and inputs give bit-identical outputs") {
  StudentConfig cfg = tiny_cfg();
  Rng rng(8);
  const StudentParams params = init_params(cfg, rng);
  const Vec z = {0.25, -0.75};
  const Vec a = student_forward(params, cfg, z, 3.7);
  const Vec b = student_forward(params, cfg, z, 3.7);
  CHECK(a == b);
}
