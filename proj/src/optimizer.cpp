#include "pid/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "pid/errors.hpp"

namespace pid {

OptKind parse_opt_kind(const std::string& s) {
  if (s == "adam") return OptKind::adam;
  if (s == "radam") return OptKind::radam;
  throw ConfigError("train.optimizer: \"" + s + "\" is not one of adam, radam");
}

std::string to_string(OptKind k) { return k == OptKind::adam ? "adam" : "radam"; }

void optimizer_step(const OptConfig& cfg, OptState& state, Vec& params, const Vec& grad) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n)
    throw std::invalid_argument("optimizer_step: shape mismatch");

  state.steps += 1;
  const double t = static_cast<double>(state.steps);
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);

  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
  }

  if (cfg.kind == OptKind::adam) {
    for (std::size_t i = 0; i < n; ++i) {
      const double mhat = state.m[i] / bias1;
      const double vhat = state.v[i] / bias2;
      params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    return;
  }

  // RAdam (Liu et al. 2020) rectification.
  const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
  const double b2t = std::pow(b2, t);
  const double rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
  if (rho_t > 4.0) {
    const double r = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                               ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
    for (std::size_t i = 0; i < n; ++i) {
      const double mhat = state.m[i] / bias1;
      const double vhat = std::sqrt(state.v[i] / bias2);
      params[i] -= cfg.lr * r * mhat / (vhat + cfg.eps);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) params[i] -= cfg.lr * state.m[i] / bias1;
  }
}

}  // namespace pid
