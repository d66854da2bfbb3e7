#pragma once

#include <string>

#include "pid/vec.hpp"

namespace pid {

enum class OptKind { adam, radam };

OptKind parse_opt_kind(const std::string& s);
std::string to_string(OptKind k);

struct OptConfig {
  OptKind kind = OptKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptState {
  Vec m;  // first moment
  Vec v;  // second moment
  long steps = 0;

  void reset(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    steps = 0;
  }
};

// One update in place. Adam with bias correction; RAdam adds the variance
// rectification term and falls back to un-adapted momentum while the
// rectification is undefined (rho_t <= 4). Weight decay is 0.
void optimizer_step(const OptConfig& cfg, OptState& state, Vec& params, const Vec& grad);

}  // namespace pid
