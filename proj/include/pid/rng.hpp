#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "pid/vec.hpp"

namespace pid {

// Deterministic random stream. The mt19937_64 engine output is pinned by the
// standard; distributions are hand-rolled on top of it so that draws are
// bit-identical across standard library implementations and the full stream
// state round-trips through checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes exactly two engine outputs.
  double normal() {
    double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Uniform over {0, ..., n-1}.
  int uniform_index(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

  Vec normal_vec(int d, double scale = 1.0) {
    Vec v(static_cast<std::size_t>(d));
    for (auto& x : v) x = scale * normal();
    return v;
  }

  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pid
