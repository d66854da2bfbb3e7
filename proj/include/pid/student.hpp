#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pid/rng.hpp"
#include "pid/vec.hpp"

namespace pid {

struct StudentConfig {
  int input_dim = 1;                      // equals the teacher dim
  std::vector<int> hidden_dims{64, 64, 64};
  std::string activation = "silu";        // smooth only: "silu" or "tanh"
  double t_max = 80.0;
  double sigma_data = 0.5;
  int embed_freqs = 0;  // 0: c_noise enters as one scalar feature; k>0: k-frequency sin/cos embedding

  int embed_dim() const { return embed_freqs > 0 ? 2 * embed_freqs : 1; }
  int net_input_dim() const { return input_dim + embed_dim(); }
  void validate() const;
};

// Flat-offset view of the per-layer weight matrices and bias vectors.
struct ParamLayout {
  std::vector<int> dims;            // [net_in, hidden..., input_dim]
  std::vector<std::size_t> w_off;   // per layer, row-major out x in
  std::vector<std::size_t> b_off;
  std::size_t total = 0;

  int layers() const { return static_cast<int>(dims.size()) - 1; }
  static ParamLayout make(const StudentConfig& cfg);
};

struct StudentParams {
  Vec data;
};

std::size_t param_count(const StudentConfig& cfg);

// He-scaled random weights, zero biases; draw order is fixed by the layout.
StudentParams init_params(const StudentConfig& cfg, Rng& rng);

struct SkipCoeffs {
  double c_skip;   // t / T
  double c_out;    // (T - t) / T
  double c_in;     // 1 / sqrt(sigma_data^2 + T^2), constant in t
  double c_noise;  // ln(t) / 4
};

SkipCoeffs skip_coeffs(double t, const StudentConfig& cfg);

// x_theta(z, t) = c_skip(t) z + c_out(t) X_theta(c_in z, c_noise(t)).
// The boundary x_theta(z, T) == z is hard-wired by c_out(T) = 0.
Vec student_forward(const StudentParams& params, const StudentConfig& cfg, const Vec& z, double t);

// Exact dx_theta/dt via forward-mode tangent propagation through the network:
// z/T - X_theta/T + c_out(t) * dX_theta/dt with the noise-input tangent 1/(4t).
Vec student_dt_exact(const StudentParams& params, const StudentConfig& cfg, const Vec& z, double t);

// d<upstream, x_theta(z, t)>/dtheta by reverse accumulation.
Vec student_backward(const StudentParams& params, const StudentConfig& cfg, const Vec& z, double t,
                     const Vec& upstream);

// ema <- decay * ema + (1 - decay) * current
void ema_update(StudentParams& ema, const StudentParams& current, double decay);

// One student evaluation with every intermediate needed to run reverse mode
// later, optionally carrying the time tangent. The PID loss evaluates the
// student at two grid times and backpropagates through both; caching avoids
// recomputing the forward passes.
struct StudentEval {
  Vec x;     // x_theta(z, t)
  Vec dxdt;  // empty unless with_tangent

  // internals for the reverse pass
  SkipCoeffs cs;
  double t = 0.0;
  Vec z;
  std::vector<Vec> h;     // h[0] = net input, h[l] = post-activation
  std::vector<Vec> zpre;  // pre-activations per layer
  std::vector<Vec> hdot;  // tangents (with_tangent only)
  std::vector<Vec> zdot;
};

StudentEval student_eval(const StudentParams& params, const StudentConfig& cfg, const Vec& z,
                         double t, bool with_tangent);

// Accumulates d(<g_x, x> + <g_dxdt, dxdt>)/dtheta into grad (size param_count).
// g_dxdt may be empty; if non-empty the eval must have been made with_tangent.
// The dxdt path makes this a reverse-over-forward sweep, which is what lets
// the exact-derivative training mode take parameter gradients.
void accumulate_backward(const StudentParams& params, const StudentConfig& cfg,
                         const StudentEval& eval, const Vec& g_x, const Vec& g_dxdt, Vec& grad);

}  // namespace pid
