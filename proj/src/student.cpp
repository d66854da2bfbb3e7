#include "pid/student.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pid/errors.hpp"

namespace pid {
namespace {

// Smooth activations with first and second derivatives; the second derivative
// feeds the reverse-over-forward pass.
struct Act {
  double (*f)(double);
  double (*d1)(double);
  double (*d2)(double);
};

double silu(double x) { return x / (1.0 + std::exp(-x)); }
double silu_d1(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}
double silu_d2(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s));
}

double tanh_f(double x) { return std::tanh(x); }
double tanh_d1(double x) {
  const double y = std::tanh(x);
  return 1.0 - y * y;
}
double tanh_d2(double x) {
  const double y = std::tanh(x);
  return -2.0 * y * (1.0 - y * y);
}

Act activation_of(const std::string& name) {
  if (name == "silu") return {silu, silu_d1, silu_d2};
  if (name == "tanh") return {tanh_f, tanh_d1, tanh_d2};
  throw ConfigError("student.activation: \"" + name +
                    "\" is not smooth; supported: silu, tanh");
}

// Embedding of c_noise and its derivative w.r.t. c_noise.
void embed_noise(const StudentConfig& cfg, double c_noise, Vec& e, Vec& de) {
  if (cfg.embed_freqs <= 0) {
    e = {c_noise};
    de = {1.0};
    return;
  }
  e.resize(2 * cfg.embed_freqs);
  de.resize(2 * cfg.embed_freqs);
  double f = 1.0;
  for (int j = 0; j < cfg.embed_freqs; ++j) {
    e[2 * j] = std::sin(f * c_noise);
    e[2 * j + 1] = std::cos(f * c_noise);
    de[2 * j] = f * std::cos(f * c_noise);
    de[2 * j + 1] = -f * std::sin(f * c_noise);
    f *= 2.0;
  }
}

// y = W h + b for one layer
void affine(const Vec& params, const ParamLayout& lay, int l, const Vec& h, Vec& y,
            bool add_bias) {
  const int out = lay.dims[l + 1];
  const int in = lay.dims[l];
  const double* w = params.data() + lay.w_off[l];
  const double* b = params.data() + lay.b_off[l];
  y.assign(out, 0.0);
  for (int r = 0; r < out; ++r) {
    const double* wr = w + static_cast<std::size_t>(r) * in;
    double acc = add_bias ? b[r] : 0.0;
    for (int c = 0; c < in; ++c) acc += wr[c] * h[c];
    y[r] = acc;
  }
}

// y = W^T v
void affine_t(const Vec& params, const ParamLayout& lay, int l, const Vec& v, Vec& y) {
  const int out = lay.dims[l + 1];
  const int in = lay.dims[l];
  const double* w = params.data() + lay.w_off[l];
  y.assign(in, 0.0);
  for (int r = 0; r < out; ++r) {
    const double* wr = w + static_cast<std::size_t>(r) * in;
    const double vr = v[r];
    for (int c = 0; c < in; ++c) y[c] += wr[c] * vr;
  }
}

}  // namespace

void StudentConfig::validate() const {
  if (input_dim < 1) throw ConfigError("student.input_dim: must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("student.hidden_dims: must be non-empty");
  for (int w : hidden_dims)
    if (w < 1) throw ConfigError("student.hidden_dims: widths must be >= 1");
  if (!(t_max > 0.0)) throw ConfigError("student.t_max: must be > 0");
  if (!(sigma_data > 0.0)) throw ConfigError("student.sigma_data: must be > 0");
  if (embed_freqs < 0) throw ConfigError("student.embed_freqs: must be >= 0");
  activation_of(activation);
}

ParamLayout ParamLayout::make(const StudentConfig& cfg) {
  ParamLayout lay;
  lay.dims.push_back(cfg.net_input_dim());
  for (int w : cfg.hidden_dims) lay.dims.push_back(w);
  lay.dims.push_back(cfg.input_dim);
  std::size_t off = 0;
  for (int l = 0; l + 1 < static_cast<int>(lay.dims.size()); ++l) {
    lay.w_off.push_back(off);
    off += static_cast<std::size_t>(lay.dims[l + 1]) * lay.dims[l];
    lay.b_off.push_back(off);
    off += lay.dims[l + 1];
  }
  lay.total = off;
  return lay;
}

std::size_t param_count(const StudentConfig& cfg) { return ParamLayout::make(cfg).total; }

StudentParams init_params(const StudentConfig& cfg, Rng& rng) {
  cfg.validate();
  const ParamLayout lay = ParamLayout::make(cfg);
  StudentParams p;
  p.data.assign(lay.total, 0.0);
  for (int l = 0; l < lay.layers(); ++l) {
    const int out = lay.dims[l + 1];
    const int in = lay.dims[l];
    const double scale = std::sqrt(2.0 / in);
    double* w = p.data.data() + lay.w_off[l];
    for (int i = 0; i < out * in; ++i) w[i] = scale * rng.normal();
  }
  return p;
}

SkipCoeffs skip_coeffs(double t, const StudentConfig& cfg) {
  if (!(t > 0.0)) throw std::domain_error("skip_coeffs: t must be > 0");
  const double T = cfg.t_max;
  SkipCoeffs cs;
  cs.c_skip = t / T;
  cs.c_out = (T - t) / T;
  cs.c_in = 1.0 / std::sqrt(cfg.sigma_data * cfg.sigma_data + T * T);
  cs.c_noise = std::log(t) / 4.0;
  return cs;
}

StudentEval student_eval(const StudentParams& params, const StudentConfig& cfg, const Vec& z,
                         double t, bool with_tangent) {
  if (static_cast<int>(z.size()) != cfg.input_dim)
    throw std::invalid_argument("student: z has length " + std::to_string(z.size()) +
                                ", expected " + std::to_string(cfg.input_dim));
  if (!all_finite(z)) throw std::invalid_argument("student: non-finite z");
  const ParamLayout lay = ParamLayout::make(cfg);
  if (params.data.size() != lay.total)
    throw std::invalid_argument("student: params size " + std::to_string(params.data.size()) +
                                " does not match layout " + std::to_string(lay.total));
  const Act act = activation_of(cfg.activation);
  const int L = lay.layers();

  StudentEval ev;
  ev.cs = skip_coeffs(t, cfg);
  ev.t = t;
  ev.z = z;

  Vec e, de;
  embed_noise(cfg, ev.cs.c_noise, e, de);

  ev.h.resize(L + 1);
  ev.zpre.resize(L);
  ev.h[0].resize(lay.dims[0]);
  for (int j = 0; j < cfg.input_dim; ++j) ev.h[0][j] = ev.cs.c_in * z[j];
  for (int j = 0; j < cfg.embed_dim(); ++j) ev.h[0][cfg.input_dim + j] = e[j];

  if (with_tangent) {
    ev.hdot.resize(L + 1);
    ev.zdot.resize(L);
    ev.hdot[0].assign(lay.dims[0], 0.0);
    const double dnoise_dt = 1.0 / (4.0 * t);
    for (int j = 0; j < cfg.embed_dim(); ++j) ev.hdot[0][cfg.input_dim + j] = de[j] * dnoise_dt;
  }

  for (int l = 0; l < L; ++l) {
    affine(params.data, lay, l, ev.h[l], ev.zpre[l], true);
    if (with_tangent) affine(params.data, lay, l, ev.hdot[l], ev.zdot[l], false);
    if (l + 1 < L) {
      ev.h[l + 1].resize(lay.dims[l + 1]);
      for (int j = 0; j < lay.dims[l + 1]; ++j) ev.h[l + 1][j] = act.f(ev.zpre[l][j]);
      if (with_tangent) {
        ev.hdot[l + 1].resize(lay.dims[l + 1]);
        for (int j = 0; j < lay.dims[l + 1]; ++j)
          ev.hdot[l + 1][j] = act.d1(ev.zpre[l][j]) * ev.zdot[l][j];
      }
    } else {
      ev.h[l + 1] = ev.zpre[l];
      if (with_tangent) ev.hdot[l + 1] = ev.zdot[l];
    }
  }

  const Vec& X = ev.h[L];
  ev.x.resize(cfg.input_dim);
  for (int j = 0; j < cfg.input_dim; ++j) ev.x[j] = ev.cs.c_skip * z[j] + ev.cs.c_out * X[j];

  if (with_tangent) {
    const double T = cfg.t_max;
    const Vec& Xdot = ev.hdot[L];
    ev.dxdt.resize(cfg.input_dim);
    for (int j = 0; j < cfg.input_dim; ++j)
      ev.dxdt[j] = z[j] / T - X[j] / T + ev.cs.c_out * Xdot[j];
  }
  return ev;
}

void accumulate_backward(const StudentParams& params, const StudentConfig& cfg,
                         const StudentEval& eval, const Vec& g_x, const Vec& g_dxdt, Vec& grad) {
  const ParamLayout lay = ParamLayout::make(cfg);
  if (grad.size() != lay.total)
    throw std::invalid_argument("accumulate_backward: grad size mismatch");
  const bool with_dot = !g_dxdt.empty();
  if (with_dot && eval.hdot.empty())
    throw std::invalid_argument("accumulate_backward: eval lacks tangents for g_dxdt");
  const Act act = activation_of(cfg.activation);
  const int L = lay.layers();
  const double T = cfg.t_max;

  // Cotangents of the net output X and (when used) its time tangent Xdot.
  // x = c_skip z + c_out X; dxdt = z/T - X/T + c_out Xdot.
  Vec hbar(cfg.input_dim, 0.0), hdotbar;
  for (int j = 0; j < cfg.input_dim; ++j) {
    double v = g_x.empty() ? 0.0 : eval.cs.c_out * g_x[j];
    if (with_dot) v -= g_dxdt[j] / T;
    hbar[j] = v;
  }
  if (with_dot) {
    hdotbar.resize(cfg.input_dim);
    for (int j = 0; j < cfg.input_dim; ++j) hdotbar[j] = eval.cs.c_out * g_dxdt[j];
  }

  Vec zbar, zdotbar, tmp;
  for (int l = L - 1; l >= 0; --l) {
    const int out = lay.dims[l + 1];
    if (l == L - 1) {
      zbar = hbar;
      if (with_dot) zdotbar = hdotbar;
    } else {
      zbar.resize(out);
      for (int j = 0; j < out; ++j) {
        double v = act.d1(eval.zpre[l][j]) * hbar[j];
        if (with_dot) v += act.d2(eval.zpre[l][j]) * eval.zdot[l][j] * hdotbar[j];
        zbar[j] = v;
      }
      if (with_dot) {
        zdotbar.resize(out);
        for (int j = 0; j < out; ++j) zdotbar[j] = act.d1(eval.zpre[l][j]) * hdotbar[j];
      }
    }

    const int in = lay.dims[l];
    double* gw = grad.data() + lay.w_off[l];
    double* gb = grad.data() + lay.b_off[l];
    const Vec& hin = eval.h[l];
    for (int r = 0; r < out; ++r) {
      double* gwr = gw + static_cast<std::size_t>(r) * in;
      const double zr = zbar[r];
      for (int c = 0; c < in; ++c) gwr[c] += zr * hin[c];
      gb[r] += zr;
    }
    if (with_dot) {
      const Vec& hdin = eval.hdot[l];
      for (int r = 0; r < out; ++r) {
        double* gwr = gw + static_cast<std::size_t>(r) * in;
        const double zr = zdotbar[r];
        for (int c = 0; c < in; ++c) gwr[c] += zr * hdin[c];
      }
    }

    if (l > 0) {
      affine_t(params.data, lay, l, zbar, tmp);
      hbar = tmp;
      if (with_dot) {
        affine_t(params.data, lay, l, zdotbar, tmp);
        hdotbar = tmp;
      }
    }
  }
}

Vec student_forward(const StudentParams& params, const StudentConfig& cfg, const Vec& z,
                    double t) {
  return student_eval(params, cfg, z, t, false).x;
}

Vec student_dt_exact(const StudentParams& params, const StudentConfig& cfg, const Vec& z,
                     double t) {
  return student_eval(params, cfg, z, t, true).dxdt;
}

Vec student_backward(const StudentParams& params, const StudentConfig& cfg, const Vec& z, double t,
                     const Vec& upstream) {
  if (static_cast<int>(upstream.size()) != cfg.input_dim)
    throw std::invalid_argument("student_backward: upstream length mismatch");
  if (!all_finite(upstream)) throw std::invalid_argument("student_backward: non-finite upstream");
  const StudentEval ev = student_eval(params, cfg, z, t, false);
  Vec grad(param_count(cfg), 0.0);
  accumulate_backward(params, cfg, ev, upstream, {}, grad);
  return grad;
}

void ema_update(StudentParams& ema, const StudentParams& current, double decay) {
  if (ema.data.size() != current.data.size())
    throw std::invalid_argument("ema_update: shape mismatch");
  const double c = 1.0 - decay;
  for (std::size_t i = 0; i < ema.data.size(); ++i)
    ema.data[i] = decay * ema.data[i] + c * current.data[i];
}

}  // namespace pid
