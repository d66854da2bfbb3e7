#include "pid/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "pid/errors.hpp"

namespace pid {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_input(const TeacherSpec& teacher, const Vec& x, double t, double t_floor) {
  if (static_cast<int>(x.size()) != teacher.dim)
    throw std::invalid_argument("teacher: x has length " + std::to_string(x.size()) +
                                ", expected dim " + std::to_string(teacher.dim));
  if (!(t >= t_floor))
    throw std::domain_error("teacher: noise level t=" + std::to_string(t) +
                            (t_floor > 0.0 ? " must be > 0" : " must be >= 0"));
}

// Per-component log w_k + log N(x; mu_k, (sigma0_k^2 + t^2) I).
void component_log_terms(const TeacherSpec& teacher, const Vec& x, double t, Vec& out) {
  const int d = teacher.dim;
  out.resize(teacher.components.size());
  for (std::size_t k = 0; k < teacher.components.size(); ++k) {
    const auto& c = teacher.components[k];
    const double var = c.sigma0 * c.sigma0 + t * t;
    double q = 0.0;
    for (int j = 0; j < d; ++j) {
      const double r = x[j] - c.mean[j];
      q += r * r;
    }
    out[k] = std::log(c.weight) - 0.5 * d * (kLog2Pi + std::log(var)) - 0.5 * q / var;
  }
}

// Posterior responsibilities gamma_k via a stable softmax; returns log-sum-exp.
double responsibilities(const TeacherSpec& teacher, const Vec& x, double t, Vec& gamma) {
  component_log_terms(teacher, x, t, gamma);
  const double m = *std::max_element(gamma.begin(), gamma.end());
  double s = 0.0;
  for (double& g : gamma) {
    g = std::exp(g - m);
    s += g;
  }
  for (double& g : gamma) g /= s;
  return m + std::log(s);
}

}  // namespace

void TeacherSpec::validate() const {
  if (dim < 1 || dim > 64)
    throw ConfigError("teacher.dim: must be in [1, 64], got " + std::to_string(dim));
  if (components.empty()) throw ConfigError("teacher.components: must be non-empty");
  double wsum = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    const std::string path = "teacher.components[" + std::to_string(k) + "]";
    if (!(c.weight > 0.0)) throw ConfigError(path + ".weight: must be > 0");
    if (!(c.sigma0 > 0.0)) throw ConfigError(path + ".sigma0: must be > 0");
    if (static_cast<int>(c.mean.size()) != dim)
      throw ConfigError(path + ".mean: length " + std::to_string(c.mean.size()) +
                        " does not match dim " + std::to_string(dim));
    if (!all_finite(c.mean)) throw ConfigError(path + ".mean: non-finite entry");
    wsum += c.weight;
  }
  if (std::fabs(wsum - 1.0) > 1e-12)
    throw ConfigError("teacher.components: weights sum to " + std::to_string(wsum) +
                      ", expected 1 within 1e-12");
}

TeacherSpec TeacherSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("teacher: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key != "type" && key != "dim" && key != "components")
      throw ConfigError("teacher." + key + ": unknown key");
  }
  if (j.value("type", "gmm") != "gmm")
    throw ConfigError("teacher.type: only \"gmm\" is supported");
  TeacherSpec spec;
  spec.dim = j.at("dim").get<int>();
  for (const auto& cj : j.at("components")) {
    for (auto it = cj.begin(); it != cj.end(); ++it) {
      const std::string& key = it.key();
      if (key != "weight" && key != "mean" && key != "sigma0")
        throw ConfigError("teacher.components: unknown key \"" + key + "\"");
    }
    GmmComponent c;
    c.weight = cj.at("weight").get<double>();
    c.mean = cj.at("mean").get<Vec>();
    c.sigma0 = cj.at("sigma0").get<double>();
    spec.components.push_back(std::move(c));
  }
  spec.validate();
  return spec;
}

nlohmann::json TeacherSpec::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : components)
    comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"sigma0", c.sigma0}});
  return {{"type", "gmm"}, {"dim", dim}, {"components", comps}};
}

TeacherSpec TeacherSpec::single_gaussian(const Vec& mean, double sigma0) {
  TeacherSpec spec;
  spec.dim = static_cast<int>(mean.size());
  spec.components.push_back({1.0, mean, sigma0});
  spec.validate();
  return spec;
}

TeacherSpec TeacherSpec::two_modes_1d(double mu, double sigma0) {
  TeacherSpec spec;
  spec.dim = 1;
  spec.components.push_back({0.5, {mu}, sigma0});
  spec.components.push_back({0.5, {-mu}, sigma0});
  spec.validate();
  return spec;
}

TeacherSpec TeacherSpec::ring_2d(int n_modes, double radius, double sigma0) {
  TeacherSpec spec;
  spec.dim = 2;
  const double w = 1.0 / n_modes;
  for (int k = 0; k < n_modes; ++k) {
    const double phi = 2.0 * 3.14159265358979323846 * k / n_modes;
    spec.components.push_back({w, {radius * std::cos(phi), radius * std::sin(phi)}, sigma0});
  }
  // Nudge the last weight so the sum is exactly 1 in floating point.
  double wsum = 0.0;
  for (std::size_t k = 0; k + 1 < spec.components.size(); ++k) wsum += spec.components[k].weight;
  spec.components.back().weight = 1.0 - wsum;
  spec.validate();
  return spec;
}

double log_density(const TeacherSpec& teacher, const Vec& x, double t) {
  check_input(teacher, x, t, 0.0);
  Vec terms;
  component_log_terms(teacher, x, t, terms);
  const double m = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double v : terms) s += std::exp(v - m);
  return m + std::log(s);
}

Vec score(const TeacherSpec& teacher, const Vec& x, double t) {
  check_input(teacher, x, t, std::numeric_limits<double>::min());
  Vec gamma;
  responsibilities(teacher, x, t, gamma);
  Vec s(teacher.dim, 0.0);
  for (std::size_t k = 0; k < teacher.components.size(); ++k) {
    const auto& c = teacher.components[k];
    const double var = c.sigma0 * c.sigma0 + t * t;
    for (int j = 0; j < teacher.dim; ++j) s[j] += gamma[k] * (c.mean[j] - x[j]) / var;
  }
  return s;
}

Vec denoise(const TeacherSpec& teacher, const Vec& x, double t) {
  check_input(teacher, x, t, 0.0);
  if (t == 0.0) return x;  // zero-noise limit, bypasses the diverging score
  Vec gamma;
  responsibilities(teacher, x, t, gamma);
  Vec d(teacher.dim, 0.0);
  const double t2 = t * t;
  for (std::size_t k = 0; k < teacher.components.size(); ++k) {
    const auto& c = teacher.components[k];
    const double s02 = c.sigma0 * c.sigma0;
    const double var = s02 + t2;
    for (int j = 0; j < teacher.dim; ++j)
      d[j] += gamma[k] * (s02 * x[j] + t2 * c.mean[j]) / var;
  }
  return d;
}

Mat denoiser_jacobian(const TeacherSpec& teacher, const Vec& x, double t) {
  if (teacher.dim > 16)
    throw ConfigError("denoiser_jacobian: dim " + std::to_string(teacher.dim) +
                      " exceeds the cost guard (16)");
  check_input(teacher, x, t, std::numeric_limits<double>::min());
  const double h = 1e-4 * (1.0 + norm_linf(x));
  Mat jac(teacher.dim, Vec(teacher.dim, 0.0));
  Vec xp = x, xm = x;
  for (int col = 0; col < teacher.dim; ++col) {
    xp[col] = x[col] + h;
    xm[col] = x[col] - h;
    const Vec dp = denoise(teacher, xp, t);
    const Vec dm = denoise(teacher, xm, t);
    for (int row = 0; row < teacher.dim; ++row) jac[row][col] = (dp[row] - dm[row]) / (2.0 * h);
    xp[col] = x[col];
    xm[col] = x[col];
  }
  return jac;
}

std::vector<Vec> sample_data(const TeacherSpec& teacher, int n, Rng& rng) {
  std::vector<Vec> out;
  out.reserve(std::max(n, 0));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = teacher.components.size() - 1;
    for (std::size_t k = 0; k < teacher.components.size(); ++k) {
      acc += teacher.components[k].weight;
      if (u < acc) {
        pick = k;
        break;
      }
    }
    const auto& c = teacher.components[pick];
    Vec x(teacher.dim);
    for (int j = 0; j < teacher.dim; ++j) x[j] = c.mean[j] + c.sigma0 * rng.normal();
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace pid
