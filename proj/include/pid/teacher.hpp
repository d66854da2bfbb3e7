#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pid/rng.hpp"
#include "pid/vec.hpp"

namespace pid {

struct GmmComponent {
  double weight = 1.0;
  Vec mean;
  double sigma0 = 1.0;  // isotropic std of the data component
};

// Isotropic Gaussian-mixture data distribution. Under the variance-exploding
// forward process x_t = x_0 + t * eps the noisy marginal stays a GMM with
// per-component variance sigma0^2 + t^2, so log-density, score and the
// posterior-mean denoiser are all available in closed form.
struct TeacherSpec {
  int dim = 1;
  std::vector<GmmComponent> components;

  void validate() const;  // throws ConfigError on invariant violations

  static TeacherSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Convenience builders used all over the tests and experiments.
  static TeacherSpec single_gaussian(const Vec& mean, double sigma0);
  static TeacherSpec two_modes_1d(double mu, double sigma0);
  static TeacherSpec ring_2d(int n_modes, double radius, double sigma0);
};

double log_density(const TeacherSpec& teacher, const Vec& x, double t);
Vec score(const TeacherSpec& teacher, const Vec& x, double t);
Vec denoise(const TeacherSpec& teacher, const Vec& x, double t);

// dD/dx by central finite differences, column by column. Guarded to dim <= 16.
Mat denoiser_jacobian(const TeacherSpec& teacher, const Vec& x, double t);

std::vector<Vec> sample_data(const TeacherSpec& teacher, int n, Rng& rng);

}  // namespace pid
