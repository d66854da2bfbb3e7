#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "pid/checkpoint.hpp"
#include "pid/errors.hpp"
#include "pid/evaluation.hpp"
#include "pid/io.hpp"
#include "pid/loss.hpp"
#include "pid/trainer.hpp"

namespace py = pybind11;
using namespace pid;

PYBIND11_MODULE(_core, m) {
  m.doc() = "physics-informed distillation of probability-flow ODE teachers";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &Rng::uniform)
      .def("normal", &Rng::normal)
      .def("normal_vec", &Rng::normal_vec, py::arg("dim"), py::arg("scale") = 1.0)
      .def("state", &Rng::state)
      .def("set_state", &Rng::set_state);

  py::class_<TeacherSpec>(m, "TeacherSpec")
      .def_static(
          "from_json",
          [](const std::string& text) {
            return TeacherSpec::from_json(nlohmann::json::parse(text));
          },
          py::arg("json_text"))
      .def_static("single_gaussian", &TeacherSpec::single_gaussian, py::arg("mean"),
                  py::arg("sigma0"))
      .def_static("two_modes_1d", &TeacherSpec::two_modes_1d, py::arg("mu"), py::arg("sigma0"))
      .def_static("ring_2d", &TeacherSpec::ring_2d, py::arg("n_modes"), py::arg("radius"),
                  py::arg("sigma0"))
      .def_readonly("dim", &TeacherSpec::dim)
      .def("to_json", [](const TeacherSpec& t) { return t.to_json().dump(); });

  m.def("log_density", &log_density, py::arg("teacher"), py::arg("x"), py::arg("t"));
  m.def("score", &score, py::arg("teacher"), py::arg("x"), py::arg("t"));
  m.def("denoise", &denoise, py::arg("teacher"), py::arg("x"), py::arg("t"));
  m.def("denoiser_jacobian", &denoiser_jacobian, py::arg("teacher"), py::arg("x"), py::arg("t"));
  m.def("sample_data", &sample_data, py::arg("teacher"), py::arg("n"), py::arg("rng"));

  py::class_<TimeGrid>(m, "TimeGrid")
      .def_readonly("times", &TimeGrid::times)
      .def_readonly("t_min", &TimeGrid::t_min)
      .def_readonly("t_max", &TimeGrid::t_max)
      .def_property_readonly("n", &TimeGrid::n)
      .def("dt_max", &TimeGrid::dt_max);
  m.def("edm_grid", &edm_grid, py::arg("n"), py::arg("t_min") = 0.002, py::arg("t_max") = 80.0,
        py::arg("rho") = 7.0);
  m.def("uniform_grid", &uniform_grid, py::arg("n"), py::arg("t_min") = 0.002,
        py::arg("t_max") = 80.0);
  m.def("sample_index", &sample_index, py::arg("grid"), py::arg("rng"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("z", &Trajectory::z)
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states);
  m.def("ode_rhs", &ode_rhs, py::arg("teacher"), py::arg("x"), py::arg("t"));
  m.def("euler_solve", &euler_solve, py::arg("teacher"), py::arg("grid"), py::arg("z"));
  m.def("heun_solve", &heun_solve, py::arg("teacher"), py::arg("grid"), py::arg("z"));
  m.def("closed_form_single_gaussian", &closed_form_single_gaussian, py::arg("mu"),
        py::arg("sigma0"), py::arg("z"), py::arg("t"), py::arg("t_max"));

  py::class_<StudentConfig>(m, "StudentConfig")
      .def(py::init<>())
      .def_readwrite("input_dim", &StudentConfig::input_dim)
      .def_readwrite("hidden_dims", &StudentConfig::hidden_dims)
      .def_readwrite("activation", &StudentConfig::activation)
      .def_readwrite("t_max", &StudentConfig::t_max)
      .def_readwrite("sigma_data", &StudentConfig::sigma_data)
      .def_readwrite("embed_freqs", &StudentConfig::embed_freqs);
  py::class_<StudentParams>(m, "StudentParams")
      .def(py::init<>())
      .def_readwrite("data", &StudentParams::data);
  py::class_<SkipCoeffs>(m, "SkipCoeffs")
      .def_readonly("c_skip", &SkipCoeffs::c_skip)
      .def_readonly("c_out", &SkipCoeffs::c_out)
      .def_readonly("c_in", &SkipCoeffs::c_in)
      .def_readonly("c_noise", &SkipCoeffs::c_noise);

  m.def("param_count", &param_count, py::arg("config"));
  m.def("init_params", &init_params, py::arg("config"), py::arg("rng"));
  m.def("skip_coeffs", &skip_coeffs, py::arg("t"), py::arg("config"));
  m.def("student_forward", &student_forward, py::arg("params"), py::arg("config"), py::arg("z"),
        py::arg("t"));
  m.def("student_dt_exact", &student_dt_exact, py::arg("params"), py::arg("config"), py::arg("z"),
        py::arg("t"));
  m.def("student_backward", &student_backward, py::arg("params"), py::arg("config"), py::arg("z"),
        py::arg("t"), py::arg("upstream"));
  m.def("ema_update", &ema_update, py::arg("ema"), py::arg("current"), py::arg("decay"));

  m.def(
      "distance",
      [](const std::string& metric, const Vec& a, const Vec& b) {
        return distance(parse_metric(metric), a, b);
      },
      py::arg("metric"), py::arg("a"), py::arg("b"));
  m.def("numerical_dt_upwind", &numerical_dt_upwind, py::arg("x_i"), py::arg("x_j"),
        py::arg("t_i"), py::arg("t_j"));
  m.def(
      "pid_residual",
      [](const StudentParams& params, const StudentConfig& cfg, const TeacherSpec& teacher,
         const TimeGrid& grid, int i, const Vec& z, const std::string& mode,
         const std::string& metric, bool stop_grad) {
        const ResidualResult r = pid_residual(
            params, cfg, teacher, grid, i, z, parse_diff_mode(mode), parse_metric(metric),
            stop_grad);
        return std::make_pair(r.loss, r.grad);
      },
      py::arg("params"), py::arg("config"), py::arg("teacher"), py::arg("grid"), py::arg("i"),
      py::arg("z"), py::arg("mode") = "upwind", py::arg("metric") = "squared_l2",
      py::arg("stop_grad") = true);

  py::class_<LogRecord>(m, "LogRecord")
      .def_readonly("step", &LogRecord::step)
      .def_readonly("loss", &LogRecord::loss)
      .def_readonly("grad_norm", &LogRecord::grad_norm)
      .def_readonly("wall_ms", &LogRecord::wall_ms);
  py::class_<ResolvedConfig>(m, "ResolvedConfig")
      .def_static(
          "from_json", [](const std::string& text) { return parse_config(text); },
          py::arg("json_text"))
      .def("to_json", [](const ResolvedConfig& c) { return dump_config(c); })
      .def("student_config", &ResolvedConfig::student_config)
      .def("build_grid", [](const ResolvedConfig& c) { return c.grid.build(); })
      .def_property_readonly("teacher", [](const ResolvedConfig& c) { return c.teacher; })
      .def("is_user_set", &ResolvedConfig::is_user_set);
  m.def("load_config", &load_config, py::arg("path"));

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("ema", &TrainResult::ema)
      .def_property_readonly("log", [](const TrainResult& r) { return r.log.records; });
  m.def(
      "train", [](const ResolvedConfig& cfg) { return train(cfg); }, py::arg("config"),
      py::call_guard<py::gil_scoped_release>());
  m.def("single_step_sample", &single_step_sample, py::arg("ema"), py::arg("config"),
        py::arg("grid"), py::arg("z"));

  py::class_<Checkpoint>(m, "Checkpoint")
      .def(py::init<>())
      .def_readwrite("student_cfg", &Checkpoint::student_cfg)
      .def_readwrite("params", &Checkpoint::params)
      .def_readwrite("ema", &Checkpoint::ema)
      .def_readwrite("step", &Checkpoint::step)
      .def_readwrite("rng_state", &Checkpoint::rng_state);
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("checkpoint"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def("energy_distance", &energy_distance, py::arg("a"), py::arg("b"));
  m.def("student_samples", &student_samples, py::arg("ema"), py::arg("config"), py::arg("grid"),
        py::arg("n"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def("heun_samples", &heun_samples, py::arg("teacher"), py::arg("ref_grid"), py::arg("n"),
        py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  py::class_<TrajectoryErrorReport>(m, "TrajectoryErrorReport")
      .def_readonly("times", &TrajectoryErrorReport::times)
      .def_readonly("mean_per_t", &TrajectoryErrorReport::mean_per_t)
      .def_readonly("max_per_t", &TrajectoryErrorReport::max_per_t)
      .def_readonly("sup", &TrajectoryErrorReport::sup);
  m.def(
      "trajectory_error_vs_euler",
      [](const StudentParams& params, const StudentConfig& cfg, const TeacherSpec& teacher,
         const TimeGrid& grid, const std::vector<std::uint64_t>& seeds) {
        return trajectory_error(params, cfg, teacher, grid, seeds);
      },
      py::arg("params"), py::arg("config"), py::arg("teacher"), py::arg("grid"), py::arg("seeds"));
  py::class_<SlopeFit>(m, "SlopeFit")
      .def_readonly("slope", &SlopeFit::slope)
      .def_readonly("intercept", &SlopeFit::intercept)
      .def_readonly("max_residual", &SlopeFit::max_residual);
  py::class_<LemmaScalingResult>(m, "LemmaScalingResult")
      .def_readonly("n_values", &LemmaScalingResult::n_values)
      .def_readonly("dt_max", &LemmaScalingResult::dt_max)
      .def_readonly("sup_err", &LemmaScalingResult::sup_err)
      .def_readonly("fit", &LemmaScalingResult::fit);
  m.def("lemma_scaling_check", &lemma_scaling_check, py::arg("teacher"), py::arg("n_values"),
        py::arg("n_seeds") = 4, py::arg("seed_base") = 42, py::arg("t_min") = 0.002,
        py::arg("t_max") = 80.0);

  m.attr("__version__") = "0.1.0";
}
