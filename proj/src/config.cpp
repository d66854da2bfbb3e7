#include "pid/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pid/errors.hpp"

namespace pid {
namespace {

using nlohmann::json;

[[noreturn]] void throw_parse_error(const std::string& text, const nlohmann::json::exception& e,
                                    std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  throw ConfigError("config: parse error at line " + std::to_string(line) + ", column " +
                    std::to_string(col) + ": " + e.what());
}

void reject_unknown(const json& j, const std::string& section,
                    std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError("config: unknown key \"" + (section.empty() ? "" : section + ".") +
                        it.key() + "\"");
  }
}

template <typename T>
void take(const json& j, const char* key, const std::string& section, T& out,
          std::set<std::string>& user_keys) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: " + section + "." + key + ": wrong type");
  }
  user_keys.insert(section + "." + std::string(key));
}

}  // namespace

TimeGrid GridConfig::build() const {
  if (kind == "uniform") return uniform_grid(n, t_min, t_max);
  return edm_grid(n, t_min, t_max, rho);
}

void GridConfig::validate() const {
  if (kind != "edm" && kind != "uniform")
    throw ConfigError("grid.kind: \"" + kind + "\" is not one of edm, uniform");
  build();  // bounds checks live with the constructors
}

void TrainSection::validate() const {
  if (steps < 1) throw ConfigError("train.steps: must be >= 1");
  if (batch < 1) throw ConfigError("train.batch: must be >= 1");
  if (!(opt.lr > 0.0)) throw ConfigError("train.lr: must be > 0");
  if (!(opt.beta1 >= 0.0 && opt.beta1 < 1.0)) throw ConfigError("train.beta1: must be in [0, 1)");
  if (!(opt.beta2 >= 0.0 && opt.beta2 < 1.0)) throw ConfigError("train.beta2: must be in [0, 1)");
  if (!(opt.eps > 0.0)) throw ConfigError("train.eps: must be > 0");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0))
    throw ConfigError("train.ema_decay: must be in [0, 1)");
  if (log_every < 1) throw ConfigError("train.log_every: must be >= 1");
  if (ckpt_every < 0) throw ConfigError("train.ckpt_every: must be >= 0");
  if (fixed_z_count < 0) throw ConfigError("train.fixed_z_count: must be >= 0");
}

void EvalSection::validate() const {
  if (samples < 1) throw ConfigError("eval.samples: must be >= 1");
  if (samples > 8192) throw ConfigError("eval.samples: must be <= 8192 (exact-pair-sum guard)");
  if (ref_grid_n < 2) throw ConfigError("eval.ref_grid_n: must be >= 2");
}

StudentConfig ResolvedConfig::student_config() const {
  StudentConfig cfg;
  cfg.input_dim = teacher.dim;
  cfg.hidden_dims = student.hidden_dims;
  cfg.activation = student.activation;
  cfg.t_max = grid.t_max;
  cfg.sigma_data = student.sigma_data;
  cfg.embed_freqs = student.embed_freqs;
  cfg.validate();
  return cfg;
}

json ResolvedConfig::to_json() const {
  return json{
      {"teacher", teacher.to_json()},
      {"grid",
       {{"n", grid.n},
        {"rho", grid.rho},
        {"t_min", grid.t_min},
        {"t_max", grid.t_max},
        {"kind", grid.kind}}},
      {"student",
       {{"hidden_dims", student.hidden_dims},
        {"activation", student.activation},
        {"sigma_data", student.sigma_data},
        {"embed_freqs", student.embed_freqs}}},
      {"loss",
       {{"metric", to_string(loss.metric)},
        {"diff_mode", to_string(loss.diff_mode)},
        {"stop_grad", loss.stop_grad}}},
      {"train",
       {{"steps", train.steps},
        {"batch", train.batch},
        {"lr", train.opt.lr},
        {"optimizer", to_string(train.opt.kind)},
        {"beta1", train.opt.beta1},
        {"beta2", train.opt.beta2},
        {"eps", train.opt.eps},
        {"ema_decay", train.ema_decay},
        {"seed", train.seed},
        {"log_every", train.log_every},
        {"ckpt_every", train.ckpt_every},
        {"fixed_z_count", train.fixed_z_count}}},
      {"eval",
       {{"samples", eval.samples}, {"ref_grid_n", eval.ref_grid_n}, {"seed", eval.seed}}},
  };
}

ResolvedConfig ResolvedConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  reject_unknown(j, "", {"teacher", "grid", "student", "loss", "train", "eval"});
  if (!j.contains("teacher")) throw ConfigError("config: missing required section \"teacher\"");

  ResolvedConfig cfg;
  cfg.teacher = TeacherSpec::from_json(j.at("teacher"));
  cfg.user_keys.insert("teacher");

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown(g, "grid", {"n", "rho", "t_min", "t_max", "kind"});
    take(g, "n", "grid", cfg.grid.n, cfg.user_keys);
    take(g, "rho", "grid", cfg.grid.rho, cfg.user_keys);
    take(g, "t_min", "grid", cfg.grid.t_min, cfg.user_keys);
    take(g, "t_max", "grid", cfg.grid.t_max, cfg.user_keys);
    take(g, "kind", "grid", cfg.grid.kind, cfg.user_keys);
  }
  if (j.contains("student")) {
    const json& s = j.at("student");
    reject_unknown(s, "student", {"hidden_dims", "activation", "sigma_data", "embed_freqs"});
    take(s, "hidden_dims", "student", cfg.student.hidden_dims, cfg.user_keys);
    take(s, "activation", "student", cfg.student.activation, cfg.user_keys);
    take(s, "sigma_data", "student", cfg.student.sigma_data, cfg.user_keys);
    take(s, "embed_freqs", "student", cfg.student.embed_freqs, cfg.user_keys);
  }
  if (j.contains("loss")) {
    const json& l = j.at("loss");
    reject_unknown(l, "loss", {"metric", "diff_mode", "stop_grad"});
    std::string metric = to_string(cfg.loss.metric);
    std::string mode = to_string(cfg.loss.diff_mode);
    take(l, "metric", "loss", metric, cfg.user_keys);
    take(l, "diff_mode", "loss", mode, cfg.user_keys);
    take(l, "stop_grad", "loss", cfg.loss.stop_grad, cfg.user_keys);
    cfg.loss.metric = parse_metric(metric);
    cfg.loss.diff_mode = parse_diff_mode(mode);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t, "train",
                   {"steps", "batch", "lr", "optimizer", "beta1", "beta2", "eps", "ema_decay",
                    "seed", "log_every", "ckpt_every", "fixed_z_count"});
    take(t, "steps", "train", cfg.train.steps, cfg.user_keys);
    take(t, "batch", "train", cfg.train.batch, cfg.user_keys);
    take(t, "lr", "train", cfg.train.opt.lr, cfg.user_keys);
    std::string opt = to_string(cfg.train.opt.kind);
    take(t, "optimizer", "train", opt, cfg.user_keys);
    cfg.train.opt.kind = parse_opt_kind(opt);
    take(t, "beta1", "train", cfg.train.opt.beta1, cfg.user_keys);
    take(t, "beta2", "train", cfg.train.opt.beta2, cfg.user_keys);
    take(t, "eps", "train", cfg.train.opt.eps, cfg.user_keys);
    take(t, "ema_decay", "train", cfg.train.ema_decay, cfg.user_keys);
    take(t, "seed", "train", cfg.train.seed, cfg.user_keys);
    take(t, "log_every", "train", cfg.train.log_every, cfg.user_keys);
    take(t, "ckpt_every", "train", cfg.train.ckpt_every, cfg.user_keys);
    take(t, "fixed_z_count", "train", cfg.train.fixed_z_count, cfg.user_keys);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    reject_unknown(e, "eval", {"samples", "ref_grid_n", "seed"});
    take(e, "samples", "eval", cfg.eval.samples, cfg.user_keys);
    take(e, "ref_grid_n", "eval", cfg.eval.ref_grid_n, cfg.user_keys);
    take(e, "seed", "eval", cfg.eval.seed, cfg.user_keys);
  }

  cfg.teacher.validate();
  cfg.grid.validate();
  cfg.train.validate();
  cfg.eval.validate();
  cfg.student_config();  // student + cross-section consistency
  return cfg;
}

ResolvedConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw_parse_error(text, e, e.byte);
  }
  return ResolvedConfig::from_json(j);
}

ResolvedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ResolvedConfig& cfg) { return cfg.to_json().dump(2) + "\n"; }

}  // namespace pid
