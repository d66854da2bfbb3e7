#include "pid/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "pid/errors.hpp"
#include "pid/io.hpp"

namespace pid {
namespace {

using nlohmann::json;

json params_to_nested(const StudentParams& p, const ParamLayout& lay) {
  json out = json::array();
  for (int l = 0; l < lay.layers(); ++l) {
    const int rows = lay.dims[l + 1];
    const int cols = lay.dims[l];
    json w = json::array();
    for (int r = 0; r < rows; ++r) {
      json row = json::array();
      for (int c = 0; c < cols; ++c)
        row.push_back(p.data[lay.w_off[l] + static_cast<std::size_t>(r) * cols + c]);
      w.push_back(std::move(row));
    }
    out.push_back(std::move(w));
    json b = json::array();
    for (int r = 0; r < rows; ++r) b.push_back(p.data[lay.b_off[l] + r]);
    out.push_back(std::move(b));
  }
  return out;
}

StudentParams params_from_nested(const json& j, const ParamLayout& lay) {
  StudentParams p;
  p.data.assign(lay.total, 0.0);
  if (!j.is_array() || static_cast<int>(j.size()) != 2 * lay.layers())
    throw ConfigError("checkpoint: params has wrong layer count");
  for (int l = 0; l < lay.layers(); ++l) {
    const int rows = lay.dims[l + 1];
    const int cols = lay.dims[l];
    const json& w = j.at(2 * l);
    const json& b = j.at(2 * l + 1);
    if (static_cast<int>(w.size()) != rows || static_cast<int>(b.size()) != rows)
      throw ConfigError("checkpoint: layer " + std::to_string(l) + " shape mismatch");
    for (int r = 0; r < rows; ++r) {
      const json& row = w.at(r);
      if (static_cast<int>(row.size()) != cols)
        throw ConfigError("checkpoint: layer " + std::to_string(l) + " row width mismatch");
      for (int c = 0; c < cols; ++c)
        p.data[lay.w_off[l] + static_cast<std::size_t>(r) * cols + c] = row.at(c).get<double>();
      p.data[lay.b_off[l] + r] = b.at(r).get<double>();
    }
  }
  return p;
}

json student_cfg_to_json(const StudentConfig& cfg) {
  return {{"input_dim", cfg.input_dim},   {"hidden_dims", cfg.hidden_dims},
          {"activation", cfg.activation}, {"t_max", cfg.t_max},
          {"sigma_data", cfg.sigma_data}, {"embed_freqs", cfg.embed_freqs}};
}

StudentConfig student_cfg_from_json(const json& j) {
  StudentConfig cfg;
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  cfg.activation = j.at("activation").get<std::string>();
  cfg.t_max = j.at("t_max").get<double>();
  cfg.sigma_data = j.at("sigma_data").get<double>();
  cfg.embed_freqs = j.value("embed_freqs", 0);
  cfg.validate();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const ParamLayout lay = ParamLayout::make(ckpt.student_cfg);
  json j{{"version", ckpt.version},
         {"config", student_cfg_to_json(ckpt.student_cfg)},
         {"params", params_to_nested(ckpt.params, lay)},
         {"ema_params", params_to_nested(ckpt.ema, lay)},
         {"step", ckpt.step},
         {"rng_state", ckpt.rng_state},
         {"opt_state", {{"m", ckpt.opt.m}, {"v", ckpt.opt.v}, {"steps", ckpt.opt.steps}}}};
  write_file_atomic(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("checkpoint: parse error in \"" + path + "\": " + e.what());
  }
  Checkpoint ckpt;
  const int version = j.value("version", -1);
  if (version != 1)
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version) +
                      " (expected 1)");
  try {
    ckpt.student_cfg = student_cfg_from_json(j.at("config"));
    const ParamLayout lay = ParamLayout::make(ckpt.student_cfg);
    ckpt.params = params_from_nested(j.at("params"), lay);
    ckpt.ema = params_from_nested(j.at("ema_params"), lay);
    ckpt.step = j.at("step").get<long>();
    ckpt.rng_state = j.value("rng_state", "");
    if (j.contains("opt_state")) {
      ckpt.opt.m = j["opt_state"].at("m").get<Vec>();
      ckpt.opt.v = j["opt_state"].at("v").get<Vec>();
      ckpt.opt.steps = j["opt_state"].at("steps").get<long>();
    } else {
      ckpt.opt.reset(lay.total);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint: malformed \"" + path + "\": " + e.what());
  }
  return ckpt;
}

}  // namespace pid
