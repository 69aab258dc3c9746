#include "lfr/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lfr/error.hpp"

namespace lfr {

std::string_view to_string(SolveMode m) {
  return m == SolveMode::supervised ? "supervised" : "measurement";
}

void SolverConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) throw ConfigError(std::string(name) + " must be positive");
  };
  auto non_negative = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError(std::string(name) + " must be >= 0");
  };
  non_negative(lambda_dc, "lambda_dc");
  non_negative(lambda_tv, "lambda_tv");
  positive(d_max, "d_max");
  positive(step_size, "step_size");
  positive(robust_eps, "robust_eps");
  if (pyramid_levels < 1) throw ConfigError("pyramid_levels must be >= 1");
  if (iters_per_level < 1) throw ConfigError("iters_per_level must be >= 1");
}

SolverConfig parse_solver_config(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("solver config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("solver config must be a JSON object");

  auto as_int = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("solver config field '" + key + "' must be an integer");
    return v.get<int>();
  };
  auto as_number = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("solver config field '" + key + "' must be a number");
    return v.get<double>();
  };

  SolverConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "lambda_dc") cfg.lambda_dc = as_number(value, key);
      else if (key == "lambda_tv") cfg.lambda_tv = as_number(value, key);
      else if (key == "d_max") cfg.d_max = as_number(value, key);
      else if (key == "pyramid_levels") cfg.pyramid_levels = as_int(value, key);
      else if (key == "iters_per_level") cfg.iters_per_level = as_int(value, key);
      else if (key == "step_size") cfg.step_size = as_number(value, key);
      else if (key == "robust_eps") cfg.robust_eps = as_number(value, key);
      else if (key == "multi_start_signs") cfg.multi_start_signs = value.get<bool>();
      else if (key == "seed") {
        if (!value.is_number_unsigned()) throw ConfigError("solver config field 'seed' must be a non-negative integer");
        cfg.seed = value.get<std::uint64_t>();
      }
      else if (key == "mode") {
        const auto m = value.get<std::string>();
        if (m == "supervised") cfg.mode = SolveMode::supervised;
        else if (m == "measurement") cfg.mode = SolveMode::measurement;
        else throw ConfigError("unknown solver mode '" + m + "'");
      } else {
        throw ConfigError("unknown solver config field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::type_error& e) {
    throw ConfigError(std::string("solver config field has the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SolverConfig load_solver_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open solver config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_solver_config(ss.str());
}

std::string to_json(const SolverConfig& cfg) {
  nlohmann::ordered_json j;
  j["lambda_dc"] = cfg.lambda_dc;
  j["lambda_tv"] = cfg.lambda_tv;
  j["d_max"] = cfg.d_max;
  j["pyramid_levels"] = cfg.pyramid_levels;
  j["iters_per_level"] = cfg.iters_per_level;
  j["step_size"] = cfg.step_size;
  j["robust_eps"] = cfg.robust_eps;
  j["multi_start_signs"] = cfg.multi_start_signs;
  j["seed"] = cfg.seed;
  j["mode"] = std::string(to_string(cfg.mode));
  return j.dump();
}

}  // namespace lfr
