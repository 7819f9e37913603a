#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "deep/network.hpp"
#include "deep/training.hpp"

namespace deep {

/// Fully resolved settings of one training invocation. Every field has a
/// default; a config file overrides defaults and command-line flags override
/// the file. The saved manifest is itself a valid config file.
struct RunConfig {
  std::string task{"and"};
  std::string rule{"deep"};
  bool prune{false};
  bool compare{false};
  int runs{10};
  int epochs{2000};
  double mse_threshold{1e-2};
  Hyperparams<double> hp{};
  Index n_total{8};
  Index n_input{2};
  Index n_output{1};
  std::string out_dir{"deep_out"};

  Architecture architecture() const { return {n_total, n_input, n_output}; }

  void validate() const {
    logic_op_from_string(task);
    rule_from_string(rule);
    if (runs < 1) throw std::invalid_argument("config: runs >= 1 violated");
    if (epochs < 1) throw std::invalid_argument("config: epochs >= 1 violated");
    if (!(mse_threshold > 0)) throw std::invalid_argument("config: mse_threshold > 0 violated");
    if (n_output < 1) throw std::invalid_argument("config: n_output >= 1 violated");
    if (n_input + n_output > n_total)
      throw std::invalid_argument("config: n_input + n_output <= n_total violated");
    hp.validate();
  }
};

/// Name of the environment variable supplying the default output directory.
inline constexpr const char* kOutDirEnvVar = "DEEP_OUT";

namespace detail {

template <typename T>
T config_get(const nlohmann::json& j, const std::string& key, const char* type_name) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected " + type_name + ", got " +
                                std::string(j.type_name()));
  }
}

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["task"] = cfg.task;
  j["rule"] = cfg.rule;
  j["prune"] = cfg.prune;
  j["compare"] = cfg.compare;
  j["runs"] = cfg.runs;
  j["epochs"] = cfg.epochs;
  j["mse_threshold"] = cfg.mse_threshold;
  j["beta"] = cfg.hp.beta;
  j["step_size"] = cfg.hp.step_size;
  j["m0"] = cfg.hp.m0;
  j["m_beta"] = cfg.hp.m_beta;
  j["learning_rate"] = cfg.hp.learning_rate;
  j["l1_coeff"] = cfg.hp.l1_coeff;
  j["lambda_prune"] = cfg.hp.lambda_prune;
  j["temperature"] = cfg.hp.temperature;
  j["init_scale"] = cfg.hp.init_scale;
  j["seed"] = cfg.hp.seed;
  j["state_init"] = cfg.hp.state_init;
  j["convergence_tol"] = cfg.hp.convergence_tol;
  j["n_total"] = cfg.n_total;
  j["n_input"] = cfg.n_input;
  j["n_output"] = cfg.n_output;
  j["out_dir"] = cfg.out_dir;
  return j;
}

/// Applies a parsed JSON object onto a config, rejecting unknown keys and
/// wrong value types by name.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  using detail::config_get;
  if (!j.is_object()) throw std::invalid_argument("config: top-level JSON value must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "task") cfg.task = config_get<std::string>(value, key, "string");
    else if (key == "rule") cfg.rule = config_get<std::string>(value, key, "string");
    else if (key == "prune") cfg.prune = config_get<bool>(value, key, "boolean");
    else if (key == "compare") cfg.compare = config_get<bool>(value, key, "boolean");
    else if (key == "runs") cfg.runs = config_get<int>(value, key, "integer");
    else if (key == "epochs") cfg.epochs = config_get<int>(value, key, "integer");
    else if (key == "mse_threshold") cfg.mse_threshold = config_get<double>(value, key, "number");
    else if (key == "beta") cfg.hp.beta = config_get<double>(value, key, "number");
    else if (key == "step_size") cfg.hp.step_size = config_get<double>(value, key, "number");
    else if (key == "m0") cfg.hp.m0 = config_get<int>(value, key, "integer");
    else if (key == "m_beta") cfg.hp.m_beta = config_get<int>(value, key, "integer");
    else if (key == "learning_rate") cfg.hp.learning_rate = config_get<double>(value, key, "number");
    else if (key == "l1_coeff") cfg.hp.l1_coeff = config_get<double>(value, key, "number");
    else if (key == "lambda_prune") cfg.hp.lambda_prune = config_get<double>(value, key, "number");
    else if (key == "temperature") cfg.hp.temperature = config_get<double>(value, key, "number");
    else if (key == "init_scale") cfg.hp.init_scale = config_get<double>(value, key, "number");
    else if (key == "seed") cfg.hp.seed = config_get<std::uint64_t>(value, key, "integer");
    else if (key == "state_init") cfg.hp.state_init = config_get<double>(value, key, "number");
    else if (key == "convergence_tol") cfg.hp.convergence_tol = config_get<double>(value, key, "number");
    else if (key == "n_total") cfg.n_total = config_get<Index>(value, key, "integer");
    else if (key == "n_input") cfg.n_input = config_get<Index>(value, key, "integer");
    else if (key == "n_output") cfg.n_output = config_get<Index>(value, key, "integer");
    else if (key == "out_dir") cfg.out_dir = config_get<std::string>(value, key, "string");
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

/// Defaults, then the DEEP_OUT environment variable, then the optional file.
inline RunConfig load_config(const std::optional<std::filesystem::path>& path = std::nullopt) {
  RunConfig cfg;
  if (const char* env = std::getenv(kOutDirEnvVar); env && *env) cfg.out_dir = env;
  if (path) {
    std::ifstream is(*path);
    if (!is) throw std::runtime_error("cannot open config file: " + path->string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument("config: " + std::string(e.what()));
    }
    apply_config_json(cfg, j);
  }
  return cfg;
}

inline void save_manifest(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace deep
