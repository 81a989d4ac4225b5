#ifndef ACFLOW_CONFIG_JSON_HPP
#define ACFLOW_CONFIG_JSON_HPP

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "acflow/trainer.hpp"

namespace acflow {

inline std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kActorCritic: return "ac";
    case RunMode::kVanilla: return "vanilla";
    case RunMode::kSupervised: return "supervised";
  }
  throw std::logic_error("bad RunMode");
}

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "ac" || s == "actor-critic") return RunMode::kActorCritic;
  if (s == "vanilla") return RunMode::kVanilla;
  if (s == "supervised") return RunMode::kSupervised;
  throw std::invalid_argument("unknown mode: " + s);
}

// Flat JSON with keys mirroring TrainConfig. Unknown keys are rejected so a
// typo in a config file fails loudly.
inline nlohmann::json config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["problem"] = c.problem;
  j["dim"] = c.dim;
  j["mode"] = to_string(c.mode);
  j["lr_actor"] = c.lr_actor;
  j["lr_critic"] = c.lr_critic;
  j["dtau"] = c.dtau;
  j["iterations"] = c.iterations;
  j["batch_size"] = c.batch_size;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["eval_every"] = c.eval_every;
  j["eval_samples"] = c.eval_samples;
  j["cost_samples"] = c.cost_samples;
  j["seed"] = c.seed;
  j["hidden_width"] = c.hidden_width;
  j["num_blocks"] = c.num_blocks;
  j["num_freq"] = c.num_freq;
  j["td_rl"] = c.td_rl;
  j["lq_sigma_bar"] = c.lq_sigma_bar;
  j["aiyagari_alpha"] = c.aiyagari.alpha;
  j["aiyagari_delta"] = c.aiyagari.delta;
  j["aiyagari_sigma_z"] = c.aiyagari.sigma_z;
  j["aiyagari_sigma_a"] = c.aiyagari.sigma_a;
  return j;
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "problem") c.problem = value.get<std::string>();
    else if (key == "dim") c.dim = value.get<int>();
    else if (key == "mode") c.mode = run_mode_from_string(value.get<std::string>());
    else if (key == "lr_actor") c.lr_actor = value.get<double>();
    else if (key == "lr_critic") c.lr_critic = value.get<double>();
    else if (key == "dtau") c.dtau = value.get<double>();
    else if (key == "iterations") c.iterations = value.get<int>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "dt") c.dt = value.get<double>();
    else if (key == "horizon") c.horizon = value.get<double>();
    else if (key == "eval_every") c.eval_every = value.get<int>();
    else if (key == "eval_samples") c.eval_samples = value.get<int>();
    else if (key == "cost_samples") c.cost_samples = value.get<int>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "hidden_width") c.hidden_width = value.get<int>();
    else if (key == "num_blocks") c.num_blocks = value.get<int>();
    else if (key == "num_freq") c.num_freq = value.get<int>();
    else if (key == "td_rl") c.td_rl = value.get<bool>();
    else if (key == "lq_sigma_bar") c.lq_sigma_bar = value.get<double>();
    else if (key == "aiyagari_alpha") c.aiyagari.alpha = value.get<double>();
    else if (key == "aiyagari_delta") c.aiyagari.delta = value.get<double>();
    else if (key == "aiyagari_sigma_z") c.aiyagari.sigma_z = value.get<double>();
    else if (key == "aiyagari_sigma_a") c.aiyagari.sigma_a = value.get<double>();
    else throw std::invalid_argument("config: unknown key " + key);
  }
  return c;
}

// Table-1 presets.
inline TrainConfig preset_config(const std::string& name) {
  TrainConfig c;
  if (name == "lq1d") {
    c.problem = "lq";
    c.dim = 1;
    c.lr_actor = 0.05;
    c.lr_critic = 0.1;
    c.iterations = 200;
    c.batch_size = 500;
  } else if (name == "lq10d") {
    c.problem = "lq";
    c.dim = 10;
    c.lr_actor = 0.01;
    c.lr_critic = 0.05;
    c.iterations = 1500;
    c.batch_size = 2000;
  } else if (name == "aiyagari") {
    c.problem = "aiyagari";
    c.lr_actor = 0.01;
    c.lr_critic = 0.02;
    c.iterations = 500;
    c.batch_size = 1000;
  } else {
    throw std::invalid_argument("unknown problem preset: " + name);
  }
  return c;
}

// Content hash of the resolved config (FNV-1a over the canonical JSON dump).
inline std::string config_hash(const TrainConfig& c) {
  const std::string dump = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace acflow

#endif  // ACFLOW_CONFIG_JSON_HPP
