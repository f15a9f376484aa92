#pragma once

// Experiment configuration: one JSON document covering topology, radio,
// traffic, reward, observation scaling, timing and learning parameters.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellsleep/env.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/marl/ppo.hpp"
#include "cellsleep/topology.hpp"
#include "cellsleep/traffic.hpp"

namespace cellsleep {

using json = nlohmann::json;

struct TopologySpec {
  int num_bs = 7;
  double bs_spacing_m = 400.0;
  // A custom layout replaces the hexagonal one when positions are given.
  std::vector<traffic::Point> positions;
  std::optional<traffic::Area> area;
};

struct TrafficSpec {
  std::array<double, traffic::kNumCategories> peak_density{60.0, 120.0, 120.0};  // Mb/s/km^2
  double trough_fraction = 0.1;
  int slots_per_day = 72;
  double slot_duration_s = 1200.0;
  double day_length_s = 144.0;
  double file_bits = 3e6;
  std::string profile_csv;  // overrides the synthetic profile when set
};

struct ExperimentConfig {
  TopologySpec topology;
  radio::RadioParams radio;
  radio::SleepModeTable sleep;
  TrafficSpec traffic;
  RewardWeights reward;
  bool w_pc_explicit = false;
  ObservationScales obs;
  double episode_s = 1008.0;
  int step_ms = 1;
  int agent_interval_ms = 20;
  marl::PpoConfig ppo;
  std::uint64_t seed = 1;
  int eval_episodes = 1;
  std::string out_dir = "out";

  // The larger layout balances its higher PC with a smaller weight unless
  // the weight was set explicitly.
  RewardWeights effective_reward() const {
    RewardWeights w = reward;
    if (!w_pc_explicit && topology.positions.empty() && topology.num_bs == 19) w.w_pc = 0.4;
    return w;
  }

  Topology build_topology() const {
    if (!topology.positions.empty()) {
      traffic::Area a = topology.area.value_or(traffic::Area{});
      return make_custom_topology(topology.positions, a, topology.bs_spacing_m);
    }
    return make_hex_topology(topology.num_bs, topology.bs_spacing_m);
  }

  traffic::TrafficProfile build_profile() const {
    if (!traffic.profile_csv.empty()) return traffic::load_profile_csv(traffic.profile_csv, traffic.slot_duration_s);
    return traffic::synth_profile(traffic.peak_density, traffic.trough_fraction, traffic.slots_per_day,
                                  traffic.slot_duration_s);
  }

  EnvConfig env_config() const {
    EnvConfig e;
    e.topology = build_topology();
    e.radio = radio;
    e.sleep = sleep;
    e.profile = build_profile();
    e.day_length_s = traffic.day_length_s;
    e.file_bits = traffic.file_bits;
    e.reward = effective_reward();
    e.obs = obs;
    e.episode_s = episode_s;
    e.step_ms = step_ms;
    e.agent_interval_ms = agent_interval_ms;
    e.validate();
    return e;
  }

  void validate() const {
    env_config();
    if (ppo.epochs_per_episode < 1) throw ConfigError("must be >= 1", "/ppo/epochs_per_episode");
    if (ppo.minibatches < 1) throw ConfigError("must be >= 1", "/ppo/minibatches");
    if (ppo.episodes < 0) throw ConfigError("must be >= 0", "/ppo/episodes");
    if (ppo.hidden.empty()) throw ConfigError("needs at least one hidden layer", "/ppo/hidden");
    if (eval_episodes < 1) throw ConfigError("must be >= 1", "/eval_episodes");
  }
};

namespace detail {

// Reads `key` from object `j` into `out` if present; type errors carry the
// JSON path.
template <class T>
void read(const json& j, const char* key, T& out, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("wrong type: ") + e.what(), path + "/" + key);
  }
}

inline const json& section(const json& j, const char* key, const std::string& path) {
  static const json empty = json::object();
  auto it = j.find(key);
  if (it == j.end()) return empty;
  if (!it->is_object()) throw ConfigError("must be an object", path + "/" + key);
  return *it;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object", "");
  ExperimentConfig c;
  using detail::read;
  using detail::section;

  const json& topo = section(j, "topology", "");
  read(topo, "num_bs", c.topology.num_bs, "/topology");
  read(topo, "bs_spacing_m", c.topology.bs_spacing_m, "/topology");
  if (auto it = topo.find("positions"); it != topo.end()) {
    if (!it->is_array()) throw ConfigError("must be an array of [x, y]", "/topology/positions");
    for (const auto& p : *it) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ConfigError("must be an array of [x, y]", "/topology/positions");
      c.topology.positions.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  }
  if (topo.contains("area")) {
    const json& a = section(topo, "area", "/topology");
    traffic::Area area;
    read(a, "x_min", area.x_min, "/topology/area");
    read(a, "x_max", area.x_max, "/topology/area");
    read(a, "y_min", area.y_min, "/topology/area");
    read(a, "y_max", area.y_max, "/topology/area");
    c.topology.area = area;
  }

  const json& r = section(j, "radio", "");
  read(r, "bandwidth_hz", c.radio.bandwidth_hz, "/radio");
  read(r, "carrier_freq_ghz", c.radio.carrier_freq_ghz, "/radio");
  read(r, "noise_psd_db", c.radio.noise_psd_db, "/radio");
  read(r, "noise_figure_db", c.radio.noise_figure_db, "/radio");
  read(r, "shadow_sigma_db", c.radio.shadow_sigma_db, "/radio");
  read(r, "pa_tx_power_w", c.radio.pa_tx_power_w, "/radio");
  read(r, "p_fixed_w", c.radio.p_fixed_w, "/radio");
  read(r, "pa_efficiency", c.radio.pa_efficiency, "/radio");
  read(r, "bb_coeff_m_w", c.radio.bb_coeff_m_w, "/radio");
  read(r, "bb_coeff_k_w", c.radio.bb_coeff_k_w, "/radio");
  read(r, "bs_height_m", c.radio.bs_height_m, "/radio");
  read(r, "ue_height_m", c.radio.ue_height_m, "/radio");
  read(r, "m_min", c.radio.m_min, "/radio");
  read(r, "m_max", c.radio.m_max, "/radio");
  read(r, "antenna_step", c.radio.antenna_step, "/radio");

  const json& s = section(j, "sleep_modes", "");
  read(s, "latency_ms", c.sleep.latency_ms, "/sleep_modes");
  read(s, "discount", c.sleep.discount, "/sleep_modes");

  const json& t = section(j, "traffic", "");
  read(t, "peak_density", c.traffic.peak_density, "/traffic");
  read(t, "trough_fraction", c.traffic.trough_fraction, "/traffic");
  read(t, "slots_per_day", c.traffic.slots_per_day, "/traffic");
  read(t, "slot_duration_s", c.traffic.slot_duration_s, "/traffic");
  read(t, "day_length_s", c.traffic.day_length_s, "/traffic");
  read(t, "file_bits", c.traffic.file_bits, "/traffic");
  read(t, "profile_csv", c.traffic.profile_csv, "/traffic");

  const json& w = section(j, "reward", "");
  read(w, "w_qos", c.reward.w_qos, "/reward");
  read(w, "phi", c.reward.phi, "/reward");
  if (w.contains("w_pc")) {
    read(w, "w_pc", c.reward.w_pc, "/reward");
    c.w_pc_explicit = true;
  }

  const json& o = section(j, "observation", "");
  read(o, "ue_cap", c.obs.ue_cap, "/observation");
  read(o, "sinr_ref", c.obs.sinr_ref, "/observation");

  const json& sim = section(j, "sim", "");
  read(sim, "episode_s", c.episode_s, "/sim");
  read(sim, "step_ms", c.step_ms, "/sim");
  read(sim, "agent_interval_ms", c.agent_interval_ms, "/sim");

  const json& p = section(j, "ppo", "");
  read(p, "gamma", c.ppo.gamma, "/ppo");
  read(p, "gae_lambda", c.ppo.gae_lambda, "/ppo");
  read(p, "clip_eps", c.ppo.clip_eps, "/ppo");
  read(p, "entropy_coeff", c.ppo.entropy_coeff, "/ppo");
  read(p, "huber_delta", c.ppo.huber_delta, "/ppo");
  read(p, "actor_lr", c.ppo.actor_lr, "/ppo");
  read(p, "critic_lr", c.ppo.critic_lr, "/ppo");
  read(p, "epochs_per_episode", c.ppo.epochs_per_episode, "/ppo");
  read(p, "minibatches", c.ppo.minibatches, "/ppo");
  read(p, "episodes", c.ppo.episodes, "/ppo");
  read(p, "hidden", c.ppo.hidden, "/ppo");
  read(p, "normalize_advantages", c.ppo.normalize_advantages, "/ppo");
  read(p, "chunk_rows", c.ppo.chunk_rows, "/ppo");
  read(p, "checkpoint_every", c.ppo.checkpoint_every, "/ppo");

  read(j, "seed", c.seed, "");
  read(j, "eval_episodes", c.eval_episodes, "");
  read(j, "out_dir", c.out_dir, "");

  c.ppo.agent_interval_ms = c.agent_interval_ms;
  c.ppo.batch_steps = std::llround(c.episode_s * 1000.0) / std::max(c.agent_interval_ms, 1);
  c.validate();
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["topology"] = {{"num_bs", c.topology.num_bs}, {"bs_spacing_m", c.topology.bs_spacing_m}};
  if (!c.topology.positions.empty()) {
    json pos = json::array();
    for (const auto& p : c.topology.positions) pos.push_back({p.x, p.y});
    j["topology"]["positions"] = pos;
  }
  if (c.topology.area) {
    const auto& a = *c.topology.area;
    j["topology"]["area"] = {{"x_min", a.x_min}, {"x_max", a.x_max}, {"y_min", a.y_min}, {"y_max", a.y_max}};
  }
  const auto& r = c.radio;
  j["radio"] = {{"bandwidth_hz", r.bandwidth_hz},   {"carrier_freq_ghz", r.carrier_freq_ghz},
                {"noise_psd_db", r.noise_psd_db},   {"noise_figure_db", r.noise_figure_db},
                {"shadow_sigma_db", r.shadow_sigma_db}, {"pa_tx_power_w", r.pa_tx_power_w},
                {"p_fixed_w", r.p_fixed_w},         {"pa_efficiency", r.pa_efficiency},
                {"bb_coeff_m_w", r.bb_coeff_m_w},   {"bb_coeff_k_w", r.bb_coeff_k_w},
                {"bs_height_m", r.bs_height_m},     {"ue_height_m", r.ue_height_m},
                {"m_min", r.m_min},                 {"m_max", r.m_max},
                {"antenna_step", r.antenna_step}};
  j["sleep_modes"] = {{"latency_ms", c.sleep.latency_ms}, {"discount", c.sleep.discount}};
  const auto& t = c.traffic;
  j["traffic"] = {{"peak_density", t.peak_density}, {"trough_fraction", t.trough_fraction},
                  {"slots_per_day", t.slots_per_day}, {"slot_duration_s", t.slot_duration_s},
                  {"day_length_s", t.day_length_s},   {"file_bits", t.file_bits}};
  if (!t.profile_csv.empty()) j["traffic"]["profile_csv"] = t.profile_csv;
  j["reward"] = {{"w_qos", c.reward.w_qos}, {"phi", c.reward.phi}};
  if (c.w_pc_explicit) j["reward"]["w_pc"] = c.reward.w_pc;
  j["observation"] = {{"ue_cap", c.obs.ue_cap}, {"sinr_ref", c.obs.sinr_ref}};
  j["sim"] = {{"episode_s", c.episode_s}, {"step_ms", c.step_ms}, {"agent_interval_ms", c.agent_interval_ms}};
  const auto& p = c.ppo;
  j["ppo"] = {{"gamma", p.gamma},
              {"gae_lambda", p.gae_lambda},
              {"clip_eps", p.clip_eps},
              {"entropy_coeff", p.entropy_coeff},
              {"huber_delta", p.huber_delta},
              {"actor_lr", p.actor_lr},
              {"critic_lr", p.critic_lr},
              {"epochs_per_episode", p.epochs_per_episode},
              {"minibatches", p.minibatches},
              {"episodes", p.episodes},
              {"hidden", p.hidden},
              {"normalize_advantages", p.normalize_advantages},
              {"chunk_rows", p.chunk_rows},
              {"checkpoint_every", p.checkpoint_every}};
  j["seed"] = c.seed;
  j["eval_episodes"] = c.eval_episodes;
  j["out_dir"] = c.out_dir;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace cellsleep
