#pragma once

// Controllers that map an observation snapshot to a joint action.

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellsleep/env.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/marl/mlp.hpp"
#include "cellsleep/marl/ppo.hpp"

namespace cellsleep {

enum class PolicyKind { kAlwaysOn, kAutoSm1, kRandom, kMappo };

inline PolicyKind parse_policy_kind(const std::string& s) {
  if (s == "always-on") return PolicyKind::kAlwaysOn;
  if (s == "auto-sm1") return PolicyKind::kAutoSm1;
  if (s == "random") return PolicyKind::kRandom;
  if (s == "mappo") return PolicyKind::kMappo;
  throw ConfigError("unknown policy '" + s + "'", "/policy");
}

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kAlwaysOn: return "always-on";
    case PolicyKind::kAutoSm1: return "auto-sm1";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kMappo: return "mappo";
  }
  return "?";
}

// Everything a controller may look at for one decision.
struct PolicyObservation {
  std::vector<std::vector<double>> agents;  // per-BS observation vectors
  std::vector<BsView> bs;
};

inline PolicyObservation make_policy_observation(const NetworkEnv& env) {
  PolicyObservation o;
  o.agents.reserve(env.num_bs());
  for (int c = 0; c < env.num_bs(); ++c) o.agents.push_back(env.observe(c));
  o.bs = env.bs_views();
  return o;
}

// Keep every BS awake and grow towards the full antenna array.
inline JointAction always_on(const PolicyObservation& obs) {
  return JointAction(obs.agents.size(), AgentAction{+1, 0});
}

// Highest-probability action of the shared actor for each agent.
inline std::vector<int> mappo_greedy(const marl::Mlp& actor, const PolicyObservation& obs) {
  std::vector<int> out;
  out.reserve(obs.agents.size());
  for (const auto& o : obs.agents) {
    const marl::Vector logits = actor.forward_one(Eigen::Map<const marl::Vector>(o.data(), o.size()));
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

// A BS with nothing to serve and no UE in its coverage goes to sleep level 1;
// otherwise it is (re)activated. Coverage of a UE is its strongest-gain BS.
// Antennas stay put unless a trained actor supplies the antenna component.
inline JointAction auto_sm1(const PolicyObservation& obs, const marl::Mlp* antenna_actor = nullptr) {
  JointAction out(obs.bs.size());
  std::vector<int> learned;
  if (antenna_actor) learned = mappo_greedy(*antenna_actor, obs);
  for (std::size_t c = 0; c < obs.bs.size(); ++c) {
    const BsView& v = obs.bs[c];
    out[c].sleep_target = (v.served == 0 && v.coverage == 0) ? 1 : 0;
    out[c].antenna_delta = antenna_actor ? action_from_index(learned[c]).antenna_delta : 0;
  }
  return out;
}

template <class Rng>
JointAction random_policy(std::size_t num_bs, Rng& rng) {
  std::uniform_int_distribution<int> u(0, kNumActions - 1);
  JointAction out(num_bs);
  for (auto& a : out) a = action_from_index(u(rng));
  return out;
}

// Samples (or takes the mode of) the shared actor independently per agent.
template <class Rng>
JointAction mappo_policy(const marl::Mlp& actor, const PolicyObservation& obs, Rng& rng, bool greedy) {
  if (actor.input_width() != kAgentObsWidth || actor.output_width() != kNumActions)
    throw ModelMismatch("actor widths " + std::to_string(actor.input_width()) + "->" +
                        std::to_string(actor.output_width()) + " do not match observation/action spaces");
  JointAction out;
  out.reserve(obs.agents.size());
  if (greedy) {
    for (int idx : mappo_greedy(actor, obs)) out.push_back(action_from_index(idx));
    return out;
  }
  for (const auto& o : obs.agents) {
    const marl::Vector p = marl::policy_distribution(actor, Eigen::Map<const marl::Vector>(o.data(), o.size()));
    out.push_back(action_from_index(marl::sample_categorical(p, rng)));
  }
  return out;
}

// A configured controller.
class Policy {
 public:
  explicit Policy(PolicyKind kind, std::optional<marl::Mlp> actor = std::nullopt, bool greedy = true)
      : kind_(kind), actor_(std::move(actor)), greedy_(greedy) {
    if (kind_ == PolicyKind::kMappo && !actor_) throw ConfigError("mappo policy needs a model", "/model");
  }

  PolicyKind kind() const { return kind_; }
  std::string name() const { return to_string(kind_); }

  template <class Rng>
  JointAction act(const PolicyObservation& obs, Rng& rng) const {
    switch (kind_) {
      case PolicyKind::kAlwaysOn: return always_on(obs);
      case PolicyKind::kAutoSm1: return auto_sm1(obs, actor_ ? &*actor_ : nullptr);
      case PolicyKind::kRandom: return random_policy(obs.agents.size(), rng);
      case PolicyKind::kMappo: return mappo_policy(*actor_, obs, rng, greedy_);
    }
    throw ContractViolation("unknown policy kind");
  }

 private:
  PolicyKind kind_;
  std::optional<marl::Mlp> actor_;
  bool greedy_;
};

}  // namespace cellsleep
