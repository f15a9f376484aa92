#pragma once

// Adapts NetworkEnv to the trainer's task interface.

#include <cstdint>
#include <span>
#include <vector>

#include "cellsleep/env.hpp"
#include "cellsleep/marl/trainer.hpp"
#include "cellsleep/policies.hpp"

namespace cellsleep::marl {

class NetworkTask {
 public:
  // With `auto_sm1_sleep`, the sleep component of every sampled action is
  // replaced by the Auto-SM1 rule, so only antenna switching is learned.
  NetworkTask(EnvConfig cfg, CriticVariant variant, bool auto_sm1_sleep = false)
      : env_(std::move(cfg)), variant_(variant), auto_sm1_sleep_(auto_sm1_sleep) {}

  int num_agents() const { return env_.num_bs(); }
  int obs_width() const { return kAgentObsWidth; }
  int critic_width() const { return critic_input_width(variant_, env_.num_bs()); }
  bool critic_shared() const { return variant_ == CriticVariant::kFull; }
  CriticVariant variant() const { return variant_; }

  void reset(std::uint64_t seed) { env_.reset(seed); }
  std::vector<double> observe(int c) const { return env_.observe(c); }
  std::vector<double> critic_input(int c) const { return env_.critic_input(c, variant_); }

  TaskStep step(std::span<const int> actions) {
    JointAction joint(actions.size());
    for (std::size_t c = 0; c < actions.size(); ++c) joint[c] = action_from_index(actions[c]);
    if (auto_sm1_sleep_) {
      const auto rule = auto_sm1(make_policy_observation(env_));
      for (std::size_t c = 0; c < joint.size(); ++c) joint[c].sleep_target = rule[c].sleep_target;
    }
    const StepResult r = env_.step(joint);
    return {r.reward.reward, r.done};
  }

  EpisodeSummary summary() const {
    const Metrics m = metrics(env_.episode_window());
    return {m.drop_ratio, m.avg_pc_w};
  }

  NetworkEnv& env() { return env_; }
  const NetworkEnv& env() const { return env_; }

 private:
  NetworkEnv env_;
  CriticVariant variant_;
  bool auto_sm1_sleep_;
};

static_assert(MarlTask<NetworkTask>);

}  // namespace cellsleep::marl
