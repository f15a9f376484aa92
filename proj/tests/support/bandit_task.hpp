#pragma once

// A contextless multi-armed bandit with the trainer's task interface. Every
// agent earns reward 1 for `rewarded_action` and 0 otherwise; the shared
// step reward is the agents' mean.

#include <cstdint>
#include <span>
#include <vector>

#include "cellsleep/marl/trainer.hpp"

namespace cellsleep::support {

class BanditTask {
 public:
  BanditTask(int num_agents, int num_actions, int rewarded_action, int steps_per_episode)
      : agents_(num_agents), actions_(num_actions), rewarded_(rewarded_action), horizon_(steps_per_episode) {}

  int num_agents() const { return agents_; }
  int obs_width() const { return 1; }
  int critic_width() const { return 1; }
  bool critic_shared() const { return true; }
  int num_actions() const { return actions_; }

  void reset(std::uint64_t) {
    t_ = 0;
    hits_ = 0;
    pulls_ = 0;
  }
  std::vector<double> observe(int) const { return {1.0}; }
  std::vector<double> critic_input(int) const { return {1.0}; }

  marl::TaskStep step(std::span<const int> actions) {
    double r = 0.0;
    for (int a : actions) {
      r += (a == rewarded_) ? 1.0 : 0.0;
      hits_ += (a == rewarded_);
      ++pulls_;
    }
    ++t_;
    return {r / static_cast<double>(actions.size()), t_ >= horizon_};
  }

  marl::EpisodeSummary summary() const {
    return {1.0 - static_cast<double>(hits_) / static_cast<double>(pulls_), 0.0};
  }

 private:
  int agents_;
  int actions_;
  int rewarded_;
  int horizon_;
  int t_ = 0;
  std::int64_t hits_ = 0;
  std::int64_t pulls_ = 0;
};

static_assert(marl::MarlTask<BanditTask>);

}  // namespace cellsleep::support
