#pragma once

// Shared-actor, centralized-critic training loop over any multi-agent task:
// decentralized sampling during collection, full-batch updates afterwards.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cellsleep/errors.hpp"
#include "cellsleep/marl/mlp.hpp"
#include "cellsleep/marl/ppo.hpp"

namespace cellsleep::marl {

struct TaskStep {
  double reward = 0.0;  // shared by all agents
  bool done = false;
};

struct EpisodeSummary {
  std::optional<double> drop_ratio;
  double pc_w = 0.0;
};

// A cooperative task with homogeneous agents and a shared reward.
template <class T>
concept MarlTask = requires(T t, const T ct, std::uint64_t seed, std::span<const int> actions, int agent) {
  { ct.num_agents() } -> std::convertible_to<int>;
  { ct.obs_width() } -> std::convertible_to<int>;
  { ct.critic_width() } -> std::convertible_to<int>;
  // true when every agent's critic input is identical at a given step
  { ct.critic_shared() } -> std::convertible_to<bool>;
  t.reset(seed);
  { ct.observe(agent) } -> std::convertible_to<std::vector<double>>;
  { ct.critic_input(agent) } -> std::convertible_to<std::vector<double>>;
  { t.step(actions) } -> std::same_as<TaskStep>;
  { ct.summary() } -> std::same_as<EpisodeSummary>;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Environment seed of training episode `episode` (0-based).
inline std::uint64_t episode_seed(std::uint64_t base, int episode) {
  return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(episode) + 1));
}

// Per-step, per-agent rollout data. Row i = t * num_agents + c.
struct Trajectory {
  int num_agents = 0;
  int obs_width = 0;
  int critic_width = 0;
  std::int64_t steps = 0;
  std::vector<double> observations;   // obs_width per row
  std::vector<double> critic_inputs;  // critic_width per unique input
  std::vector<std::int64_t> critic_index;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;  // one per step, shared
  std::vector<double> values;   // one per row
  std::vector<double> advantages;
  std::vector<double> returns;

  std::int64_t rows() const { return static_cast<std::int64_t>(actions.size()); }

  std::span<const double> observation(std::int64_t row) const {
    return std::span(observations).subspan(row * obs_width, obs_width);
  }

  double mean_reward() const {
    if (rewards.empty()) return 0.0;
    double s = 0.0;
    for (double r : rewards) s += r;
    return s / static_cast<double>(rewards.size());
  }

  // Per-agent GAE over the shared reward; the episode end does not bootstrap.
  void compute_advantages(double gamma, double lambda) {
    advantages.assign(rows(), 0.0);
    returns.assign(rows(), 0.0);
    std::vector<double> v(steps);
    for (int c = 0; c < num_agents; ++c) {
      for (std::int64_t t = 0; t < steps; ++t) v[t] = values[t * num_agents + c];
      const auto res = gae(rewards, v, 0.0, gamma, lambda);
      for (std::int64_t t = 0; t < steps; ++t) {
        advantages[t * num_agents + c] = res.advantages[t];
        returns[t * num_agents + c] = res.returns[t];
      }
    }
  }

  PpoBatch to_batch(bool normalize_advantages) const {
    PpoBatch b;
    b.observations = Eigen::Map<const Matrix>(observations.data(), obs_width, rows());
    const auto unique = static_cast<Eigen::Index>(critic_inputs.size() / std::max(critic_width, 1));
    b.critic_inputs = Eigen::Map<const Matrix>(critic_inputs.data(), critic_width, unique);
    b.critic_index = critic_index;
    b.actions = actions;
    b.old_log_probs = log_probs;
    b.advantages = advantages;
    b.returns = returns;
    if (normalize_advantages) normalize(b.advantages);
    return b;
  }
};

// Runs one episode: every agent samples from the shared actor on its own
// observation, the critic scores the centralized input, the shared reward
// is recorded once per step.
template <MarlTask Task, class Rng>
Trajectory collect_episode(Task& task, const Mlp& actor, const Mlp& critic, Rng& rng,
                           std::uint64_t env_seed) {
  task.reset(env_seed);
  const int n = task.num_agents();
  Trajectory tr;
  tr.num_agents = n;
  tr.obs_width = task.obs_width();
  tr.critic_width = task.critic_width();
  if (actor.input_width() != tr.obs_width || critic.input_width() != tr.critic_width)
    throw ModelMismatch("collect_episode: network widths do not match the task");
  const bool shared = task.critic_shared();
  Matrix obs(tr.obs_width, n);
  Matrix cin(tr.critic_width, shared ? 1 : n);
  std::vector<int> acts(n);
  for (;;) {
    for (int c = 0; c < n; ++c) {
      const auto o = task.observe(c);
      obs.col(c) = Eigen::Map<const Vector>(o.data(), tr.obs_width);
      tr.observations.insert(tr.observations.end(), o.begin(), o.end());
    }
    const std::int64_t base = static_cast<std::int64_t>(tr.critic_inputs.size()) / tr.critic_width;
    for (int c = 0; c < (shared ? 1 : n); ++c) {
      const auto ci = task.critic_input(c);
      cin.col(c) = Eigen::Map<const Vector>(ci.data(), tr.critic_width);
      tr.critic_inputs.insert(tr.critic_inputs.end(), ci.begin(), ci.end());
    }
    const Matrix logp = log_softmax(actor.forward(obs));
    const Matrix values = critic.forward(cin);
    for (int c = 0; c < n; ++c) {
      const Vector p = logp.col(c).array().exp();
      acts[c] = sample_categorical(p, rng);
      tr.actions.push_back(acts[c]);
      tr.log_probs.push_back(logp(acts[c], c));
      tr.values.push_back(values(0, shared ? 0 : c));
      tr.critic_index.push_back(base + (shared ? 0 : c));
    }
    const TaskStep s = task.step(acts);
    tr.rewards.push_back(s.reward);
    ++tr.steps;
    if (s.done) break;
  }
  return tr;
}

// Everything needed to continue training exactly where it stopped.
struct TrainerState {
  Mlp actor;
  Mlp critic;
  Adam actor_opt;
  Adam critic_opt;
  std::uint64_t seed = 0;
  int episodes_done = 0;
};

inline TrainerState make_trainer_state(int obs_width, int num_actions, int critic_width,
                                       const PpoConfig& cfg, std::uint64_t seed) {
  auto sizes = [&](int in, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), cfg.hidden.begin(), cfg.hidden.end());
    s.push_back(out);
    return s;
  };
  TrainerState st;
  st.seed = seed;
  std::mt19937_64 rng(splitmix64(seed ^ 0xA11CEull));
  st.actor = Mlp(sizes(obs_width, num_actions));
  st.actor.init_orthogonal(rng, cfg.actor_output_gain);
  st.critic = Mlp(sizes(critic_width, 1));
  st.critic.init_orthogonal(rng, cfg.critic_output_gain);
  st.actor_opt = Adam(st.actor, cfg.actor_lr);
  st.critic_opt = Adam(st.critic, cfg.critic_lr);
  return st;
}

struct CurvePoint {
  int episode = 0;  // 1-based
  double reward = 0.0;  // mean shared reward per agent step
  std::optional<double> drop_ratio;
  double pc_w = 0.0;
  double wall_s = 0.0;
  EpochStats last_epoch;
};

// One training episode: collect, estimate advantages, update.
template <MarlTask Task>
CurvePoint train_episode(Task& task, TrainerState& st, const PpoConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t env_seed = episode_seed(st.seed, st.episodes_done);
  std::mt19937_64 rng(splitmix64(env_seed ^ 0xAC7104ull));
  Trajectory tr = collect_episode(task, st.actor, st.critic, rng, env_seed);
  tr.compute_advantages(cfg.gamma, cfg.gae_lambda);
  const auto stats =
      ppo_update(tr.to_batch(cfg.normalize_advantages), st.actor, st.critic, st.actor_opt, st.critic_opt, cfg,
                 splitmix64(env_seed ^ 0x5F0FF1Eull));
  ++st.episodes_done;
  CurvePoint p;
  p.episode = st.episodes_done;
  p.reward = tr.mean_reward();
  const auto sum = task.summary();
  p.drop_ratio = sum.drop_ratio;
  p.pc_w = sum.pc_w;
  p.last_epoch = stats.epochs.back();
  p.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return p;
}

// Aborts a run whose critic loss grows by more than `factor` for
// `window` consecutive episodes.
class DivergenceDetector {
 public:
  explicit DivergenceDetector(int window = 5, double factor = 10.0) : window_(window), factor_(factor) {}

  void observe(double loss) {
    if (!std::isfinite(loss)) {
      if (++nonfinite_ >= window_) throw TrainingError("training diverged: non-finite loss");
    } else {
      nonfinite_ = 0;
    }
    if (last_ && std::isfinite(loss) && loss > factor_ * *last_ && *last_ > 0) {
      if (++growing_ >= window_) throw TrainingError("training diverged: loss exploding");
    } else {
      growing_ = 0;
    }
    last_ = loss;
  }

 private:
  int window_;
  double factor_;
  int nonfinite_ = 0;
  int growing_ = 0;
  std::optional<double> last_;
};

// Trains until `cfg.episodes` episodes are done (continuing from
// st.episodes_done). `on_episode` runs after every episode, e.g. to write
// curves or checkpoints.
template <MarlTask Task>
std::vector<CurvePoint> train(Task& task, TrainerState& st, const PpoConfig& cfg,
                              const std::function<void(const CurvePoint&, const TrainerState&)>& on_episode = {}) {
  std::vector<CurvePoint> curve;
  DivergenceDetector detector;
  while (st.episodes_done < cfg.episodes) {
    curve.push_back(train_episode(task, st, cfg));
    detector.observe(curve.back().last_epoch.critic_loss);
    if (on_episode) on_episode(curve.back(), st);
  }
  return curve;
}

}  // namespace cellsleep::marl
