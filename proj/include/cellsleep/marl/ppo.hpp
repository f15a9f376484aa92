#pragma once

// Clipped-surrogate policy optimization pieces: categorical policy head,
// generalized advantage estimation, Huber value loss and the full-batch
// multi-epoch update.

#include <algorithm>
#include <numeric>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cellsleep/errors.hpp"
#include "cellsleep/marl/mlp.hpp"

namespace cellsleep::marl {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double entropy_coeff = 0.01;
  double huber_delta = 10.0;
  double actor_lr = 6e-4;
  double critic_lr = 5e-4;
  int epochs_per_episode = 10;
  int minibatches = 1;
  int episodes = 100;
  int agent_interval_ms = 20;
  std::int64_t batch_steps = 50400;
  std::vector<int> hidden{256, 256};
  bool normalize_advantages = true;
  double actor_output_gain = 0.01;
  double critic_output_gain = 1.0;
  // Rows per forward/backward chunk; gradients are accumulated over chunks,
  // so the update stays full-batch.
  int chunk_rows = 8192;
  int checkpoint_every = 10;
};

// ---------------------------------------------------------------------------
// Categorical head

// Column-wise log-softmax of logits (actions x N).
inline Matrix log_softmax(const Matrix& logits) {
  if (!logits.allFinite()) throw TrainingError("non-finite policy logits");
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    const double lse = m + std::log((logits.col(j).array() - m).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

inline Matrix softmax(const Matrix& logits) { return log_softmax(logits).array().exp(); }

// Action distribution of the shared actor for one observation.
inline Vector policy_distribution(const Mlp& actor, const Vector& observation) {
  return softmax(actor.forward(Matrix(observation))).col(0);
}

// Inverse-CDF draw from probabilities `p`.
template <class Rng>
int sample_categorical(const Eigen::Ref<const Vector>& p, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (x < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

inline double entropy(const Eigen::Ref<const Vector>& log_p) {
  return -(log_p.array().exp() * log_p.array()).sum();
}

// ---------------------------------------------------------------------------
// Advantage estimation

struct AdvantageResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma v_{t+1} - v_t with v_T = bootstrap;
// A_t = sum_l (gamma lambda)^l delta_{t+l}; returns = A + v.
inline AdvantageResult gae(std::span<const double> rewards, std::span<const double> values,
                           double bootstrap, double gamma, double lambda) {
  if (rewards.size() != values.size()) throw ContractViolation("gae: rewards and values differ in length");
  const std::size_t n = rewards.size();
  AdvantageResult out{std::vector<double>(n), std::vector<double>(n)};
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_v = (i + 1 < n) ? values[i + 1] : bootstrap;
    const double delta = rewards[i] + gamma * next_v - values[i];
    running = delta + gamma * lambda * running;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

inline void normalize(std::vector<double>& v) {
  if (v.size() < 2) return;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double sd = std::sqrt(var) + 1e-8;
  for (double& x : v) x = (x - mean) / sd;
}

// ---------------------------------------------------------------------------
// Losses

inline double huber(double residual, double delta) {
  const double a = std::abs(residual);
  return a <= delta ? 0.5 * residual * residual : delta * (a - 0.5 * delta);
}

inline double huber_grad(double residual, double delta) { return std::clamp(residual, -delta, delta); }

// min(r A, clip(r, 1-eps, 1+eps) A)
inline double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

// True when the clipped branch is selected and the gradient through the
// ratio vanishes.
inline bool surrogate_clipped(double ratio, double advantage, double eps) {
  return (advantage > 0.0 && ratio > 1.0 + eps) || (advantage < 0.0 && ratio < 1.0 - eps);
}

// ---------------------------------------------------------------------------
// Update

// Flattened training batch. Critic inputs may be shared between rows (the
// full critic sees one input per time step): row i uses column
// critic_index[i] of critic_inputs.
struct PpoBatch {
  Matrix observations;   // obs_width x N
  Matrix critic_inputs;  // critic_width x U
  std::vector<std::int64_t> critic_index;
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::int64_t size() const { return static_cast<std::int64_t>(actions.size()); }
};

struct EpochStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
};

struct UpdateStats {
  std::vector<EpochStats> epochs;
};

// Actor loss and d(loss)/d(logits) for a chunk, with 1/N already applied.
struct ActorChunkResult {
  double surrogate_sum = 0.0;
  double entropy_sum = 0.0;
  double ratio_sum = 0.0;
  std::int64_t clipped = 0;
  Matrix d_logits;
};

inline ActorChunkResult actor_loss_chunk(const Matrix& logits, std::span<const int> actions,
                                         std::span<const double> old_logp, std::span<const double> adv,
                                         double eps, double entropy_coeff, double inv_n,
                                         std::int64_t first_row) {
  ActorChunkResult r;
  const Matrix logp = log_softmax(logits);
  r.d_logits.resize(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const int a = actions[j];
    const double ratio = std::exp(logp(a, j) - old_logp[j]);
    const double surr = clipped_surrogate(ratio, adv[j], eps);
    const Vector p = logp.col(j).array().exp();
    const double h = entropy(logp.col(j));
    if (!std::isfinite(surr) || !std::isfinite(h))
      throw TrainingError("non-finite actor loss at batch index " + std::to_string(first_row + j));
    r.surrogate_sum += surr;
    r.entropy_sum += h;
    r.ratio_sum += ratio;
    auto g = r.d_logits.col(j);
    // entropy term: dH/dz_k = -p_k (log p_k + H)
    g = entropy_coeff * inv_n * (p.array() * (logp.col(j).array() + h)).matrix();
    if (surrogate_clipped(ratio, adv[j], eps)) {
      ++r.clipped;
    } else {
      // d(r A)/dz = A r (e_a - p)
      const double s = -adv[j] * ratio * inv_n;
      g -= s * p;
      g[a] += s;
    }
  }
  return r;
}

// Multi-epoch update. With one minibatch, each epoch is a single full-batch
// adaptive-moment step per network with gradients accumulated over row
// chunks. With more, rows are reshuffled every epoch (seeded by
// `shuffle_seed`) and split into that many minibatches, one step each.
inline UpdateStats ppo_update(const PpoBatch& batch, Mlp& actor, Mlp& critic, Adam& actor_opt,
                              Adam& critic_opt, const PpoConfig& cfg, std::uint64_t shuffle_seed = 0) {
  const std::int64_t n = batch.size();
  if (n == 0) throw ContractViolation("ppo_update: empty batch");
  if (cfg.minibatches < 1) throw ContractViolation("ppo_update: minibatches must be >= 1");
  const std::int64_t num_mb = std::min<std::int64_t>(cfg.minibatches, n);
  const std::int64_t chunk = std::max(1, cfg.chunk_rows);
  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::mt19937_64 shuffle_rng(shuffle_seed);
  UpdateStats stats;
  MlpCache cache;
  for (int epoch = 0; epoch < cfg.epochs_per_episode; ++epoch) {
    if (num_mb > 1) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double surrogate = 0.0, ent = 0.0, ratio = 0.0, critic_loss = 0.0;
    std::int64_t clipped = 0;
    for (std::int64_t mb = 0; mb < num_mb; ++mb) {
      const std::int64_t mb_begin = n * mb / num_mb, mb_end = n * (mb + 1) / num_mb;
      const double inv_n = 1.0 / static_cast<double>(mb_end - mb_begin);
      actor.zero_grad();
      critic.zero_grad();
      for (std::int64_t begin = mb_begin; begin < mb_end; begin += chunk) {
        const std::int64_t len = std::min(chunk, mb_end - begin);
        Matrix obs(batch.observations.rows(), len), cin(batch.critic_inputs.rows(), len);
        std::vector<int> act(len);
        std::vector<double> old_logp(len), adv(len);
        for (std::int64_t j = 0; j < len; ++j) {
          const std::int64_t r = order[begin + j];
          obs.col(j) = batch.observations.col(r);
          cin.col(j) = batch.critic_inputs.col(batch.critic_index[r]);
          act[j] = batch.actions[r];
          old_logp[j] = batch.old_log_probs[r];
          adv[j] = batch.advantages[r];
        }

        // actor
        const Matrix logits = actor.forward(obs, &cache);
        auto ar = actor_loss_chunk(logits, act, old_logp, adv, cfg.clip_eps, cfg.entropy_coeff, inv_n, begin);
        actor.backward(cache, ar.d_logits);
        surrogate += ar.surrogate_sum;
        ent += ar.entropy_sum;
        ratio += ar.ratio_sum;
        clipped += ar.clipped;

        // critic
        const Matrix v = critic.forward(cin, &cache);
        Matrix dv(1, len);
        for (std::int64_t j = 0; j < len; ++j) {
          const double res = v(0, j) - batch.returns[order[begin + j]];
          const double l = huber(res, cfg.huber_delta);
          if (!std::isfinite(l))
            throw TrainingError("non-finite critic loss at batch index " + std::to_string(order[begin + j]));
          critic_loss += l;
          dv(0, j) = huber_grad(res, cfg.huber_delta) * inv_n;
        }
        critic.backward(cache, dv);
      }
      actor_opt.step(actor);
      critic_opt.step(critic);
      if (!actor.all_finite() || !critic.all_finite())
        throw TrainingError("parameters became non-finite in epoch " + std::to_string(epoch));
    }
    const double inv_total = 1.0 / static_cast<double>(n);
    EpochStats es;
    es.actor_loss = -surrogate * inv_total - cfg.entropy_coeff * ent * inv_total;
    es.critic_loss = critic_loss * inv_total;
    es.entropy = ent * inv_total;
    es.mean_ratio = ratio * inv_total;
    es.clip_fraction = static_cast<double>(clipped) * inv_total;
    stats.epochs.push_back(es);
  }
  return stats;
}

}  // namespace cellsleep::marl
