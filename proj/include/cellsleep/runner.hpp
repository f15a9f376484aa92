#pragma once

// Experiment runners behind the command-line tool: headless simulation
// under a fixed policy, training, paired evaluation and profile export.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cellsleep/config.hpp"
#include "cellsleep/env.hpp"
#include "cellsleep/marl/checkpoint.hpp"
#include "cellsleep/marl/network_task.hpp"
#include "cellsleep/marl/trainer.hpp"
#include "cellsleep/policies.hpp"

namespace cellsleep {

inline constexpr int kHourBuckets = 24;

// Worker count: CELLSLEEP_THREADS if set, else the hardware concurrency.
inline unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CELLSLEEP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

// Runs fn(0..count-1) over at most worker_threads() threads. The first
// exception is rethrown after all workers finish.
template <class Fn>
void parallel_for(int count, Fn&& fn) {
  const unsigned threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(std::max(count, 1)));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Environment seed of evaluation episode `e`; shared by every policy so
// comparisons see identical arrival streams.
inline std::uint64_t eval_seed(std::uint64_t base, int e) {
  return marl::episode_seed(base ^ 0xE7A15EEDull, e);
}

// Metric windows of one or more episodes, bucketed by hour of the diurnal
// cycle. The low-traffic third is centered on the trough, the high-traffic
// third on the peak.
struct EpisodeLog {
  MetricsWindow total;
  std::array<MetricsWindow, kHourBuckets> hourly{};
  MetricsWindow low_traffic;
  MetricsWindow high_traffic;
  std::vector<double> step_pc_w;  // interval-average PC per agent step

  void merge(const EpisodeLog& o) {
    total.merge(o.total);
    for (int h = 0; h < kHourBuckets; ++h) hourly[h].merge(o.hourly[h]);
    low_traffic.merge(o.low_traffic);
    high_traffic.merge(o.high_traffic);
    step_pc_w.insert(step_pc_w.end(), o.step_pc_w.begin(), o.step_pc_w.end());
  }
};

inline bool in_low_traffic_third(double phase) { return phase < 1.0 / 6.0 || phase >= 5.0 / 6.0; }
inline bool in_high_traffic_third(double phase) { return phase >= 1.0 / 3.0 && phase < 2.0 / 3.0; }

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json step_record(std::int64_t step, const StepResult& r, const NetworkEnv& env) {
  json per_bs = json::array();
  for (const auto& bs : env.bs_states()) per_bs.push_back({{"m", bs.m_cfg}, {"s", bs.sleep_level}});
  return {{"step", step},
          {"time_s", r.time_s},
          {"pc_w", r.interval.avg_pc_w},
          {"drop_ratio", optional_json(r.interval.drop_ratio)},
          {"sum_rate_bps", r.interval.sum_rate_bps},
          {"ee_bits_per_j", optional_json(r.interval.ee_bits_per_j)},
          {"reward", r.reward.reward},
          {"xi", r.reward.xi},
          {"per_bs", per_bs}};
}

// One headless episode under `policy`. Step records go to `jsonl` if given.
inline EpisodeLog run_episode(const EnvConfig& cfg, const Policy& policy, std::uint64_t seed,
                              std::ostream* jsonl = nullptr) {
  NetworkEnv env(cfg);
  env.reset(seed);
  std::mt19937_64 rng(marl::splitmix64(seed ^ 0x9011C7ull));
  EpisodeLog log;
  log.step_pc_w.reserve(cfg.agent_steps_per_episode());
  while (!env.done()) {
    const double phase = env.day_phase(env.sim_time_s());
    const std::int64_t step = env.agent_step();
    const StepResult r = env.step(policy.act(make_policy_observation(env), rng));
    log.total.merge(r.window);
    log.hourly[std::min(kHourBuckets - 1, static_cast<int>(phase * kHourBuckets))].merge(r.window);
    if (in_low_traffic_third(phase)) log.low_traffic.merge(r.window);
    if (in_high_traffic_third(phase)) log.high_traffic.merge(r.window);
    log.step_pc_w.push_back(r.interval.avg_pc_w);
    if (jsonl) *jsonl << step_record(step, r, env).dump() << '\n';
  }
  return log;
}

inline json metrics_json(const MetricsWindow& w) {
  const Metrics m = metrics(w);
  return {{"mean_pc_w", m.avg_pc_w},
          {"drop_ratio", optional_json(m.drop_ratio)},
          {"sum_rate_bps", m.sum_rate_bps},
          {"ee_bits_per_j", optional_json(m.ee_bits_per_j)},
          {"energy_j", w.energy_j},
          {"duration_s", w.duration_s},
          {"finished", w.finished},
          {"dropped", w.dropped}};
}

inline json summary_json(const EpisodeLog& log) {
  json hourly = json::array();
  for (int h = 0; h < kHourBuckets; ++h) {
    json row = metrics_json(log.hourly[h]);
    row["hour"] = h;
    hourly.push_back(row);
  }
  return {{"overall", metrics_json(log.total)},
          {"low_traffic", metrics_json(log.low_traffic)},
          {"high_traffic", metrics_json(log.high_traffic)},
          {"hourly", hourly}};
}

inline void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out << j.dump(2) << '\n';
}

// Trained policies sample their actions unless `greedy` is set.
inline Policy make_policy(const std::string& name, const std::string& model_path = {}, bool greedy = false) {
  const PolicyKind kind = parse_policy_kind(name);
  std::optional<marl::Mlp> actor;
  if (!model_path.empty()) actor = marl::load_actor(model_path);
  if (kind == PolicyKind::kMappo && !actor) throw ConfigError("--model is required for mappo", "/model");
  if (actor && (actor->input_width() != kAgentObsWidth || actor->output_width() != kNumActions))
    throw ModelMismatch("model '" + model_path + "' has widths " + std::to_string(actor->input_width()) + "->" +
                        std::to_string(actor->output_width()) + ", expected " + std::to_string(kAgentObsWidth) +
                        "->" + std::to_string(kNumActions));
  return Policy(kind, std::move(actor), greedy);
}

// Runs cfg.eval_episodes episodes; episode e writes steps_ep<e>.jsonl.
// Returns the aggregated log and writes summary.json plus a config dump.
inline EpisodeLog run_simulate(const ExperimentConfig& cfg, const Policy& policy, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  write_json(out / "config.json", config_to_json(cfg));
  const EnvConfig env_cfg = cfg.env_config();
  std::vector<EpisodeLog> logs(cfg.eval_episodes);
  parallel_for(cfg.eval_episodes, [&](int e) {
    std::ofstream jsonl(out / ("steps_ep" + std::to_string(e) + ".jsonl"));
    logs[e] = run_episode(env_cfg, policy, eval_seed(cfg.seed, e), &jsonl);
  });
  EpisodeLog all;
  for (const auto& l : logs) all.merge(l);
  json s = summary_json(all);
  s["policy"] = policy.name();
  s["episodes"] = cfg.eval_episodes;
  s["seed"] = cfg.seed;
  write_json(out / "summary.json", s);
  return all;
}

// ---------------------------------------------------------------------------
// Evaluation

inline std::optional<double> relative_delta(const std::optional<double>& cand, const std::optional<double>& base) {
  if (!cand || !base || *base == 0.0) return std::nullopt;
  return (*cand - *base) / *base;
}

inline std::optional<double> absolute_delta(const std::optional<double>& cand, const std::optional<double>& base) {
  if (!cand || !base) return std::nullopt;
  return *cand - *base;
}

inline json delta_json(const MetricsWindow& cand, const MetricsWindow& base) {
  const Metrics c = metrics(cand), b = metrics(base);
  return {{"pc_rel", optional_json(relative_delta(c.avg_pc_w, b.avg_pc_w))},
          {"drop_ratio_abs", optional_json(absolute_delta(c.drop_ratio, b.drop_ratio))},
          {"sum_rate_rel", optional_json(relative_delta(c.sum_rate_bps, b.sum_rate_bps))},
          {"ee_rel", optional_json(relative_delta(c.ee_bits_per_j, b.ee_bits_per_j))}};
}

struct EvaluationResult {
  EpisodeLog candidate;
  std::vector<EpisodeLog> baselines;
  json report;
};

// Runs the candidate and every baseline on the same evaluation seeds and
// reports paired per-hour tables and relative deltas.
inline EvaluationResult run_evaluate(const ExperimentConfig& cfg, const Policy& candidate,
                                     const std::vector<Policy>& baselines, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  const EnvConfig env_cfg = cfg.env_config();
  std::vector<const Policy*> all{&candidate};
  for (const auto& b : baselines) all.push_back(&b);
  const int episodes = cfg.eval_episodes;
  std::vector<EpisodeLog> logs(all.size() * episodes);
  parallel_for(static_cast<int>(logs.size()), [&](int i) {
    logs[i] = run_episode(env_cfg, *all[i / episodes], eval_seed(cfg.seed, i % episodes));
  });
  EvaluationResult res;
  for (std::size_t p = 0; p < all.size(); ++p) {
    EpisodeLog agg;
    for (int e = 0; e < episodes; ++e) agg.merge(logs[p * episodes + e]);
    if (p == 0) {
      res.candidate = std::move(agg);
    } else {
      res.baselines.push_back(std::move(agg));
    }
  }
  json report;
  report["candidate"] = candidate.name();
  report["episodes"] = episodes;
  report["seed"] = cfg.seed;
  report["policies"] = json::object();
  report["policies"][candidate.name()] = summary_json(res.candidate);
  report["comparisons"] = json::array();
  for (std::size_t b = 0; b < baselines.size(); ++b) {
    const EpisodeLog& base = res.baselines[b];
    report["policies"][baselines[b].name()] = summary_json(base);
    json hourly = json::array();
    for (int h = 0; h < kHourBuckets; ++h) {
      json row = delta_json(res.candidate.hourly[h], base.hourly[h]);
      row["hour"] = h;
      hourly.push_back(row);
    }
    const Metrics cl = metrics(res.candidate.low_traffic), bl = metrics(base.low_traffic);
    const Metrics ch = metrics(res.candidate.high_traffic), bh = metrics(base.high_traffic);
    report["comparisons"].push_back(
        {{"baseline", baselines[b].name()},
         {"overall", delta_json(res.candidate.total, base.total)},
         {"low_traffic", delta_json(res.candidate.low_traffic, base.low_traffic)},
         {"high_traffic", delta_json(res.candidate.high_traffic, base.high_traffic)},
         {"low_traffic_pc_delta", optional_json(relative_delta(cl.avg_pc_w, bl.avg_pc_w))},
         {"high_traffic_ee_delta", optional_json(relative_delta(ch.ee_bits_per_j, bh.ee_bits_per_j))},
         {"hourly", hourly}});
  }
  write_json(out / "report.json", report);
  res.report = std::move(report);
  return res;
}

// ---------------------------------------------------------------------------
// Training

struct TrainRunOptions {
  CriticVariant variant = CriticVariant::kFull;
  bool antenna_only = false;  // Auto-SM1 sleep rule, learned antenna switching
  std::string resume_from;
  bool quiet = true;
};

inline std::string to_string(CriticVariant v) { return v == CriticVariant::kFull ? "full" : "neighbor"; }

inline CriticVariant parse_variant(const std::string& s) {
  if (s == "full") return CriticVariant::kFull;
  if (s == "neighbor") return CriticVariant::kNeighbor;
  throw ConfigError("unknown variant '" + s + "'", "/variant");
}

struct TrainRunResult {
  marl::TrainerState state;
  std::vector<marl::CurvePoint> curve;
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Trains to cfg.ppo.episodes. Writes curves.csv (episode,reward,drop_ratio,
// pc_w), train_log.jsonl with wall-clock times, periodic checkpoints and the
// final model.txt.
inline TrainRunResult run_train(const ExperimentConfig& cfg, const TrainRunOptions& opts,
                                const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  write_json(out / "config.json", config_to_json(cfg));
  marl::NetworkTask task(cfg.env_config(), opts.variant, opts.antenna_only);
  TrainRunResult res;
  if (!opts.resume_from.empty()) {
    auto loaded = marl::load_checkpoint(opts.resume_from);
    res.state = std::move(loaded.state);
    if (res.state.actor.input_width() != task.obs_width() || res.state.critic.input_width() != task.critic_width())
      throw ModelMismatch("checkpoint widths do not match the configured network");
  } else {
    res.state = marl::make_trainer_state(task.obs_width(), kNumActions, task.critic_width(), cfg.ppo, cfg.seed);
  }
  const marl::CheckpointMeta meta{{"variant", to_string(opts.variant)},
                                  {"num_bs", std::to_string(task.num_agents())},
                                  {"antenna_only", opts.antenna_only ? "1" : "0"}};
  const bool fresh = opts.resume_from.empty();
  std::ofstream curves(out / "curves.csv", fresh ? std::ios::trunc : std::ios::app);
  std::ofstream log(out / "train_log.jsonl", fresh ? std::ios::trunc : std::ios::app);
  if (fresh) curves << "episode,reward,drop_ratio,pc_w\n";
  res.curve = marl::train(task, res.state, cfg.ppo, [&](const marl::CurvePoint& p, const marl::TrainerState& st) {
    curves << p.episode << ',' << format_double(p.reward) << ','
           << (p.drop_ratio ? format_double(*p.drop_ratio) : std::string()) << ',' << format_double(p.pc_w) << '\n';
    curves.flush();
    log << json{{"episode", p.episode},
                {"wall_s", p.wall_s},
                {"reward", p.reward},
                {"drop_ratio", optional_json(p.drop_ratio)},
                {"pc_w", p.pc_w},
                {"actor_loss", p.last_epoch.actor_loss},
                {"critic_loss", p.last_epoch.critic_loss},
                {"entropy", p.last_epoch.entropy},
                {"clip_fraction", p.last_epoch.clip_fraction}}
               .dump()
        << '\n';
    log.flush();
    if (!opts.quiet)
      std::fprintf(stderr, "episode %d  reward %.4f  drop %.4f  pc %.1f W  entropy %.3f  (%.1f s)\n", p.episode,
                   p.reward, p.drop_ratio.value_or(0.0), p.pc_w, p.last_epoch.entropy, p.wall_s);
    if (cfg.ppo.checkpoint_every > 0 && p.episode % cfg.ppo.checkpoint_every == 0) {
      auto copy = st;
      marl::save_checkpoint((out / ("checkpoint_ep" + std::to_string(p.episode) + ".txt")).string(), copy, meta);
    }
  });
  marl::save_checkpoint((out / "model.txt").string(), res.state, meta);
  return res;
}

inline void run_export_profile(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  std::ofstream csv(out / "profile.csv");
  if (!csv) throw ConfigError("cannot write profile.csv");
  traffic::write_profile_csv(csv, cfg.build_profile());
}

}  // namespace cellsleep
