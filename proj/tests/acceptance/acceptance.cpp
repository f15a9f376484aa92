// Acceptance suite. Run with no arguments for every criterion, or pass
// criterion numbers to select a subset. Prints one PASS/FAIL line per
// criterion and exits nonzero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bandit_task.hpp"
#include "cellsleep/config.hpp"
#include "cellsleep/env.hpp"
#include "cellsleep/marl/network_task.hpp"
#include "cellsleep/marl/trainer.hpp"
#include "cellsleep/policies.hpp"
#include "cellsleep/radio.hpp"
#include "cellsleep/runner.hpp"
#include "finite_difference.hpp"

using namespace cellsleep;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates named checks; the criterion passes only if every check does.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }

  Outcome outcome() const {
    std::ostringstream out;
    const auto& parts = pass_ ? notes_ : failures_;
    for (std::size_t i = 0; i < parts.size(); ++i) out << (i ? "; " : "") << parts[i];
    return {pass_, out.str()};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome formula_suite() {
  Checks c;
  const double pl = radio::path_loss_db(400.0, 5.0);
  c.expect(std::abs(pl - -129.141) <= 0.01, "path loss " + fmt("%.4f", pl));
  c.note("path loss " + fmt("%.4f dB", pl));

  const double noise = radio::noise_power_w(radio::RadioParams{});
  c.expect(std::abs(noise - 3.9905e-13) <= 1e-16, "noise " + fmt("%.6e", noise));
  c.note("noise " + fmt("%.5e W", noise));

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> count(1, 63);
  std::uniform_real_distribution<double> bits(0.0, 3e6), time(1e-3, 0.3), total(0.0, 6.4);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<radio::ServedDemand> ues(count(rng));
    for (auto& u : ues) u = {bits(rng), time(rng)};
    const double pc = total(rng);
    double sum = 0.0;
    for (double p : radio::allocate_power(pc, ues, 2e7)) sum += p;
    worst = std::max(worst, std::abs(sum - pc));
  }
  c.expect(worst < 1e-12, "allocation error " + fmt("%.3e", worst));
  c.note("max allocation error " + fmt("%.2e W", worst));
  return c.outcome();
}

// Micro steps a single BS spends dark between a wake order and serving a
// waiting UE, and the micro steps until it reports active.
struct WakeTiming {
  int dark_steps = 0;
  bool power_held = true;
};

WakeTiming wake_timing(int level) {
  EnvConfig cfg;
  cfg.topology = make_custom_topology({{0, 0}}, traffic::Area{}, 400.0);
  cfg.profile = traffic::synth_profile({0.0, 0.0, 0.0}, 0.1, 72);
  cfg.episode_s = 2.0;
  NetworkEnv env(cfg);
  env.apply_actions({{0, level}});
  env.micro_step();
  env.apply_actions({{0, 0}});
  env.add_ue(50.0, 0.0, 2);
  WakeTiming w;
  const double sleep_w = radio::bs_power_w(0, 64, level, cfg.radio, cfg.sleep);
  while (w.dark_steps < 10000) {
    env.micro_step();
    if (env.ues().front().phase == traffic::UePhase::kServed) break;
    w.power_held &= env.last_step_power_w() == sleep_w;
    ++w.dark_steps;
  }
  return w;
}

Outcome sleep_mode_suite() {
  Checks c;
  const radio::RadioParams p;
  const radio::SleepModeTable t;
  const std::array<double, 4> latency{0.0, 1.0, 10.0, 100.0}, discount{1.0, 0.69, 0.5, 0.29};
  const double fixed = radio::bs_power_w(0, 0, 0, p, t);
  for (int s = 1; s < radio::kNumSleepLevels; ++s) {
    const double ratio = radio::bs_power_w(0, 64, s, p, t) / fixed;
    c.expect(std::abs(ratio - discount[s]) <= 1e-15 * discount[s], "discount ratio level " + std::to_string(s));
    const auto w = wake_timing(s);
    c.expect(w.dark_steps == static_cast<int>(latency[s]),
             "level " + std::to_string(s) + " wake took " + std::to_string(w.dark_steps) + " ms");
    c.expect(w.power_held, "level " + std::to_string(s) + " waking power");
    if (s == 2) c.note("level-2 wake " + std::to_string(w.dark_steps) + " ms");
  }
  c.expect(std::abs(radio::reference_power_w(p, t) - 53.2) < 1e-12, "reference power");
  c.note("discount ratios 0.69/0.5/0.29 exact");
  return c.outcome();
}

Outcome reward_suite() {
  Checks c;
  c.expect(qos_reward(0.5, 0.005) == -0.5, "xi(0.5)");
  c.expect(qos_reward(1.0, 0.005) == 0.0, "xi(1)");
  c.expect(std::abs(qos_reward(2.0, 0.005) - 0.0025) < 1e-15, "xi(2)");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double lo = 1.0, hi = -1.0;
  for (int i = 0; i < 100000; ++i) {
    const double rho = u(rng) < 0.05 ? 0.0 : std::exp(12.0 * u(rng) - 6.0);
    const double xi = qos_reward(rho, 0.005);
    lo = std::min(lo, xi);
    hi = std::max(hi, xi);
  }
  c.expect(lo >= -1.0 && hi <= 0.005, "fuzzed range [" + fmt("%g", lo) + ", " + fmt("%g", hi) + "]");
  c.note("fuzzed xi range [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "]");
  return c.outcome();
}

Outcome gradient_check() {
  Checks c;
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto res = support::check_random_net(rng, 32);
    c.expect(res.checked > 0, "net " + std::to_string(trial) + " checked nothing");
    worst = std::max(worst, res.max_rel_error);
  }
  c.expect(worst < 1e-4, "max relative error " + fmt("%.3e", worst));
  c.note("20 nets, max relative error " + fmt("%.2e", worst));
  return c.outcome();
}

std::vector<double> brute_force_gae(const std::vector<double>& r, const std::vector<double>& v, double boot,
                                    double gamma, double lambda) {
  const std::size_t n = r.size();
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t l = 0; t + l < n; ++l) {
      const std::size_t k = t + l;
      const double delta = r[k] + gamma * (k + 1 < n ? v[k + 1] : boot) - v[k];
      adv[t] += std::pow(gamma * lambda, static_cast<double>(l)) * delta;
    }
  return adv;
}

Outcome gae_oracle() {
  Checks c;
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_real_distribution<double> u(-5.0, 5.0), unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    std::vector<double> r(n), v(n);
    for (auto& x : r) x = u(rng);
    for (auto& x : v) x = u(rng);
    const double boot = u(rng), gamma = unit(rng), lambda = unit(rng);
    const auto res = marl::gae(r, v, boot, gamma, lambda);
    const auto ref = brute_force_gae(r, v, boot, gamma, lambda);
    for (int t = 0; t < n; ++t) worst = std::max(worst, std::abs(res.advantages[t] - ref[t]));
  }
  c.expect(worst < 1e-10, "max error " + fmt("%.3e", worst));
  c.note("1000 instances, max error " + fmt("%.2e", worst));
  return c.outcome();
}

Outcome episode_accounting() {
  Checks c;
  const auto cfg = config_from_json(json::object()).env_config();
  c.expect(cfg.agent_steps_per_episode() == 50400, "agent steps " + std::to_string(cfg.agent_steps_per_episode()));
  c.expect(cfg.micro_steps_per_episode() == 1008000, "micro steps " + std::to_string(cfg.micro_steps_per_episode()));
  NetworkEnv env(cfg);
  env.reset(eval_seed(1, 0));
  const Policy on(PolicyKind::kAlwaysOn);
  std::mt19937_64 rng(0);
  std::int64_t agent_steps = 0;
  while (!env.done()) {
    env.step(on.act(make_policy_observation(env), rng));
    ++agent_steps;
  }
  c.expect(agent_steps == 50400, "executed agent steps " + std::to_string(agent_steps));
  c.expect(env.micro_step_count() == 1008000, "executed micro steps " + std::to_string(env.micro_step_count()));
  c.note("50400 agent steps, " + std::to_string(env.micro_step_count()) + " micro steps executed");
  return c.outcome();
}

int served_total(const NetworkEnv& env) {
  int k = 0;
  for (const auto& bs : env.bs_states()) k += bs.served;
  return k;
}

Outcome baseline_dominance() {
  Checks c;
  std::int64_t steps = 0, idle_steps = 0, strict = 0, above = 0, above_all_awake_more_load = 0;
  double worst_margin = -1e300;
  for (double scale : {0.5, 1.0, 2.0}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      EnvConfig cfg;
      cfg.episode_s = 8.0;
      cfg.day_length_s = 8.0;
      cfg.profile = traffic::synth_profile({60.0 * scale, 120.0 * scale, 120.0 * scale}, 0.1, 72);
      NetworkEnv on(cfg), sm(cfg);
      on.reset(seed);
      sm.reset(seed);
      std::mt19937_64 rng(0);
      const Policy p_on(PolicyKind::kAlwaysOn), p_sm(PolicyKind::kAutoSm1);
      while (!on.done()) {
        const auto r_on = on.step(p_on.act(make_policy_observation(on), rng));
        const auto r_sm = sm.step(p_sm.act(make_policy_observation(sm), rng));
        ++steps;
        const double margin = r_sm.interval.avg_pc_w - r_on.interval.avg_pc_w;
        worst_margin = std::max(worst_margin, margin);
        bool some_idle = false;
        for (const auto& bs : sm.bs_states()) some_idle |= bs.sleep_level > 0;
        if (some_idle) {
          ++idle_steps;
          strict += margin < 0.0;
        }
        if (margin > 1e-9) {
          ++above;
          above_all_awake_more_load += !some_idle && served_total(sm) > served_total(on);
        }
      }
    }
  }
  c.expect(strict == idle_steps, std::to_string(idle_steps - strict) + " idle steps without a strict saving");
  c.expect(above == 0, std::to_string(above) + " of " + std::to_string(steps) +
                           " paired steps with auto-sm1 above always-on (max " + fmt("%+.2f W", worst_margin) + ", " +
                           std::to_string(above_all_awake_more_load) +
                           " of them with every BS awake and more UEs in service)");
  c.note(std::to_string(steps) + " paired steps, " + std::to_string(idle_steps) + " with an idle BS, max PC margin " +
         fmt("%.3g W", worst_margin));
  return c.outcome();
}

Outcome learning_sanity() {
  Checks c;
  marl::PpoConfig cfg;
  cfg.hidden = {32, 32};
  cfg.episodes = 50;
  cfg.gamma = 0.0;  // steps are independent pulls
  std::ostringstream masses;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    support::BanditTask task(4, 12, 7, 32);
    auto st = marl::make_trainer_state(1, 12, 1, cfg, seed);
    marl::train(task, st, cfg);
    const double mass = marl::policy_distribution(st.actor, marl::Vector::Ones(1))[7];
    c.expect(mass > 0.9, "seed " + std::to_string(seed) + " mass " + fmt("%.3f", mass));
    masses << (seed > 1 ? " " : "") << fmt("%.3f", mass);
  }
  c.note("rewarded mass after 50 updates: " + masses.str());
  return c.outcome();
}

// Reduced-scale training configuration for the trend check.
inline constexpr int kTrendMinibatches = 32;

ExperimentConfig trend_config(std::uint64_t seed) {
  return config_from_json({{"sim", {{"episode_s", 60}}},
                           {"traffic", {{"day_length_s", 60}}},
                           {"ppo", {{"episodes", 30}, {"checkpoint_every", 0}, {"minibatches", kTrendMinibatches}}},
                           {"eval_episodes", 3},
                           {"seed", seed}});
}

Outcome trend_reproduction() {
  Checks c;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<json> reports(seeds.size());
  const auto root = std::filesystem::temp_directory_path() / "cellsleep_acceptance_trend";
  parallel_for(static_cast<int>(seeds.size()), [&](int i) {
    const auto cfg = trend_config(seeds[i]);
    const auto dir = root / ("seed" + std::to_string(seeds[i]));
    std::filesystem::remove_all(dir);
    const auto trained = run_train(cfg, TrainRunOptions{}, dir / "train");
    const Policy mappo(PolicyKind::kMappo, trained.state.actor, false);
    reports[i] = run_evaluate(cfg, mappo, {make_policy("always-on"), make_policy("auto-sm1")}, dir / "eval").report;
  });
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& pol = reports[i].at("policies");
    const double pc_m = pol.at("mappo").at("low_traffic").at("mean_pc_w");
    const double pc_on = pol.at("always-on").at("low_traffic").at("mean_pc_w");
    const double pc_sm = pol.at("auto-sm1").at("low_traffic").at("mean_pc_w");
    const auto drop = [&](const char* name) {
      const auto& d = pol.at(name).at("overall").at("drop_ratio");
      return d.is_null() ? 0.0 : d.get<double>();
    };
    const double d_m = drop("mappo"), d_sm = drop("auto-sm1");
    const double vs_on = pc_m / pc_on - 1.0, vs_sm = pc_m / pc_sm - 1.0;
    const std::string tag = "seed " + std::to_string(seeds[i]);
    c.expect(vs_on <= -0.15, tag + " trough PC vs always-on " + fmt("%+.1f%%", 100 * vs_on));
    c.expect(vs_sm <= -0.02, tag + " trough PC vs auto-sm1 " + fmt("%+.1f%%", 100 * vs_sm));
    c.expect(d_m <= d_sm + 0.05, tag + " drop " + fmt("%.4f", d_m) + " vs auto-sm1 " + fmt("%.4f", d_sm));
    c.note(tag + ": trough PC " + fmt("%.1f W", pc_m) + " (" + fmt("%+.1f%%", 100 * vs_on) + " vs on, " +
           fmt("%+.1f%%", 100 * vs_sm) + " vs sm1), drop " + fmt("%.4f", d_m) + " vs " + fmt("%.4f", d_sm));
  }
  return c.outcome();
}

Outcome neighbor_scalability() {
  Checks c;
  const int n7 = critic_input_width(CriticVariant::kNeighbor, 7);
  const int n19 = critic_input_width(CriticVariant::kNeighbor, 19);
  c.expect(n7 == n19, "neighbor widths " + std::to_string(n7) + " vs " + std::to_string(n19));
  const int f7 = critic_input_width(CriticVariant::kFull, 7), f19 = critic_input_width(CriticVariant::kFull, 19);
  const int slope = (f19 - f7) / 12;
  c.expect((f19 - f7) % 12 == 0 && f7 - 7 * slope == f19 - 19 * slope && slope > 0, "full widths not linear");

  const EnvConfig cfg = config_from_json({{"topology", {{"num_bs", 19}}}}).env_config();
  marl::NetworkTask task(cfg, CriticVariant::kNeighbor);
  c.expect(task.critic_width() == n19, "task critic width");
  marl::PpoConfig ppo;
  auto st = marl::make_trainer_state(task.obs_width(), kNumActions, task.critic_width(), ppo, 1);
  std::mt19937_64 rng(1);
  const auto tr = marl::collect_episode(task, st.actor, st.critic, rng, 1);
  c.expect(tr.steps == cfg.agent_steps_per_episode(), "19-BS episode length");
  for (double r : tr.rewards) {
    if (!std::isfinite(r)) {
      c.expect(false, "non-finite reward");
      break;
    }
  }
  c.note("neighbor width " + std::to_string(n7) + " for 7 and 19 BSs, full " + std::to_string(f7) + " -> " +
         std::to_string(f19) + " (" + std::to_string(slope) + " per BS), 19-BS episode of " +
         std::to_string(tr.steps) + " steps");
  return c.outcome();
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "formula suite", 1.0, formula_suite},
      {2, "sleep-mode suite", 1.0, sleep_mode_suite},
      {3, "reward suite", 5.0, reward_suite},
      {4, "gradient check", 30.0, gradient_check},
      {5, "GAE oracle", 5.0, gae_oracle},
      {6, "episode accounting", 300.0, episode_accounting},
      {7, "baseline dominance", 120.0, baseline_dominance},
      {8, "learning sanity", 60.0, learning_sanity},
      {9, "desk-scale trend", 7200.0, trend_reproduction},
      {10, "neighbor scalability", 600.0, neighbor_scalability},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long id = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || id < 1 || id > 10) {
      std::fprintf(stderr, "usage: %s [criterion 1-10]...\n", argv[0]);
      return 2;
    }
    selected.insert(static_cast<int>(id));
  }
  int failed = 0;
  for (const auto& cr : all) {
    if (!selected.empty() && !selected.count(cr.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.limit_s) {
      o.pass = false;
      o.detail += "; runtime over limit";
    }
    std::printf("criterion %d (%s): %s  %s  [%.2f s, limit %.0f s]\n", cr.id, cr.name, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, cr.limit_s);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
