// Runs the built-in baselines on a short 7-BS episode and prints the network
// metrics of each, split into low- and high-traffic thirds of the day.
//
//   compare_baselines [episode_s] [seed]

#include <cstdio>
#include <cstdlib>
#include <random>

#include "cellsleep/env.hpp"
#include "cellsleep/policies.hpp"

using namespace cellsleep;

int main(int argc, char** argv) {
  EnvConfig cfg;
  cfg.episode_s = argc > 1 ? std::atof(argv[1]) : 60.0;
  cfg.day_length_s = cfg.episode_s;
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;

  for (PolicyKind kind : {PolicyKind::kAlwaysOn, PolicyKind::kAutoSm1, PolicyKind::kRandom}) {
    NetworkEnv env(cfg);
    env.reset(seed);
    Policy policy(kind);
    std::mt19937_64 rng(seed);
    MetricsWindow low, high;
    while (!env.done()) {
      const double phase = env.day_phase(env.sim_time_s());
      const StepResult r = env.step(policy.act(make_policy_observation(env), rng));
      if (phase < 1.0 / 6.0 || phase >= 5.0 / 6.0) low.merge(r.window);
      if (phase >= 1.0 / 3.0 && phase < 2.0 / 3.0) high.merge(r.window);
    }
    const Metrics all = metrics(env.episode_window());
    const Metrics lo = metrics(low), hi = metrics(high);
    std::printf("%-10s pc %.1f W  drop %.4f  rate %.1f Mb/s  ee %.3g b/J | low pc %.1f drop %.4f | high pc %.1f drop %.4f\n",
                policy.name().c_str(), all.avg_pc_w, all.drop_ratio.value_or(0.0), all.sum_rate_bps / 1e6,
                all.ee_bits_per_j.value_or(0.0), lo.avg_pc_w, lo.drop_ratio.value_or(0.0), hi.avg_pc_w,
                hi.drop_ratio.value_or(0.0));
  }
  return 0;
}
