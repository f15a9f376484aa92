#include <random>

#include <gtest/gtest.h>

#include "cellsleep/env.hpp"
#include "cellsleep/policies.hpp"

using namespace cellsleep;

namespace {

EnvConfig quiet_config() {
  EnvConfig cfg;
  cfg.profile = traffic::synth_profile({0.0, 0.0, 0.0}, 0.1, 72);
  cfg.episode_s = 2.0;
  return cfg;
}

}  // namespace

TEST(PolicyNames, RoundTrip) {
  for (auto k : {PolicyKind::kAlwaysOn, PolicyKind::kAutoSm1, PolicyKind::kRandom, PolicyKind::kMappo})
    EXPECT_EQ(parse_policy_kind(to_string(k)), k);
  EXPECT_THROW(parse_policy_kind("sometimes-on"), ConfigError);
  EXPECT_THROW(Policy(PolicyKind::kMappo), ConfigError);
}

TEST(AlwaysOn, TargetsAwakeAndGrowsArray) {
  NetworkEnv env(quiet_config());
  for (int i = 0; i < 12; ++i) env.apply_actions(JointAction(7, {-1, 0}));
  for (const auto& bs : env.bs_states()) ASSERT_EQ(bs.m_cfg, 16);
  int steps = 0;
  while (env.bs_states()[0].m_cfg < 64) {
    const auto a = always_on(make_policy_observation(env));
    for (const auto& x : a) EXPECT_EQ(x.sleep_target, 0);
    env.step(a);
    ++steps;
  }
  EXPECT_EQ(steps, (64 - 16 + 3) / 4);
  for (const auto& bs : env.bs_states()) EXPECT_EQ(bs.m_cfg, 64);
}

TEST(AutoSm1, IdleBsSleepsAndWakesForCoverage) {
  EnvConfig cfg = quiet_config();
  cfg.topology = make_custom_topology({{0, 0}, {400, 0}}, traffic::Area{}, 400.0);
  NetworkEnv env(cfg);
  auto a = auto_sm1(make_policy_observation(env));
  EXPECT_EQ(a[0].sleep_target, 1);
  EXPECT_EQ(a[1].sleep_target, 1);
  EXPECT_EQ(a[0].antenna_delta, 0);
  env.step(a);
  EXPECT_EQ(env.bs_states()[0].sleep_level, 1);

  env.add_ue(10.0, 0.0, 2);  // inside BS 0's coverage
  a = auto_sm1(make_policy_observation(env));
  EXPECT_EQ(a[0].sleep_target, 0);
  EXPECT_EQ(a[1].sleep_target, 1);
  env.apply_actions(a);
  env.micro_step();  // 1 ms activation latency
  EXPECT_EQ(env.ues().front().phase, traffic::UePhase::kIdle);
  env.micro_step();
  EXPECT_EQ(env.ues().front().phase, traffic::UePhase::kServed);
  EXPECT_EQ(env.ues().front().serving_bs, 0);
}

TEST(AutoSm1, AntennaComponentFromActor) {
  NetworkEnv env(quiet_config());
  marl::Mlp actor({kAgentObsWidth, kNumActions});
  actor.bias(0)[action_index({-1, 3})] = 5.0;
  const auto a = auto_sm1(make_policy_observation(env), &actor);
  for (const auto& x : a) {
    EXPECT_EQ(x.antenna_delta, -1);
    EXPECT_EQ(x.sleep_target, 1);  // sleep stays rule-based
  }
}

TEST(RandomPolicy, ReproducibleWithSeed) {
  std::mt19937_64 a(77), b(77);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(random_policy(7, a), random_policy(7, b));
}

TEST(MappoPolicy, GreedyPicksModeAndChecksWidths) {
  NetworkEnv env(quiet_config());
  marl::Mlp actor({kAgentObsWidth, kNumActions});
  actor.bias(0)[action_index({+1, 2})] = 20.0;
  std::mt19937_64 rng(1);
  for (const auto& x : mappo_policy(actor, make_policy_observation(env), rng, true))
    EXPECT_EQ(x, (AgentAction{+1, 2}));
  // with a +20 logit margin sampling is effectively deterministic
  for (const auto& x : mappo_policy(actor, make_policy_observation(env), rng, false))
    EXPECT_EQ(x, (AgentAction{+1, 2}));
  marl::Mlp wrong({kAgentObsWidth + 1, kNumActions});
  EXPECT_THROW(mappo_policy(wrong, make_policy_observation(env), rng, true), ModelMismatch);
}

TEST(Dominance, AutoSm1NeverDrawsMoreThanAlwaysOn) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    EnvConfig cfg;
    cfg.episode_s = 3.0;
    cfg.day_length_s = 3.0;
    NetworkEnv on(cfg), sm(cfg);
    on.reset(seed);
    sm.reset(seed);
    std::mt19937_64 rng(0);
    const Policy p_on(PolicyKind::kAlwaysOn), p_sm(PolicyKind::kAutoSm1);
    while (!on.done()) {
      const auto r_on = on.step(p_on.act(make_policy_observation(on), rng));
      const auto r_sm = sm.step(p_sm.act(make_policy_observation(sm), rng));
      EXPECT_LE(r_sm.interval.avg_pc_w, r_on.interval.avg_pc_w + 1e-9);
      bool some_idle = false;
      for (const auto& bs : sm.bs_states()) some_idle |= bs.sleep_level > 0;
      if (some_idle) EXPECT_LT(r_sm.interval.avg_pc_w, r_on.interval.avg_pc_w);
    }
  }
}
