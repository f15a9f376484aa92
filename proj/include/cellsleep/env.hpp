#pragma once

// Multi-cell network environment: 1 ms micro steps, joint BS actions every
// agent interval, shared reward, local and centralized observations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cellsleep/errors.hpp"
#include "cellsleep/radio.hpp"
#include "cellsleep/topology.hpp"
#include "cellsleep/traffic.hpp"

namespace cellsleep {

// ---------------------------------------------------------------------------
// Actions

inline constexpr int kNumAntennaDeltas = 3;
inline constexpr int kNumActions = kNumAntennaDeltas * radio::kNumSleepLevels;

struct AgentAction {
  int antenna_delta = 0;  // -1, 0, +1 in units of the antenna step
  int sleep_target = 0;   // 0..3

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

using JointAction = std::vector<AgentAction>;

// index = (delta + 1) * 4 + sleep_target
inline AgentAction action_from_index(int index) {
  if (index < 0 || index >= kNumActions) throw ContractViolation("action index out of range");
  return {index / radio::kNumSleepLevels - 1, index % radio::kNumSleepLevels};
}

inline int action_index(const AgentAction& a) {
  if (a.antenna_delta < -1 || a.antenna_delta > 1 || a.sleep_target < 0 ||
      a.sleep_target >= radio::kNumSleepLevels)
    throw ContractViolation("action outside the 12-element space");
  return (a.antenna_delta + 1) * radio::kNumSleepLevels + a.sleep_target;
}

// ---------------------------------------------------------------------------
// Configuration

struct RewardWeights {
  double w_qos = 4.0;
  double w_pc = 1.0;
  double phi = 0.005;
};

struct ObservationScales {
  double ue_cap = 50.0;
  double sinr_ref = 100.0;
};

struct EnvConfig {
  Topology topology = make_hex_topology(7);
  radio::RadioParams radio;
  radio::SleepModeTable sleep;
  traffic::TrafficProfile profile =
      traffic::synth_profile({60.0, 120.0, 120.0}, 0.1, 72);
  double day_length_s = 144.0;  // simulated seconds per profile period
  double file_bits = 3e6;
  RewardWeights reward;
  ObservationScales obs;
  double episode_s = 1008.0;
  int step_ms = 1;
  int agent_interval_ms = 20;

  std::int64_t micro_steps_per_interval() const { return agent_interval_ms / step_ms; }
  std::int64_t agent_steps_per_episode() const {
    return std::llround(episode_s * 1000.0) / agent_interval_ms;
  }
  std::int64_t micro_steps_per_episode() const {
    return agent_steps_per_episode() * micro_steps_per_interval();
  }
  // Profile seconds elapsed per simulated second.
  double profile_time_scale() const { return profile.period_s() / day_length_s; }

  void validate() const {
    radio.validate();
    sleep.validate();
    profile.validate();
    if (topology.num_bs() < 1) throw ConfigError("needs at least one BS", "/topology");
    if (!(day_length_s > 0)) throw ConfigError("must be positive", "/traffic/day_length_s");
    if (!(file_bits > 0)) throw ConfigError("must be positive", "/traffic/file_bits");
    if (step_ms < 1) throw ConfigError("must be >= 1", "/sim/step_ms");
    if (agent_interval_ms < step_ms || agent_interval_ms % step_ms != 0)
      throw ConfigError("must be a positive multiple of step_ms", "/sim/agent_interval_ms");
    if (!(episode_s > 0) || std::llround(episode_s * 1000.0) % agent_interval_ms != 0)
      throw ConfigError("must be a positive whole number of agent intervals", "/sim/episode_s");
    if (!(obs.ue_cap > 0) || !(obs.sinr_ref > 0))
      throw ConfigError("scales must be positive", "/observation");
    for (int s = 1; s < radio::kNumSleepLevels; ++s)
      if (std::fmod(sleep.latency_ms[s], step_ms) != 0.0)
        throw ConfigError("latencies must be whole steps", "/sleep_modes/latency_ms");
  }
};

// ---------------------------------------------------------------------------
// Reward

// Per-UE QoS term: rho - 1 below the requirement, phi (1 - 1/rho) above it.
inline double qos_reward(double rho, double phi) {
  if (rho < 1.0) return rho - 1.0;
  return phi * (1.0 - 1.0 / rho);
}

struct RewardRecord {
  double xi = 0.0;
  double pc_norm = 0.0;
  double reward = 0.0;
  std::vector<double> per_ue;
};

// `avg_pc_w` is the network's average PC over the interval; it is normalized
// by C * P_ref so that the published weights balance a QoS term in [-1, phi].
inline RewardRecord compute_reward(std::span<const traffic::UeOutcome> outcomes, double avg_pc_w,
                                   int num_bs, double ref_power_w, const RewardWeights& w) {
  RewardRecord r;
  r.per_ue.reserve(outcomes.size());
  for (const auto& o : outcomes) r.per_ue.push_back(qos_reward(o.rate_ratio(), w.phi));
  if (!r.per_ue.empty()) {
    double sum = 0.0;
    for (double v : r.per_ue) sum += v;
    r.xi = sum / static_cast<double>(r.per_ue.size());
  }
  r.pc_norm = avg_pc_w / (num_bs * ref_power_w);
  r.reward = w.w_qos * r.xi - w.w_pc * r.pc_norm;
  return r;
}

// ---------------------------------------------------------------------------
// Metrics

// Accumulators over an arbitrary window of micro steps.
struct MetricsWindow {
  double energy_j = 0.0;
  double duration_s = 0.0;
  double delivered_bits = 0.0;
  double rate_integral_bits = 0.0;  // integral of instantaneous sum rate
  double departed_file_bits = 0.0;
  double departed_dropped_bits = 0.0;
  std::int64_t finished = 0;
  std::int64_t dropped = 0;

  void merge(const MetricsWindow& o) {
    energy_j += o.energy_j;
    duration_s += o.duration_s;
    delivered_bits += o.delivered_bits;
    rate_integral_bits += o.rate_integral_bits;
    departed_file_bits += o.departed_file_bits;
    departed_dropped_bits += o.departed_dropped_bits;
    finished += o.finished;
    dropped += o.dropped;
  }
};

struct Metrics {
  double avg_pc_w = 0.0;
  std::optional<double> drop_ratio;  // absent without departures
  double sum_rate_bps = 0.0;
  std::optional<double> ee_bits_per_j;  // absent for a zero-energy window
};

inline Metrics metrics(const MetricsWindow& w) {
  Metrics m;
  if (w.duration_s > 0) {
    m.avg_pc_w = w.energy_j / w.duration_s;
    m.sum_rate_bps = w.rate_integral_bits / w.duration_s;
  }
  if (w.departed_file_bits > 0) m.drop_ratio = w.departed_dropped_bits / w.departed_file_bits;
  if (w.energy_j > 0) m.ee_bits_per_j = w.delivered_bits / w.energy_j;
  return m;
}

// ---------------------------------------------------------------------------
// State

struct BsState {
  int index = 0;
  int m_cfg = 64;      // configured antennas
  int sleep_level = 0;
  bool waking = false;
  double wake_timer_ms = 0.0;
  int wake_target = 0;
  int served = 0;      // K_c
  int queued = 0;      // UEs whose best active BS is this one but lacks headroom
  double interval_energy_j = 0.0;

  bool active() const { return sleep_level == 0 && !waking; }
  int active_antennas() const { return active() ? m_cfg : 0; }
};

// What the baseline controllers may inspect besides the observation vectors.
struct BsView {
  int m_cfg = 0;
  int sleep_level = 0;
  bool waking = false;
  int served = 0;
  int queued = 0;
  int coverage = 0;  // present UEs whose strongest-gain BS is this one
};

// Interval summary from which observations derive.
struct IntervalStats {
  double total_pc_w = 0.0;
  std::vector<double> bs_pc_w;
  std::int64_t finished = 0;
  std::int64_t dropped = 0;
  double mean_rho_finished = 0.0;
  double mean_rho_dropped = 0.0;
  double req_rate_idle_bps = 0.0;
  double req_rate_queued_bps = 0.0;
  double req_rate_served_bps = 0.0;
  double sum_rate_bps = 0.0;
};

struct StepResult {
  RewardRecord reward;
  Metrics interval;
  MetricsWindow window;
  std::vector<traffic::UeOutcome> outcomes;
  double time_s = 0.0;
  bool done = false;
};

enum class CriticVariant { kFull, kNeighbor };

inline constexpr int kGlobalObsWidth = 9;
inline constexpr int kLocalObsWidth = 5;
inline constexpr int kAgentObsWidth = kGlobalObsWidth + kLocalObsWidth;

inline int critic_input_width(CriticVariant v, int num_bs) {
  return v == CriticVariant::kFull ? kGlobalObsWidth + kLocalObsWidth * num_bs
                                   : kGlobalObsWidth + kLocalObsWidth * (1 + kNumNeighbors);
}

class NetworkEnv {
 public:
  explicit NetworkEnv(EnvConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
    ref_power_w_ = radio::reference_power_w(cfg_.radio, cfg_.sleep);
    noise_w_ = radio::noise_power_w(cfg_.radio);
    rate_scale_bps_ = cfg_.topology.num_bs() * cfg_.radio.bandwidth_hz * std::log2(1.0 + cfg_.obs.sinr_ref);
    reset(0);
  }

  const EnvConfig& config() const { return cfg_; }
  int num_bs() const { return cfg_.topology.num_bs(); }
  double reference_power_w() const { return ref_power_w_; }

  // All BSs awake with M_max antennas, no UEs, zeroed statistics.
  void reset(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
    rng_.seed(seq);
    bs_.assign(num_bs(), BsState{});
    for (int c = 0; c < num_bs(); ++c) {
      bs_[c].index = c;
      bs_[c].m_cfg = cfg_.radio.m_max;
    }
    ues_.clear();
    next_ue_id_ = 0;
    micro_step_ = 0;
    agent_step_ = 0;
    episode_ = {};
    interval_ = {};
    interval_outcomes_.clear();
    last_ = {};
    last_.bs_pc_w.assign(num_bs(), 0.0);
    last_step_power_w_ = 0.0;
    // Before any interval has run, PC features report the current draw.
    for (int c = 0; c < num_bs(); ++c) {
      last_.bs_pc_w[c] = bs_power(bs_[c]);
      last_.total_pc_w += last_.bs_pc_w[c];
    }
  }

  // Applies one joint action: antenna deltas (clamped to [M_min, M_max] and
  // never below K + 1), then sleep targets. Deeper sleep is instantaneous
  // and only allowed for a BS serving nobody; shallower targets start a wake
  // transition lasting the current level's activation latency. A BS that is
  // already waking ignores sleep targets.
  void apply_actions(const JointAction& actions) {
    if (static_cast<int>(actions.size()) != num_bs())
      throw ContractViolation("apply_actions: one action per BS required");
    activate_elapsed();
    for (int c = 0; c < num_bs(); ++c) {
      const AgentAction& a = actions[c];
      action_index(a);  // validates
      BsState& bs = bs_[c];
      const int m = std::clamp(bs.m_cfg + a.antenna_delta * cfg_.radio.antenna_step, cfg_.radio.m_min,
                               cfg_.radio.m_max);
      if (m >= bs.served + 1) bs.m_cfg = m;
      if (bs.waking || a.sleep_target == bs.sleep_level) continue;
      if (a.sleep_target > bs.sleep_level) {
        if (bs.served == 0) bs.sleep_level = a.sleep_target;
      } else {
        bs.waking = true;
        bs.wake_target = a.sleep_target;
        bs.wake_timer_ms = cfg_.sleep.latency_ms[bs.sleep_level];
      }
    }
  }

  // Advances the network by one step of `step_ms`.
  void micro_step() {
    const double dt_s = cfg_.step_ms / 1e3;
    const int n = num_bs();

    // 1. wake transitions whose latency has elapsed
    activate_elapsed();

    // 2. arrivals
    {
      const double t_profile = sim_time_s() * cfg_.profile_time_scale();
      std::array<double, traffic::kNumCategories> lambda{};
      for (int z = 0; z < traffic::kNumCategories; ++z)
        lambda[z] = traffic::arrival_rate(traffic::density_at(cfg_.profile, t_profile, z),
                                          cfg_.topology.area.km2(), cfg_.file_bits / 1e6, dt_s);
      traffic::ArrivalContext ctx{cfg_.topology.area, cfg_.topology.positions, &cfg_.radio,
                                  cfg_.file_bits, micro_step_};
      auto fresh = traffic::sample_arrivals(rng_, lambda, ctx, next_ue_id_);
      for (auto& ue : fresh) ues_.push_back(std::move(ue));
    }

    // 3. association of idle and queued UEs
    for (auto& bs : bs_) bs.queued = 0;
    for (auto& ue : ues_)
      if (ue.phase == traffic::UePhase::kIdle || ue.phase == traffic::UePhase::kQueued) associate(ue);

    // 4. power allocation per active BS
    tx_.assign(n, {});
    for (int c = 0; c < n; ++c) {
      const BsState& bs = bs_[c];
      tx_[c].active = bs.active();
      tx_[c].antennas = bs.active_antennas();
      tx_[c].served = bs.served;
      tx_[c].output_w = (bs.active() && bs.served > 0) ? bs.m_cfg * cfg_.radio.pa_tx_power_w : 0.0;
    }
    alloc_w_.assign(ues_.size(), 0.0);
    for (int c = 0; c < n; ++c) {
      if (bs_[c].served == 0) continue;
      demand_.clear();
      members_.clear();
      for (std::size_t i = 0; i < ues_.size(); ++i) {
        const auto& ue = ues_[i];
        if (ue.phase == traffic::UePhase::kServed && *ue.serving_bs == c) {
          demand_.push_back({ue.remaining_bits, (ue.budget_ms() - ue.elapsed_ms) / 1e3});
          members_.push_back(i);
        }
      }
      const auto p = radio::allocate_power(tx_[c].output_w, demand_, cfg_.radio.bandwidth_hz);
      for (std::size_t j = 0; j < members_.size(); ++j) alloc_w_[members_[j]] = p[j];
    }

    // 5-6. rates and demand/delay update
    double sum_rate = 0.0;
    double delivered = 0.0;
    for (std::size_t i = 0; i < ues_.size(); ++i) {
      auto& ue = ues_[i];
      double rate = 0.0;
      if (ue.phase == traffic::UePhase::kServed) {
        betas_.resize(n);
        for (int c = 0; c < n; ++c) betas_[c] = ue.gains[c].beta;
        const double s = radio::sinr(*ue.serving_bs, tx_, betas_, alloc_w_[i], noise_w_);
        rate = radio::achievable_rate_bps(s, cfg_.radio.bandwidth_hz);
      }
      const double before = ue.remaining_bits;
      traffic::update_demand(ue, rate, dt_s);
      sum_rate += rate;
      delivered += before - ue.remaining_bits;
    }

    // 7. energy, using the load carried during this step
    double power = 0.0;
    for (auto& bs : bs_) {
      const double p = bs_power(bs);
      bs.interval_energy_j += p * dt_s;
      power += p;
    }

    // 8. departures
    for (auto& ue : ues_) {
      const std::optional<int> serving = ue.serving_bs;
      if (auto out = traffic::finalize_if_departing(ue)) {
        if (serving) --bs_[*serving].served;
        interval_.departed_file_bits += out->file_bits;
        interval_.departed_dropped_bits += out->dropped_bits;
        (out->finished ? interval_.finished : interval_.dropped) += 1;
        interval_outcomes_.push_back(*out);
      }
    }
    std::erase_if(ues_, [](const traffic::UeState& u) { return u.phase == traffic::UePhase::kDeparted; });

    for (auto& bs : bs_)
      if (bs.waking) bs.wake_timer_ms -= cfg_.step_ms;

    last_step_power_w_ = power;
    interval_.energy_j += power * dt_s;
    interval_.duration_s += dt_s;
    interval_.delivered_bits += delivered;
    interval_.rate_integral_bits += sum_rate * dt_s;
    ++micro_step_;
    check_invariants();
  }

  // One agent step: apply the joint action, run one interval of micro steps,
  // close the interval and compute the shared reward.
  StepResult step(const JointAction& actions) {
    if (done()) throw ContractViolation("step: episode already finished");
    apply_actions(actions);
    for (std::int64_t i = 0; i < cfg_.micro_steps_per_interval(); ++i) micro_step();
    return close_interval();
  }

  // Places a UE of `category` at (x, y) with the given per-BS shadowing
  // (zero if empty). It is associated at the next micro step. Returns its id.
  std::uint64_t add_ue(double x_m, double y_m, int category, std::vector<double> shadow_db = {}) {
    if (category < 0 || category >= traffic::kNumCategories) throw ContractViolation("add_ue: bad category");
    if (shadow_db.empty()) shadow_db.assign(num_bs(), 0.0);
    traffic::UeState ue;
    ue.id = next_ue_id_++;
    ue.x_m = x_m;
    ue.y_m = y_m;
    ue.category = category;
    ue.file_bits = cfg_.file_bits;
    ue.remaining_bits = cfg_.file_bits;
    ue.arrival_step = micro_step_;
    traffic::attach_gains(ue, cfg_.topology.positions, cfg_.radio, shadow_db);
    ues_.push_back(std::move(ue));
    return ues_.back().id;
  }

  bool done() const { return agent_step_ >= cfg_.agent_steps_per_episode(); }
  std::int64_t agent_step() const { return agent_step_; }
  std::int64_t micro_step_count() const { return micro_step_; }
  double sim_time_s() const { return static_cast<double>(micro_step_) * cfg_.step_ms / 1e3; }
  // Position within the diurnal cycle, in [0, 1).
  double day_phase(double t_s) const {
    const double p = std::fmod(t_s, cfg_.day_length_s) / cfg_.day_length_s;
    return p < 0 ? p + 1.0 : p;
  }

  const std::vector<BsState>& bs_states() const { return bs_; }
  const std::vector<traffic::UeState>& ues() const { return ues_; }
  const IntervalStats& last_interval() const { return last_; }
  const MetricsWindow& episode_window() const { return episode_; }
  double last_step_power_w() const { return last_step_power_w_; }
  double current_power_w() const {
    double p = 0.0;
    for (const auto& bs : bs_) p += bs_power(bs);
    return p;
  }

  std::vector<BsView> bs_views() const {
    std::vector<BsView> out(num_bs());
    for (int c = 0; c < num_bs(); ++c)
      out[c] = {bs_[c].m_cfg, bs_[c].sleep_level, bs_[c].waking, bs_[c].served, bs_[c].queued, 0};
    for (const auto& ue : ues_) ++out[ue.best_bs].coverage;
    return out;
  }

  // Observation of agent c: global block followed by its local block.
  std::vector<double> observe(int c) const {
    std::vector<double> o;
    o.reserve(kAgentObsWidth);
    append_global(o);
    append_local(o, c);
    return o;
  }

  std::vector<double> global_observe() const {
    std::vector<double> o;
    o.reserve(critic_input_width(CriticVariant::kFull, num_bs()));
    append_global(o);
    for (int c = 0; c < num_bs(); ++c) append_local(o, c);
    return o;
  }

  // Global block, own local block, then the six closest neighbors' local
  // blocks in table order (zero-padded for layouts with fewer BSs).
  std::vector<double> neighbor_observe(int c) const {
    std::vector<double> o;
    o.reserve(critic_input_width(CriticVariant::kNeighbor, num_bs()));
    append_global(o);
    append_local(o, c);
    const auto& nb = cfg_.topology.neighbors[c];
    for (int j = 0; j < kNumNeighbors; ++j) {
      if (j < static_cast<int>(nb.size())) {
        append_local(o, nb[j]);
      } else {
        o.insert(o.end(), kLocalObsWidth, 0.0);
      }
    }
    return o;
  }

  std::vector<double> critic_input(int c, CriticVariant v) const {
    return v == CriticVariant::kFull ? global_observe() : neighbor_observe(c);
  }

 private:
  double bs_power(const BsState& bs) const {
    if (bs.active()) return radio::bs_power_w(bs.served, bs.m_cfg, 0, cfg_.radio, cfg_.sleep);
    return radio::bs_power_w(0, 0, bs.sleep_level, cfg_.radio, cfg_.sleep);
  }

  void activate_elapsed() {
    for (auto& bs : bs_) {
      if (bs.waking && bs.wake_timer_ms <= 0.0) {
        bs.waking = false;
        bs.wake_timer_ms = 0.0;
        bs.sleep_level = bs.wake_target;
      }
    }
  }

  // Strongest-gain active BS with ZF headroom serves the UE; lacking
  // headroom the UE queues at the strongest active BS; with no active BS it
  // stays idle.
  void associate(traffic::UeState& ue) {
    int best_free = -1, best_any = -1;
    double beta_free = -1.0, beta_any = -1.0;
    for (int c = 0; c < num_bs(); ++c) {
      const BsState& bs = bs_[c];
      if (!bs.active()) continue;
      const double b = ue.gains[c].beta;
      if (b > beta_any) {
        beta_any = b;
        best_any = c;
      }
      if (bs.served < bs.m_cfg - 1 && b > beta_free) {
        beta_free = b;
        best_free = c;
      }
    }
    if (best_free >= 0) {
      ue.phase = traffic::UePhase::kServed;
      ue.serving_bs = best_free;
      ++bs_[best_free].served;
    } else if (best_any >= 0) {
      ue.phase = traffic::UePhase::kQueued;
      ue.serving_bs.reset();
      ++bs_[best_any].queued;
    } else {
      ue.phase = traffic::UePhase::kIdle;
      ue.serving_bs.reset();
    }
  }

  StepResult close_interval() {
    const int n = num_bs();
    StepResult out;
    const double dur = interval_.duration_s;

    IntervalStats st;
    st.bs_pc_w.resize(n);
    for (int c = 0; c < n; ++c) {
      st.bs_pc_w[c] = bs_[c].interval_energy_j / dur;
      bs_[c].interval_energy_j = 0.0;
    }
    st.total_pc_w = interval_.energy_j / dur;
    st.finished = interval_.finished;
    st.dropped = interval_.dropped;
    double rho_f = 0.0, rho_d = 0.0;
    for (const auto& o : interval_outcomes_) (o.finished ? rho_f : rho_d) += o.rate_ratio();
    if (st.finished > 0) st.mean_rho_finished = rho_f / static_cast<double>(st.finished);
    if (st.dropped > 0) st.mean_rho_dropped = rho_d / static_cast<double>(st.dropped);
    for (const auto& ue : ues_) {
      const double r_min = ue.remaining_bits / ((ue.budget_ms() - ue.elapsed_ms) / 1e3);
      switch (ue.phase) {
        case traffic::UePhase::kIdle: st.req_rate_idle_bps += r_min; break;
        case traffic::UePhase::kQueued: st.req_rate_queued_bps += r_min; break;
        case traffic::UePhase::kServed: st.req_rate_served_bps += r_min; break;
        case traffic::UePhase::kDeparted: break;
      }
    }
    st.sum_rate_bps = interval_.rate_integral_bits / dur;
    last_ = std::move(st);

    out.reward = compute_reward(interval_outcomes_, last_.total_pc_w, n, ref_power_w_, cfg_.reward);
    out.interval = metrics(interval_);
    out.window = interval_;
    out.outcomes = std::move(interval_outcomes_);
    interval_outcomes_.clear();
    episode_.merge(interval_);
    interval_ = {};
    ++agent_step_;
    out.time_s = sim_time_s();
    out.done = done();
    return out;
  }

  void append_global(std::vector<double>& o) const {
    const double pc_scale = num_bs() * ref_power_w_;
    o.push_back(last_.total_pc_w / pc_scale);
    o.push_back(static_cast<double>(last_.finished) / cfg_.obs.ue_cap);
    o.push_back(static_cast<double>(last_.dropped) / cfg_.obs.ue_cap);
    // finished requests have rho >= 1; 1 - 1/rho maps them into [0, 1)
    o.push_back(last_.finished > 0 ? 1.0 - 1.0 / last_.mean_rho_finished : 0.0);
    o.push_back(last_.mean_rho_dropped);
    o.push_back(last_.req_rate_idle_bps / rate_scale_bps_);
    o.push_back(last_.req_rate_queued_bps / rate_scale_bps_);
    o.push_back(last_.req_rate_served_bps / rate_scale_bps_);
    o.push_back(last_.sum_rate_bps / rate_scale_bps_);
  }

  void append_local(std::vector<double>& o, int c) const {
    const BsState& bs = bs_[c];
    o.push_back(last_.bs_pc_w[c] / ref_power_w_);
    o.push_back(static_cast<double>(bs.m_cfg) / cfg_.radio.m_max);
    o.push_back(static_cast<double>(bs.sleep_level) / (radio::kNumSleepLevels - 1));
    o.push_back(bs.served / cfg_.obs.ue_cap);
    o.push_back(bs.queued / cfg_.obs.ue_cap);
  }

  void check_invariants() const {
    for (const auto& bs : bs_) {
      if (!bs.active() && bs.served != 0)
        throw InvariantError("BS " + std::to_string(bs.index) + " serves UEs while asleep or waking");
      if (bs.served > bs.m_cfg - 1)
        throw InvariantError("BS " + std::to_string(bs.index) + " exceeds ZF capacity");
    }
  }

  EnvConfig cfg_;
  double ref_power_w_ = 0.0;
  double noise_w_ = 0.0;
  double rate_scale_bps_ = 1.0;
  std::mt19937_64 rng_;
  std::vector<BsState> bs_;
  std::vector<traffic::UeState> ues_;
  std::uint64_t next_ue_id_ = 0;
  std::int64_t micro_step_ = 0;
  std::int64_t agent_step_ = 0;
  MetricsWindow interval_;
  MetricsWindow episode_;
  std::vector<traffic::UeOutcome> interval_outcomes_;
  IntervalStats last_;
  double last_step_power_w_ = 0.0;

  // scratch buffers reused across micro steps
  std::vector<radio::TxState> tx_;
  std::vector<double> alloc_w_;
  std::vector<double> betas_;
  std::vector<radio::ServedDemand> demand_;
  std::vector<std::size_t> members_;
};

}  // namespace cellsleep
