#pragma once

// Link budget and power consumption for ZF massive-MIMO base stations with
// advanced sleep modes. Everything here is a pure function of its arguments.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellsleep/errors.hpp"

namespace cellsleep::radio {

inline constexpr int kNumSleepLevels = 4;

struct RadioParams {
  double bandwidth_hz = 20e6;
  double carrier_freq_ghz = 5.0;
  double noise_psd_db = -204.0;  // N0, dB·J
  double noise_figure_db = 7.0;  // N_B, dB
  double shadow_sigma_db = 7.82;
  double pa_tx_power_w = 0.1;  // average transmit power per antenna
  double p_fixed_w = 18.0;     // load-independent power P_o
  double pa_efficiency = 0.4;
  double bb_coeff_m_w = 0.3;  // baseband W per active antenna
  double bb_coeff_k_w = 0.2;  // baseband W per served UE
  double bs_height_m = 30.0;
  double ue_height_m = 1.5;
  int m_min = 16;
  int m_max = 64;
  int antenna_step = 4;

  // Throws ConfigError naming the first offending field.
  void validate() const {
    auto fail = [](const char* field, const char* what) {
      throw ConfigError(what, std::string("/radio/") + field);
    };
    if (!(bandwidth_hz > 0) || !std::isfinite(bandwidth_hz)) fail("bandwidth_hz", "must be positive");
    if (!(carrier_freq_ghz > 0)) fail("carrier_freq_ghz", "must be positive");
    if (!(shadow_sigma_db >= 0)) fail("shadow_sigma_db", "must be nonnegative");
    if (!(pa_tx_power_w > 0)) fail("pa_tx_power_w", "must be positive");
    if (!(p_fixed_w >= 0)) fail("p_fixed_w", "must be nonnegative");
    if (!(pa_efficiency > 0 && pa_efficiency <= 1)) fail("pa_efficiency", "must lie in (0, 1]");
    if (!(bb_coeff_m_w >= 0)) fail("bb_coeff_m_w", "must be nonnegative");
    if (!(bb_coeff_k_w >= 0)) fail("bb_coeff_k_w", "must be nonnegative");
    if (!(bs_height_m >= 0) || !(ue_height_m >= 0)) fail("bs_height_m", "heights must be nonnegative");
    if (m_min < 1) fail("m_min", "must be >= 1");
    if (m_max < m_min) fail("m_max", "must be >= m_min");
    if (antenna_step < 1) fail("antenna_step", "must be >= 1");
    if ((m_max - m_min) % antenna_step != 0) fail("antenna_step", "must divide m_max - m_min");
  }
};

// Activation latency and power discount per sleep level (level 0 = active).
struct SleepModeTable {
  std::array<double, kNumSleepLevels> latency_ms{0.0, 1.0, 10.0, 100.0};
  std::array<double, kNumSleepLevels> discount{1.0, 0.69, 0.5, 0.29};

  void validate() const {
    if (latency_ms[0] != 0.0) throw ConfigError("level 0 latency must be 0", "/sleep_modes/latency_ms");
    if (discount[0] != 1.0) throw ConfigError("level 0 discount must be 1", "/sleep_modes/discount");
    for (int s = 1; s < kNumSleepLevels; ++s) {
      if (!(latency_ms[s] > latency_ms[s - 1]))
        throw ConfigError("latency must increase strictly with level", "/sleep_modes/latency_ms");
      if (!(discount[s] < discount[s - 1] && discount[s] > 0))
        throw ConfigError("discount must decrease strictly within (0, 1]", "/sleep_modes/discount");
    }
  }
};

// Large-scale fading between one BS and one UE.
struct LinkGain {
  double beta = 0.0;  // linear power gain
  double distance_m = 1.0;
  double shadow_db = 0.0;
};

// Urban-micro NLOS path loss, returned as a (negative) gain in dB.
inline double path_loss_db(double distance_m, double carrier_freq_ghz) {
  if (!std::isfinite(distance_m) || distance_m <= 0.0)
    throw std::domain_error("path_loss_db: distance must be positive and finite");
  if (!std::isfinite(carrier_freq_ghz) || carrier_freq_ghz <= 0.0)
    throw std::domain_error("path_loss_db: carrier frequency must be positive");
  return -35.3 * std::log10(distance_m) - 22.4 - 21.3 * std::log10(carrier_freq_ghz);
}

template <class Rng>
double sample_shadow_db(Rng& rng, double sigma_db) {
  if (sigma_db == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, sigma_db);
  return normal(rng);
}

inline LinkGain make_link_gain(double distance_m, double shadow_db, double carrier_freq_ghz) {
  return {std::pow(10.0, (path_loss_db(distance_m, carrier_freq_ghz) + shadow_db) / 10.0),
          distance_m, shadow_db};
}

// sigma^2 = B * 10^((N0 + N_B) / 10)
inline double noise_power_w(const RadioParams& p) {
  return p.bandwidth_hz * std::pow(10.0, (p.noise_psd_db + p.noise_figure_db) / 10.0);
}

// What a UE's receiver sees of one base station during a step.
struct TxState {
  int antennas = 0;        // M_c (0 while asleep)
  int served = 0;          // K_c
  bool active = true;      // awake and not transitioning
  double output_w = 0.0;   // p_c, total radiated power
};

// Effective ZF SINR of a UE served by `serving` with allocated power
// `alloc_w`. `betas[c]` is the UE's gain to BS c. Inactive BSs do not
// interfere.
inline double sinr(std::size_t serving, std::span<const TxState> bss,
                   std::span<const double> betas, double alloc_w, double noise_w) {
  if (serving >= bss.size() || betas.size() != bss.size())
    throw ContractViolation("sinr: serving index or gain vector out of range");
  const TxState& own = bss[serving];
  if (!own.active) throw ContractViolation("sinr: serving BS is not active");
  if (own.antennas <= own.served) throw ContractViolation("sinr: ZF requires M > K");
  if (alloc_w < 0.0) throw ContractViolation("sinr: negative allocated power");
  double interference = 0.0;
  for (std::size_t c = 0; c < bss.size(); ++c) {
    if (c == serving || !bss[c].active) continue;
    interference += betas[c] * bss[c].output_w;
  }
  const double signal = static_cast<double>(own.antennas - own.served) * betas[serving] * alloc_w;
  return signal / (interference + noise_w);
}

// Shannon rate B log2(1 + SINR).
inline double achievable_rate_bps(double sinr_value, double bandwidth_hz) {
  if (!(sinr_value >= 0.0)) throw std::domain_error("achievable_rate_bps: negative SINR");
  if (sinr_value == 0.0) return 0.0;
  return bandwidth_hz * std::log2(1.0 + sinr_value);
}

// A served UE's outstanding request, as seen by its BS's power allocator.
struct ServedDemand {
  double remaining_bits = 0.0;
  double remaining_time_s = 0.0;
};

// Splits `total_w` across UEs with weights 2^(r_min / B), where
// r_min = remaining bits / remaining time. The exponent is a spectral
// efficiency, so it is shifted by its maximum before exponentiation.
inline std::vector<double> allocate_power(double total_w, std::span<const ServedDemand> ues,
                                          double bandwidth_hz) {
  std::vector<double> out(ues.size(), 0.0);
  if (ues.empty()) return out;
  std::vector<double> eff(ues.size());
  double max_eff = -INFINITY;
  for (std::size_t i = 0; i < ues.size(); ++i) {
    if (!(ues[i].remaining_time_s > 0.0))
      throw ContractViolation("allocate_power: UE with no remaining time must be finalized first");
    eff[i] = ues[i].remaining_bits / ues[i].remaining_time_s / bandwidth_hz;
    max_eff = std::max(max_eff, eff[i]);
  }
  double norm = 0.0;
  for (std::size_t i = 0; i < ues.size(); ++i) {
    out[i] = std::exp2(eff[i] - max_eff);
    norm += out[i];
  }
  for (double& p : out) p = p / norm * total_w;
  return out;
}

// P = delta_s * (M * P_PA + P_BB(K, M) + P_o). A sleeping BS has M = K = 0.
inline double bs_power_w(int served, int antennas, int sleep_level, const RadioParams& p,
                         const SleepModeTable& table) {
  if (sleep_level < 0 || sleep_level >= kNumSleepLevels)
    throw ContractViolation("bs_power_w: sleep level out of range");
  if (served < 0 || antennas < 0) throw ContractViolation("bs_power_w: negative load");
  if (sleep_level > 0) {
    if (served > 0) throw ContractViolation("bs_power_w: sleeping BS cannot serve UEs");
    served = 0;
    antennas = 0;
  }
  const double pa = p.pa_tx_power_w / p.pa_efficiency;
  const double bb = p.bb_coeff_m_w * antennas + p.bb_coeff_k_w * served;
  return table.discount[sleep_level] * (antennas * pa + bb + p.p_fixed_w);
}

// Power of an idle, fully-equipped awake BS; the reference for normalizing PC.
inline double reference_power_w(const RadioParams& p, const SleepModeTable& table) {
  return bs_power_w(0, p.m_max, 0, p, table);
}

}  // namespace cellsleep::radio
