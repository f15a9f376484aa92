#pragma once

// UE arrivals, demand evolution and departure bookkeeping.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cellsleep/errors.hpp"
#include "cellsleep/radio.hpp"

namespace cellsleep::traffic {

inline constexpr int kNumCategories = 3;

struct ServiceCategory {
  int id;  // 1..3
  double delay_budget_ms;
  const char* label;
};

inline constexpr std::array<ServiceCategory, kNumCategories> kCategories{{
    {1, 50.0, "delay-stringent"},
    {2, 150.0, "delay-sensitive"},
    {3, 300.0, "delay-tolerant"},
}};

// Category index 0..2 to its delay budget.
inline double delay_budget_ms(int category) { return kCategories.at(category).delay_budget_ms; }

// Traffic density kappa[category][slot] in Mb/s/km^2, periodic in slots.
struct TrafficProfile {
  double slot_duration_s = 1200.0;
  std::array<std::vector<double>, kNumCategories> densities;

  int period_slots() const { return static_cast<int>(densities[0].size()); }
  double period_s() const { return slot_duration_s * period_slots(); }

  void validate() const {
    if (!(slot_duration_s > 0)) throw ConfigError("must be positive", "/traffic/slot_duration_s");
    const auto n = densities[0].size();
    if (n == 0) throw ConfigError("profile has no slots", "/traffic/densities");
    for (const auto& row : densities) {
      if (row.size() != n) throw ConfigError("categories have different slot counts", "/traffic/densities");
      for (double d : row)
        if (!(d >= 0) || !std::isfinite(d)) throw ConfigError("densities must be finite and >= 0", "/traffic/densities");
    }
  }
};

// Density for `category` (0-based) at profile time `t_s`.
inline double density_at(const TrafficProfile& profile, double t_s, int category) {
  const auto& row = profile.densities.at(category);
  const auto period = static_cast<std::int64_t>(row.size());
  auto slot = static_cast<std::int64_t>(std::floor(t_s / profile.slot_duration_s)) % period;
  if (slot < 0) slot += period;
  return row[static_cast<std::size_t>(slot)];
}

// Sinusoidal diurnal stand-in for measured densities: trough at slot 0, peak
// half a day later.
inline TrafficProfile synth_profile(const std::array<double, kNumCategories>& peak,
                                    double trough_fraction, int slots_per_day,
                                    double slot_duration_s = 1200.0) {
  if (slots_per_day < 1) throw ConfigError("must be >= 1", "/traffic/slots_per_day");
  if (!(trough_fraction >= 0 && trough_fraction <= 1))
    throw ConfigError("must lie in [0, 1]", "/traffic/trough_fraction");
  TrafficProfile profile;
  profile.slot_duration_s = slot_duration_s;
  for (int z = 0; z < kNumCategories; ++z) {
    if (!(peak[z] >= 0)) throw ConfigError("must be >= 0", "/traffic/peak_density");
    const double trough = trough_fraction * peak[z];
    auto& row = profile.densities[z];
    row.resize(slots_per_day);
    for (int slot = 0; slot < slots_per_day; ++slot) {
      const double phase = 2.0 * std::numbers::pi * slot / slots_per_day - std::numbers::pi / 2.0;
      row[slot] = trough + (peak[z] - trough) * (1.0 + std::sin(phase)) / 2.0;
    }
  }
  return profile;
}

// CSV with header `category,slot,density_mbps_km2`; categories are 1-based.
inline TrafficProfile read_profile_csv(std::istream& in, double slot_duration_s = 1200.0) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty traffic profile");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "category,slot,density_mbps_km2")
    throw ConfigError("expected header 'category,slot,density_mbps_km2'", "/traffic/profile_csv");
  struct Row {
    int category;
    int slot;
    double density;
  };
  std::vector<Row> rows;
  int max_slot = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string a, b, c;
    if (!std::getline(fields, a, ',') || !std::getline(fields, b, ',') || !std::getline(fields, c))
      throw ConfigError("malformed row at line " + std::to_string(line_no), "/traffic/profile_csv");
    Row row{};
    try {
      row.category = std::stoi(a);
      row.slot = std::stoi(b);
      row.density = std::stod(c);
    } catch (const std::exception&) {
      throw ConfigError("unparsable row at line " + std::to_string(line_no), "/traffic/profile_csv");
    }
    if (row.category < 1 || row.category > kNumCategories || row.slot < 0)
      throw ConfigError("category or slot out of range at line " + std::to_string(line_no),
                        "/traffic/profile_csv");
    max_slot = std::max(max_slot, row.slot);
    rows.push_back(row);
  }
  if (max_slot < 0) throw ConfigError("traffic profile has no rows", "/traffic/profile_csv");
  TrafficProfile profile;
  profile.slot_duration_s = slot_duration_s;
  std::array<std::vector<bool>, kNumCategories> seen;
  for (int z = 0; z < kNumCategories; ++z) {
    profile.densities[z].assign(max_slot + 1, 0.0);
    seen[z].assign(max_slot + 1, false);
  }
  for (const Row& r : rows) {
    if (seen[r.category - 1][r.slot])
      throw ConfigError("duplicate (category, slot) entry", "/traffic/profile_csv");
    seen[r.category - 1][r.slot] = true;
    profile.densities[r.category - 1][r.slot] = r.density;
  }
  for (const auto& s : seen)
    if (std::find(s.begin(), s.end(), false) != s.end())
      throw ConfigError("profile is missing (category, slot) entries", "/traffic/profile_csv");
  profile.validate();
  return profile;
}

inline TrafficProfile load_profile_csv(const std::string& path, double slot_duration_s = 1200.0) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open traffic profile '" + path + "'", "/traffic/profile_csv");
  return read_profile_csv(in, slot_duration_s);
}

inline void write_profile_csv(std::ostream& out, const TrafficProfile& profile) {
  out << "category,slot,density_mbps_km2\n";
  char buf[64];
  for (int z = 0; z < kNumCategories; ++z)
    for (int slot = 0; slot < profile.period_slots(); ++slot) {
      std::snprintf(buf, sizeof buf, "%.17g", profile.densities[z][slot]);
      out << (z + 1) << ',' << slot << ',' << buf << '\n';
    }
}

// Expected arrivals per step: lambda = kappa * A / x_f * dt, with kappa in
// Mb/s/km^2 and x_f in Mb.
inline double arrival_rate(double kappa, double area_km2, double file_mbits, double dt_s) {
  return kappa * area_km2 / file_mbits * dt_s;
}

enum class UePhase { kIdle, kQueued, kServed, kDeparted };

inline const char* to_string(UePhase p) {
  switch (p) {
    case UePhase::kIdle: return "idle";
    case UePhase::kQueued: return "queued";
    case UePhase::kServed: return "served";
    case UePhase::kDeparted: return "departed";
  }
  return "?";
}

struct UeState {
  std::uint64_t id = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  int category = 0;  // 0-based index into kCategories
  double file_bits = 3e6;
  double remaining_bits = 3e6;
  double elapsed_ms = 0.0;
  UePhase phase = UePhase::kIdle;
  std::optional<int> serving_bs;
  std::vector<radio::LinkGain> gains;  // one per BS
  std::int64_t arrival_step = 0;
  int best_bs = 0;  // argmax of beta over all BSs, lowest index on ties

  double budget_ms() const { return delay_budget_ms(category); }
  double required_rate_bps() const { return file_bits / (budget_ms() / 1e3); }
};

struct UeOutcome {
  std::uint64_t ue_id = 0;
  int category = 0;
  bool finished = false;
  double file_bits = 0.0;
  double dropped_bits = 0.0;
  double drop_ratio = 0.0;
  double avg_rate_bps = 0.0;
  double required_rate_bps = 0.0;
  double departure_delay_ms = 0.0;

  // rho = r_avg / r_req
  double rate_ratio() const { return avg_rate_bps / required_rate_bps; }
};

struct Point {
  double x;
  double y;
};

// Axis-aligned simulation area in meters.
struct Area {
  double x_min = -500.0;
  double x_max = 500.0;
  double y_min = -500.0;
  double y_max = 500.0;

  double km2() const { return (x_max - x_min) * (y_max - y_min) / 1e6; }
};

struct ArrivalContext {
  Area area;
  std::span<const Point> bs_positions;
  const radio::RadioParams* radio = nullptr;
  double file_bits = 3e6;
  std::int64_t step = 0;
};

// Fills a UE's per-BS gains from 3D distances (clamped to 1 m) and the given
// shadowing, and records its strongest BS.
inline void attach_gains(UeState& ue, std::span<const Point> bs_positions, const radio::RadioParams& radio,
                         std::span<const double> shadow_db) {
  if (shadow_db.size() != bs_positions.size()) throw ContractViolation("attach_gains: one shadow value per BS");
  const double dh = radio.bs_height_m - radio.ue_height_m;
  ue.gains.clear();
  ue.gains.reserve(bs_positions.size());
  double best = -1.0;
  for (std::size_t c = 0; c < bs_positions.size(); ++c) {
    const double dx = ue.x_m - bs_positions[c].x;
    const double dy = ue.y_m - bs_positions[c].y;
    const double d = std::max(std::sqrt(dx * dx + dy * dy + dh * dh), 1.0);
    ue.gains.push_back(radio::make_link_gain(d, shadow_db[c], radio.carrier_freq_ghz));
    if (ue.gains.back().beta > best) {
      best = ue.gains.back().beta;
      ue.best_bs = static_cast<int>(c);
    }
  }
}

// Draws Poisson(lambda_z) new UEs per category at uniform positions with
// frozen per-BS shadowing. `next_id` advances by the number of arrivals.
template <class Rng>
std::vector<UeState> sample_arrivals(Rng& rng, const std::array<double, kNumCategories>& lambda,
                                     const ArrivalContext& ctx, std::uint64_t& next_id) {
  std::vector<UeState> out;
  std::uniform_real_distribution<double> ux(ctx.area.x_min, ctx.area.x_max);
  std::uniform_real_distribution<double> uy(ctx.area.y_min, ctx.area.y_max);
  std::vector<double> shadow(ctx.bs_positions.size());
  for (int z = 0; z < kNumCategories; ++z) {
    if (!(lambda[z] > 0.0)) continue;
    std::poisson_distribution<int> poisson(lambda[z]);
    const int n = poisson(rng);
    for (int i = 0; i < n; ++i) {
      UeState ue;
      ue.id = next_id++;
      ue.x_m = ux(rng);
      ue.y_m = uy(rng);
      ue.category = z;
      ue.file_bits = ctx.file_bits;
      ue.remaining_bits = ctx.file_bits;
      ue.arrival_step = ctx.step;
      for (double& v : shadow) v = radio::sample_shadow_db(rng, ctx.radio->shadow_sigma_db);
      attach_gains(ue, ctx.bs_positions, *ctx.radio, shadow);
      out.push_back(std::move(ue));
    }
  }
  return out;
}

// x <- max(0, x - r dt); tau <- tau + dt. Unserved UEs pass rate 0.
inline void update_demand(UeState& ue, double rate_bps, double dt_s) {
  if (ue.phase == UePhase::kDeparted) throw ContractViolation("update_demand: UE already departed");
  ue.remaining_bits = std::max(0.0, ue.remaining_bits - rate_bps * dt_s);
  ue.elapsed_ms += dt_s * 1e3;
}

// Departs a UE whose demand is met (finished) or whose delay reached its
// budget (dropped with the remaining demand).
inline std::optional<UeOutcome> finalize_if_departing(UeState& ue) {
  const bool finished = ue.remaining_bits <= 0.0;
  const bool expired = ue.elapsed_ms >= ue.budget_ms();
  if (!finished && !expired) return std::nullopt;
  UeOutcome out;
  out.ue_id = ue.id;
  out.category = ue.category;
  out.finished = finished;
  out.file_bits = ue.file_bits;
  out.dropped_bits = finished ? 0.0 : ue.remaining_bits;
  out.drop_ratio = out.dropped_bits / ue.file_bits;
  out.departure_delay_ms = finished ? ue.elapsed_ms : ue.budget_ms();
  out.avg_rate_bps = (ue.file_bits - out.dropped_bits) / (out.departure_delay_ms / 1e3);
  out.required_rate_bps = ue.required_rate_bps();
  ue.phase = UePhase::kDeparted;
  ue.serving_bs.reset();
  return out;
}

}  // namespace cellsleep::traffic
