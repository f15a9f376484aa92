#pragma once

// Hexagonal BS layouts and closest-neighbor tables.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "cellsleep/errors.hpp"
#include "cellsleep/traffic.hpp"

namespace cellsleep {

inline constexpr int kNumNeighbors = 6;

struct Topology {
  std::vector<traffic::Point> positions;
  traffic::Area area;
  double bs_spacing_m = 400.0;
  // neighbors[c] holds up to 6 other BSs by ascending distance, lower index
  // first on ties.
  std::vector<std::vector<int>> neighbors;

  int num_bs() const { return static_cast<int>(positions.size()); }

  double distance(int a, int b) const {
    return std::hypot(positions[a].x - positions[b].x, positions[a].y - positions[b].y);
  }
};

inline std::vector<std::vector<int>> build_neighbor_table(const std::vector<traffic::Point>& pos) {
  const int n = static_cast<int>(pos.size());
  std::vector<std::vector<int>> table(n);
  for (int c = 0; c < n; ++c) {
    std::vector<int> others;
    for (int o = 0; o < n; ++o)
      if (o != c) others.push_back(o);
    auto dist = [&](int o) { return std::hypot(pos[c].x - pos[o].x, pos[c].y - pos[o].y); };
    // Distances on the hex lattice repeat exactly in theory but not in
    // floating point, so compare with a relative tolerance.
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
      const double da = dist(a), db = dist(b);
      if (std::abs(da - db) <= 1e-9 * std::max(da, db)) return a < b;
      return da < db;
    });
    if (others.size() > kNumNeighbors) others.resize(kNumNeighbors);
    table[c] = std::move(others);
  }
  return table;
}

inline Topology make_custom_topology(std::vector<traffic::Point> positions, traffic::Area area,
                                     double spacing_m) {
  if (positions.empty()) throw ConfigError("needs at least one BS", "/topology/positions");
  if (!(area.x_max > area.x_min && area.y_max > area.y_min))
    throw ConfigError("area bounds are empty", "/topology/area");
  Topology t;
  t.positions = std::move(positions);
  t.area = area;
  t.bs_spacing_m = spacing_m;
  t.neighbors = build_neighbor_table(t.positions);
  return t;
}

// 7 BSs: one at the origin plus a hexagon of side `spacing_m` in a 1 km square.
// 19 BSs: a second hexagonal ring in a 2 km square.
inline Topology make_hex_topology(int num_bs, double spacing_m = 400.0) {
  if (num_bs != 7 && num_bs != 19) throw ConfigError("hex layouts have 7 or 19 BSs", "/topology/num_bs");
  std::vector<traffic::Point> pos{{0.0, 0.0}};
  std::vector<traffic::Point> ring1;
  for (int k = 0; k < 6; ++k) {
    const double a = k * std::numbers::pi / 3.0;
    ring1.push_back({spacing_m * std::cos(a), spacing_m * std::sin(a)});
  }
  pos.insert(pos.end(), ring1.begin(), ring1.end());
  double half = 500.0;
  if (num_bs == 19) {
    for (int k = 0; k < 6; ++k) {
      const auto& v = ring1[k];
      const auto& w = ring1[(k + 1) % 6];
      pos.push_back({2.0 * v.x, 2.0 * v.y});
      pos.push_back({v.x + w.x, v.y + w.y});
    }
    half = 1000.0;
  }
  return make_custom_topology(std::move(pos), {-half, half, -half, half}, spacing_m);
}

}  // namespace cellsleep
