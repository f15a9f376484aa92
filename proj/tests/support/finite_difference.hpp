#pragma once

// Central finite-difference check of Mlp::backward for the scalar loss
// L = sum(g .* f(X)) with a fixed random cotangent g.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cellsleep/marl/mlp.hpp"

namespace cellsleep::support {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

inline double rel_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

// Builds a random net with widths in [1, max_width] and checks every
// parameter and input gradient.
template <class Rng>
GradCheckResult check_random_net(Rng& rng, int max_width, double h = 1e-5) {
  std::uniform_int_distribution<int> width(1, max_width), depth(1, 3), batch(1, 4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<int> sizes{width(rng)};
  const int layers = depth(rng);
  for (int l = 0; l < layers; ++l) sizes.push_back(width(rng));
  marl::Mlp net(sizes);
  for (int l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.weight(l).size(); ++i) net.weight(l).data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)[i] = 0.5 * normal(rng);
  }
  const int n = batch(rng);
  marl::Matrix x(sizes.front(), n), g(sizes.back(), n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);

  auto loss = [&](const marl::Matrix& in) { return (net.forward(in).array() * g.array()).sum(); };

  marl::MlpCache cache;
  net.forward(x, &cache);
  net.zero_grad();
  const marl::Matrix dx = net.backward(cache, g);

  GradCheckResult res;
  auto probe = [&](double& param, double analytic, const marl::Matrix& in) {
    const double saved = param;
    param = saved + h;
    const double up = loss(in);
    param = saved - h;
    const double down = loss(in);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    // A ReLU kink inside [-h, h] makes the numeric slope meaningless.
    if (std::abs(up + down - 2.0 * loss(in)) > 1e-6 * std::max(1.0, std::abs(numeric))) return;
    res.max_rel_error = std::max(res.max_rel_error, rel_error(analytic, numeric));
    ++res.checked;
  };
  for (int l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.weight(l).size(); ++i)
      probe(net.weight(l).data()[i], net.grad_weight(l).data()[i], x);
    for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) probe(net.bias(l)[i], net.grad_bias(l)[i], x);
  }
  marl::Matrix xp = x;
  for (Eigen::Index i = 0; i < xp.size(); ++i) probe(xp.data()[i], dx.data()[i], xp);
  return res;
}

}  // namespace cellsleep::support
