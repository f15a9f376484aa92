#pragma once

// Fully connected network with rectifier hidden layers, an identity output
// layer and explicit gradient buffers. Samples are stored column-wise.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellsleep/errors.hpp"

namespace cellsleep::marl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Activations kept from a forward pass so backward can run exactly.
struct MlpCache {
  std::vector<Matrix> inputs;  // input to each layer (post-activation of the previous one)
};

class Mlp {
 public:
  Mlp() = default;

  // `sizes` = {in, h1, ..., out}; zero-initialized.
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ContractViolation("Mlp needs at least input and output sizes");
    for (int s : sizes_)
      if (s < 1) throw ContractViolation("Mlp layer sizes must be positive");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.push_back(Matrix::Zero(sizes_[l + 1], sizes_[l]));
      biases_.push_back(Vector::Zero(sizes_[l + 1]));
    }
    grad_w_ = weights_;
    grad_b_ = biases_;
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int input_width() const { return sizes_.front(); }
  int output_width() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }

  Matrix& weight(int l) { return weights_[l]; }
  const Matrix& weight(int l) const { return weights_[l]; }
  Vector& bias(int l) { return biases_[l]; }
  const Vector& bias(int l) const { return biases_[l]; }
  Matrix& grad_weight(int l) { return grad_w_[l]; }
  const Matrix& grad_weight(int l) const { return grad_w_[l]; }
  Vector& grad_bias(int l) { return grad_b_[l]; }
  const Vector& grad_bias(int l) const { return grad_b_[l]; }

  // Orthogonal initialization: gain sqrt(2) on hidden layers, `output_gain`
  // on the last layer, zero biases.
  template <class Rng>
  void init_orthogonal(Rng& rng, double output_gain) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int l = 0; l < num_layers(); ++l) {
      const int rows = static_cast<int>(weights_[l].rows());
      const int cols = static_cast<int>(weights_[l].cols());
      const int big = std::max(rows, cols), small = std::min(rows, cols);
      Matrix g(big, small);
      for (int j = 0; j < small; ++j)
        for (int i = 0; i < big; ++i) g(i, j) = normal(rng);
      Eigen::HouseholderQR<Matrix> qr(g);
      Matrix q = qr.householderQ() * Matrix::Identity(big, small);
      // sign fix so the distribution is uniform over orthogonal matrices
      const Matrix r = qr.matrixQR().topLeftCorner(small, small);
      for (int j = 0; j < small; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
      const double gain = (l + 1 == num_layers()) ? output_gain : std::sqrt(2.0);
      weights_[l] = gain * (rows >= cols ? q : Matrix(q.transpose()));
      biases_[l].setZero();
    }
  }

  // X: in x N. Returns out x N.
  Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const {
    if (x.rows() != input_width())
      throw ContractViolation("Mlp::forward: input width " + std::to_string(x.rows()) + " != " +
                              std::to_string(input_width()));
    if (cache) cache->inputs.clear();
    Matrix a = x;
    for (int l = 0; l < num_layers(); ++l) {
      if (cache) cache->inputs.push_back(a);
      Matrix z = weights_[l] * a;
      z.colwise() += biases_[l];
      if (l + 1 < num_layers()) z = z.cwiseMax(0.0);
      a = std::move(z);
    }
    return a;
  }

  Vector forward_one(const Vector& x) const { return forward(Matrix(x)).col(0); }

  // Accumulates dL/dparams given dL/dout for the batch cached by forward.
  // Returns dL/dinput.
  Matrix backward(const MlpCache& cache, const Matrix& d_out) {
    Matrix dz = d_out;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const Matrix& a = cache.inputs[l];
      grad_w_[l].noalias() += dz * a.transpose();
      grad_b_[l] += dz.rowwise().sum();
      Matrix da = weights_[l].transpose() * dz;
      if (l > 0) da = (a.array() > 0.0).select(da, 0.0);  // rectifier derivative
      dz = std::move(da);
    }
    return dz;
  }

  void zero_grad() {
    for (auto& g : grad_w_) g.setZero();
    for (auto& g : grad_b_) g.setZero();
  }

  bool all_finite() const {
    for (const auto& w : weights_)
      if (!w.allFinite()) return false;
    for (const auto& b : biases_)
      if (!b.allFinite()) return false;
    return true;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.sizes_ != b.sizes_) return false;
    for (int l = 0; l < a.num_layers(); ++l)
      if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
    return true;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Matrix> weights_;  // out x in
  std::vector<Vector> biases_;
  std::vector<Matrix> grad_w_;
  std::vector<Vector> grad_b_;
};

// Adaptive-moment gradient descent over every tensor of one Mlp.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (int l = 0; l < net.num_layers(); ++l) {
      m_w_.push_back(Matrix::Zero(net.weight(l).rows(), net.weight(l).cols()));
      v_w_.push_back(m_w_.back());
      m_b_.push_back(Vector::Zero(net.bias(l).size()));
      v_b_.push_back(m_b_.back());
    }
  }

  void step(Mlp& net) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (int l = 0; l < net.num_layers(); ++l) {
      update(net.weight(l), net.grad_weight(l), m_w_[l], v_w_[l], c1, c2);
      update(net.bias(l), net.grad_bias(l), m_b_[l], v_b_[l], c1, c2);
    }
  }

  double learning_rate() const { return lr_; }
  long long steps() const { return t_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<Matrix>& m_weights() { return m_w_; }
  std::vector<Matrix>& v_weights() { return v_w_; }
  std::vector<Vector>& m_biases() { return m_b_; }
  std::vector<Vector>& v_biases() { return v_b_; }
  void set_steps(long long t) { t_ = t; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  template <class P, class G, class M>
  void update(P& param, const G& grad, M& m, M& v, double c1, double c2) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }

  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long long t_ = 0;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<Vector> m_b_, v_b_;
};

}  // namespace cellsleep::marl
