#pragma once

// Text tensor dump of trainer state. Values are written as hexadecimal
// floating point so a reload is bit-exact.
//
//   cellsleep-checkpoint 1
//   seed <u64>
//   episodes_done <n>
//   meta <key> <value>          (zero or more)
//   net actor <num sizes> <in> <h1> ... <out>
//   tensor <rows> <cols> <values...>   (weights then bias, per layer)
//   adam actor <steps> <lr>
//   tensor ...                  (m_w, v_w, m_b, v_b, per layer)
//   net critic ...
//   adam critic ...
//   end

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>

#include "cellsleep/errors.hpp"
#include "cellsleep/marl/mlp.hpp"
#include "cellsleep/marl/trainer.hpp"

namespace cellsleep::marl {

inline constexpr const char* kCheckpointMagic = "cellsleep-checkpoint";
inline constexpr int kCheckpointVersion = 1;

using CheckpointMeta = std::map<std::string, std::string>;

namespace detail {

inline void write_tensor(std::ostream& out, const Eigen::Ref<const Matrix>& m) {
  out << "tensor " << m.rows() << ' ' << m.cols();
  char buf[64];
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j), std::chars_format::hex);
      out << ' ' << std::string_view(buf, end - buf);
    }
  out << '\n';
}

inline void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw ModelMismatch("checkpoint: expected '" + word + "', got '" + got + "'");
}

inline Matrix read_tensor(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  expect(in, "tensor");
  Eigen::Index r = 0, c = 0;
  if (!(in >> r >> c) || r != rows || c != cols)
    throw ModelMismatch("checkpoint: tensor shape " + std::to_string(r) + "x" + std::to_string(c) +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  Matrix m(rows, cols);
  std::string tok;
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!(in >> tok)) throw ModelMismatch("checkpoint: truncated tensor");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, std::chars_format::hex);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ModelMismatch("checkpoint: bad value '" + tok + "'");
      m(i, j) = v;
    }
  return m;
}

inline void write_net(std::ostream& out, const std::string& name, const Mlp& net) {
  out << "net " << name << ' ' << net.sizes().size();
  for (int s : net.sizes()) out << ' ' << s;
  out << '\n';
  for (int l = 0; l < net.num_layers(); ++l) {
    write_tensor(out, net.weight(l));
    write_tensor(out, net.bias(l));
  }
}

inline Mlp read_net(std::istream& in, const std::string& name) {
  expect(in, "net");
  expect(in, name);
  std::size_t n = 0;
  if (!(in >> n) || n < 2 || n > 64) throw ModelMismatch("checkpoint: bad layer count");
  std::vector<int> sizes(n);
  for (auto& s : sizes)
    if (!(in >> s) || s < 1) throw ModelMismatch("checkpoint: bad layer size");
  Mlp net(sizes);
  for (int l = 0; l < net.num_layers(); ++l) {
    net.weight(l) = read_tensor(in, net.weight(l).rows(), net.weight(l).cols());
    net.bias(l) = read_tensor(in, net.bias(l).size(), 1);
  }
  return net;
}

inline void write_adam(std::ostream& out, const std::string& name, Adam& opt) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, opt.learning_rate(), std::chars_format::hex);
  out << "adam " << name << ' ' << opt.steps() << ' ' << std::string_view(buf, end - buf) << '\n';
  for (std::size_t l = 0; l < opt.m_weights().size(); ++l) {
    write_tensor(out, opt.m_weights()[l]);
    write_tensor(out, opt.v_weights()[l]);
    write_tensor(out, opt.m_biases()[l]);
    write_tensor(out, opt.v_biases()[l]);
  }
}

inline Adam read_adam(std::istream& in, const std::string& name, const Mlp& net) {
  expect(in, "adam");
  expect(in, name);
  long long steps = 0;
  std::string lr_tok;
  if (!(in >> steps >> lr_tok)) throw ModelMismatch("checkpoint: bad optimizer header");
  double lr = 0.0;
  std::from_chars(lr_tok.data(), lr_tok.data() + lr_tok.size(), lr, std::chars_format::hex);
  Adam opt(net, lr);
  opt.set_steps(steps);
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto r = net.weight(l).rows(), c = net.weight(l).cols();
    opt.m_weights()[l] = read_tensor(in, r, c);
    opt.v_weights()[l] = read_tensor(in, r, c);
    opt.m_biases()[l] = read_tensor(in, r, 1);
    opt.v_biases()[l] = read_tensor(in, r, 1);
  }
  return opt;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, TrainerState& st, const CheckpointMeta& meta = {}) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "seed " << st.seed << '\n';
  out << "episodes_done " << st.episodes_done << '\n';
  for (const auto& [k, v] : meta) out << "meta " << k << ' ' << v << '\n';
  detail::write_net(out, "actor", st.actor);
  detail::write_adam(out, "actor", st.actor_opt);
  detail::write_net(out, "critic", st.critic);
  detail::write_adam(out, "critic", st.critic_opt);
  out << "end\n";
}

struct LoadedCheckpoint {
  TrainerState state;
  CheckpointMeta meta;
};

// Reads the header and meta lines; leaves the stream at the first "net".
inline CheckpointMeta read_header(std::istream& in, std::uint64_t& seed, int& episodes) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic)
    throw ModelMismatch("not a cellsleep checkpoint");
  if (version != kCheckpointVersion) throw ModelMismatch("unsupported checkpoint version " + std::to_string(version));
  detail::expect(in, "seed");
  in >> seed;
  detail::expect(in, "episodes_done");
  in >> episodes;
  CheckpointMeta meta;
  while (in >> std::ws && in.peek() == 'm') {
    std::string word, key, value;
    in >> word >> key >> value;
    if (word != "meta") throw ModelMismatch("checkpoint: unexpected '" + word + "'");
    meta[key] = value;
  }
  return meta;
}

inline LoadedCheckpoint read_checkpoint(std::istream& in) {
  LoadedCheckpoint out;
  out.meta = read_header(in, out.state.seed, out.state.episodes_done);
  out.state.actor = detail::read_net(in, "actor");
  out.state.actor_opt = detail::read_adam(in, "actor", out.state.actor);
  out.state.critic = detail::read_net(in, "critic");
  out.state.critic_opt = detail::read_adam(in, "critic", out.state.critic);
  detail::expect(in, "end");
  return out;
}

inline void save_checkpoint(const std::string& path, TrainerState& st, const CheckpointMeta& meta = {}) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, st, meta);
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model '" + path + "'", "/model");
  return read_checkpoint(in);
}

// Only the actor is needed to act.
inline Mlp load_actor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model '" + path + "'", "/model");
  std::uint64_t seed = 0;
  int episodes = 0;
  read_header(in, seed, episodes);
  return detail::read_net(in, "actor");
}

}  // namespace cellsleep::marl
