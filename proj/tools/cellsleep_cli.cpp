// cellsleep: command-line front end for simulation, training, evaluation and
// traffic profile export.
//
// Exit codes: 0 success, 2 configuration error, 3 invariant violation,
// 4 model mismatch, 1 anything else.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cellsleep/config.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitModel = 4;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "Base seed (overrides the config)");
  cmd->add_option("--out", a.out, "Output directory (overrides the config)");
}

cellsleep::ExperimentConfig load(const CommonArgs& a) {
  cellsleep::ExperimentConfig cfg =
      a.config.empty() ? cellsleep::config_from_json(cellsleep::json::object()) : cellsleep::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.out_dir = a.out;
  return cfg;
}

void print_metrics(const char* label, const cellsleep::MetricsWindow& w) {
  const cellsleep::Metrics m = cellsleep::metrics(w);
  std::printf("%-14s pc %9.2f W  drop %s  rate %.4g b/s  ee %s\n", label, m.avg_pc_w,
              m.drop_ratio ? std::to_string(*m.drop_ratio).c_str() : "n/a", m.sum_rate_bps,
              m.ee_bits_per_j ? std::to_string(*m.ee_bits_per_j).c_str() : "n/a");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-cell massive MIMO sleep-mode and antenna-switching simulator"};
  app.require_subcommand(1);

  CommonArgs sim_args, train_args, eval_args, prof_args;
  std::string sim_policy = "always-on", sim_model;
  bool sim_greedy = false;
  auto* sim = app.add_subcommand("simulate", "Run episodes under a fixed policy");
  add_common(sim, sim_args);
  sim->add_option("--policy", sim_policy, "always-on | auto-sm1 | random | mappo");
  sim->add_option("--model", sim_model, "Trained model for mappo (or antenna actor for auto-sm1)");
  sim->add_option("--episodes", sim_args.episodes, "Number of episodes");
  sim->add_flag("--greedy", sim_greedy, "Take the most likely mappo action instead of sampling");

  std::string variant = "full", resume;
  bool antenna_only = false, verbose = false;
  auto* tr = app.add_subcommand("train", "Train the shared actor and centralized critic");
  add_common(tr, train_args);
  tr->add_option("--variant", variant, "Critic input: full | neighbor");
  tr->add_option("--episodes", train_args.episodes, "Total training episodes");
  tr->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  tr->add_flag("--antenna-only", antenna_only, "Use the auto-sm1 sleep rule and learn antenna switching only");
  tr->add_flag("-v,--verbose", verbose, "Print one line per episode");

  std::string eval_policy = "mappo", eval_model;
  std::vector<std::string> baselines{"always-on", "auto-sm1"};
  bool eval_greedy = false;
  auto* ev = app.add_subcommand("evaluate", "Compare a policy against baselines on shared seeds");
  add_common(ev, eval_args);
  ev->add_option("--policy", eval_policy, "Candidate policy");
  ev->add_option("--model", eval_model, "Trained model for the candidate");
  ev->add_option("--baselines", baselines, "Baseline policies")->delimiter(',');
  ev->add_option("--episodes", eval_args.episodes, "Number of evaluation episodes");
  ev->add_flag("--greedy", eval_greedy, "Take the most likely mappo action instead of sampling");

  auto* prof = app.add_subcommand("export-profile", "Write the traffic profile as CSV");
  add_common(prof, prof_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) {
      auto cfg = load(sim_args);
      if (sim_args.episodes) cfg.eval_episodes = *sim_args.episodes;
      cfg.validate();
      const auto policy = cellsleep::make_policy(sim_policy, sim_model, sim_greedy);
      const auto log = cellsleep::run_simulate(cfg, policy, cfg.out_dir);
      print_metrics("overall", log.total);
      print_metrics("low traffic", log.low_traffic);
      print_metrics("high traffic", log.high_traffic);
    } else if (*tr) {
      auto cfg = load(train_args);
      if (train_args.episodes) cfg.ppo.episodes = *train_args.episodes;
      cfg.validate();
      cellsleep::TrainRunOptions opts;
      opts.variant = cellsleep::parse_variant(variant);
      opts.antenna_only = antenna_only;
      opts.resume_from = resume;
      opts.quiet = !verbose;
      const auto res = cellsleep::run_train(cfg, opts, cfg.out_dir);
      std::printf("trained %d episodes; model written to %s/model.txt\n", res.state.episodes_done,
                  cfg.out_dir.c_str());
    } else if (*ev) {
      auto cfg = load(eval_args);
      if (eval_args.episodes) cfg.eval_episodes = *eval_args.episodes;
      cfg.validate();
      const auto candidate = cellsleep::make_policy(eval_policy, eval_model, eval_greedy);
      std::vector<cellsleep::Policy> base;
      for (const auto& b : baselines) base.push_back(cellsleep::make_policy(b));
      const auto res = cellsleep::run_evaluate(cfg, candidate, base, cfg.out_dir);
      std::printf("%s\n", res.report["comparisons"].dump(2).c_str());
    } else if (*prof) {
      const auto cfg = load(prof_args);
      cellsleep::run_export_profile(cfg, cfg.out_dir);
      std::printf("wrote %s/profile.csv\n", cfg.out_dir.c_str());
    }
  } catch (const cellsleep::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const cellsleep::InvariantError& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return kExitInvariant;
  } catch (const cellsleep::ModelMismatch& e) {
    std::fprintf(stderr, "model mismatch: %s\n", e.what());
    return kExitModel;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
