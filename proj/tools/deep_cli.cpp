// Command-line front end for DEEP: two-phase training batches on the logic
// tasks, stability analysis of saved networks, and DOT/CSV exports.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "deep/analysis.hpp"
#include "deep/config.hpp"
#include "deep/experiment.hpp"
#include "deep/io.hpp"
#include "deep/training.hpp"

namespace {

struct TrainFlags {
  std::string config_path;
  std::string task, rule, out;
  bool prune = false, compare = false;
  int runs = 0, epochs = 0, m0 = 0, m_beta = 0, hidden = 0;
  std::uint64_t seed = 0;
  double beta = 0, step_size = 0, lr = 0, l1 = 0, lambda = 0, temperature = 0;
};

int cmd_train(const CLI::App& app, const TrainFlags& f) {
  deep::RunConfig cfg = deep::load_config(
      f.config_path.empty() ? std::nullopt
                            : std::optional<std::filesystem::path>(f.config_path));

  const auto given = [&](const std::string& name) { return app.count(name) > 0; };
  if (given("--task")) cfg.task = f.task;
  if (given("--rule")) cfg.rule = f.rule;
  if (given("--prune")) cfg.prune = f.prune;
  if (given("--compare")) cfg.compare = f.compare;
  if (given("--runs")) cfg.runs = f.runs;
  if (given("--epochs")) cfg.epochs = f.epochs;
  if (given("--seed")) cfg.hp.seed = f.seed;
  if (given("--beta")) cfg.hp.beta = f.beta;
  if (given("--step-size")) cfg.hp.step_size = f.step_size;
  if (given("--m0")) cfg.hp.m0 = f.m0;
  if (given("--mbeta")) cfg.hp.m_beta = f.m_beta;
  if (given("--lr")) cfg.hp.learning_rate = f.lr;
  if (given("--l1")) cfg.hp.l1_coeff = f.l1;
  if (given("--lambda")) cfg.hp.lambda_prune = f.lambda;
  if (given("--temperature")) cfg.hp.temperature = f.temperature;
  if (given("--hidden")) cfg.n_total = cfg.n_input + f.hidden + cfg.n_output;
  if (given("--out")) cfg.out_dir = f.out;

  const auto summary = deep::run_experiment(cfg);
  std::cout << "wrote " << summary.files_written.size() << " files to " << cfg.out_dir << "\n";
  std::cout << "converged " << summary.runs_converged << "/" << summary.runs_total << " runs";
  if (summary.runs_failed > 0) std::cout << " (" << summary.runs_failed << " failed)";
  std::cout << "\n";
  if (cfg.prune)
    std::cout << "median final sparsity " << summary.median_final_sparsity << "\n";
  return 0;
}

int cmd_analyze(const std::string& net_path, bool probe, const std::string& task,
                int trials, double noise, int m0, const std::string& csv_path) {
  const auto net = deep::load_network<double>(net_path);
  std::cout << "network: N=" << net.n_total << " P=" << net.n_input
            << " trainable=" << deep::trainable_parameter_count(net) << "\n\n";

  const auto report = deep::stability_certificate(net);
  deep::print_stability_report(std::cout, net, report);
  if (!csv_path.empty()) {
    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("cannot open for writing: " + csv_path);
    deep::write_stability_csv(os, report);
  }

  // Firing-rate-sum conservation holds for bias-free, input-free dynamics;
  // report the residual at a mid-range state and whether those assumptions apply.
  const Eigen::VectorXd s_ref = Eigen::VectorXd::Constant(net.n_total, 0.5);
  const double residual = deep::conservation_residual(net, s_ref);
  const double max_bias = net.bias.cwiseAbs().maxCoeff();
  std::cout << "\nconservation residual at s = 0.5: " << residual << "\n";
  if (net.n_input == 0 && max_bias == 0.0)
    std::cout << "  assumptions met (no inputs, zero biases): residual is rounding error\n";
  else
    std::cout << "  assumptions not met (P=" << net.n_input << ", max|b|=" << max_bias
              << "): residual reflects bias/input contributions\n";

  if (probe) {
    deep::Hyperparams<double> hp;
    hp.m0 = m0;
    std::mt19937_64 rng(0);
    std::vector<Eigen::VectorXd> inputs;
    if (!task.empty()) {
      for (const auto& p : deep::logic_dataset<double>(deep::logic_op_from_string(task)).patterns)
        inputs.push_back(p.input);
    } else {
      inputs.push_back(Eigen::VectorXd::Zero(net.n_input));
    }
    std::cout << "\nempirical probe (" << trials << " trials, noise " << noise << "):\n";
    for (const auto& x : inputs) {
      const auto r = deep::empirical_stability_probe(net, x, hp, trials, noise, rng);
      std::cout << "  x = [" << x.transpose() << "]  returned " << r.fraction * 100 << "%";
      if (r.boundary_warning) std::cout << "  (warning: equilibrium on clamp boundary)";
      std::cout << "\n";
    }
  }
  return 0;
}

int cmd_export_dot(const std::string& net_path, const std::string& out_path) {
  const auto net = deep::load_network<double>(net_path);
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot open for writing: " + out_path);
  deep::export_dot(os, net);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& net_path, const std::string& task, int m0,
             const std::string& traj_dir) {
  const auto net = deep::load_network<double>(net_path);
  const auto ds = deep::logic_dataset<double>(deep::logic_op_from_string(task));
  deep::Hyperparams<double> hp;
  hp.m0 = m0;

  std::cout << "pattern -> output (target)\n";
  for (std::size_t k = 0; k < ds.patterns.size(); ++k) {
    const auto& p = ds.patterns[k];
    const auto traj = [&] {
      Eigen::VectorXd s0 = Eigen::VectorXd::Constant(net.n_total, hp.state_init);
      s0.head(net.n_input) = p.input;
      return deep::relax(net, s0, p.input, Eigen::VectorXd(), 0.0,
                         static_cast<deep::Index>(hp.m0), hp);
    }();
    const auto y_hat = deep::read_outputs(net, traj.states.back());
    std::cout << "  [" << p.input.transpose() << "] -> " << y_hat.transpose() << "  ("
              << p.target.transpose() << ")\n";
    if (!traj_dir.empty()) {
      std::filesystem::create_directories(traj_dir);
      std::ofstream os(std::filesystem::path(traj_dir) /
                       ("trajectory_" + std::to_string(k) + ".csv"));
      deep::write_trajectory_csv(os, traj);
    }
  }
  const auto res = deep::evaluate(net, ds, hp);
  std::cout << "mse " << res.mse << "  accuracy " << res.accuracy << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DEEP: directed equilibrium propagation trainer and analysis toolkit"};
  app.require_subcommand(1);

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "run seeded training batches");
  train->add_option("--config", tf.config_path, "JSON config / manifest to start from");
  train->add_option("--task", tf.task, "logic task: and, or, xor");
  train->add_option("--rule", tf.rule, "learning rule: deep, asym");
  train->add_flag("--prune", tf.prune, "enable the pruning lottery");
  train->add_flag("--compare", tf.compare, "run both rules on identical seeds");
  train->add_option("--runs", tf.runs, "independent seeded runs");
  train->add_option("--epochs", tf.epochs, "training epochs per run");
  train->add_option("--seed", tf.seed, "base seed");
  train->add_option("--beta", tf.beta, "nudge strength");
  train->add_option("--step-size", tf.step_size, "integration step");
  train->add_option("--m0", tf.m0, "first-phase steps");
  train->add_option("--mbeta", tf.m_beta, "second-phase steps");
  train->add_option("--lr", tf.lr, "learning rate");
  train->add_option("--l1", tf.l1, "l1 coefficient");
  train->add_option("--lambda", tf.lambda, "pruning threshold");
  train->add_option("--temperature", tf.temperature, "pruning temperature");
  train->add_option("--hidden", tf.hidden, "hidden neuron count");
  train->add_option("--out", tf.out, "output directory");

  std::string net_path, out_path, task, csv_path, traj_dir;
  bool probe = false;
  int trials = 20, m0 = 2000;
  double noise = 0.01;

  auto* analyze = app.add_subcommand("analyze", "stability certificate for a network file");
  analyze->add_option("network", net_path, "network file")->required();
  analyze->add_flag("--probe", probe, "run the perturb-and-relax probe");
  analyze->add_option("--task", task, "probe inputs from this task's patterns");
  analyze->add_option("--trials", trials, "probe trials per input");
  analyze->add_option("--noise", noise, "probe perturbation max-norm");
  analyze->add_option("--m0", m0, "relaxation steps");
  analyze->add_option("--csv", csv_path, "also write the per-neuron table as CSV");

  std::string dot_net, dot_out;
  auto* export_dot = app.add_subcommand("export-dot", "write a network as a DOT digraph");
  export_dot->add_option("network", dot_net, "network file")->required();
  export_dot->add_option("output", dot_out, "DOT file to write")->required();

  std::string eval_net, eval_task, eval_traj;
  int eval_m0 = 200;
  auto* eval = app.add_subcommand("eval", "evaluate a network file on a logic task");
  eval->add_option("network", eval_net, "network file")->required();
  eval->add_option("--task", eval_task, "logic task: and, or, xor")->required();
  eval->add_option("--m0", eval_m0, "relaxation steps");
  eval->add_option("--dump-trajectories", eval_traj, "directory for per-pattern trajectory CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(*train, tf);
    if (analyze->parsed()) return cmd_analyze(net_path, probe, task, trials, noise, m0, csv_path);
    if (export_dot->parsed()) return cmd_export_dot(dot_net, dot_out);
    if (eval->parsed()) return cmd_eval(eval_net, eval_task, eval_m0, eval_traj);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
