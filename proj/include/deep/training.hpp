#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deep/dynamics.hpp"
#include "deep/learning.hpp"
#include "deep/network.hpp"
#include "deep/sparsity.hpp"

namespace deep {

enum class LogicOp { And, Or, Xor };
enum class LearningRule { Deep, Asym };

inline std::string to_string(LogicOp op) {
  switch (op) {
    case LogicOp::And: return "and";
    case LogicOp::Or: return "or";
    case LogicOp::Xor: return "xor";
  }
  return "?";
}

inline std::string to_string(LearningRule rule) {
  return rule == LearningRule::Deep ? "deep" : "asym";
}

inline LogicOp logic_op_from_string(const std::string& name) {
  if (name == "and") return LogicOp::And;
  if (name == "or") return LogicOp::Or;
  if (name == "xor") return LogicOp::Xor;
  throw std::invalid_argument("unknown task '" + name + "' (valid: and, or, xor)");
}

inline LearningRule rule_from_string(const std::string& name) {
  if (name == "deep") return LearningRule::Deep;
  if (name == "asym") return LearningRule::Asym;
  throw std::invalid_argument("unknown rule '" + name + "' (valid: deep, asym)");
}

template <typename Scalar = double>
struct Pattern {
  VectorX<Scalar> input;
  VectorX<Scalar> target;
};

template <typename Scalar = double>
struct Dataset {
  std::vector<Pattern<Scalar>> patterns;
};

/// Four-row truth table of a binary logic gate, in the fixed order
/// (0,0), (0,1), (1,0), (1,1).
template <typename Scalar = double>
Dataset<Scalar> logic_dataset(LogicOp op) {
  Dataset<Scalar> ds;
  for (int a = 0; a <= 1; ++a)
    for (int b = 0; b <= 1; ++b) {
      Pattern<Scalar> p;
      p.input = VectorX<Scalar>(2);
      p.input << Scalar(a), Scalar(b);
      int out = 0;
      switch (op) {
        case LogicOp::And: out = a & b; break;
        case LogicOp::Or: out = a | b; break;
        case LogicOp::Xor: out = a ^ b; break;
      }
      p.target = VectorX<Scalar>(1);
      p.target << Scalar(out);
      ds.patterns.push_back(std::move(p));
    }
  return ds;
}

template <typename Scalar = double>
struct EvalResult {
  Scalar mse{0};
  Scalar accuracy{0};
};

/// Free-phase inference over the dataset. mse averages, over patterns, the
/// squared output error divided by the output count; accuracy thresholds
/// every output at 0.5 (>= 0.5 reads as class 1).
template <typename Scalar>
EvalResult<Scalar> evaluate(const Network<Scalar>& net, const Dataset<Scalar>& ds,
                            const Hyperparams<Scalar>& hp) {
  if (ds.patterns.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const Index n_out = net.n_output();
  EvalResult<Scalar> res;
  Index correct = 0;
  for (const auto& p : ds.patterns) {
    if (p.input.size() != net.n_input || p.target.size() != n_out)
      throw std::invalid_argument("evaluate: dataset dimensions do not match network roles");
    const VectorX<Scalar> s0 = free_equilibrium(net, p.input, hp);
    const VectorX<Scalar> y_hat = read_outputs(net, s0);
    res.mse += (y_hat - p.target).squaredNorm() / static_cast<Scalar>(n_out);
    bool all_match = true;
    for (Index k = 0; k < n_out; ++k)
      all_match = all_match && ((y_hat(k) >= Scalar(0.5)) == (p.target(k) >= Scalar(0.5)));
    correct += all_match;
  }
  const auto n = static_cast<Scalar>(ds.patterns.size());
  res.mse /= n;
  res.accuracy = static_cast<Scalar>(correct) / n;
  return res;
}

/// Everything observed during one training run.
template <typename Scalar = double>
struct RunRecord {
  std::uint64_t seed{0};
  std::vector<Scalar> mse;       // after each epoch
  std::vector<Scalar> sparsity;  // after each epoch
  bool converged{false};
  std::optional<Index> epochs_to_threshold;  // 1-based, set iff converged
  Scalar final_sparsity{0};
  std::vector<PruneEvent<Scalar>> prune_events;
  std::string error;  // nonempty when the run aborted
};

/// Two-phase training loop: per epoch, iterate patterns in dataset order;
/// per pattern, relax freely to s0, relax nudged from s0, update with the
/// chosen rule, then optionally run the pruning lottery.
template <typename Scalar, typename Rng>
std::pair<Network<Scalar>, RunRecord<Scalar>> train(Network<Scalar> net, const Dataset<Scalar>& ds,
                                                    const Hyperparams<Scalar>& hp, int epochs,
                                                    LearningRule rule, bool prune, Rng& rng,
                                                    Scalar mse_threshold = Scalar(1e-2)) {
  if (epochs < 1) throw std::invalid_argument("train: epochs >= 1 violated");
  hp.validate();

  RunRecord<Scalar> rec;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    for (std::size_t k = 0; k < ds.patterns.size(); ++k) {
      const auto& p = ds.patterns[k];
      try {
        VectorX<Scalar> s_init = VectorX<Scalar>::Constant(net.n_total, hp.state_init);
        s_init.head(net.n_input) = p.input;
        const auto first = relax(net, s_init, p.input, VectorX<Scalar>(), Scalar(0),
                                 static_cast<Index>(hp.m0), hp);
        const VectorX<Scalar>& s0 = first.states.back();
        const auto second = relax(net, s0, p.input, p.target, hp.beta,
                                  static_cast<Index>(hp.m_beta), hp);
        const ParameterUpdate<Scalar> upd =
            rule == LearningRule::Deep ? deep_update(second, net)
                                       : asym_ep_update(s0, second.states.back(), net);
        net = apply_update(net, upd, hp);
        if (prune) {
          auto [pruned, events] = prune_step(net, hp, rng);
          net = std::move(pruned);
          for (auto& ev : events) {
            ev.epoch = epoch;
            ev.example_index = static_cast<Index>(k);
            rec.prune_events.push_back(ev);
          }
        }
      } catch (const DivergenceError& e) {
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                 ", pattern " + std::to_string(k) + ": " + e.what());
      }
    }
    const Scalar epoch_mse = evaluate(net, ds, hp).mse;
    rec.mse.push_back(epoch_mse);
    rec.sparsity.push_back(sparsity_fraction(net));
    if (!rec.converged && epoch_mse < mse_threshold) {
      rec.converged = true;
      rec.epochs_to_threshold = epoch;
    }
  }
  rec.final_sparsity = rec.sparsity.back();
  return {std::move(net), std::move(rec)};
}

struct Architecture {
  Index n_total{8};
  Index n_input{2};
  Index n_output{1};
};

template <typename Scalar = double>
struct EpochStats {
  Scalar min{0}, q25{0}, median{0}, q75{0}, max{0};
};

/// Linear-interpolation quantile of an unsorted sample.
template <typename Scalar>
Scalar quantile(std::vector<Scalar> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const Scalar frac = static_cast<Scalar>(pos - static_cast<double>(lo));
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

template <typename Scalar = double>
struct BatchResult {
  std::vector<RunRecord<Scalar>> records;
  std::vector<Network<Scalar>> final_networks;  // aligned with records
  std::vector<EpochStats<Scalar>> aggregate;    // per epoch, across runs
};

/// Independent seeded runs base_seed .. base_seed + n_runs - 1, each starting
/// from a fresh complete network. A failing run is recorded and skipped; it
/// does not abort the batch.
template <typename Scalar = double>
BatchResult<Scalar> run_batch(LogicOp task, int n_runs, const Hyperparams<Scalar>& hp,
                              LearningRule rule, bool prune, std::uint64_t base_seed,
                              Architecture arch = {}, int epochs = 2000,
                              Scalar mse_threshold = Scalar(1e-2)) {
  if (n_runs < 1) throw std::invalid_argument("run_batch: n_runs >= 1 violated");
  const Dataset<Scalar> ds = logic_dataset<Scalar>(task);

  BatchResult<Scalar> batch;
  for (int r = 0; r < n_runs; ++r) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
    RunRecord<Scalar> rec;
    Network<Scalar> final_net;
    try {
      Network<Scalar> net =
          new_complete_network<Scalar>(arch.n_total, arch.n_input, arch.n_output, hp.init_scale, seed);
      std::mt19937_64 rng(seed);
      std::tie(final_net, rec) = train(std::move(net), ds, hp, epochs, rule, prune, rng, mse_threshold);
    } catch (const std::exception& e) {
      rec.error = "seed " + std::to_string(seed) + ": " + e.what();
    }
    rec.seed = seed;
    batch.records.push_back(std::move(rec));
    batch.final_networks.push_back(std::move(final_net));
  }

  for (int e = 0; e < epochs; ++e) {
    std::vector<Scalar> column;
    for (const auto& rec : batch.records)
      if (static_cast<std::size_t>(e) < rec.mse.size()) column.push_back(rec.mse[static_cast<std::size_t>(e)]);
    if (column.empty()) break;
    EpochStats<Scalar> stats;
    stats.min = quantile(column, 0.0);
    stats.q25 = quantile(column, 0.25);
    stats.median = quantile(column, 0.5);
    stats.q75 = quantile(column, 0.75);
    stats.max = quantile(column, 1.0);
    batch.aggregate.push_back(stats);
  }
  return batch;
}

template <typename Scalar = double>
struct RuleComparison {
  BatchResult<Scalar> deep;
  BatchResult<Scalar> asym;
  int deep_converged{0};
  int asym_converged{0};
  std::optional<Scalar> deep_median_epochs;  // among converged runs
  std::optional<Scalar> asym_median_epochs;
};

namespace detail {

template <typename Scalar>
std::pair<int, std::optional<Scalar>> convergence_summary(const BatchResult<Scalar>& batch) {
  int converged = 0;
  std::vector<Scalar> epochs;
  for (const auto& rec : batch.records)
    if (rec.converged) {
      ++converged;
      epochs.push_back(static_cast<Scalar>(*rec.epochs_to_threshold));
    }
  if (epochs.empty()) return {0, std::nullopt};
  return {converged, quantile(epochs, 0.5)};
}

}  // namespace detail

/// Same seeds, same hyperparameters, both rules; reports per-rule convergence
/// counts and the median epochs-to-threshold among converged runs.
template <typename Scalar = double>
RuleComparison<Scalar> compare_rules(LogicOp task, int n_runs, const Hyperparams<Scalar>& hp,
                                     std::uint64_t base_seed, Architecture arch = {},
                                     int epochs = 2000, Scalar mse_threshold = Scalar(1e-2)) {
  RuleComparison<Scalar> cmp;
  cmp.deep = run_batch(task, n_runs, hp, LearningRule::Deep, false, base_seed, arch, epochs, mse_threshold);
  cmp.asym = run_batch(task, n_runs, hp, LearningRule::Asym, false, base_seed, arch, epochs, mse_threshold);
  std::tie(cmp.deep_converged, cmp.deep_median_epochs) = detail::convergence_summary(cmp.deep);
  std::tie(cmp.asym_converged, cmp.asym_median_epochs) = detail::convergence_summary(cmp.asym);
  return cmp;
}

}  // namespace deep
