#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "deep/config.hpp"
#include "deep/io.hpp"
#include "deep/training.hpp"

namespace deep {

/// What a training invocation produced, for console summaries and tests.
struct ExperimentSummary {
  int runs_total{0};
  int runs_converged{0};
  int runs_failed{0};
  double median_final_sparsity{0};
  std::vector<std::string> files_written;
};

namespace detail {

template <typename Scalar>
void write_batch_files(const std::filesystem::path& dir, const std::string& suffix,
                       const BatchResult<Scalar>& batch, bool prune, ExperimentSummary& summary) {
  auto emit = [&](const std::string& name, auto writer) {
    const auto path = dir / name;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    writer(os);
    summary.files_written.push_back(name);
  };

  emit("metrics" + suffix + ".csv", [&](std::ostream& os) { write_metrics_csv(os, batch.records); });
  emit("aggregate" + suffix + ".csv",
       [&](std::ostream& os) { write_aggregate_csv(os, batch.aggregate); });
  if (prune) {
    std::vector<PruneEvent<Scalar>> all_events;
    for (const auto& rec : batch.records)
      all_events.insert(all_events.end(), rec.prune_events.begin(), rec.prune_events.end());
    emit("prune_events" + suffix + ".csv",
         [&](std::ostream& os) { write_prune_log_csv(os, all_events); });
  }
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    if (!batch.records[r].error.empty()) continue;
    const std::string name =
        "network" + suffix + "_seed" + std::to_string(batch.records[r].seed) + ".txt";
    emit(name, [&](std::ostream& os) { save_network(os, batch.final_networks[r]); });
  }

  for (const auto& rec : batch.records) {
    ++summary.runs_total;
    summary.runs_converged += rec.converged;
    summary.runs_failed += !rec.error.empty();
  }
}

template <typename Scalar>
double median_final_sparsity(const BatchResult<Scalar>& batch) {
  std::vector<Scalar> values;
  for (const auto& rec : batch.records)
    if (rec.error.empty()) values.push_back(rec.final_sparsity);
  return values.empty() ? 0.0 : static_cast<double>(quantile(values, 0.5));
}

}  // namespace detail

/// Runs the configured experiment and writes every output file (manifest,
/// metrics, aggregates, final networks, prune log, comparison summary) into
/// cfg.out_dir. Non-convergence is an outcome, not an error; the call throws
/// only for invalid configuration, unwritable output, or when every run fails.
inline ExperimentSummary run_experiment(const RunConfig& cfg) {
  cfg.validate();
  const LogicOp task = logic_op_from_string(cfg.task);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);

  ExperimentSummary summary;
  save_manifest(dir / "manifest.json", cfg);
  summary.files_written.push_back("manifest.json");

  if (cfg.compare) {
    const auto cmp = compare_rules<double>(task, cfg.runs, cfg.hp, cfg.hp.seed,
                                           cfg.architecture(), cfg.epochs, cfg.mse_threshold);
    detail::write_batch_files(dir, "_deep", cmp.deep, false, summary);
    detail::write_batch_files(dir, "_asym", cmp.asym, false, summary);
    {
      const auto path = dir / "compare_summary.csv";
      std::ofstream os(path);
      if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
      os << "rule,converged,total,median_epochs_to_threshold\n";
      os << "deep," << cmp.deep_converged << ',' << cfg.runs << ','
         << (cmp.deep_median_epochs ? format_real(static_cast<double>(*cmp.deep_median_epochs)) : "")
         << '\n';
      os << "asym," << cmp.asym_converged << ',' << cfg.runs << ','
         << (cmp.asym_median_epochs ? format_real(static_cast<double>(*cmp.asym_median_epochs)) : "")
         << '\n';
      summary.files_written.push_back("compare_summary.csv");
    }
    summary.median_final_sparsity = detail::median_final_sparsity(cmp.deep);
  } else {
    const LearningRule rule = rule_from_string(cfg.rule);
    const auto batch = run_batch<double>(task, cfg.runs, cfg.hp, rule, cfg.prune, cfg.hp.seed,
                                         cfg.architecture(), cfg.epochs, cfg.mse_threshold);
    detail::write_batch_files(dir, "", batch, cfg.prune, summary);
    summary.median_final_sparsity = detail::median_final_sparsity(batch);
  }

  if (summary.runs_failed == summary.runs_total)
    throw std::runtime_error("all runs failed (numerical divergence); see run records");
  return summary;
}

}  // namespace deep
