#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "osal/harness.hpp"

namespace osal {

struct RunOptions {
    std::string config_path;
    std::string out_path = "results.csv";
    std::optional<std::uint64_t> seed_override;     // replaces the seed list
    std::optional<std::string> strategy_override;   // replaces the strategy
    std::size_t jobs = 1;
};

struct CompareOptions {
    std::string config_path;
    std::vector<std::string> strategies;
    std::string out_dir = ".";
    std::size_t jobs = 1;
};

// Results table: header seed,round,strategy,ablation,k_i,l_i,recall,
// precision,accuracy,macro_precision,macro_recall,macro_f1; one row per
// (seed, round), reals with 6 decimal places. Byte-identical across runs of
// the same config.
void write_results_csv(std::ostream& out, const ExperimentResult& result,
                       Strategy strategy, Ablation ablation, bool header = true);

// Per-round mean +/- stddev summary of the main metric columns.
void write_summary(std::ostream& out, const ExperimentResult& result);

// Runs one experiment and writes the results CSV. Returns the process exit
// code; diagnostics go to stderr.
int cmd_run(const RunOptions& options);

// Runs the same config once per strategy, writing results_<strategy>.csv per
// strategy plus a merged long-format results_all.csv.
int cmd_compare(const CompareOptions& options);

// Fast invariant suite: analytic-vs-numeric gradients, EM monotonicity and
// recovery, metric recounts against brute force, pool partition fuzzing.
// mutate_gradient deliberately perturbs the gradient under test (negative
// control for the suite itself).
int cmd_selftest(bool mutate_gradient = false);

}  // namespace osal
