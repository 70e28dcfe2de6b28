#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osal/datapool.hpp"
#include "osal/net.hpp"
#include "osal/samplers.hpp"

namespace osal {

// Ablation switches over the posterior-ranked pipeline:
//   no_temperature / high_temperature pin the detector loss temperature to
//   1 / 2; shared_network drops the separate classifier and classifies with
//   the detector's first K logits; no_invalid_set trains the detector on
//   labeled data only.
enum class Ablation { full, no_temperature, high_temperature, shared_network, no_invalid_set };

Ablation parse_ablation(const std::string& name);
std::string to_string(Ablation ablation);

struct ExperimentConfig {
    // Synthetic dataset parameters; ignored when dataset_csv is set.
    std::size_t n_classes = 20;
    std::size_t dims = 20;
    std::size_t per_class = 250;
    double cluster_spread = 1.0;
    double center_scale = 5.0;
    // External dataset (train/test CSV pair) instead of the generator.
    std::string dataset_csv;
    std::string dataset_test_csv;

    double mismatch_ratio = 0.25;
    std::size_t init_per_class = 10;
    std::size_t rounds = 5;
    std::size_t budget = 100;
    Strategy strategy = Strategy::lfosa;
    Ablation ablation = Ablation::full;

    std::vector<std::size_t> hidden_dims = {64};
    double dropout_rate = 0.0;   // resolve_config defaults this to 0.5 for bald
    std::size_t mc_samples = 10;

    TrainConfig detector_train;    // temperature 0.5
    TrainConfig classifier_train;  // temperature 1.0

    std::vector<std::uint64_t> seeds = {1, 2, 3, 4};

    void validate() const;
};

ExperimentConfig default_config();

struct RoundMetrics {
    std::size_t round = 0;
    std::size_t n_known_queried = 0;    // k_i
    std::size_t n_unknown_queried = 0;  // l_i
    double recall = 0.0;
    double precision = 0.0;
    double test_accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// Cumulative known-class selections over the total known-class examples that
// were unlabeled at round 0.
double selection_recall(std::span<const std::size_t> known_counts,
                        std::size_t n_known_unlabeled);

// k_i / (k_i + l_i).
double selection_precision(std::size_t n_known, std::size_t n_unknown);

struct ClassifierMetrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// Confusion-matrix metrics over n_classes classes. Per-class precision is 0
// for classes never predicted; F1 is 0 when precision + recall is 0; macro
// values are unweighted means.
ClassifierMetrics classifier_metrics(std::span<const std::size_t> predictions,
                                     std::span<const std::size_t> truths,
                                     std::size_t n_classes);

// Runs the classifier over the known-class test examples and scores it.
ClassifierMetrics evaluate_classifier(const NetParams& classifier, const Dataset& dataset,
                                      const OpenSetSplit& split);

// Detector training pairs: labeled examples with their class, plus (unless
// the invalid set is excluded) invalid examples mapped to the unknown class
// n_known.
std::vector<TrainExample> build_detector_training_set(const Dataset& dataset,
                                                      const PoolState& pool,
                                                      std::size_t n_known,
                                                      bool include_invalid);

std::vector<TrainExample> build_classifier_training_set(const Dataset& dataset,
                                                        const PoolState& pool);

// Per-seed mutable state of the annotation loop.
struct SeedState {
    Dataset dataset;
    OpenSetSplit split;
    PoolState pool;
    std::size_t n_known_unlabeled = 0;       // recall denominator, fixed at round 0
    std::vector<std::size_t> known_counts;   // k_1..k_i history
    std::optional<NetParams> classifier;     // carried between rounds
    std::uint64_t experiment_seed = 0;
};

SeedState init_seed_state(const ExperimentConfig& config, std::uint64_t seed);

// One annotation round: train the selection model, select a batch, query the
// oracle, retrain the classifier on the grown labeled set, and score it.
RoundMetrics run_round(SeedState& state, const ExperimentConfig& config);

struct ExperimentRow {
    std::uint64_t seed = 0;
    RoundMetrics metrics;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;  // ordered by (config seed order, round)
};

// All seeds, all rounds. jobs > 1 runs seeds on that many threads; results
// are identical regardless of jobs.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs = 1);

struct AggregateRow {
    std::size_t round = 0;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation over seeds
};

// Per-round mean and stddev across seeds of one metric column.
std::vector<AggregateRow> aggregate_metric(const ExperimentResult& result,
                                           double (*metric)(const RoundMetrics&));

}  // namespace osal
