#include "osal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "osal/log.hpp"

namespace osal {

namespace {

// Per-purpose seed derivation from the experiment seed s: dataset s, initial
// pools s+1, then a 16-wide block per round with fixed offsets inside it.
// Documented in the README; keep the two in sync.
constexpr std::uint64_t kRoundSeedStride = 16;
constexpr std::uint64_t kDetectorInitOffset = 2;
constexpr std::uint64_t kDetectorShuffleOffset = 3;
constexpr std::uint64_t kPreClassifierInitOffset = 4;
constexpr std::uint64_t kPreClassifierShuffleOffset = 5;
constexpr std::uint64_t kSamplerOffset = 6;
constexpr std::uint64_t kClassifierInitOffset = 7;
constexpr std::uint64_t kClassifierShuffleOffset = 8;

std::uint64_t round_seed(std::uint64_t experiment_seed, std::size_t round,
                         std::uint64_t offset) {
    return experiment_seed + kRoundSeedStride * static_cast<std::uint64_t>(round) + offset;
}

NetSpec net_spec_for(const ExperimentConfig& config, const Dataset& dataset,
                     std::size_t output_dim) {
    NetSpec spec;
    spec.input_dim = dataset.dims;
    spec.hidden_dims = config.hidden_dims;
    spec.output_dim = output_dim;
    spec.dropout_rate = config.dropout_rate;
    return spec;
}

NetParams train_classifier_on_labeled(const SeedState& state, const ExperimentConfig& config,
                                      std::uint64_t init_seed, std::uint64_t shuffle_seed) {
    const NetSpec spec = net_spec_for(config, state.dataset, state.split.n_known());
    const std::vector<TrainExample> data =
        build_classifier_training_set(state.dataset, state.pool);
    TrainConfig train_cfg = config.classifier_train;
    train_cfg.seed = shuffle_seed;
    return train(init_params(spec, init_seed), data, train_cfg);
}

}  // namespace

Ablation parse_ablation(const std::string& name) {
    if (name == "full") return Ablation::full;
    if (name == "no_temperature") return Ablation::no_temperature;
    if (name == "high_temperature") return Ablation::high_temperature;
    if (name == "shared_network") return Ablation::shared_network;
    if (name == "no_invalid_set") return Ablation::no_invalid_set;
    throw std::invalid_argument(
        "unknown ablation '" + name +
        "' (expected full|no_temperature|high_temperature|shared_network|no_invalid_set)");
}

std::string to_string(Ablation ablation) {
    switch (ablation) {
        case Ablation::full: return "full";
        case Ablation::no_temperature: return "no_temperature";
        case Ablation::high_temperature: return "high_temperature";
        case Ablation::shared_network: return "shared_network";
        case Ablation::no_invalid_set: return "no_invalid_set";
    }
    throw std::logic_error("to_string: bad ablation value");
}

void ExperimentConfig::validate() const {
    if (rounds == 0) throw std::invalid_argument("config: rounds must be >= 1");
    if (budget == 0) throw std::invalid_argument("config: budget must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
    if (mismatch_ratio <= 0.0 || mismatch_ratio > 1.0) {
        throw std::invalid_argument("config: mismatch_ratio must be in (0, 1]");
    }
    if (init_per_class == 0) throw std::invalid_argument("config: init_per_class must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw std::invalid_argument("config: dropout_rate must be in [0, 1)");
    }
    if (mc_samples == 0) throw std::invalid_argument("config: mc_samples must be >= 1");
    if (detector_train.temperature <= 0.0 || classifier_train.temperature <= 0.0) {
        throw std::invalid_argument("config: temperatures must be > 0");
    }
    if (dataset_csv.empty() != dataset_test_csv.empty()) {
        throw std::invalid_argument(
            "config: dataset_csv and dataset_test_csv must be set together");
    }
    if (dataset_csv.empty()) {
        if (n_classes < 2) throw std::invalid_argument("config: n_classes must be >= 2");
        if (dims < 2) throw std::invalid_argument("config: dims must be >= 2");
        if (per_class == 0) throw std::invalid_argument("config: per_class must be >= 1");
    }
}

ExperimentConfig default_config() {
    ExperimentConfig config;
    config.detector_train.temperature = 0.5;
    config.classifier_train.temperature = 1.0;
    return config;
}

double selection_recall(std::span<const std::size_t> known_counts,
                        std::size_t n_known_unlabeled) {
    if (n_known_unlabeled == 0) {
        throw std::invalid_argument("selection_recall: no known examples in the pool");
    }
    std::size_t total = 0;
    for (std::size_t k : known_counts) total += k;
    return static_cast<double>(total) / static_cast<double>(n_known_unlabeled);
}

double selection_precision(std::size_t n_known, std::size_t n_unknown) {
    const std::size_t total = n_known + n_unknown;
    if (total == 0) throw std::invalid_argument("selection_precision: empty batch");
    return static_cast<double>(n_known) / static_cast<double>(total);
}

ClassifierMetrics classifier_metrics(std::span<const std::size_t> predictions,
                                     std::span<const std::size_t> truths,
                                     std::size_t n_classes) {
    if (predictions.size() != truths.size()) {
        throw std::invalid_argument("classifier_metrics: prediction/truth size mismatch");
    }
    if (predictions.empty()) {
        throw std::invalid_argument("classifier_metrics: empty test split");
    }

    std::vector<std::size_t> true_positive(n_classes, 0);
    std::vector<std::size_t> predicted(n_classes, 0);
    std::vector<std::size_t> actual(n_classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] >= n_classes || truths[i] >= n_classes) {
            throw std::invalid_argument("classifier_metrics: class index out of range");
        }
        ++predicted[predictions[i]];
        ++actual[truths[i]];
        if (predictions[i] == truths[i]) {
            ++true_positive[truths[i]];
            ++correct;
        }
    }

    ClassifierMetrics metrics;
    metrics.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double precision =
            predicted[c] > 0 ? static_cast<double>(true_positive[c]) / predicted[c] : 0.0;
        const double recall =
            actual[c] > 0 ? static_cast<double>(true_positive[c]) / actual[c] : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        metrics.macro_precision += precision;
        metrics.macro_recall += recall;
        metrics.macro_f1 += f1;
    }
    metrics.macro_precision /= static_cast<double>(n_classes);
    metrics.macro_recall /= static_cast<double>(n_classes);
    metrics.macro_f1 /= static_cast<double>(n_classes);
    return metrics;
}

ClassifierMetrics evaluate_classifier(const NetParams& classifier, const Dataset& dataset,
                                      const OpenSetSplit& split) {
    std::vector<std::size_t> predictions;
    std::vector<std::size_t> truths;
    for (std::size_t idx : dataset.test_indices) {
        if (!split.is_known(dataset.labels[idx])) continue;
        predictions.push_back(predict_class(classifier, dataset.row(idx)));
        truths.push_back(dataset.labels[idx]);
    }
    return classifier_metrics(predictions, truths, split.n_known());
}

std::vector<TrainExample> build_detector_training_set(const Dataset& dataset,
                                                      const PoolState& pool,
                                                      std::size_t n_known,
                                                      bool include_invalid) {
    std::vector<TrainExample> data;
    data.reserve(pool.labeled.size() + (include_invalid ? pool.invalid.size() : 0));
    for (const LabeledExample& ex : pool.labeled) {
        data.push_back({dataset.row(ex.index), ex.label});
    }
    if (include_invalid) {
        for (std::size_t idx : pool.invalid) {
            data.push_back({dataset.row(idx), n_known});
        }
    }
    return data;
}

std::vector<TrainExample> build_classifier_training_set(const Dataset& dataset,
                                                        const PoolState& pool) {
    std::vector<TrainExample> data;
    data.reserve(pool.labeled.size());
    for (const LabeledExample& ex : pool.labeled) {
        data.push_back({dataset.row(ex.index), ex.label});
    }
    return data;
}

SeedState init_seed_state(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    SeedState state;
    state.experiment_seed = seed;
    if (!config.dataset_csv.empty()) {
        state.dataset = load_dataset_csv(config.dataset_csv, config.dataset_test_csv);
    } else {
        state.dataset = make_synthetic_openset(config.n_classes, config.dims,
                                               config.per_class, config.cluster_spread,
                                               config.center_scale, seed);
    }
    state.split = split_known_unknown(state.dataset.n_classes, config.mismatch_ratio);
    state.pool = init_pools(state.dataset, state.split, config.init_per_class, seed + 1);
    state.n_known_unlabeled = count_unlabeled_known(state.dataset, state.split, state.pool);
    return state;
}

RoundMetrics run_round(SeedState& state, const ExperimentConfig& config) {
    if (state.pool.unlabeled.empty()) {
        throw std::runtime_error("run_round: unlabeled pool is exhausted");
    }
    const std::size_t round = state.pool.round + 1;
    const std::size_t n_known = state.split.n_known();
    const std::uint64_t seed = state.experiment_seed;

    double detector_temperature = config.detector_train.temperature;
    if (config.ablation == Ablation::no_temperature) detector_temperature = 1.0;
    if (config.ablation == Ablation::high_temperature) detector_temperature = 2.0;

    // The detector is trained only when something consumes it: the
    // posterior-ranked strategy, or the shared-network ablation where it
    // also classifies.
    const bool need_detector = config.strategy == Strategy::lfosa ||
                               config.ablation == Ablation::shared_network;
    std::optional<NetParams> detector;
    if (need_detector) {
        const NetSpec spec = net_spec_for(config, state.dataset, n_known + 1);
        const std::vector<TrainExample> data = build_detector_training_set(
            state.dataset, state.pool, n_known,
            /*include_invalid=*/config.ablation != Ablation::no_invalid_set);
        TrainConfig train_cfg = config.detector_train;
        train_cfg.temperature = detector_temperature;
        train_cfg.seed = round_seed(seed, round, kDetectorShuffleOffset);
        detector = train(init_params(spec, round_seed(seed, round, kDetectorInitOffset)),
                         data, train_cfg);
        log_debug("seed " + std::to_string(seed) + " round " + std::to_string(round) +
                  ": detector trained on " + std::to_string(data.size()) + " examples");
    }

    // Baselines score with the classifier of the previous round; before the
    // first round one is trained on the initial labeled set.
    const NetParams* selection_model = nullptr;
    NetParams shared_view;
    if (config.strategy != Strategy::lfosa && config.strategy != Strategy::random) {
        if (config.ablation == Ablation::shared_network) {
            shared_view = truncate_output(*detector, n_known);
            selection_model = &shared_view;
        } else {
            if (!state.classifier.has_value()) {
                state.classifier = train_classifier_on_labeled(
                    state, config, round_seed(seed, round, kPreClassifierInitOffset),
                    round_seed(seed, round, kPreClassifierShuffleOffset));
            }
            selection_model = &*state.classifier;
        }
    }

    QueryBatch batch;
    switch (config.strategy) {
        case Strategy::lfosa:
            batch = lfosa_select(*detector, state.dataset, state.pool, config.budget, n_known);
            break;
        case Strategy::random:
            batch = random_select(state.pool, config.budget,
                                  round_seed(seed, round, kSamplerOffset));
            break;
        case Strategy::uncertainty:
            batch = uncertainty_select(*selection_model, state.dataset, state.pool,
                                       config.budget);
            break;
        case Strategy::certainty:
            batch = certainty_select(*selection_model, state.dataset, state.pool,
                                     config.budget);
            break;
        case Strategy::coreset:
            batch = coreset_select(*selection_model, state.dataset, state.pool,
                                   config.budget);
            break;
        case Strategy::bald:
            batch = bald_select(*selection_model, state.dataset, state.pool, config.budget,
                                config.mc_samples, round_seed(seed, round, kSamplerOffset));
            break;
    }

    QueryOutcome outcome =
        apply_query(state.pool, batch.indices, make_oracle(state.dataset, state.split));
    state.pool = std::move(outcome.pool);
    state.known_counts.push_back(outcome.n_known);

    ClassifierMetrics scores;
    if (config.ablation == Ablation::shared_network) {
        scores = evaluate_classifier(truncate_output(*detector, n_known), state.dataset,
                                     state.split);
    } else {
        state.classifier = train_classifier_on_labeled(
            state, config, round_seed(seed, round, kClassifierInitOffset),
            round_seed(seed, round, kClassifierShuffleOffset));
        scores = evaluate_classifier(*state.classifier, state.dataset, state.split);
    }

    RoundMetrics metrics;
    metrics.round = round;
    metrics.n_known_queried = outcome.n_known;
    metrics.n_unknown_queried = outcome.n_unknown;
    metrics.recall = selection_recall(state.known_counts, state.n_known_unlabeled);
    metrics.precision = selection_precision(outcome.n_known, outcome.n_unknown);
    metrics.test_accuracy = scores.accuracy;
    metrics.macro_precision = scores.macro_precision;
    metrics.macro_recall = scores.macro_recall;
    metrics.macro_f1 = scores.macro_f1;
    log_info("seed " + std::to_string(seed) + " round " + std::to_string(round) + " [" +
             to_string(config.strategy) + "/" + to_string(config.ablation) +
             "]: k=" + std::to_string(metrics.n_known_queried) +
             " l=" + std::to_string(metrics.n_unknown_queried) +
             " precision=" + std::to_string(metrics.precision) +
             " accuracy=" + std::to_string(metrics.test_accuracy));
    return metrics;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs) {
    config.validate();
    const std::size_t n_seeds = config.seeds.size();
    std::vector<std::vector<ExperimentRow>> per_seed(n_seeds);

    const auto run_seed = [&](std::size_t slot) {
        const std::uint64_t seed = config.seeds[slot];
        SeedState state = init_seed_state(config, seed);
        for (std::size_t r = 0; r < config.rounds; ++r) {
            if (state.pool.unlabeled.empty()) {
                log_info("seed " + std::to_string(seed) +
                         ": unlabeled pool exhausted, stopping early");
                break;
            }
            per_seed[slot].push_back({seed, run_round(state, config)});
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n_seeds));
    if (workers == 1) {
        for (std::size_t slot = 0; slot < n_seeds; ++slot) run_seed(slot);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&] {
                for (std::size_t slot = next.fetch_add(1); slot < n_seeds;
                     slot = next.fetch_add(1)) {
                    run_seed(slot);
                }
            });
        }
        for (std::thread& t : threads) t.join();
    }

    ExperimentResult result;
    for (const std::vector<ExperimentRow>& rows : per_seed) {
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    return result;
}

std::vector<AggregateRow> aggregate_metric(const ExperimentResult& result,
                                           double (*metric)(const RoundMetrics&)) {
    std::vector<AggregateRow> table;
    std::vector<std::vector<double>> values_by_round;
    for (const ExperimentRow& row : result.rows) {
        if (row.metrics.round > values_by_round.size()) {
            values_by_round.resize(row.metrics.round);
        }
        values_by_round[row.metrics.round - 1].push_back(metric(row.metrics));
    }
    for (std::size_t r = 0; r < values_by_round.size(); ++r) {
        const std::vector<double>& values = values_by_round[r];
        if (values.empty()) continue;
        AggregateRow agg;
        agg.round = r + 1;
        for (double v : values) agg.mean += v;
        agg.mean /= static_cast<double>(values.size());
        if (values.size() > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
            agg.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
        table.push_back(agg);
    }
    return table;
}

}  // namespace osal
