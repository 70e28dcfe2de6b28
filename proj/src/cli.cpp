#include "osal/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "osal/config.hpp"
#include "osal/gmm.hpp"
#include "osal/log.hpp"
#include "osal/rng.hpp"

namespace osal {

namespace {

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_row(std::ostream& out, const ExperimentRow& row, const std::string& strategy,
               const std::string& ablation) {
    const RoundMetrics& m = row.metrics;
    out << row.seed << ',' << m.round << ',' << strategy << ',' << ablation << ','
        << m.n_known_queried << ',' << m.n_unknown_queried << ',' << fixed6(m.recall) << ','
        << fixed6(m.precision) << ',' << fixed6(m.test_accuracy) << ','
        << fixed6(m.macro_precision) << ',' << fixed6(m.macro_recall) << ','
        << fixed6(m.macro_f1) << '\n';
}

ExperimentConfig load_run_config(const RunOptions& options) {
    ExperimentConfig config = load_config(options.config_path);
    if (options.strategy_override) {
        config.strategy = parse_strategy(*options.strategy_override);
        if (config.strategy == Strategy::bald && config.dropout_rate == 0.0) {
            config.dropout_rate = 0.5;
        }
    }
    if (options.seed_override) config.seeds = {*options.seed_override};
    config.validate();
    return config;
}

}  // namespace

void write_results_csv(std::ostream& out, const ExperimentResult& result,
                       Strategy strategy, Ablation ablation, bool header) {
    if (header) {
        out << "seed,round,strategy,ablation,k_i,l_i,recall,precision,accuracy,"
               "macro_precision,macro_recall,macro_f1\n";
    }
    const std::string strategy_name = to_string(strategy);
    const std::string ablation_name = to_string(ablation);
    for (const ExperimentRow& row : result.rows) {
        write_row(out, row, strategy_name, ablation_name);
    }
}

void write_summary(std::ostream& out, const ExperimentResult& result) {
    struct Column {
        const char* name;
        double (*metric)(const RoundMetrics&);
    };
    static constexpr Column columns[] = {
        {"recall", [](const RoundMetrics& m) { return m.recall; }},
        {"precision", [](const RoundMetrics& m) { return m.precision; }},
        {"accuracy", [](const RoundMetrics& m) { return m.test_accuracy; }},
        {"macro_f1", [](const RoundMetrics& m) { return m.macro_f1; }},
    };

    out << "round";
    for (const Column& col : columns) out << "  " << col.name << " (mean+/-std)";
    out << '\n';
    std::vector<std::vector<AggregateRow>> tables;
    for (const Column& col : columns) tables.push_back(aggregate_metric(result, col.metric));
    if (tables.empty() || tables[0].empty()) return;
    for (std::size_t r = 0; r < tables[0].size(); ++r) {
        out << tables[0][r].round;
        for (const std::vector<AggregateRow>& table : tables) {
            out << "  " << fixed6(table[r].mean) << "+/-" << fixed6(table[r].stddev);
        }
        out << '\n';
    }
}

int cmd_run(const RunOptions& options) {
    try {
        const ExperimentConfig config = load_run_config(options);
        log_info("running strategy " + to_string(config.strategy) + " (" +
                 to_string(config.ablation) + "), " + std::to_string(config.seeds.size()) +
                 " seed(s), " + std::to_string(config.rounds) + " round(s)");
        const ExperimentResult result = run_experiment(config, options.jobs);

        std::ofstream out(options.out_path);
        if (!out) {
            std::cerr << "error: cannot open output file '" << options.out_path << "'\n";
            return 1;
        }
        write_results_csv(out, result, config.strategy, config.ablation);
        if (!out) {
            std::cerr << "error: write failed for '" << options.out_path << "'\n";
            return 1;
        }
        std::cout << "strategy " << to_string(config.strategy) << ", ablation "
                  << to_string(config.ablation) << ", results written to " << options.out_path
                  << "\n";
        write_summary(std::cout, result);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_compare(const CompareOptions& options) {
    try {
        if (options.strategies.empty()) {
            std::cerr << "error: compare needs at least one strategy\n";
            return 1;
        }
        ExperimentConfig config = load_config(options.config_path);
        std::filesystem::create_directories(options.out_dir);

        const std::string merged_path =
            (std::filesystem::path(options.out_dir) / "results_all.csv").string();
        std::ofstream merged(merged_path);
        if (!merged) {
            std::cerr << "error: cannot open output file '" << merged_path << "'\n";
            return 1;
        }
        bool first = true;
        for (const std::string& name : options.strategies) {
            ExperimentConfig strategy_config = config;
            strategy_config.strategy = parse_strategy(name);
            if (strategy_config.strategy == Strategy::bald && strategy_config.dropout_rate == 0.0) {
                strategy_config.dropout_rate = 0.5;
            }
            strategy_config.validate();

            log_info("compare: running strategy " + name);
            const ExperimentResult result = run_experiment(strategy_config, options.jobs);

            const std::string path =
                (std::filesystem::path(options.out_dir) / ("results_" + name + ".csv")).string();
            std::ofstream out(path);
            if (!out) {
                std::cerr << "error: cannot open output file '" << path << "'\n";
                return 1;
            }
            write_results_csv(out, result, strategy_config.strategy, strategy_config.ablation);
            write_results_csv(merged, result, strategy_config.strategy,
                              strategy_config.ablation, /*header=*/first);
            first = false;

            std::cout << "== strategy " << name << " ==\n";
            write_summary(std::cout, result);
        }
        std::cout << "merged long-format results written to " << merged_path << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

namespace {

bool report(const char* name, bool ok) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    return ok;
}

// Gradient of ce_loss_t by central finite differences, the independent
// counterpart of the analytic path.
std::vector<double> numeric_grad(std::span<const double> logits, std::size_t target,
                                 double temperature) {
    const double step = 1e-5;
    std::vector<double> grad(logits.size());
    std::vector<double> probe(logits.begin(), logits.end());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + step;
        const double hi = ce_loss_t(probe, target, temperature);
        probe[i] = saved - step;
        const double lo = ce_loss_t(probe, target, temperature);
        probe[i] = saved;
        grad[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

// Vector relative error ||a - b|| / max(||a||, ||b||).
double grad_relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        norm_a += a[i] * a[i];
        norm_b += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(norm_a), std::sqrt(norm_b), 1e-300});
}

bool selftest_gradient(bool mutate) {
    Rng rng(20240501);
    const double temperatures[] = {0.5, 1.0, 2.0};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.bounded(8);
        std::vector<double> logits(n);
        for (double& v : logits) v = rng.uniform(-5.0, 5.0);
        const std::size_t target = rng.bounded(n);
        const double temperature = temperatures[rng.bounded(3)];

        std::vector<double> analytic = loss_grad_logits(logits, target, temperature);
        if (mutate) analytic[0] += 1e-3;
        const std::vector<double> numeric = numeric_grad(logits, target, temperature);
        if (grad_relative_error(analytic, numeric) > 1e-6) return false;
    }
    return true;
}

bool selftest_em() {
    // Recovery on a known two-component sample.
    Rng rng(7);
    std::vector<double> values;
    for (int i = 0; i < 500; ++i) values.push_back(rng.normal(0.0, 1.0));
    for (int i = 0; i < 500; ++i) values.push_back(rng.normal(5.0, 1.0));
    const Gmm1d gmm = fit_gmm2(values);
    if (std::abs(gmm.means[0] - 0.0) > 0.2 || std::abs(gmm.means[1] - 5.0) > 0.2) return false;
    if (std::abs(gmm.weights[0] - 0.5) > 0.05) return false;

    // Monotone log-likelihood on random data.
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> data;
        const std::size_t n = 20 + rng.bounded(200);
        for (std::size_t i = 0; i < n; ++i) {
            data.push_back(rng.normal(rng.uniform(-3.0, 3.0), 0.5 + rng.uniform()));
        }
        EmTrace trace;
        fit_gmm2(data, 100, 1e-9, &trace);
        for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i) {
            if (trace.log_likelihood[i] < trace.log_likelihood[i - 1] - 1e-9) return false;
        }
    }
    return true;
}

bool selftest_metrics() {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n_classes = 2 + rng.bounded(6);
        const std::size_t n = 1 + rng.bounded(50);
        std::vector<std::size_t> predictions(n);
        std::vector<std::size_t> truths(n);
        for (std::size_t i = 0; i < n; ++i) {
            predictions[i] = rng.bounded(n_classes);
            truths[i] = rng.bounded(n_classes);
        }
        const ClassifierMetrics fast = classifier_metrics(predictions, truths, n_classes);

        // Brute-force recount.
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i) correct += predictions[i] == truths[i] ? 1 : 0;
        double macro_p = 0.0;
        double macro_r = 0.0;
        double macro_f = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            std::size_t tp = 0;
            std::size_t fp = 0;
            std::size_t fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (predictions[i] == c && truths[i] == c) ++tp;
                if (predictions[i] == c && truths[i] != c) ++fp;
                if (predictions[i] != c && truths[i] == c) ++fn;
            }
            const double p = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
            const double r = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
            macro_p += p;
            macro_r += r;
            macro_f += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        }
        macro_p /= double(n_classes);
        macro_r /= double(n_classes);
        macro_f /= double(n_classes);

        if (std::abs(fast.accuracy - double(correct) / double(n)) > 1e-12) return false;
        if (std::abs(fast.macro_precision - macro_p) > 1e-12) return false;
        if (std::abs(fast.macro_recall - macro_r) > 1e-12) return false;
        if (std::abs(fast.macro_f1 - macro_f) > 1e-12) return false;
    }

    // Recall/precision arithmetic.
    const std::size_t ks[] = {30, 20};
    if (std::abs(selection_recall(ks, 100) - 0.5) > 1e-12) return false;
    if (std::abs(selection_precision(60, 40) - 0.6) > 1e-12) return false;
    return true;
}

bool selftest_pool() {
    const Dataset ds = make_synthetic_openset(6, 2, 20, 0.5, 5.0, 11);
    const OpenSetSplit split = split_known_unknown(6, 0.5);
    PoolState pool = init_pools(ds, split, 3, 12);
    const std::size_t universe = pool.labeled.size() + pool.unlabeled.size() + pool.invalid.size();

    Rng rng(13);
    for (int step = 0; step < 100 && !pool.unlabeled.empty(); ++step) {
        std::vector<std::size_t> candidates = pool.unlabeled;
        rng.shuffle(candidates);
        candidates.resize(std::min<std::size_t>(1 + rng.bounded(5), candidates.size()));
        pool = apply_query(pool, candidates, make_oracle(ds, split)).pool;

        // Disjointness + conservation recount.
        std::vector<std::size_t> all;
        for (const LabeledExample& ex : pool.labeled) {
            if (!split.is_known(ex.label)) return false;
            all.push_back(ex.index);
        }
        for (std::size_t idx : pool.invalid) {
            if (split.is_known(ds.labels[idx])) return false;
            all.push_back(idx);
        }
        all.insert(all.end(), pool.unlabeled.begin(), pool.unlabeled.end());
        if (all.size() != universe) return false;
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end()) return false;
    }
    return true;
}

}  // namespace

int cmd_selftest(bool mutate_gradient) {
    bool ok = true;
    ok &= report("analytic gradient vs central finite differences",
                 selftest_gradient(mutate_gradient));
    ok &= report("EM recovery and per-iteration log-likelihood monotonicity", selftest_em());
    ok &= report("selection/classification metrics vs brute-force recount", selftest_metrics());
    ok &= report("pool partition invariants under random queries", selftest_pool());
    std::cout << (ok ? "selftest passed\n" : "selftest FAILED\n");
    return ok ? 0 : 1;
}

}  // namespace osal
