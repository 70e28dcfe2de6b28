#include "osal/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "osal/gmm.hpp"
#include "osal/rng.hpp"

namespace osal {

namespace {

struct ScoredIndex {
    std::size_t index = 0;
    double score = 0.0;
    double mav = 0.0;
};

// Shared ordering: score descending, MAV descending, index ascending.
bool scored_before(const ScoredIndex& a, const ScoredIndex& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.mav != b.mav) return a.mav > b.mav;
    return a.index < b.index;
}

// Top-budget selection for the score-and-sort baselines.
QueryBatch take_top(std::vector<ScoredIndex> scored, std::size_t budget) {
    std::sort(scored.begin(), scored.end(), scored_before);
    const std::size_t take = std::min(budget, scored.size());
    QueryBatch batch;
    batch.indices.reserve(take);
    batch.scores.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        batch.indices.push_back(scored[i].index);
        batch.scores.push_back(scored[i].score);
    }
    return batch;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

void require_nonempty(const PoolState& pool, const char* who) {
    if (pool.unlabeled.empty()) {
        throw std::invalid_argument(std::string(who) + ": unlabeled pool is empty");
    }
}

void require_budget(std::size_t budget, const char* who) {
    if (budget == 0) {
        throw std::invalid_argument(std::string(who) + ": budget must be >= 1");
    }
}

}  // namespace

Strategy parse_strategy(const std::string& name) {
    if (name == "random") return Strategy::random;
    if (name == "uncertainty") return Strategy::uncertainty;
    if (name == "certainty") return Strategy::certainty;
    if (name == "coreset") return Strategy::coreset;
    if (name == "bald") return Strategy::bald;
    if (name == "lfosa") return Strategy::lfosa;
    throw std::invalid_argument(
        "unknown strategy '" + name +
        "' (expected random|uncertainty|certainty|coreset|bald|lfosa)");
}

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::random: return "random";
        case Strategy::uncertainty: return "uncertainty";
        case Strategy::certainty: return "certainty";
        case Strategy::coreset: return "coreset";
        case Strategy::bald: return "bald";
        case Strategy::lfosa: return "lfosa";
    }
    throw std::logic_error("to_string: bad strategy value");
}

std::vector<MavRecord> collect_mavs(const NetParams& detector, const Dataset& dataset,
                                    const PoolState& pool, std::size_t n_known) {
    if (detector.spec.output_dim != n_known + 1) {
        throw std::invalid_argument("collect_mavs: detector must have n_known + 1 outputs");
    }
    std::vector<MavRecord> records;
    records.reserve(pool.unlabeled.size());
    for (std::size_t idx : pool.unlabeled) {
        const ForwardResult result = forward(detector, dataset.row(idx));
        MavRecord record;
        record.index = idx;
        record.predicted_class = static_cast<std::size_t>(
            std::max_element(result.logits.begin(), result.logits.end()) -
            result.logits.begin());
        record.mav = *std::max_element(result.logits.begin(),
                                       result.logits.begin() + n_known);
        records.push_back(record);
    }
    return records;
}

QueryBatch lfosa_select(const NetParams& detector, const Dataset& dataset,
                        const PoolState& pool, std::size_t budget,
                        std::size_t n_known) {
    require_budget(budget, "lfosa_select");
    require_nonempty(pool, "lfosa_select");

    const std::vector<MavRecord> records = collect_mavs(detector, dataset, pool, n_known);

    // Group the predicted-known records by class.
    std::map<std::size_t, std::vector<const MavRecord*>> by_class;
    for (const MavRecord& record : records) {
        if (record.predicted_class < n_known) {
            by_class[record.predicted_class].push_back(&record);
        }
    }

    std::vector<ScoredIndex> scored;
    for (const auto& [cls, members] : by_class) {
        std::vector<double> mavs;
        mavs.reserve(members.size());
        for (const MavRecord* record : members) mavs.push_back(record->mav);

        const bool identical =
            std::all_of(mavs.begin(), mavs.end(), [&](double v) { return v == mavs.front(); });
        if (members.size() >= 5 && !identical) {
            const Gmm1d gmm = fit_gmm2(mavs);
            for (const MavRecord* record : members) {
                scored.push_back({record->index, posterior_known(gmm, record->mav), record->mav});
            }
        } else {
            // Too few members (or a degenerate MAV set) to model: score with
            // the uninformative posterior.
            for (const MavRecord* record : members) {
                scored.push_back({record->index, 0.5, record->mav});
            }
        }
    }

    std::sort(scored.begin(), scored.end(), scored_before);

    const std::size_t target = std::min(budget, pool.unlabeled.size());
    const std::size_t primary_take = std::min(budget, scored.size());
    QueryBatch batch;
    batch.indices.reserve(target);
    batch.scores.reserve(target);
    for (std::size_t i = 0; i < primary_take; ++i) {
        batch.indices.push_back(scored[i].index);
        batch.scores.push_back(scored[i].score);
    }
    if (primary_take > 0) batch.threshold = scored[primary_take - 1].score;

    if (batch.indices.size() < target) {
        // Shortage: every predicted-known record is already taken. Fill from
        // the predicted-unknown remainder by MAV, keeping the budget intact.
        std::vector<ScoredIndex> fallback;
        for (const MavRecord& record : records) {
            if (record.predicted_class >= n_known) {
                fallback.push_back({record.index, record.mav, record.mav});
            }
        }
        std::sort(fallback.begin(), fallback.end(), scored_before);
        for (const ScoredIndex& entry : fallback) {
            if (batch.indices.size() == target) break;
            batch.indices.push_back(entry.index);
            batch.scores.push_back(-1.0);
        }
    }
    return batch;
}

QueryBatch random_select(const PoolState& pool, std::size_t budget, std::uint64_t seed) {
    require_budget(budget, "random_select");
    require_nonempty(pool, "random_select");

    std::vector<std::size_t> candidates = pool.unlabeled;
    Rng rng(seed);
    const std::size_t take = std::min(budget, candidates.size());
    QueryBatch batch;
    batch.indices.reserve(take);
    batch.scores.assign(take, 0.0);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
        batch.indices.push_back(candidates[i]);
    }
    return batch;
}

QueryBatch uncertainty_select(const NetParams& classifier, const Dataset& dataset,
                              const PoolState& pool, std::size_t budget) {
    require_budget(budget, "uncertainty_select");
    require_nonempty(pool, "uncertainty_select");

    std::vector<ScoredIndex> scored;
    scored.reserve(pool.unlabeled.size());
    for (std::size_t idx : pool.unlabeled) {
        const ForwardResult result = forward(classifier, dataset.row(idx));
        scored.push_back({idx, entropy(softmax_t(result.logits, 1.0)), 0.0});
    }
    return take_top(std::move(scored), budget);
}

QueryBatch certainty_select(const NetParams& classifier, const Dataset& dataset,
                            const PoolState& pool, std::size_t budget) {
    require_budget(budget, "certainty_select");
    require_nonempty(pool, "certainty_select");

    std::vector<ScoredIndex> scored;
    scored.reserve(pool.unlabeled.size());
    for (std::size_t idx : pool.unlabeled) {
        const ForwardResult result = forward(classifier, dataset.row(idx));
        const std::vector<double> probs = softmax_t(result.logits, 1.0);
        scored.push_back({idx, *std::max_element(probs.begin(), probs.end()), 0.0});
    }
    return take_top(std::move(scored), budget);
}

QueryBatch coreset_select(const NetParams& classifier, const Dataset& dataset,
                          const PoolState& pool, std::size_t budget) {
    require_budget(budget, "coreset_select");
    require_nonempty(pool, "coreset_select");

    std::vector<std::vector<double>> candidate_features;
    candidate_features.reserve(pool.unlabeled.size());
    for (std::size_t idx : pool.unlabeled) {
        candidate_features.push_back(forward(classifier, dataset.row(idx)).penultimate);
    }

    const auto sq_dist = [](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            acc += d * d;
        }
        return acc;
    };

    // min_sq[i]: squared distance from candidate i to its nearest center.
    // With an empty labeled set the first pick falls to the index-smallest
    // candidate (all distances infinite, ties break by position).
    std::vector<double> min_sq(candidate_features.size(),
                               std::numeric_limits<double>::infinity());
    for (const LabeledExample& ex : pool.labeled) {
        const std::vector<double> center = forward(classifier, dataset.row(ex.index)).penultimate;
        for (std::size_t i = 0; i < candidate_features.size(); ++i) {
            min_sq[i] = std::min(min_sq[i], sq_dist(candidate_features[i], center));
        }
    }

    std::vector<bool> chosen(candidate_features.size(), false);
    const std::size_t take = std::min(budget, pool.unlabeled.size());
    QueryBatch batch;
    batch.indices.reserve(take);
    batch.scores.reserve(take);
    for (std::size_t pick = 0; pick < take; ++pick) {
        std::size_t best = candidate_features.size();
        for (std::size_t i = 0; i < candidate_features.size(); ++i) {
            if (chosen[i]) continue;
            if (best == candidate_features.size() || min_sq[i] > min_sq[best]) best = i;
        }
        chosen[best] = true;
        batch.indices.push_back(pool.unlabeled[best]);
        batch.scores.push_back(std::isinf(min_sq[best]) ? min_sq[best]
                                                        : std::sqrt(min_sq[best]));
        for (std::size_t i = 0; i < candidate_features.size(); ++i) {
            if (!chosen[i]) {
                min_sq[i] = std::min(min_sq[i], sq_dist(candidate_features[i],
                                                        candidate_features[best]));
            }
        }
    }
    return batch;
}

QueryBatch bald_select(const NetParams& classifier, const Dataset& dataset,
                       const PoolState& pool, std::size_t budget,
                       std::size_t n_samples, std::uint64_t seed) {
    require_budget(budget, "bald_select");
    require_nonempty(pool, "bald_select");
    if (n_samples == 0) throw std::invalid_argument("bald_select: n_samples must be >= 1");

    std::vector<ScoredIndex> scored;
    scored.reserve(pool.unlabeled.size());
    for (std::size_t idx : pool.unlabeled) {
        const std::vector<std::vector<double>> samples =
            mc_dropout_probs(classifier, dataset.row(idx), n_samples, mix_seed(seed, idx));

        // Identical samples mean a deterministic model: zero epistemic MI,
        // without the rounding residue of computing H(mean) - mean(H).
        const bool identical = std::all_of(samples.begin(), samples.end(),
                                           [&](const auto& s) { return s == samples.front(); });
        if (identical) {
            scored.push_back({idx, 0.0, 0.0});
            continue;
        }

        std::vector<double> mean_probs(classifier.spec.output_dim, 0.0);
        double mean_entropy = 0.0;
        for (const std::vector<double>& probs : samples) {
            for (std::size_t c = 0; c < probs.size(); ++c) mean_probs[c] += probs[c];
            mean_entropy += entropy(probs);
        }
        for (double& p : mean_probs) p /= static_cast<double>(n_samples);
        mean_entropy /= static_cast<double>(n_samples);

        scored.push_back({idx, entropy(mean_probs) - mean_entropy, 0.0});
    }
    return take_top(std::move(scored), budget);
}

}  // namespace osal
