#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osal/datapool.hpp"
#include "osal/net.hpp"

namespace osal {

// One round's selection: indices into the dataset with their selection
// scores. threshold is the realized tau of the posterior-ranked strategy
// (the score of the last primary-path entry taken); unset for the baselines
// and when the batch is pure fallback.
struct QueryBatch {
    std::vector<std::size_t> indices;
    std::vector<double> scores;
    std::optional<double> threshold;
};

// Detector output for one unlabeled example. predicted_class ranges over
// [0, K] where K is the unknown class; mav is the maximum activation over
// the first K (known-class) logits.
struct MavRecord {
    std::size_t index = 0;
    std::size_t predicted_class = 0;
    double mav = 0.0;
};

enum class Strategy { random, uncertainty, certainty, coreset, bald, lfosa };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy strategy);

// Runs the detector over every unlabeled example. The detector must have
// n_known + 1 outputs.
std::vector<MavRecord> collect_mavs(const NetParams& detector, const Dataset& dataset,
                                    const PoolState& pool, std::size_t n_known);

// Posterior-ranked selection:
//   1. drop records the detector predicts as unknown;
//   2. per predicted class, fit a two-component GMM to the class's MAVs and
//      score each record with the posterior of the larger-mean component
//      (classes with fewer than 5 records or identical MAVs score 0.5);
//   3. merge all classes, sort by (score desc, mav desc, index asc);
//   4. take the top min(budget, count); tau is the last taken score;
//   5. if step 1 left fewer than budget records, fill with the remaining
//      unlabeled examples by MAV descending, with sentinel score -1.
QueryBatch lfosa_select(const NetParams& detector, const Dataset& dataset,
                        const PoolState& pool, std::size_t budget,
                        std::size_t n_known);

// Uniform sample without replacement.
QueryBatch random_select(const PoolState& pool, std::size_t budget, std::uint64_t seed);

// Top-budget by Shannon entropy of the classifier's softmax (T=1).
QueryBatch uncertainty_select(const NetParams& classifier, const Dataset& dataset,
                              const PoolState& pool, std::size_t budget);

// Top-budget by maximum softmax probability (T=1).
QueryBatch certainty_select(const NetParams& classifier, const Dataset& dataset,
                            const PoolState& pool, std::size_t budget);

// k-center greedy on the classifier's penultimate features, centers seeded
// with the labeled set.
QueryBatch coreset_select(const NetParams& classifier, const Dataset& dataset,
                          const PoolState& pool, std::size_t budget);

// BALD mutual information from MC-dropout samples: H(mean p) - mean H(p).
// Per-example sample seeds are mix_seed(seed, index).
QueryBatch bald_select(const NetParams& classifier, const Dataset& dataset,
                       const PoolState& pool, std::size_t budget,
                       std::size_t n_samples, std::uint64_t seed);

}  // namespace osal
