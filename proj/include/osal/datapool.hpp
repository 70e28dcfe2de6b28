#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace osal {

// In-memory dataset: n examples of `dims` features with integer labels, plus
// a fixed train/test partition. Row-major feature storage.
struct Dataset {
    std::size_t n_classes = 0;
    std::size_t dims = 0;
    std::vector<double> features;
    std::vector<std::size_t> labels;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dims, dims};
    }
};

// Partition of the class ids into K known and L unknown classes. Known
// classes are the first K ids, so classifier labels need no remapping.
struct OpenSetSplit {
    std::vector<std::size_t> known_classes;
    std::vector<std::size_t> unknown_classes;
    double mismatch_ratio = 0.0;

    std::size_t n_known() const { return known_classes.size(); }
    bool is_known(std::size_t cls) const { return cls < known_classes.size(); }
};

struct LabeledExample {
    std::size_t index = 0;
    std::size_t label = 0;
};

// Mutable state of the annotation loop: three disjoint index sets over the
// training universe. labeled holds oracle-confirmed known-class examples,
// invalid holds oracle-rejected unknown-class examples.
struct PoolState {
    std::vector<LabeledExample> labeled;
    std::vector<std::size_t> unlabeled;
    std::vector<std::size_t> invalid;
    std::size_t round = 0;
};

// Known(class) when the example's true class is in the target label space,
// Unknown otherwise; the annotator never names an out-of-scope class.
struct OracleAnswer {
    std::optional<std::size_t> known_class;
    bool is_known() const { return known_class.has_value(); }
};

using OracleFn = std::function<OracleAnswer(std::size_t)>;

// Gaussian-cluster dataset: each class gets a center drawn uniformly from
// [-center_scale, center_scale]^dims, examples are center plus N(0,
// cluster_spread^2) noise. The last ~20% of each class is held out as the
// test split. Deterministic for a fixed seed.
Dataset make_synthetic_openset(std::size_t n_classes, std::size_t dims,
                               std::size_t per_class, double cluster_spread,
                               double center_scale, std::uint64_t seed);

// The first round(mismatch_ratio * n_classes) class ids become known, the
// rest unknown. Throws when the rounding yields zero known classes.
OpenSetSplit split_known_unknown(std::size_t n_classes, double mismatch_ratio);

// Initial pools: init_per_class train examples sampled uniformly (seeded)
// from each known class form the labeled set; everything else in the train
// split is unlabeled; the invalid set starts empty.
PoolState init_pools(const Dataset& dataset, const OpenSetSplit& split,
                     std::size_t init_per_class, std::uint64_t seed);

// Simulated annotator: reveals the class of known-class examples, answers
// Unknown for the rest.
OracleAnswer oracle_label(const Dataset& dataset, const OpenSetSplit& split,
                          std::size_t index);

OracleFn make_oracle(const Dataset& dataset, const OpenSetSplit& split);

struct QueryOutcome {
    PoolState pool;
    std::size_t n_known = 0;    // k_i
    std::size_t n_unknown = 0;  // l_i
};

// Moves each queried index into labeled or invalid according to the oracle
// verdict and advances the round counter. The whole batch is rejected
// (std::invalid_argument) if it contains duplicates or indices outside the
// unlabeled set.
QueryOutcome apply_query(const PoolState& pool,
                         std::span<const std::size_t> batch_indices,
                         const OracleFn& oracle);

// Number of known-class examples currently in the unlabeled set; evaluated
// at round 0 this is the denominator of selection recall.
std::size_t count_unlabeled_known(const Dataset& dataset, const OpenSetSplit& split,
                                  const PoolState& pool);

// CSV exchange format: header f0,...,f{d-1},label, one row per example,
// 0-based integer labels. Train and test splits travel as two files of the
// same schema.
Dataset load_dataset_csv(const std::string& train_path, const std::string& test_path);
void save_dataset_csv(const Dataset& dataset, const std::string& train_path,
                      const std::string& test_path);

}  // namespace osal
