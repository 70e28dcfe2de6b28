#include "osal/datapool.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "osal/rng.hpp"

namespace osal {

Dataset make_synthetic_openset(std::size_t n_classes, std::size_t dims,
                               std::size_t per_class, double cluster_spread,
                               double center_scale, std::uint64_t seed) {
    if (n_classes < 2) throw std::invalid_argument("make_synthetic_openset: need >= 2 classes");
    if (dims < 2) throw std::invalid_argument("make_synthetic_openset: need >= 2 dims");
    if (per_class == 0) throw std::invalid_argument("make_synthetic_openset: per_class must be positive");

    Rng rng(seed);
    Dataset ds;
    ds.n_classes = n_classes;
    ds.dims = dims;
    ds.features.reserve(n_classes * per_class * dims);
    ds.labels.reserve(n_classes * per_class);

    std::vector<double> centers(n_classes * dims);
    for (double& c : centers) c = rng.uniform(-center_scale, center_scale);

    const std::size_t test_per_class =
        static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(per_class)));
    for (std::size_t cls = 0; cls < n_classes; ++cls) {
        const double* center = centers.data() + cls * dims;
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t index = ds.labels.size();
            for (std::size_t d = 0; d < dims; ++d) {
                ds.features.push_back(center[d] + cluster_spread * rng.normal());
            }
            ds.labels.push_back(cls);
            if (i + test_per_class < per_class) {
                ds.train_indices.push_back(index);
            } else {
                ds.test_indices.push_back(index);
            }
        }
    }
    return ds;
}

OpenSetSplit split_known_unknown(std::size_t n_classes, double mismatch_ratio) {
    if (mismatch_ratio <= 0.0 || mismatch_ratio > 1.0) {
        throw std::invalid_argument("split_known_unknown: mismatch_ratio must be in (0, 1]");
    }
    const std::size_t n_known = static_cast<std::size_t>(
        std::lround(mismatch_ratio * static_cast<double>(n_classes)));
    if (n_known == 0) {
        throw std::invalid_argument("split_known_unknown: ratio yields zero known classes");
    }

    OpenSetSplit split;
    split.mismatch_ratio = mismatch_ratio;
    for (std::size_t c = 0; c < n_classes; ++c) {
        (c < n_known ? split.known_classes : split.unknown_classes).push_back(c);
    }
    return split;
}

PoolState init_pools(const Dataset& dataset, const OpenSetSplit& split,
                     std::size_t init_per_class, std::uint64_t seed) {
    Rng rng(seed);
    PoolState pool;
    std::unordered_set<std::size_t> taken;

    for (std::size_t cls : split.known_classes) {
        std::vector<std::size_t> candidates;
        for (std::size_t idx : dataset.train_indices) {
            if (dataset.labels[idx] == cls) candidates.push_back(idx);
        }
        if (candidates.size() < init_per_class) {
            throw std::invalid_argument("init_pools: class " + std::to_string(cls) +
                                        " has only " + std::to_string(candidates.size()) +
                                        " train examples, need " +
                                        std::to_string(init_per_class));
        }
        // Partial Fisher-Yates: the first init_per_class entries become the pick.
        for (std::size_t i = 0; i < init_per_class; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.bounded(candidates.size() - i));
            std::swap(candidates[i], candidates[j]);
            pool.labeled.push_back({candidates[i], cls});
            taken.insert(candidates[i]);
        }
    }
    for (std::size_t idx : dataset.train_indices) {
        if (!taken.contains(idx)) pool.unlabeled.push_back(idx);
    }
    return pool;
}

OracleAnswer oracle_label(const Dataset& dataset, const OpenSetSplit& split,
                          std::size_t index) {
    if (index >= dataset.size()) throw std::invalid_argument("oracle_label: index out of range");
    const std::size_t cls = dataset.labels[index];
    if (split.is_known(cls)) return OracleAnswer{cls};
    return OracleAnswer{};
}

OracleFn make_oracle(const Dataset& dataset, const OpenSetSplit& split) {
    return [&dataset, &split](std::size_t index) { return oracle_label(dataset, split, index); };
}

QueryOutcome apply_query(const PoolState& pool,
                         std::span<const std::size_t> batch_indices,
                         const OracleFn& oracle) {
    std::unordered_set<std::size_t> batch(batch_indices.begin(), batch_indices.end());
    if (batch.size() != batch_indices.size()) {
        throw std::invalid_argument("apply_query: batch contains duplicate indices");
    }
    std::unordered_set<std::size_t> unlabeled(pool.unlabeled.begin(), pool.unlabeled.end());
    for (std::size_t idx : batch_indices) {
        if (!unlabeled.contains(idx)) {
            throw std::invalid_argument("apply_query: index " + std::to_string(idx) +
                                        " is not in the unlabeled set");
        }
    }

    QueryOutcome outcome;
    outcome.pool.labeled = pool.labeled;
    outcome.pool.invalid = pool.invalid;
    outcome.pool.round = pool.round + 1;
    outcome.pool.unlabeled.reserve(pool.unlabeled.size() - batch.size());
    for (std::size_t idx : pool.unlabeled) {
        if (!batch.contains(idx)) outcome.pool.unlabeled.push_back(idx);
    }
    for (std::size_t idx : batch_indices) {
        const OracleAnswer answer = oracle(idx);
        if (answer.is_known()) {
            outcome.pool.labeled.push_back({idx, *answer.known_class});
            ++outcome.n_known;
        } else {
            outcome.pool.invalid.push_back(idx);
            ++outcome.n_unknown;
        }
    }
    return outcome;
}

std::size_t count_unlabeled_known(const Dataset& dataset, const OpenSetSplit& split,
                                  const PoolState& pool) {
    std::size_t count = 0;
    for (std::size_t idx : pool.unlabeled) {
        if (split.is_known(dataset.labels[idx])) ++count;
    }
    return count;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

// Parses one CSV file into ds, appending rows and recording their indices.
void read_csv_rows(const std::string& path, Dataset& ds,
                   std::vector<std::size_t>& indices) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dataset csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_fields(line);
    if (header.size() < 2 || header.back() != "label") {
        throw std::runtime_error("dataset csv: bad header in " + path +
                                 " (expected f0,...,f{d-1},label)");
    }
    const std::size_t dims = header.size() - 1;
    for (std::size_t d = 0; d < dims; ++d) {
        if (header[d] != "f" + std::to_string(d)) {
            throw std::runtime_error("dataset csv: bad header column '" + header[d] +
                                     "' in " + path);
        }
    }
    if (ds.dims == 0) {
        ds.dims = dims;
    } else if (ds.dims != dims) {
        throw std::runtime_error("dataset csv: train/test dimension mismatch in " + path);
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != dims + 1) {
            throw std::runtime_error("dataset csv: " + path + ":" + std::to_string(line_no) +
                                     " has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(dims + 1));
        }
        indices.push_back(ds.labels.size());
        try {
            for (std::size_t d = 0; d < dims; ++d) {
                ds.features.push_back(std::stod(fields[d]));
            }
            const long long label = std::stoll(fields[dims]);
            if (label < 0) throw std::invalid_argument("negative label");
            ds.labels.push_back(static_cast<std::size_t>(label));
        } catch (const std::exception&) {
            throw std::runtime_error("dataset csv: parse error at " + path + ":" +
                                     std::to_string(line_no));
        }
        ds.n_classes = std::max(ds.n_classes, ds.labels.back() + 1);
    }
}

void write_csv_rows(const Dataset& ds, std::span<const std::size_t> indices,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dataset csv: cannot open " + path + " for writing");
    for (std::size_t d = 0; d < ds.dims; ++d) out << "f" << d << ",";
    out << "label\n";
    char buf[64];
    for (std::size_t idx : indices) {
        const auto row = ds.row(idx);
        for (double v : row) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf << ",";
        }
        out << ds.labels[idx] << "\n";
    }
    if (!out) throw std::runtime_error("dataset csv: write failed for " + path);
}

}  // namespace

Dataset load_dataset_csv(const std::string& train_path, const std::string& test_path) {
    Dataset ds;
    read_csv_rows(train_path, ds, ds.train_indices);
    read_csv_rows(test_path, ds, ds.test_indices);
    if (ds.train_indices.empty()) {
        throw std::runtime_error("dataset csv: no training rows in " + train_path);
    }
    return ds;
}

void save_dataset_csv(const Dataset& dataset, const std::string& train_path,
                      const std::string& test_path) {
    write_csv_rows(dataset, dataset.train_indices, train_path);
    write_csv_rows(dataset, dataset.test_indices, test_path);
}

}  // namespace osal
