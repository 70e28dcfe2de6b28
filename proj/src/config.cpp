#include "osal/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace osal {

namespace {

std::string trim(const std::string& s) {
    const std::size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const std::size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::size_t parse_size(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size() || v < 0) throw std::invalid_argument(value);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' expects a non-negative integer, got '" +
                                    value + "'");
    }
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' expects an unsigned integer, got '" +
                                    value + "'");
    }
}

double parse_real(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' expects a real number, got '" +
                                    value + "'");
    }
}

template <typename T>
std::vector<T> parse_list(const std::string& value, const std::string& key,
                          T (*parse_one)(const std::string&, const std::string&)) {
    std::vector<T> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            throw std::invalid_argument("config: key '" + key + "' has an empty list element");
        }
        items.push_back(parse_one(item, key));
    }
    if (items.empty()) {
        throw std::invalid_argument("config: key '" + key + "' expects a non-empty list");
    }
    return items;
}

struct KeySpec {
    std::string default_text;
    std::string description;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> apply;
};

// Single source of truth for config keys: parsing, defaults shown in --help,
// and the README table all come from this map.
const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = {
        {"n_classes", {"20", "total classes in the synthetic dataset",
                       [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                           c.n_classes = parse_size(v, k);
                       }}},
        {"dims", {"20", "feature dimensions of the synthetic dataset",
                  [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                      c.dims = parse_size(v, k);
                  }}},
        {"per_class", {"250", "examples generated per class (~20% held out for test)",
                       [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                           c.per_class = parse_size(v, k);
                       }}},
        {"cluster_spread", {"1.0", "Gaussian noise scale around each class center",
                            [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                c.cluster_spread = parse_real(v, k);
                            }}},
        {"center_scale", {"5.0", "class centers drawn uniformly from [-scale, scale]^dims",
                          [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                              c.center_scale = parse_real(v, k);
                          }}},
        {"dataset_csv", {"", "external train CSV (f0,...,f{d-1},label); disables the generator",
                         [](ExperimentConfig& c, const std::string& v, const std::string&) {
                             c.dataset_csv = v;
                         }}},
        {"dataset_test_csv", {"", "external test CSV, same schema as dataset_csv",
                              [](ExperimentConfig& c, const std::string& v, const std::string&) {
                                  c.dataset_test_csv = v;
                              }}},
        {"mismatch_ratio", {"0.25", "fraction of classes that are known (first round(r*C) ids)",
                            [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                c.mismatch_ratio = parse_real(v, k);
                            }}},
        {"init_per_class", {"10", "initial labeled examples per known class",
                            [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                c.init_per_class = parse_size(v, k);
                            }}},
        {"rounds", {"5", "annotation rounds per seed",
                    [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                        c.rounds = parse_size(v, k);
                    }}},
        {"budget", {"100", "examples queried per round",
                    [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                        c.budget = parse_size(v, k);
                    }}},
        {"strategy", {"lfosa", "random|uncertainty|certainty|coreset|bald|lfosa",
                      [](ExperimentConfig& c, const std::string& v, const std::string&) {
                          c.strategy = parse_strategy(v);
                      }}},
        {"ablation", {"full", "full|no_temperature|high_temperature|shared_network|no_invalid_set",
                      [](ExperimentConfig& c, const std::string& v, const std::string&) {
                          c.ablation = parse_ablation(v);
                      }}},
        {"hidden_dims", {"64", "comma list of hidden layer widths (of both networks)",
                         [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                             c.hidden_dims = parse_list<std::size_t>(v, k, parse_size);
                         }}},
        {"dropout_rate", {"0.0 (0.5 when strategy = bald)", "hidden dropout rate",
                          [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                              c.dropout_rate = parse_real(v, k);
                          }}},
        {"mc_samples", {"10", "MC-dropout samples per example for bald",
                        [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                            c.mc_samples = parse_size(v, k);
                        }}},
        {"seeds", {"1,2,3,4", "comma list of experiment seeds",
                   [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                       c.seeds = parse_list<std::uint64_t>(v, k, parse_u64);
                   }}},
        {"detector_epochs", {"100", "detector training epochs per round",
                             [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                 c.detector_train.epochs = parse_size(v, k);
                             }}},
        {"detector_learning_rate", {"0.01", "detector SGD learning rate",
                                    [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                        c.detector_train.learning_rate = parse_real(v, k);
                                    }}},
        {"detector_momentum", {"0.9", "detector SGD momentum",
                               [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                   c.detector_train.momentum = parse_real(v, k);
                               }}},
        {"detector_weight_decay", {"5e-4", "detector L2 weight decay",
                                   [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                       c.detector_train.weight_decay = parse_real(v, k);
                                   }}},
        {"detector_batch_size", {"128", "detector mini-batch size",
                                 [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                     c.detector_train.batch_size = parse_size(v, k);
                                 }}},
        {"detector_temperature", {"0.5", "softmax temperature of the detector loss",
                                  [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                      c.detector_train.temperature = parse_real(v, k);
                                  }}},
        {"classifier_epochs", {"100", "classifier training epochs per round",
                               [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                   c.classifier_train.epochs = parse_size(v, k);
                               }}},
        {"classifier_learning_rate", {"0.01", "classifier SGD learning rate",
                                      [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                          c.classifier_train.learning_rate = parse_real(v, k);
                                      }}},
        {"classifier_momentum", {"0.9", "classifier SGD momentum",
                                 [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                     c.classifier_train.momentum = parse_real(v, k);
                                 }}},
        {"classifier_weight_decay", {"5e-4", "classifier L2 weight decay",
                                     [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                         c.classifier_train.weight_decay = parse_real(v, k);
                                     }}},
        {"classifier_batch_size", {"128", "classifier mini-batch size",
                                   [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                       c.classifier_train.batch_size = parse_size(v, k);
                                   }}},
        {"classifier_temperature", {"1.0", "softmax temperature of the classifier loss",
                                    [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                                        c.classifier_train.temperature = parse_real(v, k);
                                    }}},
    };
    return table;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig config = default_config();
    std::map<std::string, bool> seen;

    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: " + origin + ":" + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = key_table().find(key);
        if (it == key_table().end()) {
            throw std::invalid_argument("config: " + origin + ":" + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
        if (seen[key]) {
            throw std::invalid_argument("config: " + origin + ":" + std::to_string(line_no) +
                                        ": duplicate key '" + key + "'");
        }
        seen[key] = true;
        it->second.apply(config, value, key);
    }

    if (config.strategy == Strategy::bald && !seen["dropout_rate"]) {
        config.dropout_rate = 0.5;
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

std::string config_keys_help() {
    std::string help;
    for (const auto& [key, spec] : key_table()) {
        help += "  " + key;
        if (!spec.default_text.empty()) help += " = " + spec.default_text;
        help += "\n      " + spec.description + "\n";
    }
    return help;
}

}  // namespace osal
