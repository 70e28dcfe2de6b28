#pragma once

#include <string>

#include "osal/harness.hpp"

namespace osal {

// Flat key = value experiment config. One assignment per line, '#' starts a
// comment, keys mirror the ExperimentConfig field names (train settings are
// prefixed detector_/classifier_). Unknown or duplicate keys are hard
// errors; missing keys keep their defaults. After parsing, dropout_rate
// defaults to 0.5 when the strategy is bald and the key was absent.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

// Key reference for --help and the README, one "key = default  description"
// line per key.
std::string config_keys_help();

}  // namespace osal
