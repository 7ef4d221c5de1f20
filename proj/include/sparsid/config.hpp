#pragma once

#include <span>
#include <string>

#include "sparsid/harness.hpp"

namespace sparsid {

// Parses the JSON experiment description (see README for the schema). Unknown
// keys anywhere are an error naming the full key path. Overrides are
// dotted-path assignments like "experiment.realizations=1", applied before
// validation; values parse as JSON when they can and as strings otherwise.
ExperimentConfig parse_config_text(const std::string& text,
                                   std::span<const std::string> overrides = {});

ExperimentConfig load_config(const std::string& path,
                             std::span<const std::string> overrides = {});

}  // namespace sparsid
