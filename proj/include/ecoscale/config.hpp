#pragma once

#include <cstdint>
#include <string>

#include "ecoscale/dataio.hpp"
#include "ecoscale/model.hpp"
#include "ecoscale/training.hpp"

namespace ecoscale {

/// One config file drives a whole run. Sectioned key=value text with [model],
/// [train], and [data] sections plus a single global `seed` key above the
/// first section; unknown sections, unknown keys, and duplicate keys are
/// rejected by name. Lines starting with # are comments.
struct RunConfig {
    uint64_t seed = 1;
    ModelSpec model;
    TrainConfig train;
    GenConfig data;

    // Derived sub-seeds so every stage draws from the one seed key.
    uint64_t gen_seed() const { return seed; }
    uint64_t split_seed() const { return seed + 1; }
    uint64_t init_seed() const { return seed + 2; }
    uint64_t shuffle_seed() const { return seed + 3; }
};

RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);

/// The desk-scale reference configuration as config text (also shipped under
/// configs/), used by tests and documentation.
std::string desk_config_text();
/// The full-size reference configuration as config text.
std::string full_size_config_text();

}  // namespace ecoscale
