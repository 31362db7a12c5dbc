#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "ctts/model.hpp"

namespace ctts {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    CttsConfig config;
    CttsParams params;
    std::int64_t seed = 0;
};

// JSON with sorted keys and round-trip doubles, so identical contents
// serialize to identical bytes and load/save round trips are byte-stable.
std::string checkpoint_to_string(const CttsConfig& config, const CttsParams& params,
                                 std::int64_t seed);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::string& path, const CttsConfig& config, const CttsParams& params,
                     std::int64_t seed);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ctts
