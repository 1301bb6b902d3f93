#pragma once

#include <filesystem>
#include <vector>

#include "recigraph/config.hpp"

namespace recigraph {

struct Checkpoint {
    ModelParams params;
    TrainConfig config;
    std::vector<std::string> class_names;
};

// Text checkpoint: versioned header with the full config, model dimensions
// and class names, followed by every parameter tensor in canonical slot
// order with exact (%.17g) values. Loading rejects any layout or dimension
// mismatch.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const TrainConfig& config, const std::vector<std::string>& class_names);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace recigraph
