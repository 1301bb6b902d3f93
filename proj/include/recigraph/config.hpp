#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "recigraph/adversarial.hpp"

namespace recigraph {

// Full training configuration. Defaults follow the reference protocol:
// lr 0.005, hidden 128, batch 4096, 100 epochs, lambda 0.1,
// recipe-user-recipe meta-path with p = 10, attack {0.02, 0.005, 5},
// 70/15/15 split. Every field can be overridden from a config file or the
// command line, and the effective config is serialized into every output.
struct TrainConfig {
    Task task = Task::Cuisine;
    double lr = 0.005;
    std::size_t hidden = 128;
    std::size_t batch = 4096;
    std::size_t epochs = 100;
    double lambda = 0.1;
    std::string metapath = "recipe-user-recipe";
    std::size_t top_p = 10;
    std::size_t n_walks = 100;
    AttackConfig attack{};
    std::array<double, 3> split{0.70, 0.15, 0.15};
    std::uint64_t seed_graph = 7;
    std::uint64_t seed_model = 1;
    std::uint64_t seed_split = 2;
    std::uint64_t seed_sampler = 3;
    AblationSwitches switches{};
    std::size_t layers = 1;
    PoolKind pool = PoolKind::Max;
    bool share_weights = false;
    std::string sample_cache;

    void validate() const;

    // Canonical key=value view; from_map starts at defaults and applies
    // every entry, rejecting unknown keys.
    std::map<std::string, std::string> to_map() const;
    static TrainConfig from_map(const std::map<std::string, std::string>& kv);
    std::string serialize() const;
};

// One "key = value" per line, '#' comments.
TrainConfig load_config(const std::filesystem::path& file);

void apply_override(TrainConfig& cfg, const std::string& key, const std::string& value);

}  // namespace recigraph
