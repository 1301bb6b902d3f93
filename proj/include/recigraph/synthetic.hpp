#pragma once

#include <cstdint>

#include "recigraph/graph.hpp"

namespace recigraph {

// Planted-signal generator. Each class owns one attribute centroid per
// modality and one pool of ingredients/users; attr_signal scales how
// strongly recipe and ingredient attributes follow their class centroid,
// edge_signal is the probability that an edge is drawn from the class pool
// rather than uniformly. attr_signal = 0 with edge_signal = 1 yields a
// graph whose only class signal is relational structure.
struct SyntheticConfig {
    std::size_t users = 40;
    std::size_t recipes = 300;
    std::size_t ingredients = 60;
    std::size_t classes = 9;         // cuisine classes; the real schema has 9
    std::size_t region_classes = 0;  // 0: min(classes, 4); the real schema has 4

    std::size_t image_dim = 24;
    std::size_t text_dim = 24;
    std::size_t nutrient_dim = 12;
    std::size_t user_dim = 64;

    std::size_t user_edges_per_recipe = 2;
    std::size_t recipe_edges_per_recipe = 1;
    std::size_t ingredient_edges_per_recipe = 4;
    std::size_t ingredient_edges_per_ingredient = 1;

    double attr_signal = 1.0;
    double edge_signal = 1.0;
    double noise = 0.1;

    std::uint64_t seed = 7;

    void validate() const;
};

HetGraph generate_synthetic(const SyntheticConfig& cfg);

}  // namespace recigraph
