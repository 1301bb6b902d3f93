#include "recigraph/synthetic.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "recigraph/rng.hpp"

namespace recigraph {

namespace {

std::string padded_id(char prefix, std::size_t k, std::size_t count) {
    std::size_t width = 1;
    for (std::size_t v = count > 0 ? count - 1 : 0; v >= 10; v /= 10) ++width;
    std::string digits = std::to_string(k);
    return prefix + std::string(width - digits.size(), '0') + digits;
}

std::vector<double> centroid_plus_noise(const std::vector<double>& centroid, double signal,
                                        double noise, Rng& rng) {
    std::vector<double> out(centroid.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = signal * centroid[i] + noise * rng.normal();
    }
    return out;
}

}  // namespace

void SyntheticConfig::validate() const {
    if (users < 1 || recipes < 1 || ingredients < 1) {
        throw DataError("synthetic: node counts must be >= 1");
    }
    if (classes < 1) throw DataError("synthetic: classes must be >= 1");
    if (attr_signal < 0.0 || attr_signal > 1.0 || edge_signal < 0.0 || edge_signal > 1.0) {
        throw DataError("synthetic: signal strengths must lie in [0,1]");
    }
    if (noise < 0.0) throw DataError("synthetic: noise must be >= 0");
    if (image_dim < 1 || text_dim < 1 || nutrient_dim < 1 || user_dim < 1) {
        throw DataError("synthetic: attribute dims must be >= 1");
    }
}

HetGraph generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t regions = cfg.region_classes > 0 ? cfg.region_classes
                                                       : std::min<std::size_t>(cfg.classes, 4);

    HetGraph g;
    // Ids sort as ingredient < recipe < user; adding in that order keeps the
    // ascending-id invariant.
    std::vector<NodeIndex> ing(cfg.ingredients), rec(cfg.recipes), usr(cfg.users);
    for (std::size_t k = 0; k < cfg.ingredients; ++k) {
        ing[k] = g.add_node(padded_id('i', k, cfg.ingredients), NodeType::Ingredient);
    }
    for (std::size_t k = 0; k < cfg.recipes; ++k) {
        rec[k] = g.add_node(padded_id('r', k, cfg.recipes), NodeType::Recipe);
    }
    for (std::size_t k = 0; k < cfg.users; ++k) {
        usr[k] = g.add_node(padded_id('u', k, cfg.users), NodeType::User);
    }

    auto class_of_recipe = [&](std::size_t k) { return k % cfg.classes; };
    auto pool_of_ingredient = [&](std::size_t k) { return k % cfg.classes; };
    auto pool_of_user = [&](std::size_t k) { return k % cfg.classes; };

    // Per-class centroids, drawn in a fixed order.
    std::vector<std::vector<double>> image_centroid(cfg.classes), text_centroid(cfg.classes),
        nutrient_centroid(cfg.classes);
    for (std::size_t c = 0; c < cfg.classes; ++c) {
        image_centroid[c].resize(cfg.image_dim);
        for (double& v : image_centroid[c]) v = rng.normal();
        text_centroid[c].resize(cfg.text_dim);
        for (double& v : text_centroid[c]) v = rng.normal();
        nutrient_centroid[c].resize(cfg.nutrient_dim);
        for (double& v : nutrient_centroid[c]) v = rng.normal();
    }

    for (std::size_t k = 0; k < cfg.recipes; ++k) {
        const std::size_t c = class_of_recipe(k);
        g.set_attribute(Modality::Image, rec[k],
                        centroid_plus_noise(image_centroid[c], cfg.attr_signal, cfg.noise, rng));
        g.set_attribute(Modality::Text, rec[k],
                        centroid_plus_noise(text_centroid[c], cfg.attr_signal, cfg.noise, rng));
    }
    for (std::size_t k = 0; k < cfg.ingredients; ++k) {
        const std::size_t c = pool_of_ingredient(k);
        g.set_attribute(
            Modality::Nutrient, ing[k],
            centroid_plus_noise(nutrient_centroid[c], cfg.attr_signal, cfg.noise, rng));
    }
    // User attributes carry no class signal; they are fixed random vectors.
    for (std::size_t k = 0; k < cfg.users; ++k) {
        std::vector<double> x(cfg.user_dim);
        for (double& v : x) v = rng.normal();
        g.set_attribute(Modality::UserVec, usr[k], std::move(x));
    }

    // Picks uniformly from the class pool with probability edge_signal, else
    // uniformly from everything; `pool` maps a member index to its class.
    auto pick = [&](std::size_t total, std::size_t cls, auto pool_of,
                    std::size_t exclude) -> std::size_t {
        const bool use_pool = rng.next_double() < cfg.edge_signal;
        for (int attempt = 0; attempt < 64; ++attempt) {
            std::size_t k = rng.below(total);
            if (use_pool && pool_of(k) != cls) continue;
            if (k == exclude) continue;
            return k;
        }
        // Dense fallback keeps generation total even for tiny pools.
        for (std::size_t k = 0; k < total; ++k) {
            if (k == exclude) continue;
            if (!use_pool || pool_of(k) == cls) return k;
        }
        return total;  // no valid partner
    };
    const std::size_t none = static_cast<std::size_t>(-1);

    for (std::size_t k = 0; k < cfg.recipes; ++k) {
        const std::size_t c = class_of_recipe(k);
        for (std::size_t e = 0; e < cfg.user_edges_per_recipe; ++e) {
            const std::size_t u = pick(cfg.users, c, pool_of_user, none);
            if (u < cfg.users) g.add_edge(RelationType::UserRecipe, usr[u], rec[k]);
        }
        for (std::size_t e = 0; e < cfg.recipe_edges_per_recipe; ++e) {
            const std::size_t other = pick(cfg.recipes, c, class_of_recipe, k);
            if (other < cfg.recipes) g.add_edge(RelationType::RecipeRecipe, rec[k], rec[other]);
        }
        for (std::size_t e = 0; e < cfg.ingredient_edges_per_recipe; ++e) {
            const std::size_t i = pick(cfg.ingredients, c, pool_of_ingredient, none);
            if (i < cfg.ingredients) g.add_edge(RelationType::RecipeIngredient, rec[k], ing[i]);
        }
    }
    for (std::size_t k = 0; k < cfg.ingredients; ++k) {
        const std::size_t c = pool_of_ingredient(k);
        for (std::size_t e = 0; e < cfg.ingredient_edges_per_ingredient; ++e) {
            const std::size_t other = pick(cfg.ingredients, c, pool_of_ingredient, k);
            if (other < cfg.ingredients) {
                g.add_edge(RelationType::IngredientIngredient, ing[k], ing[other]);
            }
        }
    }

    const std::size_t cwidth = std::to_string(cfg.classes - 1).size();
    const std::size_t gwidth = std::to_string(regions - 1).size();
    for (std::size_t k = 0; k < cfg.recipes; ++k) {
        const std::size_t c = class_of_recipe(k);
        std::string cname = std::to_string(c);
        cname = "c" + std::string(cwidth - cname.size(), '0') + cname;
        std::string gname = std::to_string(c % regions);
        gname = "g" + std::string(gwidth - gname.size(), '0') + gname;
        g.set_label(Task::Cuisine, rec[k], cname);
        g.set_label(Task::Region, rec[k], gname);
    }

    g.finalize();
    return g;
}

}  // namespace recigraph
