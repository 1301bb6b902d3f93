#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recigraph/errors.hpp"

namespace recigraph {

enum class NodeType : std::uint8_t { User, Recipe, Ingredient };
inline constexpr std::size_t kNodeTypeCount = 3;

// MetaPathNeighbor is a pseudo-relation: it never appears in stored graphs,
// it only labels the bucket that meta-path-sampled neighbors aggregate
// under.
enum class RelationType : std::uint8_t {
    UserRecipe,
    RecipeRecipe,
    RecipeIngredient,
    IngredientIngredient,
    MetaPathNeighbor,
};
inline constexpr std::size_t kRelationCount = 5;
inline constexpr std::array<RelationType, 4> kStoredRelations = {
    RelationType::UserRecipe,
    RelationType::RecipeRecipe,
    RelationType::RecipeIngredient,
    RelationType::IngredientIngredient,
};

enum class Modality : std::uint8_t { Image, Text, Nutrient, UserVec };
inline constexpr std::size_t kModalityCount = 4;

enum class Task : std::uint8_t { Cuisine, Region };
inline constexpr std::size_t kTaskCount = 2;

std::string_view to_string(NodeType t);
std::string_view to_string(RelationType r);
std::string_view to_string(Modality m);
std::string_view to_string(Task t);
NodeType node_type_from(std::string_view s);
RelationType relation_from(std::string_view s);
Modality modality_from(std::string_view s);
Task task_from(std::string_view s);

struct RelationSignature {
    NodeType a;
    NodeType b;
};
RelationSignature signature(RelationType r);

// The stored relation connecting two node types, if one exists.
std::optional<RelationType> relation_between(NodeType a, NodeType b);

// Modalities carried by each node type; recipes have Image and Text.
std::span<const Modality> modalities_of(NodeType t);

using NodeIndex = std::uint32_t;

struct LabelSet {
    Task task = Task::Cuisine;
    std::vector<std::string> class_names;  // dense class index -> name
    std::unordered_map<NodeIndex, int> by_node;

    std::size_t num_classes() const { return class_names.size(); }
    int label_of(NodeIndex v) const;
    bool empty() const { return by_node.empty(); }
};

// Heterogeneous graph with typed nodes, symmetric typed edges and
// per-modality attribute channels. Nodes are stored in ascending external
// id order, so NodeIndex order equals id order; loaders and generators are
// responsible for inserting nodes in that order. Immutable after
// finalize().
class HetGraph {
public:
    NodeIndex add_node(std::string id, NodeType type);
    void add_edge(RelationType r, NodeIndex a, NodeIndex b);
    void set_attribute(Modality m, NodeIndex v, std::vector<double> x);
    void set_label(Task t, NodeIndex v, const std::string& class_name);

    // Builds dense label indices and checks every structural invariant.
    void finalize();

    std::size_t num_nodes() const { return ids_.size(); }
    std::size_t num_nodes(NodeType t) const;
    std::size_t num_edges(RelationType r) const;
    const std::string& id(NodeIndex v) const;
    NodeType type(NodeIndex v) const;
    NodeIndex index_of(const std::string& id) const;  // throws DataError on unknown id
    bool has_node(const std::string& id) const;

    // Ascending-id neighbor list; MetaPathNeighbor is rejected.
    std::span<const NodeIndex> neighbors(NodeIndex v, RelationType r) const;

    std::size_t attribute_dim(Modality m) const;  // 0 when the channel is unused
    std::span<const double> attribute(NodeIndex v, Modality m) const;
    bool has_attribute(NodeIndex v, Modality m) const;

    const LabelSet& labels(Task t) const;
    const std::string* raw_label(Task t, NodeIndex v) const;

    // FNV-1a over the canonical serialization; keys sampler caches.
    std::uint64_t content_hash() const;

private:
    void check_index(NodeIndex v) const;

    std::vector<std::string> ids_;
    std::vector<NodeType> types_;
    std::unordered_map<std::string, NodeIndex> index_;
    std::array<std::vector<std::vector<NodeIndex>>, kRelationCount> adj_;
    std::array<std::size_t, kRelationCount> edge_counts_{};

    struct Channel {
        std::size_t dim = 0;
        std::vector<std::vector<double>> rows;
    };
    std::array<Channel, kModalityCount> attrs_;

    std::array<std::unordered_map<NodeIndex, std::string>, kTaskCount> raw_labels_;
    std::array<LabelSet, kTaskCount> label_sets_;
    bool finalized_ = false;
};

enum class Split : std::uint8_t { Train, Val, Test };
std::string_view to_string(Split s);

struct SplitAssignment {
    std::unordered_map<NodeIndex, Split> of;
    std::array<std::size_t, 3> sizes{};

    std::vector<NodeIndex> members(Split s) const;  // ascending index order
};

// Uniform random partition of the labeled nodes, deterministic in seed.
// Bucket sizes follow largest-remainder rounding with ties resolved in
// train, val, test order.
SplitAssignment make_split(const LabelSet& labels, const std::array<double, 3>& fractions,
                           std::uint64_t seed);

}  // namespace recigraph
