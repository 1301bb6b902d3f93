#include "recigraph/graph.hpp"

#include <algorithm>
#include <set>

#include "recigraph/graph_io.hpp"
#include "recigraph/rng.hpp"

namespace recigraph {

std::string_view to_string(NodeType t) {
    switch (t) {
        case NodeType::User: return "user";
        case NodeType::Recipe: return "recipe";
        case NodeType::Ingredient: return "ingredient";
    }
    return "?";
}

std::string_view to_string(RelationType r) {
    switch (r) {
        case RelationType::UserRecipe: return "user-recipe";
        case RelationType::RecipeRecipe: return "recipe-recipe";
        case RelationType::RecipeIngredient: return "recipe-ingredient";
        case RelationType::IngredientIngredient: return "ingredient-ingredient";
        case RelationType::MetaPathNeighbor: return "metapath";
    }
    return "?";
}

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::Image: return "image";
        case Modality::Text: return "text";
        case Modality::Nutrient: return "nutrient";
        case Modality::UserVec: return "uservec";
    }
    return "?";
}

std::string_view to_string(Task t) {
    return t == Task::Cuisine ? "cuisine" : "region";
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

NodeType node_type_from(std::string_view s) {
    if (s == "user") return NodeType::User;
    if (s == "recipe") return NodeType::Recipe;
    if (s == "ingredient") return NodeType::Ingredient;
    throw DataError("unknown node type '" + std::string(s) + "'");
}

RelationType relation_from(std::string_view s) {
    for (const RelationType r : kStoredRelations) {
        if (s == to_string(r)) return r;
    }
    throw DataError("unknown relation '" + std::string(s) + "'");
}

Modality modality_from(std::string_view s) {
    for (std::size_t i = 0; i < kModalityCount; ++i) {
        const Modality m = static_cast<Modality>(i);
        if (s == to_string(m)) return m;
    }
    throw DataError("unknown modality '" + std::string(s) + "'");
}

Task task_from(std::string_view s) {
    if (s == "cuisine") return Task::Cuisine;
    if (s == "region") return Task::Region;
    throw DataError("unknown task '" + std::string(s) + "'");
}

RelationSignature signature(RelationType r) {
    switch (r) {
        case RelationType::UserRecipe: return {NodeType::User, NodeType::Recipe};
        case RelationType::RecipeRecipe: return {NodeType::Recipe, NodeType::Recipe};
        case RelationType::RecipeIngredient: return {NodeType::Recipe, NodeType::Ingredient};
        case RelationType::IngredientIngredient:
            return {NodeType::Ingredient, NodeType::Ingredient};
        case RelationType::MetaPathNeighbor: return {NodeType::Recipe, NodeType::Recipe};
    }
    throw DataError("bad relation");
}

std::optional<RelationType> relation_between(NodeType a, NodeType b) {
    for (const RelationType r : kStoredRelations) {
        const RelationSignature sig = signature(r);
        if ((sig.a == a && sig.b == b) || (sig.a == b && sig.b == a)) return r;
    }
    return std::nullopt;
}

std::span<const Modality> modalities_of(NodeType t) {
    static constexpr std::array<Modality, 2> recipe{Modality::Image, Modality::Text};
    static constexpr std::array<Modality, 1> ingredient{Modality::Nutrient};
    static constexpr std::array<Modality, 1> user{Modality::UserVec};
    switch (t) {
        case NodeType::Recipe: return recipe;
        case NodeType::Ingredient: return ingredient;
        case NodeType::User: return user;
    }
    return {};
}

int LabelSet::label_of(NodeIndex v) const {
    const auto it = by_node.find(v);
    if (it == by_node.end()) throw DataError("node has no " + std::string(to_string(task)) + " label");
    return it->second;
}

NodeIndex HetGraph::add_node(std::string id, NodeType type) {
    if (finalized_) throw DataError("graph is finalized");
    if (id.empty() || id == "-") throw DataError("invalid node id '" + id + "'");
    if (index_.count(id)) throw DataError("duplicate node id '" + id + "'");
    if (!ids_.empty() && !(ids_.back() < id)) {
        throw DataError("nodes must be added in ascending id order: '" + id + "' after '" +
                        ids_.back() + "'");
    }
    const NodeIndex v = static_cast<NodeIndex>(ids_.size());
    index_.emplace(id, v);
    ids_.push_back(std::move(id));
    types_.push_back(type);
    for (auto& rel : adj_) rel.emplace_back();
    for (auto& ch : attrs_) ch.rows.emplace_back();
    return v;
}

void HetGraph::add_edge(RelationType r, NodeIndex a, NodeIndex b) {
    if (finalized_) throw DataError("graph is finalized");
    if (r == RelationType::MetaPathNeighbor) {
        throw DataError("metapath is a sampler pseudo-relation, not a stored edge type");
    }
    check_index(a);
    check_index(b);
    if (a == b) throw DataError("self edge on node '" + ids_[a] + "'");
    const RelationSignature sig = signature(r);
    const bool forward = types_[a] == sig.a && types_[b] == sig.b;
    const bool reverse = types_[a] == sig.b && types_[b] == sig.a;
    if (!forward && !reverse) {
        throw DataError("edge " + ids_[a] + " (" + std::string(to_string(types_[a])) + ") - " +
                        ids_[b] + " (" + std::string(to_string(types_[b])) +
                        ") does not match relation " + std::string(to_string(r)));
    }
    auto insert = [&](NodeIndex from, NodeIndex to) {
        std::vector<NodeIndex>& list = adj_[static_cast<std::size_t>(r)][from];
        const auto it = std::lower_bound(list.begin(), list.end(), to);
        if (it != list.end() && *it == to) return false;
        list.insert(it, to);
        return true;
    };
    if (insert(a, b)) ++edge_counts_[static_cast<std::size_t>(r)];
    insert(b, a);
}

void HetGraph::set_attribute(Modality m, NodeIndex v, std::vector<double> x) {
    if (finalized_) throw DataError("graph is finalized");
    check_index(v);
    const std::span<const Modality> allowed = modalities_of(types_[v]);
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
        throw DataError("modality " + std::string(to_string(m)) + " absent for " +
                        std::string(to_string(types_[v])) + " node '" + ids_[v] + "'");
    }
    Channel& ch = attrs_[static_cast<std::size_t>(m)];
    if (ch.dim == 0) {
        if (x.empty()) throw DataError("empty attribute vector for node '" + ids_[v] + "'");
        ch.dim = x.size();
    } else if (x.size() != ch.dim) {
        throw DataError("attribute dimension mismatch for node '" + ids_[v] + "' modality " +
                        std::string(to_string(m)) + ": got " + std::to_string(x.size()) +
                        ", expected " + std::to_string(ch.dim));
    }
    ch.rows[v] = std::move(x);
}

void HetGraph::set_label(Task t, NodeIndex v, const std::string& class_name) {
    if (finalized_) throw DataError("graph is finalized");
    check_index(v);
    if (types_[v] != NodeType::Recipe) {
        throw DataError("label on non-recipe node '" + ids_[v] + "'");
    }
    if (class_name.empty() || class_name == "-") throw DataError("invalid class name");
    raw_labels_[static_cast<std::size_t>(t)][v] = class_name;
}

void HetGraph::finalize() {
    if (finalized_) return;
    // Every node must carry the attributes its type requires.
    for (NodeIndex v = 0; v < ids_.size(); ++v) {
        for (const Modality m : modalities_of(types_[v])) {
            if (attrs_[static_cast<std::size_t>(m)].rows[v].empty()) {
                throw DataError("node '" + ids_[v] + "' missing " + std::string(to_string(m)) +
                                " attribute");
            }
        }
    }
    // Dense class indices from the sorted distinct class names.
    for (std::size_t t = 0; t < kTaskCount; ++t) {
        LabelSet& set = label_sets_[t];
        set.task = static_cast<Task>(t);
        std::set<std::string> names;
        for (const auto& [v, name] : raw_labels_[t]) names.insert(name);
        set.class_names.assign(names.begin(), names.end());
        std::unordered_map<std::string, int> dense;
        for (std::size_t i = 0; i < set.class_names.size(); ++i) {
            dense[set.class_names[i]] = static_cast<int>(i);
        }
        for (const auto& [v, name] : raw_labels_[t]) set.by_node[v] = dense[name];
    }
    finalized_ = true;
}

std::size_t HetGraph::num_nodes(NodeType t) const {
    return static_cast<std::size_t>(std::count(types_.begin(), types_.end(), t));
}

std::size_t HetGraph::num_edges(RelationType r) const {
    return edge_counts_[static_cast<std::size_t>(r)];
}

const std::string& HetGraph::id(NodeIndex v) const {
    check_index(v);
    return ids_[v];
}

NodeType HetGraph::type(NodeIndex v) const {
    check_index(v);
    return types_[v];
}

NodeIndex HetGraph::index_of(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown node id '" + id + "'");
    return it->second;
}

bool HetGraph::has_node(const std::string& id) const { return index_.count(id) != 0; }

std::span<const NodeIndex> HetGraph::neighbors(NodeIndex v, RelationType r) const {
    check_index(v);
    if (r == RelationType::MetaPathNeighbor) {
        throw DataError("metapath neighbors live in samples, not the graph");
    }
    return adj_[static_cast<std::size_t>(r)][v];
}

std::size_t HetGraph::attribute_dim(Modality m) const {
    return attrs_[static_cast<std::size_t>(m)].dim;
}

std::span<const double> HetGraph::attribute(NodeIndex v, Modality m) const {
    check_index(v);
    const std::span<const Modality> allowed = modalities_of(types_[v]);
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
        throw DataError("modality " + std::string(to_string(m)) + " absent for " +
                        std::string(to_string(types_[v])) + " node '" + ids_[v] + "'");
    }
    return attrs_[static_cast<std::size_t>(m)].rows[v];
}

bool HetGraph::has_attribute(NodeIndex v, Modality m) const {
    check_index(v);
    return !attrs_[static_cast<std::size_t>(m)].rows[v].empty();
}

const LabelSet& HetGraph::labels(Task t) const {
    if (!finalized_) throw DataError("graph not finalized");
    return label_sets_[static_cast<std::size_t>(t)];
}

const std::string* HetGraph::raw_label(Task t, NodeIndex v) const {
    const auto& map = raw_labels_[static_cast<std::size_t>(t)];
    const auto it = map.find(v);
    return it == map.end() ? nullptr : &it->second;
}

std::uint64_t HetGraph::content_hash() const {
    return Rng::hash_string(canonical_serialization(*this));
}

void HetGraph::check_index(NodeIndex v) const {
    if (v >= ids_.size()) throw DataError("node index " + std::to_string(v) + " out of range");
}

std::vector<NodeIndex> SplitAssignment::members(Split s) const {
    std::vector<NodeIndex> out;
    for (const auto& [v, sp] : of) {
        if (sp == s) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

SplitAssignment make_split(const LabelSet& labels, const std::array<double, 3>& fractions,
                           std::uint64_t seed) {
    double total = 0.0;
    for (const double f : fractions) {
        if (f <= 0.0) throw DataError("split fractions must be positive");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DataError("split fractions must sum to 1");
    std::vector<NodeIndex> nodes;
    nodes.reserve(labels.by_node.size());
    for (const auto& [v, c] : labels.by_node) nodes.push_back(v);
    if (nodes.size() < 3) {
        throw DataError("need at least 3 labeled nodes to split, have " +
                        std::to_string(nodes.size()));
    }
    std::sort(nodes.begin(), nodes.end());

    Rng rng(seed);
    for (std::size_t i = nodes.size() - 1; i > 0; --i) {
        std::swap(nodes[i], nodes[rng.below(i + 1)]);
    }

    // Largest-remainder sizes; remainder ties go to train, then val, then test.
    const std::size_t n = nodes.size();
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = fractions[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(exact);
        remainder[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < 3; ++i) {
            if (remainder[i] > remainder[best]) best = i;
        }
        ++sizes[best];
        remainder[best] = -1.0;
        ++assigned;
    }

    SplitAssignment out;
    out.sizes = sizes;
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t k = 0; k < sizes[s]; ++k) {
            out.of[nodes[pos++]] = static_cast<Split>(s);
        }
    }
    return out;
}

}  // namespace recigraph
