#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recigraph/graph.hpp"
#include "recigraph/rng.hpp"

namespace recigraph {

// Ordered node-type sequence; walks traverse it once per simulation.
struct MetaPath {
    std::vector<NodeType> types;

    static MetaPath parse(std::string_view text);  // "recipe-user-recipe"
    std::string str() const;
    void validate() const;
    NodeType terminal() const { return types.back(); }
};

struct WalkConfig {
    std::size_t n_walks = 100;
    std::size_t top_p = 10;
    std::uint64_t seed = 1;

    void validate() const;
};

// Per-seed neighbor sets: schema buckets hold the direct adjacency per
// stored relation, the MetaPathNeighbor bucket holds the top-p walk
// neighbors in descending visit-probability order.
struct NeighborSample {
    NodeIndex seed = 0;
    std::array<std::vector<NodeIndex>, kRelationCount> buckets;

    const std::vector<NodeIndex>& bucket(RelationType r) const {
        return buckets[static_cast<std::size_t>(r)];
    }
    bool empty() const;
};

// Direct adjacency per stored relation; the pseudo-relation slot stays empty.
std::array<std::vector<NodeIndex>, kRelationCount> schema_neighbors(const HetGraph& g,
                                                                    NodeIndex v);

// Tallies every non-seed node visited over n_walks traversals of the path.
// Each step picks uniformly among neighbors of the required next type; a
// walk with no continuation ends early and keeps its partial visits.
std::map<NodeIndex, std::size_t> walk_visit_counts(const HetGraph& g, NodeIndex v,
                                                   const MetaPath& path, std::size_t n_walks,
                                                   Rng& rng);

std::map<NodeIndex, double> normalize_l1(const std::map<NodeIndex, std::size_t>& counts);

// The p highest-probability nodes, ties broken by ascending node index,
// returned in descending probability order.
std::vector<NodeIndex> top_p(const std::map<NodeIndex, double>& probs, std::size_t p);

// schema buckets + top-p meta-path bucket. The walk stream is derived from
// (cfg.seed, node id), so per-seed results do not depend on sampling order.
NeighborSample sample_neighbors(const HetGraph& g, NodeIndex v, const MetaPath& path,
                                const WalkConfig& cfg);

// Precomputed samples for a set of seeds, keyed by a fingerprint of
// (graph content, meta-path, walk config).
struct SampleSet {
    std::uint64_t fingerprint = 0;
    std::unordered_map<NodeIndex, NeighborSample> by_node;

    const NeighborSample& at(NodeIndex v) const;
};

std::uint64_t sample_fingerprint(const HetGraph& g, const MetaPath& path, const WalkConfig& cfg);

SampleSet build_samples(const HetGraph& g, const std::vector<NodeIndex>& seeds,
                        const MetaPath& path, const WalkConfig& cfg);

// Cache file round trip. load returns nullopt when the file is missing or
// its fingerprint does not match the expected one.
void save_samples(const SampleSet& samples, const HetGraph& g, const std::filesystem::path& path);
std::optional<SampleSet> load_samples(const HetGraph& g, std::uint64_t expected_fingerprint,
                                      const std::filesystem::path& path);

}  // namespace recigraph
