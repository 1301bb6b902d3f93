#include "recigraph/sampler.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace recigraph {

MetaPath MetaPath::parse(std::string_view text) {
    MetaPath path;
    std::string token;
    std::stringstream ss{std::string(text)};
    while (std::getline(ss, token, '-')) {
        if (token == "R" || token == "r") token = "recipe";
        if (token == "U" || token == "u") token = "user";
        if (token == "I" || token == "i") token = "ingredient";
        path.types.push_back(node_type_from(token));
    }
    path.validate();
    return path;
}

std::string MetaPath::str() const {
    std::string out;
    for (std::size_t i = 0; i < types.size(); ++i) {
        if (i) out += '-';
        out += to_string(types[i]);
    }
    return out;
}

void MetaPath::validate() const {
    if (types.size() < 2) throw DataError("meta-path needs at least 2 node types");
    if (types.front() != types.back()) {
        throw DataError("meta-path must start and end on the same node type");
    }
    for (std::size_t i = 0; i + 1 < types.size(); ++i) {
        if (!relation_between(types[i], types[i + 1])) {
            throw DataError("meta-path step " + std::string(to_string(types[i])) + "-" +
                            std::string(to_string(types[i + 1])) + " has no stored relation");
        }
    }
}

void WalkConfig::validate() const {
    if (n_walks < 1) throw DataError("walk config: n_walks must be >= 1");
    if (top_p < 1) throw DataError("walk config: p must be >= 1");
}

bool NeighborSample::empty() const {
    for (const auto& bucket : buckets) {
        if (!bucket.empty()) return false;
    }
    return true;
}

std::array<std::vector<NodeIndex>, kRelationCount> schema_neighbors(const HetGraph& g,
                                                                    NodeIndex v) {
    std::array<std::vector<NodeIndex>, kRelationCount> out;
    for (const RelationType r : kStoredRelations) {
        const auto ns = g.neighbors(v, r);
        out[static_cast<std::size_t>(r)].assign(ns.begin(), ns.end());
    }
    return out;
}

std::map<NodeIndex, std::size_t> walk_visit_counts(const HetGraph& g, NodeIndex v,
                                                   const MetaPath& path, std::size_t n_walks,
                                                   Rng& rng) {
    path.validate();
    if (g.type(v) != path.types.front()) {
        throw DataError("meta-path starts at " + std::string(to_string(path.types.front())) +
                        " but node '" + g.id(v) + "' is a " + std::string(to_string(g.type(v))));
    }
    std::map<NodeIndex, std::size_t> counts;
    std::vector<NodeIndex> candidates;
    for (std::size_t w = 0; w < n_walks; ++w) {
        NodeIndex cur = v;
        for (std::size_t step = 0; step + 1 < path.types.size(); ++step) {
            const RelationType rel = *relation_between(path.types[step], path.types[step + 1]);
            // Neighbors reached through rel already carry the required next
            // type. The seed itself is never a valid continuation: walks
            // explore away from it, so it cannot dominate its own counts.
            const std::span<const NodeIndex> ns = g.neighbors(cur, rel);
            candidates.clear();
            for (const NodeIndex w2 : ns) {
                if (w2 != v) candidates.push_back(w2);
            }
            if (candidates.empty()) break;
            cur = candidates[rng.below(candidates.size())];
            ++counts[cur];
        }
    }
    return counts;
}

std::map<NodeIndex, double> normalize_l1(const std::map<NodeIndex, std::size_t>& counts) {
    std::map<NodeIndex, double> out;
    std::size_t total = 0;
    for (const auto& [node, c] : counts) total += c;
    if (total == 0) return out;
    for (const auto& [node, c] : counts) {
        out[node] = static_cast<double>(c) / static_cast<double>(total);
    }
    return out;
}

std::vector<NodeIndex> top_p(const std::map<NodeIndex, double>& probs, std::size_t p) {
    if (p < 1) throw DataError("top_p: p must be >= 1");
    std::vector<std::pair<NodeIndex, double>> entries(probs.begin(), probs.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (entries.size() > p) entries.resize(p);
    std::vector<NodeIndex> out;
    out.reserve(entries.size());
    for (const auto& [node, prob] : entries) out.push_back(node);
    return out;
}

NeighborSample sample_neighbors(const HetGraph& g, NodeIndex v, const MetaPath& path,
                                const WalkConfig& cfg) {
    cfg.validate();
    if (g.type(v) != NodeType::Recipe) {
        throw DataError("sampling is defined for recipe nodes, '" + g.id(v) + "' is a " +
                        std::string(to_string(g.type(v))));
    }
    NeighborSample sample;
    sample.seed = v;
    sample.buckets = schema_neighbors(g, v);

    Rng rng(Rng::mix(cfg.seed, Rng::hash_string(g.id(v))));
    const std::map<NodeIndex, std::size_t> counts = walk_visit_counts(g, v, path, cfg.n_walks, rng);
    // Only terminal-type visits compete for the meta-path bucket; the seed
    // itself never does.
    std::map<NodeIndex, std::size_t> terminal_counts;
    for (const auto& [node, c] : counts) {
        if (node != v && g.type(node) == path.terminal()) terminal_counts[node] = c;
    }
    sample.buckets[static_cast<std::size_t>(RelationType::MetaPathNeighbor)] =
        top_p(normalize_l1(terminal_counts), cfg.top_p);
    return sample;
}

const NeighborSample& SampleSet::at(NodeIndex v) const {
    const auto it = by_node.find(v);
    if (it == by_node.end()) {
        throw DataError("no neighbor sample for node index " + std::to_string(v));
    }
    return it->second;
}

std::uint64_t sample_fingerprint(const HetGraph& g, const MetaPath& path, const WalkConfig& cfg) {
    std::string key = path.str() + "|" + std::to_string(cfg.n_walks) + "|" +
                      std::to_string(cfg.top_p) + "|" + std::to_string(cfg.seed);
    return Rng::mix(g.content_hash(), Rng::hash_string(key));
}

SampleSet build_samples(const HetGraph& g, const std::vector<NodeIndex>& seeds,
                        const MetaPath& path, const WalkConfig& cfg) {
    SampleSet out;
    out.fingerprint = sample_fingerprint(g, path, cfg);
    for (const NodeIndex v : seeds) {
        out.by_node.emplace(v, sample_neighbors(g, v, path, cfg));
    }
    return out;
}

void save_samples(const SampleSet& samples, const HetGraph& g,
                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "recigraph-samples v1\n";
    out << "fingerprint " << samples.fingerprint << "\n";
    std::vector<NodeIndex> seeds;
    seeds.reserve(samples.by_node.size());
    for (const auto& [v, s] : samples.by_node) seeds.push_back(v);
    std::sort(seeds.begin(), seeds.end());
    for (const NodeIndex v : seeds) {
        const NeighborSample& s = samples.by_node.at(v);
        for (std::size_t r = 0; r < kRelationCount; ++r) {
            if (s.buckets[r].empty()) continue;
            out << g.id(v) << '\t' << to_string(static_cast<RelationType>(r));
            for (const NodeIndex w : s.buckets[r]) out << '\t' << g.id(w);
            out << '\n';
        }
        if (s.empty()) out << g.id(v) << "\t.\n";
    }
}

std::optional<SampleSet> load_samples(const HetGraph& g, std::uint64_t expected_fingerprint,
                                      const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line) || line != "recigraph-samples v1") return std::nullopt;
    if (!std::getline(in, line)) return std::nullopt;
    std::stringstream header(line);
    std::string tag;
    std::uint64_t fingerprint = 0;
    header >> tag >> fingerprint;
    if (tag != "fingerprint" || fingerprint != expected_fingerprint) return std::nullopt;

    SampleSet out;
    out.fingerprint = fingerprint;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string id, rel;
        if (!std::getline(ss, id, '\t')) return std::nullopt;
        if (!g.has_node(id)) return std::nullopt;
        const NodeIndex v = g.index_of(id);
        NeighborSample& sample = out.by_node[v];
        sample.seed = v;
        if (!std::getline(ss, rel, '\t') || rel == ".") continue;
        RelationType r;
        if (rel == to_string(RelationType::MetaPathNeighbor)) {
            r = RelationType::MetaPathNeighbor;
        } else {
            try {
                r = relation_from(rel);
            } catch (const DataError&) {
                return std::nullopt;
            }
        }
        std::string nid;
        while (std::getline(ss, nid, '\t')) {
            if (!g.has_node(nid)) return std::nullopt;
            sample.buckets[static_cast<std::size_t>(r)].push_back(g.index_of(nid));
        }
    }
    return out;
}

}  // namespace recigraph
