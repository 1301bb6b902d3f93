#include "recigraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "recigraph/rng.hpp"

namespace recigraph {

std::string_view to_string(PoolKind p) { return p == PoolKind::Max ? "max" : "sum"; }

PoolKind pool_from(std::string_view s) {
    if (s == "max") return PoolKind::Max;
    if (s == "sum") return PoolKind::Sum;
    throw DataError("unknown pool kind '" + std::string(s) + "'");
}

void ModelDims::validate() const {
    if (hidden < 1) throw DataError("model: hidden size must be >= 1");
    if (classes < 1) throw DataError("model: class count must be >= 1");
    if (layers < 1) throw DataError("model: layer count must be >= 1");
    if (input_dims[static_cast<std::size_t>(Modality::Image)] == 0 ||
        input_dims[static_cast<std::size_t>(Modality::Text)] == 0) {
        throw DataError("model: recipe image/text input dims must be set");
    }
}

std::string ModelParams::node_family(RelationType r, Modality channel, const char* role,
                                     bool shared) {
    if (shared) return std::string("node.shared.") + role;
    return "node." + std::string(to_string(r)) + "." + std::string(to_string(channel)) + "." +
           role;
}

std::size_t ModelParams::add(std::string name, Tensor t) {
    if (index_.count(name)) throw DataError("duplicate parameter '" + name + "'");
    const std::size_t slot = tensors_.size();
    index_.emplace(name, slot);
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(t));
    return slot;
}

std::size_t ModelParams::slot_of(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown parameter '" + name + "'");
    return it->second;
}

bool ModelParams::has_proj(Modality m) const {
    return index_.count("proj." + std::string(to_string(m))) != 0;
}

std::size_t ModelParams::proj_slot(Modality m) const {
    return slot_of("proj." + std::string(to_string(m)));
}

std::size_t ModelParams::attn_slot(RelationType r, Modality c) const {
    return slot_of(node_family(r, c, "attn", dims_.share_weights));
}
std::size_t ModelParams::affinity_slot(RelationType r, Modality c) const {
    return slot_of(node_family(r, c, "affinity", dims_.share_weights));
}
std::size_t ModelParams::self_slot(RelationType r, Modality c) const {
    return slot_of(node_family(r, c, "self", dims_.share_weights));
}
std::size_t ModelParams::neigh_slot(RelationType r, Modality c) const {
    return slot_of(node_family(r, c, "neigh", dims_.share_weights));
}
std::size_t ModelParams::out_slot(RelationType r, Modality c) const {
    return slot_of(node_family(r, c, "out", dims_.share_weights));
}

std::size_t ModelParams::cross_slot(NodeType t) const {
    return slot_of("cross." + std::string(to_string(t)));
}

namespace {

Tensor xavier(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t = Tensor::zeros({rows, cols}, true);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

Tensor xavier_vec(std::size_t n, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(n + 1));
    Tensor t = Tensor::zeros({n}, true);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

// Builds the canonical slot layout. When rng is null every tensor stays
// zero (checkpoint loading overwrites them); bias vectors are zero either
// way.
ModelParams ModelParams::build(const ModelDims& dims, Rng* rng) {
    dims.validate();
    ModelParams p;
    p.dims_ = dims;
    const std::size_t d = dims.hidden;
    auto mat = [&](std::size_t rows, std::size_t cols) {
        return rng ? xavier(rows, cols, *rng) : Tensor::zeros({rows, cols}, true);
    };
    auto vec = [&](std::size_t n) { return rng ? xavier_vec(n, *rng) : Tensor::zeros({n}, true); };

    for (std::size_t mi = 0; mi < kModalityCount; ++mi) {
        const Modality m = static_cast<Modality>(mi);
        const std::size_t dm = dims.input_dims[mi];
        if (dm == 0) continue;
        p.add("proj." + std::string(to_string(m)), mat(d, dm));
    }
    if (dims.share_weights) {
        p.add("node.shared.attn", mat(1, 2 * d));
        p.add("node.shared.affinity", mat(d, d));
        p.add("node.shared.self", mat(d, d));
        p.add("node.shared.neigh", mat(d, d));
        p.add("node.shared.out", mat(d, d));
    } else {
        for (const RelationType r : kRecipeRelations) {
            for (const Modality c : {Modality::Image, Modality::Text}) {
                const std::string base =
                    "node." + std::string(to_string(r)) + "." + std::string(to_string(c)) + ".";
                p.add(base + "attn", mat(1, 2 * d));
                p.add(base + "affinity", mat(d, d));
                p.add(base + "self", mat(d, d));
                p.add(base + "neigh", mat(d, d));
                p.add(base + "out", mat(d, d));
            }
        }
    }
    for (const NodeType t : {NodeType::User, NodeType::Recipe, NodeType::Ingredient}) {
        p.add("cross." + std::string(to_string(t)), mat(d, 2 * d));
    }
    p.add("rel.W", mat(d, d));
    p.add("rel.q", vec(d));
    p.add("rel.b", Tensor::zeros({d}, true));
    p.add("head.W", mat(dims.classes, d));
    p.add("head.b", Tensor::zeros({dims.classes}, true));
    return p;
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
    Rng rng(seed);
    return build(dims, &rng);
}

ModelParams ModelParams::zeros(const ModelDims& dims) { return build(dims, nullptr); }

ParamBinding::ParamBinding(Tape& tape, const ModelParams& params, bool trainable)
    : params_(&params) {
    vars_.reserve(params.count());
    for (std::size_t slot = 0; slot < params.count(); ++slot) {
        Tensor t = params.tensor(slot);
        t.set_requires_grad(trainable);
        vars_.push_back(tape.leaf(std::move(t)));
    }
}

std::vector<Tensor> ParamBinding::collect(const GradientMap& grads) const {
    std::vector<Tensor> out;
    out.reserve(vars_.size());
    for (const VarId id : vars_) out.push_back(grads.at(id));
    return out;
}

void FeaturePerturbation::set(NodeIndex v, Modality m, Tensor value) {
    data_.insert_or_assign({v, m}, std::move(value));
}

const Tensor* FeaturePerturbation::find(NodeIndex v, Modality m) const {
    const auto it = data_.find({v, m});
    return it == data_.end() ? nullptr : &it->second;
}

Tensor& FeaturePerturbation::at(NodeIndex v, Modality m) {
    const auto it = data_.find({v, m});
    if (it == data_.end()) {
        throw DataError("no perturbation entry for node index " + std::to_string(v));
    }
    return it->second;
}

double FeaturePerturbation::max_abs() const {
    double mx = 0.0;
    for (const auto& [key, t] : data_) {
        for (std::size_t i = 0; i < t.size(); ++i) mx = std::max(mx, std::abs(t[i]));
    }
    return mx;
}

FeaturePerturbation FeaturePerturbation::zeros_for(const HetGraph& g, const SampleSet& samples,
                                                   std::span<const NodeIndex> batch,
                                                   std::size_t hidden) {
    std::set<NodeIndex> reachable(batch.begin(), batch.end());
    for (const NodeIndex v : batch) {
        const NeighborSample& s = samples.at(v);
        for (const auto& bucket : s.buckets) {
            reachable.insert(bucket.begin(), bucket.end());
        }
    }
    FeaturePerturbation out;
    for (const NodeIndex v : reachable) {
        for (const Modality m : modalities_of(g.type(v))) {
            out.set(v, m, Tensor::zeros({hidden}));
        }
    }
    return out;
}

namespace ops {

VarId project_input(Tape& tape, VarId w_proj, VarId x) { return tape.matmul(w_proj, x); }

VarId node_attention(Tape& tape, VarId w_attn, VarId h_i, std::span<const VarId> h_js,
                     double slope) {
    if (h_js.empty()) throw DataError("node_attention: empty neighbor set");
    std::vector<VarId> scores;
    scores.reserve(h_js.size());
    for (const VarId h_j : h_js) {
        scores.push_back(tape.leaky_relu(tape.matmul(w_attn, tape.concat(h_i, h_j)), slope));
    }
    return tape.softmax(tape.pack(scores));
}

VarId affinity(Tape& tape, VarId w_aff, VarId h_i, std::span<const VarId> h_js, VarId alpha) {
    if (tape.value(alpha).size() != h_js.size()) {
        throw DimensionError("affinity: " + std::to_string(h_js.size()) +
                             " neighbors but attention of shape " +
                             tape.value(alpha).shape_str());
    }
    std::vector<VarId> messages;
    messages.reserve(h_js.size());
    for (const VarId h_j : h_js) {
        messages.push_back(tape.matmul(w_aff, tape.hadamard(h_i, h_j)));
    }
    return tape.weighted_sum(messages, alpha);
}

VarId aggregate_node(Tape& tape, VarId w_self, VarId w_neigh, VarId w_out, VarId h_i,
                     std::span<const VarId> h_js, VarId affin, PoolKind pool) {
    if (h_js.empty()) throw DataError("aggregate_node: empty neighborhood");
    std::vector<VarId> messages;
    messages.reserve(h_js.size());
    for (const VarId h_j : h_js) messages.push_back(tape.matmul(w_neigh, h_j));
    const VarId pooled =
        pool == PoolKind::Max ? tape.max_pool(messages) : tape.add_n(messages);
    const VarId combined = tape.add(tape.add(tape.matmul(w_self, h_i), pooled), affin);
    return tape.matmul(w_out, combined);
}

VarId cross_modal(Tape& tape, VarId w_cross, VarId h_img, VarId h_txt) {
    return tape.matmul(w_cross, tape.concat(h_img, h_txt));
}

VarId relation_importance(Tape& tape, VarId w_rel, VarId q, VarId b,
                          std::span<const VarId> h_irs) {
    if (h_irs.empty()) throw DataError("relation_importance: no nodes carry the relation");
    std::vector<VarId> scores;
    scores.reserve(h_irs.size());
    for (const VarId h : h_irs) {
        scores.push_back(tape.dot(q, tape.tanh(tape.add(tape.matmul(w_rel, h), b))));
    }
    return tape.scale(tape.add_n(scores), 1.0 / static_cast<double>(h_irs.size()));
}

FusedRelations fuse_relations(Tape& tape, std::span<const VarId> h_irs,
                              std::span<const VarId> scores) {
    if (h_irs.empty() || h_irs.size() != scores.size()) {
        throw DataError("fuse_relations: need matching nonempty relation lists");
    }
    const VarId beta = tape.softmax(tape.pack(scores));
    return {tape.weighted_sum(h_irs, beta), beta};
}

}  // namespace ops

namespace {

// Forward-pass state for one call; caches projected features so shared
// neighbors are computed once.
struct ForwardState {
    Tape& tape;
    const ParamBinding& pb;
    const HetGraph& g;
    const ForwardOptions& opt;
    BatchForward& out;
    std::map<FeaturePerturbation::Key, VarId> proj_cache;

    VarId perturbed(VarId h, NodeIndex v, Modality m) {
        if (!opt.perturb) return h;
        const Tensor* eps = opt.perturb->find(v, m);
        if (!eps) return h;
        const FeaturePerturbation::Key key{v, m};
        auto it = out.perturb_vars.find(key);
        if (it == out.perturb_vars.end()) {
            Tensor t = *eps;
            t.set_requires_grad(opt.perturb_trainable);
            it = out.perturb_vars.emplace(key, tape.leaf(std::move(t))).first;
        }
        return tape.add(h, it->second);
    }

    VarId projected(NodeIndex v, Modality m) {
        const FeaturePerturbation::Key key{v, m};
        const auto it = proj_cache.find(key);
        if (it != proj_cache.end()) return it->second;
        const std::span<const double> attr = g.attribute(v, m);
        const VarId x = tape.constant(Tensor::vec({attr.begin(), attr.end()}));
        VarId h = ops::project_input(tape, pb.var(pb.params().proj_slot(m)), x);
        h = perturbed(h, v, m);
        proj_cache.emplace(key, h);
        return h;
    }

    // Layer-1 channel feature: recipes split by channel, single-modality
    // node types feed their lone projection into both channels.
    VarId base_channel(NodeIndex v, Modality channel) {
        switch (g.type(v)) {
            case NodeType::Recipe: return projected(v, channel);
            case NodeType::Ingredient: return projected(v, Modality::Nutrient);
            case NodeType::User: return projected(v, Modality::UserVec);
        }
        throw DataError("bad node type");
    }
};

}  // namespace

BatchForward model_forward(Tape& tape, const ParamBinding& pb, const HetGraph& g,
                           const SampleSet& samples, std::span<const NodeIndex> batch,
                           const ForwardOptions& opt) {
    const ModelParams& P = pb.params();
    const ModelDims& dims = P.dims();
    BatchForward out;
    ForwardState st{tape, pb, g, opt, out, {}};

    const VarId head_w = pb.var(P.head_w_slot());
    const VarId head_b = pb.var(P.head_b_slot());
    auto head = [&](VarId h) { return tape.add(tape.matmul(head_w, h), head_b); };

    for (const NodeIndex v : batch) {
        if (g.type(v) != NodeType::Recipe) {
            throw DataError("batch node '" + g.id(v) + "' is not a recipe");
        }
    }

    // Degenerate path with every aggregation component off: classify the
    // node's own cross-modally fused projected attributes.
    if (opt.switches.all_aggregation_off()) {
        const VarId w_cross = pb.var(P.cross_slot(NodeType::Recipe));
        for (const NodeIndex v : batch) {
            const VarId h = ops::cross_modal(tape, w_cross, st.base_channel(v, Modality::Image),
                                             st.base_channel(v, Modality::Text));
            out.nodes.push_back(v);
            out.embeddings.push_back(h);
            out.logits.push_back(head(h));
        }
        return out;
    }

    // Embed sets per layer: the final layer embeds the batch; each earlier
    // layer additionally embeds every recipe neighbor the next layer reads.
    std::vector<std::set<NodeIndex>> embed_sets(dims.layers);
    embed_sets[dims.layers - 1] = {batch.begin(), batch.end()};
    for (std::size_t layer = dims.layers - 1; layer-- > 0;) {
        std::set<NodeIndex> grown = embed_sets[layer + 1];
        for (const NodeIndex v : embed_sets[layer + 1]) {
            const NeighborSample& s = samples.at(v);
            for (const RelationType r : kRecipeRelations) {
                if (r == RelationType::MetaPathNeighbor && !opt.switches.neighbor_sampling) {
                    continue;
                }
                for (const NodeIndex w : s.bucket(r)) {
                    if (g.type(w) == NodeType::Recipe) grown.insert(w);
                }
            }
        }
        embed_sets[layer] = std::move(grown);
    }

    std::map<NodeIndex, VarId> prev_embedding;
    std::set<NodeIndex> dropped;
    std::map<NodeIndex, VarId> final_embedding;

    for (std::size_t layer = 0; layer < dims.layers; ++layer) {
        const bool final_layer = layer + 1 == dims.layers;
        // Channel feature for this layer: embedded recipes re-enter with
        // their previous embedding on both channels.
        auto channel_feat = [&](NodeIndex v, Modality channel) -> VarId {
            if (layer > 0 && g.type(v) == NodeType::Recipe) {
                const auto it = prev_embedding.find(v);
                if (it != prev_embedding.end()) return it->second;
            }
            return st.base_channel(v, channel);
        };

        struct NodeRelations {
            std::vector<RelationType> relations;
            std::vector<VarId> embeddings;  // h_ir aligned with relations
        };
        std::map<NodeIndex, NodeRelations> per_node;

        for (const NodeIndex v : embed_sets[layer]) {
            if (dropped.count(v)) continue;
            const NeighborSample& sample = samples.at(v);
            NodeRelations rels;
            for (const RelationType r : kRecipeRelations) {
                if (r == RelationType::MetaPathNeighbor && !opt.switches.neighbor_sampling) {
                    continue;
                }
                // Buckets aggregate in ascending node order regardless of
                // how the sample stored them, so neighbor permutations and
                // batch order cannot change any value.
                std::vector<NodeIndex> bucket = sample.bucket(r);
                if (bucket.empty()) continue;
                std::sort(bucket.begin(), bucket.end());

                std::array<VarId, 2> fused{};
                for (const Modality channel : {Modality::Image, Modality::Text}) {
                    const VarId h_i = channel_feat(v, channel);
                    std::vector<VarId> h_js;
                    h_js.reserve(bucket.size());
                    for (const NodeIndex w : bucket) h_js.push_back(channel_feat(w, channel));

                    VarId h_irc;
                    if (opt.switches.node_aggregation) {
                        const VarId alpha =
                            ops::node_attention(tape, pb.var(P.attn_slot(r, channel)), h_i, h_js);
                        if (opt.diag) opt.diag->alphas.push_back(tape.value(alpha).data());
                        const VarId affin = ops::affinity(
                            tape, pb.var(P.affinity_slot(r, channel)), h_i, h_js, alpha);
                        h_irc = ops::aggregate_node(
                            tape, pb.var(P.self_slot(r, channel)), pb.var(P.neigh_slot(r, channel)),
                            pb.var(P.out_slot(r, channel)), h_i, h_js, affin, dims.pool);
                    } else {
                        h_irc = tape.scale(tape.add_n(h_js),
                                           1.0 / static_cast<double>(h_js.size()));
                    }
                    fused[channel == Modality::Image ? 0 : 1] = h_irc;
                }

                VarId h_ir;
                if (opt.switches.cross_modal) {
                    h_ir = ops::cross_modal(tape, pb.var(P.cross_slot(NodeType::Recipe)), fused[0],
                                            fused[1]);
                } else {
                    h_ir = tape.scale(tape.add(fused[0], fused[1]), 0.5);
                }
                rels.relations.push_back(r);
                rels.embeddings.push_back(h_ir);
            }

            if (rels.relations.empty()) {
                dropped.insert(v);
                continue;
            }
            per_node.emplace(v, std::move(rels));
        }

        // Relation scores averaged over the nodes carrying each relation,
        // in ascending node order (per_node map iterates ascending).
        std::map<RelationType, VarId> relation_score;
        if (opt.switches.relation_attention) {
            std::map<RelationType, std::vector<VarId>> carriers;
            for (const auto& [v, rels] : per_node) {
                for (std::size_t k = 0; k < rels.relations.size(); ++k) {
                    carriers[rels.relations[k]].push_back(rels.embeddings[k]);
                }
            }
            for (const auto& [r, h_irs] : carriers) {
                relation_score[r] =
                    ops::relation_importance(tape, pb.var(P.rel_w_slot()), pb.var(P.rel_q_slot()),
                                             pb.var(P.rel_b_slot()), h_irs);
            }
            if (opt.diag && final_layer) {
                for (const auto& [r, score] : relation_score) {
                    opt.diag->relation_scores.emplace_back(r, tape.value(score)[0]);
                }
            }
        }

        std::map<NodeIndex, VarId> layer_embedding;
        for (const auto& [v, rels] : per_node) {
            VarId h_i;
            if (opt.switches.relation_attention) {
                std::vector<VarId> scores;
                scores.reserve(rels.relations.size());
                for (const RelationType r : rels.relations) scores.push_back(relation_score.at(r));
                const ops::FusedRelations fused = ops::fuse_relations(tape, rels.embeddings, scores);
                if (opt.diag) opt.diag->betas.push_back(tape.value(fused.beta).data());
                h_i = fused.embedding;
            } else {
                h_i = tape.scale(tape.add_n(rels.embeddings),
                                 1.0 / static_cast<double>(rels.relations.size()));
            }
            layer_embedding.emplace(v, h_i);
        }

        if (opt.diag && final_layer) {
            for (const NodeIndex v : batch) {
                const auto it = per_node.find(v);
                if (it == per_node.end()) continue;
                std::vector<std::pair<RelationType, std::vector<double>>> entry;
                for (std::size_t k = 0; k < it->second.relations.size(); ++k) {
                    entry.emplace_back(it->second.relations[k],
                                       tape.value(it->second.embeddings[k]).data());
                }
                opt.diag->node_relations.push_back(std::move(entry));
            }
        }

        prev_embedding = std::move(layer_embedding);
        if (final_layer) final_embedding = prev_embedding;
    }

    for (const NodeIndex v : batch) {
        const auto it = final_embedding.find(v);
        if (it == final_embedding.end()) {
            out.dropped.push_back(v);
            continue;
        }
        out.nodes.push_back(v);
        out.embeddings.push_back(it->second);
        out.logits.push_back(head(it->second));
    }
    return out;
}

VarId batch_cross_entropy(Tape& tape, const BatchForward& fwd, const LabelSet& labels) {
    if (fwd.nodes.empty()) throw DataError("batch_cross_entropy: no embedded nodes");
    std::vector<VarId> losses;
    losses.reserve(fwd.nodes.size());
    for (std::size_t i = 0; i < fwd.nodes.size(); ++i) {
        losses.push_back(tape.cross_entropy(fwd.logits[i], labels.label_of(fwd.nodes[i])));
    }
    return tape.scale(tape.add_n(losses), 1.0 / static_cast<double>(losses.size()));
}

}  // namespace recigraph
