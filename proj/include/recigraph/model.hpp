#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recigraph/graph.hpp"
#include "recigraph/sampler.hpp"
#include "recigraph/tape.hpp"

namespace recigraph {

enum class PoolKind : std::uint8_t { Max, Sum };
std::string_view to_string(PoolKind p);
PoolKind pool_from(std::string_view s);

// Relations that can bucket neighbors of a recipe seed.
inline constexpr std::array<RelationType, 4> kRecipeRelations = {
    RelationType::UserRecipe,
    RelationType::RecipeRecipe,
    RelationType::RecipeIngredient,
    RelationType::MetaPathNeighbor,
};

// Component switches: multi-view neighbor sampling, adaptive node
// aggregation, cross-modal aggregation, relation attention, adversarial
// learning. With every switch off the model degenerates to a classifier on
// the node's own projected attributes.
struct AblationSwitches {
    bool neighbor_sampling = true;
    bool node_aggregation = true;
    bool cross_modal = true;
    bool relation_attention = true;
    bool adversarial = true;

    bool all_aggregation_off() const {
        return !neighbor_sampling && !node_aggregation && !cross_modal && !relation_attention;
    }
    bool operator==(const AblationSwitches&) const = default;
};

struct ModelDims {
    std::size_t hidden = 128;
    std::array<std::size_t, kModalityCount> input_dims{};  // 0 = channel unused
    std::size_t classes = 0;
    std::size_t layers = 1;
    bool share_weights = false;
    PoolKind pool = PoolKind::Max;

    void validate() const;
    bool operator==(const ModelDims&) const = default;
};

// All trainable tensors in a fixed canonical order (also the checkpoint
// order). Slot accessors name the role each tensor plays.
class ModelParams {
public:
    ModelParams() = default;

    // Xavier-uniform weights, zero bias vectors, deterministic in seed.
    static ModelParams init(const ModelDims& dims, std::uint64_t seed);

    // Same layout, all tensors zero; used by checkpoint loading.
    static ModelParams zeros(const ModelDims& dims);

    const ModelDims& dims() const { return dims_; }
    std::size_t count() const { return tensors_.size(); }
    const std::string& name(std::size_t slot) const { return names_[slot]; }
    Tensor& tensor(std::size_t slot) { return tensors_[slot]; }
    const Tensor& tensor(std::size_t slot) const { return tensors_[slot]; }
    std::span<Tensor> tensors() { return tensors_; }

    bool has_proj(Modality m) const;
    std::size_t proj_slot(Modality m) const;
    std::size_t attn_slot(RelationType r, Modality channel) const;
    std::size_t affinity_slot(RelationType r, Modality channel) const;
    std::size_t self_slot(RelationType r, Modality channel) const;
    std::size_t neigh_slot(RelationType r, Modality channel) const;
    std::size_t out_slot(RelationType r, Modality channel) const;
    std::size_t cross_slot(NodeType t) const;
    std::size_t rel_w_slot() const { return slot_of("rel.W"); }
    std::size_t rel_q_slot() const { return slot_of("rel.q"); }
    std::size_t rel_b_slot() const { return slot_of("rel.b"); }
    std::size_t head_w_slot() const { return slot_of("head.W"); }
    std::size_t head_b_slot() const { return slot_of("head.b"); }

    std::size_t add(std::string name, Tensor t);
    std::size_t slot_of(const std::string& name) const;

private:
    static std::string node_family(RelationType r, Modality channel, const char* role,
                                   bool shared);
    static ModelParams build(const ModelDims& dims, class Rng* rng);
    ModelDims dims_;
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
    std::map<std::string, std::size_t> index_;
};

// Binds every parameter tensor onto a tape once, as gradient leaves when
// trainable. collect() pulls gradients back in store order.
class ParamBinding {
public:
    ParamBinding(Tape& tape, const ModelParams& params, bool trainable);
    VarId var(std::size_t slot) const { return vars_[slot]; }
    const ModelParams& params() const { return *params_; }
    std::vector<Tensor> collect(const GradientMap& grads) const;

private:
    const ModelParams* params_;
    std::vector<VarId> vars_;
};

// Additive offsets on projected features, keyed by (node, modality).
class FeaturePerturbation {
public:
    using Key = std::pair<NodeIndex, Modality>;

    void set(NodeIndex v, Modality m, Tensor value);
    const Tensor* find(NodeIndex v, Modality m) const;
    Tensor& at(NodeIndex v, Modality m);
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }
    double max_abs() const;
    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    // Zero offsets for every (node, modality) feature reachable from the
    // batch through its samples.
    static FeaturePerturbation zeros_for(const HetGraph& g, const SampleSet& samples,
                                         std::span<const NodeIndex> batch, std::size_t hidden);

private:
    std::map<Key, Tensor> data_;
};

struct ForwardDiagnostics {
    std::vector<std::vector<double>> alphas;  // every attention vector
    std::vector<std::vector<double>> betas;   // every relation-weight vector
    std::vector<std::pair<RelationType, double>> relation_scores;  // final layer w_r
    // Final-layer per-batch-node cross-modal embeddings by relation.
    std::vector<std::vector<std::pair<RelationType, std::vector<double>>>> node_relations;
};

struct ForwardOptions {
    AblationSwitches switches{};
    const FeaturePerturbation* perturb = nullptr;
    bool perturb_trainable = false;
    ForwardDiagnostics* diag = nullptr;
};

struct BatchForward {
    std::vector<NodeIndex> nodes;  // embedded nodes, batch order, dropped removed
    std::vector<VarId> embeddings;
    std::vector<VarId> logits;
    std::vector<NodeIndex> dropped;  // isolated nodes
    std::map<FeaturePerturbation::Key, VarId> perturb_vars;
};

// Full pipeline: modality projection, per-relation per-channel aggregation
// over the sampled neighbors, cross-modal fusion, relation attention,
// classifier head. Deterministic; batch order does not affect any node's
// embedding because shared statistics are reduced in ascending node order.
BatchForward model_forward(Tape& tape, const ParamBinding& pb, const HetGraph& g,
                           const SampleSet& samples, std::span<const NodeIndex> batch,
                           const ForwardOptions& opt);

// Mean cross-entropy over the embedded nodes of a forward pass.
VarId batch_cross_entropy(Tape& tape, const BatchForward& fwd, const LabelSet& labels);

// The individual aggregation steps, exposed for composition and testing.
namespace ops {

// h = W_m x.
VarId project_input(Tape& tape, VarId w_proj, VarId x);

// Attention over neighbors: softmax_j LeakyReLU(w_attn (h_i || h_j)).
VarId node_attention(Tape& tape, VarId w_attn, VarId h_i, std::span<const VarId> h_js,
                     double slope = 0.2);

// A = sum_j alpha_j W_aff (h_i ⊙ h_j).
VarId affinity(Tape& tape, VarId w_aff, VarId h_i, std::span<const VarId> h_js, VarId alpha);

// W_out [W_self h_i + POOL_j(W_neigh h_j) + A].
VarId aggregate_node(Tape& tape, VarId w_self, VarId w_neigh, VarId w_out, VarId h_i,
                     std::span<const VarId> h_js, VarId affin, PoolKind pool);

// W_cross (h_img || h_txt).
VarId cross_modal(Tape& tape, VarId w_cross, VarId h_img, VarId h_txt);

// mean_i q^T tanh(W_rel h_ir + b) over the nodes carrying the relation.
VarId relation_importance(Tape& tape, VarId w_rel, VarId q, VarId b,
                          std::span<const VarId> h_irs);

struct FusedRelations {
    VarId embedding;
    VarId beta;
};
// softmax over the relation scores, then the weighted sum of h_ir.
FusedRelations fuse_relations(Tape& tape, std::span<const VarId> h_irs,
                              std::span<const VarId> scores);

}  // namespace ops

}  // namespace recigraph
