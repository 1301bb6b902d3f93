#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <vector>

#include "recigraph/tensor.hpp"

namespace recigraph {

using VarId = std::uint32_t;

// Gradients keyed by the VarId of the leaf they belong to. backward() fills
// one entry per requires-grad leaf, zero-valued when the leaf does not reach
// the loss.
class GradientMap {
public:
    void insert(VarId id, Tensor grad);
    bool contains(VarId id) const { return grads_.count(id) != 0; }
    const Tensor& at(VarId id) const;
    std::size_t size() const { return grads_.size(); }
    auto begin() const { return grads_.begin(); }
    auto end() const { return grads_.end(); }

private:
    std::map<VarId, Tensor> grads_;
};

// Define-by-run tape. Records each primitive application in program order
// (inputs always precede consumers), evaluates forward eagerly, and replays
// the record exactly once in reverse for gradients. A tape is built fresh
// for every forward pass and is confined to a single thread.
class Tape {
public:
    // Leaves. constant() strips requires_grad.
    VarId leaf(Tensor value);
    VarId constant(Tensor value);

    VarId matmul(VarId a, VarId b);
    VarId add(VarId a, VarId b);
    VarId add_n(std::span<const VarId> xs);
    VarId scale(VarId x, double k);
    VarId concat(VarId a, VarId b);
    VarId hadamard(VarId a, VarId b);
    VarId leaky_relu(VarId x, double slope);
    VarId tanh(VarId x);
    VarId softmax(VarId x);
    VarId max_pool(std::span<const VarId> xs);
    // sum_j weights[j] * values[j]; weights is a rank-1 var of length |values|.
    VarId weighted_sum(std::span<const VarId> values, VarId weights);
    // Packs size-1 vars into one rank-1 var.
    VarId pack(std::span<const VarId> scalars);
    VarId dot(VarId a, VarId b);
    VarId cross_entropy(VarId logits, int label);
    VarId sum(VarId x);

    const Tensor& value(VarId id) const;
    std::size_t size() const { return nodes_.size(); }

    // Reverse pass from a scalar loss. Returns gradients for every
    // requires-grad leaf recorded on the tape.
    GradientMap backward(VarId loss) const;

private:
    enum class Op : std::uint8_t {
        Leaf,
        MatMul,
        Add,
        AddN,
        Scale,
        Concat,
        Hadamard,
        LeakyRelu,
        Tanh,
        Softmax,
        MaxPool,
        WeightedSum,
        Pack,
        Dot,
        CrossEntropy,
        Sum,
    };

    struct Node {
        Op op;
        std::vector<VarId> inputs;
        Tensor value;
        bool needs_grad = false;
        double arg = 0.0;                    // slope / scale factor
        int label = -1;                      // cross-entropy class
        std::vector<std::uint32_t> routing;  // max_pool winner per coordinate
        std::vector<double> cached;          // softmax of logits for cross-entropy
    };

    VarId push(Node n);
    const Node& node(VarId id) const;
    bool any_needs_grad(std::span<const VarId> ids) const;

    // Deque keeps value() references stable while new ops are recorded.
    std::deque<Node> nodes_;
};

}  // namespace recigraph
