#pragma once

#include "recigraph/model.hpp"

namespace recigraph {

using Perturbation = FeaturePerturbation;

struct AttackConfig {
    double bound = 0.02;  // max-norm radius S
    double step = 0.005;
    std::size_t iters = 5;
    bool random_start = false;  // uniform start inside the ball instead of zero
    std::uint64_t seed = 0;

    void validate() const;
};

// Populated on request by pgd_attack; test and acceptance hooks.
struct AttackTrace {
    std::vector<double> loss;     // loss at the pre-update eps of each iteration, then final
    std::vector<double> max_abs;  // ||eps||_inf after each update
    // Per coordinate: +1/-1 while every iteration's gradient kept that sign,
    // 0 once it flipped or vanished.
    std::map<FeaturePerturbation::Key, std::vector<int>> sign_consistency;
};

// Sign-gradient max-norm PGD on the projected input features. Model
// parameters are read-only; eps starts at zero (or uniformly inside the
// ball) and is clipped back to [-bound, bound] after every step, so the
// invariant ||eps||_inf <= bound holds at each iteration boundary.
Perturbation pgd_attack(const ModelParams& params, const HetGraph& g, const SampleSet& samples,
                        std::span<const NodeIndex> batch, const LabelSet& labels,
                        const AttackConfig& cfg, const AblationSwitches& switches = {},
                        AttackTrace* trace = nullptr);

// Cross-entropy of the forward pass on perturbed features; eps enters as a
// constant so gradients flow to the model parameters only. Rejects
// perturbations outside the bound.
VarId adversarial_loss(Tape& tape, const ParamBinding& pb, const HetGraph& g,
                       const SampleSet& samples, std::span<const NodeIndex> batch,
                       const LabelSet& labels, const Perturbation& eps, double bound,
                       const AblationSwitches& switches = {});

double adversarial_loss_value(const ModelParams& params, const HetGraph& g,
                              const SampleSet& samples, std::span<const NodeIndex> batch,
                              const LabelSet& labels, const Perturbation& eps, double bound,
                              const AblationSwitches& switches = {});

// L = l_sup + lambda * l_adv.
double joint_loss(double l_sup, double l_adv, double lambda);

}  // namespace recigraph
