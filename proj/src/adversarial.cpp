#include "recigraph/adversarial.hpp"

#include <cmath>

#include "recigraph/rng.hpp"

namespace recigraph {

void AttackConfig::validate() const {
    if (!(bound > 0.0)) throw DataError("attack: bound must be > 0");
    if (!(step > 0.0)) throw DataError("attack: step must be > 0");
    if (iters < 1) throw DataError("attack: iters must be >= 1");
}

namespace {

void check_within_bound(const Perturbation& eps, double bound) {
    const double mx = eps.max_abs();
    if (mx > bound + 1e-12) {
        throw NumericError("perturbation bound violated: ||eps||_inf = " + std::to_string(mx) +
                           " > " + std::to_string(bound));
    }
}

double attack_loss_value(Tape& tape, const ModelParams& params, const HetGraph& g,
                         const SampleSet& samples, std::span<const NodeIndex> batch,
                         const LabelSet& labels, const Perturbation& eps,
                         const AblationSwitches& switches, bool eps_trainable, VarId* loss_out,
                         BatchForward* fwd_out) {
    const ParamBinding pb(tape, params, false);
    ForwardOptions opt;
    opt.switches = switches;
    opt.perturb = &eps;
    opt.perturb_trainable = eps_trainable;
    BatchForward fwd = model_forward(tape, pb, g, samples, batch, opt);
    const VarId loss = batch_cross_entropy(tape, fwd, labels);
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw NumericError("non-finite attack loss");
    if (loss_out) *loss_out = loss;
    if (fwd_out) *fwd_out = std::move(fwd);
    return value;
}

}  // namespace

Perturbation pgd_attack(const ModelParams& params, const HetGraph& g, const SampleSet& samples,
                        std::span<const NodeIndex> batch, const LabelSet& labels,
                        const AttackConfig& cfg, const AblationSwitches& switches,
                        AttackTrace* trace) {
    cfg.validate();
    if (batch.empty()) throw DataError("pgd_attack: empty batch");

    Perturbation eps = Perturbation::zeros_for(g, samples, batch, params.dims().hidden);
    if (cfg.random_start) {
        Rng rng(cfg.seed);
        for (auto& [key, t] : eps) {
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-cfg.bound, cfg.bound);
        }
    }

    for (std::size_t iter = 0; iter < cfg.iters; ++iter) {
        Tape tape;
        VarId loss_id = 0;
        BatchForward fwd;
        double value = 0.0;
        try {
            value = attack_loss_value(tape, params, g, samples, batch, labels, eps, switches,
                                      /*eps_trainable=*/true, &loss_id, &fwd);
        } catch (const NumericError& e) {
            throw NumericError("pgd iteration " + std::to_string(iter + 1) + ": " + e.what());
        }
        if (trace) trace->loss.push_back(value);

        const GradientMap grads = tape.backward(loss_id);
        for (const auto& [key, var] : fwd.perturb_vars) {
            const Tensor& grad = grads.at(var);
            Tensor& e = eps.at(key.first, key.second);
            auto* signs = trace ? &trace->sign_consistency[key] : nullptr;
            if (signs && signs->empty()) signs->assign(e.size(), 2);  // 2 = unseen
            for (std::size_t i = 0; i < e.size(); ++i) {
                const double gv = grad[i];
                const int s = gv > 0.0 ? 1 : (gv < 0.0 ? -1 : 0);
                if (signs) {
                    int& state = (*signs)[i];
                    if (state == 2) {
                        state = s;
                    } else if (state != s) {
                        state = 0;
                    }
                }
                if (s == 0) continue;
                double next = e[i] + cfg.step * static_cast<double>(s);
                if (next > cfg.bound) next = cfg.bound;
                if (next < -cfg.bound) next = -cfg.bound;
                e[i] = next;
            }
        }
        check_within_bound(eps, cfg.bound);
        if (trace) trace->max_abs.push_back(eps.max_abs());
    }

    if (trace) {
        Tape tape;
        trace->loss.push_back(attack_loss_value(tape, params, g, samples, batch, labels, eps,
                                                switches, false, nullptr, nullptr));
        for (auto& [key, signs] : trace->sign_consistency) {
            for (int& s : signs) {
                if (s == 2) s = 0;
            }
        }
    }
    return eps;
}

VarId adversarial_loss(Tape& tape, const ParamBinding& pb, const HetGraph& g,
                       const SampleSet& samples, std::span<const NodeIndex> batch,
                       const LabelSet& labels, const Perturbation& eps, double bound,
                       const AblationSwitches& switches) {
    check_within_bound(eps, bound);
    ForwardOptions opt;
    opt.switches = switches;
    opt.perturb = &eps;
    opt.perturb_trainable = false;
    const BatchForward fwd = model_forward(tape, pb, g, samples, batch, opt);
    return batch_cross_entropy(tape, fwd, labels);
}

double adversarial_loss_value(const ModelParams& params, const HetGraph& g,
                              const SampleSet& samples, std::span<const NodeIndex> batch,
                              const LabelSet& labels, const Perturbation& eps, double bound,
                              const AblationSwitches& switches) {
    Tape tape;
    const ParamBinding pb(tape, params, false);
    return tape.value(
        adversarial_loss(tape, pb, g, samples, batch, labels, eps, bound, switches))[0];
}

double joint_loss(double l_sup, double l_adv, double lambda) {
    if (lambda < 0.0) throw DataError("joint loss: lambda must be >= 0");
    return l_sup + lambda * l_adv;
}

}  // namespace recigraph
