#include "recigraph/adam.hpp"

#include <cmath>

namespace recigraph {

void Adam::step(std::span<Tensor> params, std::span<const Tensor> grads) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam: " + std::to_string(params.size()) + " params but " +
                             std::to_string(grads.size()) + " grads");
    }
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].size(), 0.0);
            v_[i].assign(params[i].size(), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw DimensionError("adam: parameter count changed mid-run");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        const Tensor& g = grads[i];
        if (!p.same_shape(g)) {
            throw DimensionError("adam: grad shape " + g.shape_str() + " does not match param " +
                                 p.shape_str());
        }
        std::vector<double>& m = m_[i];
        std::vector<double>& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace recigraph
