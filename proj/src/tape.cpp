#include "recigraph/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace recigraph {

void GradientMap::insert(VarId id, Tensor grad) {
    grads_.insert_or_assign(id, std::move(grad));
}

const Tensor& GradientMap::at(VarId id) const {
    const auto it = grads_.find(id);
    if (it == grads_.end()) {
        throw DataError("no gradient recorded for var " + std::to_string(id));
    }
    return it->second;
}

VarId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size() - 1);
}

const Tape::Node& Tape::node(VarId id) const {
    if (id >= nodes_.size()) throw DataError("var " + std::to_string(id) + " not on tape");
    return nodes_[id];
}

bool Tape::any_needs_grad(std::span<const VarId> ids) const {
    for (const VarId id : ids) {
        if (node(id).needs_grad) return true;
    }
    return false;
}

const Tensor& Tape::value(VarId id) const { return node(id).value; }

VarId Tape::leaf(Tensor value) {
    Node n;
    n.op = Op::Leaf;
    n.needs_grad = value.requires_grad();
    n.value = std::move(value);
    return push(std::move(n));
}

VarId Tape::constant(Tensor value) {
    value.set_requires_grad(false);
    return leaf(std::move(value));
}

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 2 || (tb.rank() != 2 && tb.rank() != 1)) {
        throw DimensionError("matmul: unsupported shapes " + ta.shape_str() + " x " + tb.shape_str());
    }
    const std::size_t m = ta.rows();
    const std::size_t k = ta.cols();
    const std::size_t bk = (tb.rank() == 2) ? tb.rows() : tb.size();
    const std::size_t nc = (tb.rank() == 2) ? tb.cols() : 1;
    if (k != bk) {
        throw DimensionError("matmul: inner dimensions disagree, " + ta.shape_str() + " x " +
                             tb.shape_str());
    }
    std::vector<double> out(m * nc, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ta[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < nc; ++j) {
                out[i * nc + j] += av * tb[p * nc + j];
            }
        }
    }
    Node n;
    n.op = Op::MatMul;
    n.inputs = {a, b};
    n.needs_grad = any_needs_grad(n.inputs);
    n.value = (tb.rank() == 2) ? Tensor({m, nc}, std::move(out)) : Tensor({m}, std::move(out));
    return push(std::move(n));
}

VarId Tape::add(VarId a, VarId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (!ta.same_shape(tb)) {
        throw DimensionError("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    }
    std::vector<double> out(ta.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] + tb[i];
    Node n;
    n.op = Op::Add;
    n.inputs = {a, b};
    n.needs_grad = any_needs_grad(n.inputs);
    n.value = Tensor(ta.shape(), std::move(out));
    return push(std::move(n));
}

VarId Tape::add_n(std::span<const VarId> xs) {
    if (xs.empty()) throw DimensionError("add_n: empty input set");
    const Tensor& first = node(xs[0]).value;
    std::vector<double> out(first.size(), 0.0);
    for (const VarId id : xs) {
        const Tensor& t = node(id).value;
        if (!t.same_shape(first)) {
            throw DimensionError("add_n: shape mismatch " + first.shape_str() + " vs " +
                                 t.shape_str());
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += t[i];
    }
    Node n;
    n.op = Op::AddN;
    n.inputs.assign(xs.begin(), xs.end());
    n.needs_grad = any_needs_grad(n.inputs);
    n.value = Tensor(first.shape(), std::move(out));
    return push(std::move(n));
}

VarId Tape::scale(VarId x, double k) {
    const Tensor& t = node(x).value;
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * t[i];
    Node n;
    n.op = Op::Scale;
    n.inputs = {x};
    n.needs_grad = node(x).needs_grad;
    n.arg = k;
    n.value = Tensor(t.shape(), std::move(out));
    return push(std::move(n));
}

VarId Tape::concat(VarId a, VarId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 1 || tb.rank() != 1) {
        throw DimensionError("concat: rank mismatch, need rank-1 operands, got " + ta.shape_str() +
                             " and " + tb.shape_str());
    }
    std::vector<double> out;
    out.reserve(ta.size() + tb.size());
    out.insert(out.end(), ta.data().begin(), ta.data().end());
    out.insert(out.end(), tb.data().begin(), tb.data().end());
    Node n;
    n.op = Op::Concat;
    n.inputs = {a, b};
    n.needs_grad = any_needs_grad(n.inputs);
    n.value = Tensor::vec(std::move(out));
    return push(std::move(n));
}

VarId Tape::hadamard(VarId a, VarId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (!ta.same_shape(tb)) {
        throw DimensionError("hadamard: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    }
    std::vector<double> out(ta.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] * tb[i];
    Node n;
    n.op = Op::Hadamard;
    n.inputs = {a, b};
    n.needs_grad = any_needs_grad(n.inputs);
    n.value = Tensor(ta.shape(), std::move(out));
    return push(std::move(n));
}

VarId Tape::leaky_relu(VarId x, double slope) {
    if (!(slope > 0.0 && slope < 1.0)) {
        throw NumericError("leaky_relu: slope must lie in (0,1), got " + std::to_string(slope));
    }
    const Tensor& t = node(x).value;
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t[i] >= 0.0 ? t[i] : slope * t[i];
    Node n;
    n.op = Op::LeakyRelu;
    n.inputs = {x};
    n.needs_grad = node(x).needs_grad;
    n.arg = slope;
    n.value = Tensor(t.shape(), std::move(out));
    return push(std::move(n));
}

VarId Tape::tanh(VarId x) {
    const Tensor& t = node(x).value;
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(t[i]);
    Node n;
    n.op = Op::Tanh;
    n.inputs = {x};
    n.needs_grad = node(x).needs_grad;
    n.value = Tensor(t.shape(), std::move(out));
    return push(std::move(n));
}

VarId Tape::softmax(VarId x) {
    const Tensor& t = node(x).value;
    if (t.rank() != 1 || t.size() == 0) {
        throw DimensionError("softmax: need a nonempty rank-1 input, got " + t.shape_str());
    }
    const double mx = *std::max_element(t.data().begin(), t.data().end());
    std::vector<double> out(t.size());
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(t[i] - mx);
        total += out[i];
    }
    for (double& v : out) v /= total;
    Node n;
    n.op = Op::Softmax;
    n.inputs = {x};
    n.needs_grad = node(x).needs_grad;
    n.value = Tensor::vec(std::move(out));
    return push(std::move(n));
}

VarId Tape::max_pool(std::span<const VarId> xs) {
    if (xs.empty()) throw DimensionError("max_pool: empty neighborhood");
    const Tensor& first = node(xs[0]).value;
    std::vector<double> out(first.data());
    std::vector<std::uint32_t> routing(first.size(), 0);
    for (std::size_t j = 1; j < xs.size(); ++j) {
        const Tensor& t = node(xs[j]).value;
        if (!t.same_shape(first)) {
            throw DimensionError("max_pool: shape mismatch " + first.shape_str() + " vs " +
                                 t.shape_str());
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            // Strict > keeps the lowest input index on ties.
            if (t[i] > out[i]) {
                out[i] = t[i];
                routing[i] = static_cast<std::uint32_t>(j);
            }
        }
    }
    Node n;
    n.op = Op::MaxPool;
    n.inputs.assign(xs.begin(), xs.end());
    n.needs_grad = any_needs_grad(n.inputs);
    n.routing = std::move(routing);
    n.value = Tensor(first.shape(), std::move(out));
    return push(std::move(n));
}

VarId Tape::weighted_sum(std::span<const VarId> values, VarId weights) {
    const Tensor& w = node(weights).value;
    if (w.rank() != 1 || w.size() != values.size()) {
        throw DimensionError("weighted_sum: " + std::to_string(values.size()) +
                             " values but weights of shape " + w.shape_str());
    }
    if (values.empty()) throw DimensionError("weighted_sum: empty value set");
    const Tensor& first = node(values[0]).value;
    std::vector<double> out(first.size(), 0.0);
    for (std::size_t j = 0; j < values.size(); ++j) {
        const Tensor& t = node(values[j]).value;
        if (!t.same_shape(first)) {
            throw DimensionError("weighted_sum: shape mismatch " + first.shape_str() + " vs " +
                                 t.shape_str());
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[j] * t[i];
    }
    Node n;
    n.op = Op::WeightedSum;
    n.inputs.assign(values.begin(), values.end());
    n.inputs.push_back(weights);
    n.needs_grad = any_needs_grad(n.inputs);
    n.value = Tensor(first.shape(), std::move(out));
    return push(std::move(n));
}

VarId Tape::pack(std::span<const VarId> scalars) {
    std::vector<double> out;
    out.reserve(scalars.size());
    for (const VarId id : scalars) {
        const Tensor& t = node(id).value;
        if (t.size() != 1) {
            throw DimensionError("pack: inputs must be size-1, got " + t.shape_str());
        }
        out.push_back(t[0]);
    }
    Node n;
    n.op = Op::Pack;
    n.inputs.assign(scalars.begin(), scalars.end());
    n.needs_grad = any_needs_grad(n.inputs);
    n.value = Tensor::vec(std::move(out));
    return push(std::move(n));
}

VarId Tape::dot(VarId a, VarId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 1 || !ta.same_shape(tb)) {
        throw DimensionError("dot: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    }
    double out = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) out += ta[i] * tb[i];
    Node n;
    n.op = Op::Dot;
    n.inputs = {a, b};
    n.needs_grad = any_needs_grad(n.inputs);
    n.value = Tensor::scalar(out);
    return push(std::move(n));
}

VarId Tape::cross_entropy(VarId logits, int label) {
    const Tensor& t = node(logits).value;
    if (t.rank() != 1 || t.size() == 0) {
        throw DimensionError("cross_entropy: need nonempty rank-1 logits, got " + t.shape_str());
    }
    if (label < 0 || static_cast<std::size_t>(label) >= t.size()) {
        throw DataError("cross_entropy: label " + std::to_string(label) + " out of range [0, " +
                        std::to_string(t.size()) + ")");
    }
    // log-sum-exp with max subtraction; cache softmax for the backward pass.
    const double mx = *std::max_element(t.data().begin(), t.data().end());
    double total = 0.0;
    std::vector<double> probs(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        probs[i] = std::exp(t[i] - mx);
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    const double loss = (mx + std::log(total)) - t[static_cast<std::size_t>(label)];
    Node n;
    n.op = Op::CrossEntropy;
    n.inputs = {logits};
    n.needs_grad = node(logits).needs_grad;
    n.label = label;
    n.cached = std::move(probs);
    n.value = Tensor::scalar(std::max(loss, 0.0));
    return push(std::move(n));
}

VarId Tape::sum(VarId x) {
    const Tensor& t = node(x).value;
    double out = 0.0;
    for (const double v : t.data()) out += v;
    Node n;
    n.op = Op::Sum;
    n.inputs = {x};
    n.needs_grad = node(x).needs_grad;
    n.value = Tensor::scalar(out);
    return push(std::move(n));
}

GradientMap Tape::backward(VarId loss) const {
    const Node& root = node(loss);
    if (root.value.size() != 1) {
        throw DimensionError("backward: loss must be scalar, got shape " + root.value.shape_str());
    }

    // grad[id] stays empty until the node is first reached.
    std::vector<std::vector<double>> grad(nodes_.size());
    grad[loss] = {1.0};

    auto reach = [&](VarId id) -> std::vector<double>& {
        if (grad[id].empty()) grad[id].assign(nodes_[id].value.size(), 0.0);
        return grad[id];
    };

    for (VarId id = loss + 1; id-- > 0;) {
        const Node& n = nodes_[id];
        if (grad[id].empty() || !n.needs_grad) continue;
        const std::vector<double>& g = grad[id];

        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatMul: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                const std::size_t m = a.rows();
                const std::size_t k = a.cols();
                const std::size_t nc = (b.rank() == 2) ? b.cols() : 1;
                if (nodes_[n.inputs[0]].needs_grad) {
                    std::vector<double>& da = reach(n.inputs[0]);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p)
                            for (std::size_t j = 0; j < nc; ++j)
                                da[i * k + p] += g[i * nc + j] * b[p * nc + j];
                }
                if (nodes_[n.inputs[1]].needs_grad) {
                    std::vector<double>& db = reach(n.inputs[1]);
                    for (std::size_t p = 0; p < k; ++p)
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < nc; ++j)
                                db[p * nc + j] += a[i * k + p] * g[i * nc + j];
                }
                break;
            }
            case Op::Add:
                for (const VarId in : n.inputs) {
                    if (!nodes_[in].needs_grad) continue;
                    std::vector<double>& d = reach(in);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
                }
                break;
            case Op::AddN:
                for (const VarId in : n.inputs) {
                    if (!nodes_[in].needs_grad) continue;
                    std::vector<double>& d = reach(in);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
                }
                break;
            case Op::Scale:
                if (nodes_[n.inputs[0]].needs_grad) {
                    std::vector<double>& d = reach(n.inputs[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += n.arg * g[i];
                }
                break;
            case Op::Concat: {
                const std::size_t la = nodes_[n.inputs[0]].value.size();
                if (nodes_[n.inputs[0]].needs_grad) {
                    std::vector<double>& d = reach(n.inputs[0]);
                    for (std::size_t i = 0; i < la; ++i) d[i] += g[i];
                }
                if (nodes_[n.inputs[1]].needs_grad) {
                    std::vector<double>& d = reach(n.inputs[1]);
                    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[la + i];
                }
                break;
            }
            case Op::Hadamard: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                if (nodes_[n.inputs[0]].needs_grad) {
                    std::vector<double>& d = reach(n.inputs[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += b[i] * g[i];
                }
                if (nodes_[n.inputs[1]].needs_grad) {
                    std::vector<double>& d = reach(n.inputs[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += a[i] * g[i];
                }
                break;
            }
            case Op::LeakyRelu: {
                const Tensor& x = nodes_[n.inputs[0]].value;
                std::vector<double>& d = reach(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    d[i] += (x[i] >= 0.0 ? 1.0 : n.arg) * g[i];
                }
                break;
            }
            case Op::Tanh: {
                const Tensor& y = n.value;
                std::vector<double>& d = reach(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += (1.0 - y[i] * y[i]) * g[i];
                break;
            }
            case Op::Softmax: {
                const Tensor& y = n.value;
                double inner = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * y[i];
                std::vector<double>& d = reach(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] += y[i] * (g[i] - inner);
                break;
            }
            case Op::MaxPool:
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const VarId winner = n.inputs[n.routing[i]];
                    if (!nodes_[winner].needs_grad) continue;
                    reach(winner)[i] += g[i];
                }
                break;
            case Op::WeightedSum: {
                const std::size_t count = n.inputs.size() - 1;
                const Tensor& w = nodes_[n.inputs[count]].value;
                for (std::size_t j = 0; j < count; ++j) {
                    if (!nodes_[n.inputs[j]].needs_grad) continue;
                    std::vector<double>& d = reach(n.inputs[j]);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += w[j] * g[i];
                }
                if (nodes_[n.inputs[count]].needs_grad) {
                    std::vector<double>& dw = reach(n.inputs[count]);
                    for (std::size_t j = 0; j < count; ++j) {
                        const Tensor& v = nodes_[n.inputs[j]].value;
                        double acc = 0.0;
                        for (std::size_t i = 0; i < g.size(); ++i) acc += v[i] * g[i];
                        dw[j] += acc;
                    }
                }
                break;
            }
            case Op::Pack:
                for (std::size_t j = 0; j < n.inputs.size(); ++j) {
                    if (!nodes_[n.inputs[j]].needs_grad) continue;
                    reach(n.inputs[j])[0] += g[j];
                }
                break;
            case Op::Dot: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                if (nodes_[n.inputs[0]].needs_grad) {
                    std::vector<double>& d = reach(n.inputs[0]);
                    for (std::size_t i = 0; i < a.size(); ++i) d[i] += g[0] * b[i];
                }
                if (nodes_[n.inputs[1]].needs_grad) {
                    std::vector<double>& d = reach(n.inputs[1]);
                    for (std::size_t i = 0; i < a.size(); ++i) d[i] += g[0] * a[i];
                }
                break;
            }
            case Op::CrossEntropy: {
                std::vector<double>& d = reach(n.inputs[0]);
                for (std::size_t i = 0; i < d.size(); ++i) {
                    const double onehot = (static_cast<int>(i) == n.label) ? 1.0 : 0.0;
                    d[i] += g[0] * (n.cached[i] - onehot);
                }
                break;
            }
            case Op::Sum: {
                std::vector<double>& d = reach(n.inputs[0]);
                for (double& v : d) v += g[0];
                break;
            }
        }
    }

    GradientMap out;
    for (VarId id = 0; id < nodes_.size(); ++id) {
        const Node& n = nodes_[id];
        if (n.op != Op::Leaf || !n.value.requires_grad()) continue;
        if (grad[id].empty()) {
            out.insert(id, Tensor::zeros(n.value.shape()));
        } else {
            out.insert(id, Tensor(n.value.shape(), std::move(grad[id])));
        }
    }
    return out;
}

}  // namespace recigraph
