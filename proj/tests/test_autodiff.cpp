#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "recigraph/adam.hpp"
#include "recigraph/rng.hpp"
#include "recigraph/tape.hpp"

using namespace recigraph;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, bool requires_grad = true) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

// A composite touching every primitive on 5-dim toys. Mirrors the shape of
// the model pipeline: projection, attention scores, affinity, pooling,
// relation fusion, classifier.
double composite_loss(Tape& tape, Tensor& w, Tensor& wa, Tensor& attn, Tensor& q, Tensor& x1,
                      Tensor& x2, VarId* loss_out, std::vector<VarId>* leaves) {
    const VarId vw = tape.leaf(w);
    const VarId vwa = tape.leaf(wa);
    const VarId vattn = tape.leaf(attn);
    const VarId vq = tape.leaf(q);
    const VarId vx1 = tape.leaf(x1);
    const VarId vx2 = tape.leaf(x2);
    if (leaves) *leaves = {vw, vwa, vattn, vq, vx1, vx2};

    const VarId h1 = tape.matmul(vw, vx1);
    const VarId h2 = tape.matmul(vw, vx2);
    const VarId e1 = tape.leaky_relu(tape.matmul(vattn, tape.concat(h1, h2)), 0.2);
    const VarId e2 = tape.leaky_relu(tape.matmul(vattn, tape.concat(h2, h1)), 0.2);
    const std::vector<VarId> scores{e1, e2};
    const VarId alpha = tape.softmax(tape.pack(scores));
    const VarId m1 = tape.matmul(vwa, tape.hadamard(h1, h2));
    const VarId m2 = tape.matmul(vwa, tape.hadamard(h2, h1));
    const std::vector<VarId> messages{m1, m2};
    const VarId affinity = tape.weighted_sum(messages, alpha);
    const std::vector<VarId> pool_set{h1, h2, affinity};
    const VarId pooled = tape.max_pool(pool_set);
    const VarId fused = tape.tanh(tape.add(pooled, tape.scale(affinity, 0.5)));
    const VarId score = tape.dot(vq, fused);
    const std::vector<VarId> logit_parts{score, tape.sum(fused)};
    const VarId logits = tape.pack(logit_parts);
    const VarId loss = tape.cross_entropy(logits, 1);
    if (loss_out) *loss_out = loss;
    return tape.value(loss)[0];
}

}  // namespace

TEST_CASE("backward on a linear map broadcasts the input") {
    // loss = sum(W x): dW[i][j] = x[j].
    Tape tape;
    const VarId w = tape.leaf(Tensor::matrix(2, 3, {0.5, -1, 2, 0, 1, 3}, true));
    const VarId x = tape.constant(Tensor::vec({4, 5, 6}));
    const GradientMap grads = tape.backward(tape.sum(tape.matmul(w, x)));
    CHECK(grads.at(w).data() == std::vector<double>{4, 5, 6, 4, 5, 6});
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    const VarId v = tape.leaf(Tensor::vec({1, 2}, true));
    CHECK_THROWS_AS(tape.backward(v), DimensionError);
}

TEST_CASE("unused parameter gets a zero gradient") {
    Tape tape;
    const VarId used = tape.leaf(Tensor::vec({2, 3}, true));
    const VarId unused = tape.leaf(Tensor::vec({7, 8}, true));
    const GradientMap grads = tape.backward(tape.sum(used));
    CHECK(grads.contains(unused));
    CHECK(grads.at(unused).data() == std::vector<double>{0, 0});
}

TEST_CASE("composite gradients match central differences") {
    Rng rng(101);
    Tensor w = random_tensor({5, 5}, rng);
    Tensor wa = random_tensor({5, 5}, rng);
    Tensor attn = random_tensor({1, 10}, rng);
    Tensor q = random_tensor({5}, rng);
    Tensor x1 = random_tensor({5}, rng);
    Tensor x2 = random_tensor({5}, rng);

    auto loss = [&]() {
        Tape t;
        return composite_loss(t, w, wa, attn, q, x1, x2, nullptr, nullptr);
    };
    const auto fd = oracle::finite_difference(loss, {&w, &wa, &attn, &q, &x1, &x2});

    Tape t;
    VarId loss_id = 0;
    std::vector<VarId> leaves;
    composite_loss(t, w, wa, attn, q, x1, x2, &loss_id, &leaves);
    const GradientMap grads = t.backward(loss_id);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        CHECK(oracle::max_rel_error(grads.at(leaves[i]).data(), fd[i]) < 1e-4);
    }
}

TEST_CASE("same tape and inputs give bitwise identical outputs and gradients") {
    Rng rng(55);
    Tensor w = random_tensor({5, 5}, rng);
    Tensor wa = random_tensor({5, 5}, rng);
    Tensor attn = random_tensor({1, 10}, rng);
    Tensor q = random_tensor({5}, rng);
    Tensor x1 = random_tensor({5}, rng);
    Tensor x2 = random_tensor({5}, rng);

    auto run = [&](std::vector<std::vector<double>>* grad_out) {
        Tape t;
        VarId loss_id = 0;
        std::vector<VarId> leaves;
        const double value = composite_loss(t, w, wa, attn, q, x1, x2, &loss_id, &leaves);
        const GradientMap grads = t.backward(loss_id);
        for (const VarId leaf : leaves) grad_out->push_back(grads.at(leaf).data());
        return value;
    };
    std::vector<std::vector<double>> g1, g2;
    const double v1 = run(&g1);
    const double v2 = run(&g2);
    CHECK(v1 == v2);
    CHECK(g1 == g2);
}

TEST_CASE("adam leaves parameters unchanged on zero gradient") {
    Adam adam;
    std::vector<Tensor> params{Tensor::vec({1.5, -2.0})};
    const std::vector<Tensor> grads{Tensor::vec({0.0, 0.0})};
    adam.step(params, grads);
    CHECK(params[0].data() == std::vector<double>{1.5, -2.0});
}

TEST_CASE("adam first step moves by about lr") {
    Adam adam(AdamConfig{.lr = 0.005});
    std::vector<Tensor> params{Tensor::scalar(1.0)};
    const std::vector<Tensor> grads{Tensor::scalar(0.37)};
    adam.step(params, grads);
    CHECK(params[0][0] == doctest::Approx(1.0 - 0.005).epsilon(1e-4));
}

TEST_CASE("adam rejects mismatched shapes") {
    Adam adam;
    std::vector<Tensor> params{Tensor::vec({1.0, 2.0})};
    const std::vector<Tensor> grads{Tensor::vec({1.0})};
    CHECK_THROWS_AS(adam.step(params, grads), DimensionError);
}

TEST_CASE("adam drives a quadratic bowl to zero") {
    // f(w) = w^2, grad = 2w.
    Adam adam(AdamConfig{.lr = 0.005});
    std::vector<Tensor> params{Tensor::scalar(1.0)};
    for (int i = 0; i < 5000; ++i) {
        const std::vector<Tensor> grads{Tensor::scalar(2.0 * params[0][0])};
        adam.step(params, grads);
    }
    CHECK(std::abs(params[0][0]) < 1e-3);
}
