#include <doctest.h>

#include <cmath>

#include "recigraph/adversarial.hpp"
#include "recigraph/synthetic.hpp"

using namespace recigraph;

namespace {

ModelDims tiny_dims() {
    ModelDims d;
    d.hidden = 2;
    d.classes = 2;
    for (std::size_t m = 0; m < kModalityCount; ++m) d.input_dims[m] = 2;
    return d;
}

HetGraph pair_graph() {
    HetGraph g;
    const NodeIndex r0 = g.add_node("r0", NodeType::Recipe);
    const NodeIndex u0 = g.add_node("u0", NodeType::User);
    g.add_edge(RelationType::UserRecipe, u0, r0);
    g.set_attribute(Modality::Image, r0, {0.3, -0.7});
    g.set_attribute(Modality::Text, r0, {1.1, 0.4});
    g.set_attribute(Modality::UserVec, u0, {-0.2, 0.9});
    g.set_label(Task::Cuisine, r0, "a");
    g.set_label(Task::Region, r0, "g0");
    g.finalize();
    return g;
}

SampleSet rur_samples(const HetGraph& g, const std::vector<NodeIndex>& seeds) {
    WalkConfig cfg;
    cfg.n_walks = 40;
    cfg.top_p = 10;
    cfg.seed = 2;
    return build_samples(g, seeds, MetaPath::parse("R-U-R"), cfg);
}

struct Toy {
    HetGraph g;
    SampleSet samples;
    std::vector<NodeIndex> batch;
    ModelParams params;
    AblationSwitches switches;  // aggregation off: the pipeline is linear in eps
};

Toy convex_toy(std::uint64_t seed = 19) {
    Toy toy{pair_graph(), {}, {}, ModelParams::init(tiny_dims(), seed), {}};
    toy.batch = {toy.g.index_of("r0")};
    toy.samples = rur_samples(toy.g, toy.batch);
    toy.switches = AblationSwitches{false, false, false, false, false};
    return toy;
}

double clean_loss(const Toy& toy) {
    Tape tape;
    const ParamBinding pb(tape, toy.params, false);
    ForwardOptions opt;
    opt.switches = toy.switches;
    const BatchForward fwd = model_forward(tape, pb, toy.g, toy.samples, toy.batch, opt);
    return tape.value(batch_cross_entropy(tape, fwd, toy.g.labels(Task::Cuisine)))[0];
}

}  // namespace

TEST_CASE("attack config validation") {
    AttackConfig bad;
    bad.bound = 0.0;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = AttackConfig{};
    bad.step = -1.0;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = AttackConfig{};
    bad.iters = 0;
    CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("zero classifier gradient leaves eps at zero") {
    Toy toy = convex_toy();
    Tensor& head = toy.params.tensor(toy.params.head_w_slot());
    for (std::size_t i = 0; i < head.size(); ++i) head[i] = 0.0;

    const Perturbation eps = pgd_attack(toy.params, toy.g, toy.samples, toy.batch,
                                        toy.g.labels(Task::Cuisine), {}, toy.switches);
    CHECK(eps.max_abs() == 0.0);
}

TEST_CASE("consistent-sign coordinates saturate at exactly the bound") {
    const Toy toy = convex_toy();
    AttackTrace trace;
    // 5 steps of 0.005 overshoot the 0.02 ball, so the clip must land
    // saturated coordinates exactly on +/- 0.02.
    const AttackConfig cfg{};
    const Perturbation eps = pgd_attack(toy.params, toy.g, toy.samples, toy.batch,
                                        toy.g.labels(Task::Cuisine), cfg, toy.switches, &trace);

    std::size_t consistent = 0;
    for (const auto& [key, signs] : trace.sign_consistency) {
        const Tensor* e = eps.find(key.first, key.second);
        REQUIRE(e != nullptr);
        for (std::size_t i = 0; i < signs.size(); ++i) {
            if (signs[i] == 0) continue;
            ++consistent;
            CHECK((*e)[i] == (signs[i] > 0 ? cfg.bound : -cfg.bound));
        }
    }
    CHECK(consistent > 0);
}

TEST_CASE("attack loss is non-decreasing on the convex toy") {
    const Toy toy = convex_toy();
    AttackTrace trace;
    pgd_attack(toy.params, toy.g, toy.samples, toy.batch, toy.g.labels(Task::Cuisine), {},
               toy.switches, &trace);
    REQUIRE(trace.loss.size() == 6);  // 5 pre-update values + final
    for (std::size_t i = 1; i < trace.loss.size(); ++i) {
        CHECK(trace.loss[i] >= trace.loss[i - 1] - 1e-12);
    }
    CHECK(trace.loss.back() >= clean_loss(toy));
    for (const double mx : trace.max_abs) {
        CHECK(mx <= 0.02);
    }
}

TEST_CASE("zero perturbation reproduces the supervised loss exactly") {
    SyntheticConfig cfg;
    cfg.users = 5;
    cfg.recipes = 8;
    cfg.ingredients = 6;
    cfg.classes = 2;
    cfg.image_dim = cfg.text_dim = 3;
    cfg.nutrient_dim = cfg.user_dim = 2;
    const HetGraph g = generate_synthetic(cfg);
    std::vector<NodeIndex> batch;
    for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
        if (g.type(v) == NodeType::Recipe) batch.push_back(v);
    }
    const SampleSet samples = rur_samples(g, batch);
    ModelDims dims;
    dims.hidden = 3;
    dims.classes = 2;
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        dims.input_dims[m] = g.attribute_dim(static_cast<Modality>(m));
    }
    const ModelParams params = ModelParams::init(dims, 23);
    const LabelSet& labels = g.labels(Task::Cuisine);

    Tape tape;
    const ParamBinding pb(tape, params, false);
    const BatchForward fwd = model_forward(tape, pb, g, samples, batch, {});
    const double l_sup = tape.value(batch_cross_entropy(tape, fwd, labels))[0];

    const Perturbation zero = Perturbation::zeros_for(g, samples, batch, dims.hidden);
    CHECK(adversarial_loss_value(params, g, samples, batch, labels, zero, 0.02) == l_sup);
}

TEST_CASE("perturbations beyond the bound are rejected") {
    const Toy toy = convex_toy();
    Perturbation eps =
        Perturbation::zeros_for(toy.g, toy.samples, toy.batch, toy.params.dims().hidden);
    Tensor& t = eps.at(toy.batch[0], Modality::Image);
    t[0] = 0.03;
    CHECK_THROWS_AS(adversarial_loss_value(toy.params, toy.g, toy.samples, toy.batch,
                                           toy.g.labels(Task::Cuisine), eps, 0.02, toy.switches),
                    NumericError);
}

TEST_CASE("attack leaves model parameters bitwise unchanged") {
    const Toy toy = convex_toy();
    std::vector<std::vector<double>> before;
    for (std::size_t s = 0; s < toy.params.count(); ++s) {
        before.push_back(toy.params.tensor(s).data());
    }
    pgd_attack(toy.params, toy.g, toy.samples, toy.batch, toy.g.labels(Task::Cuisine), {},
               toy.switches);
    for (std::size_t s = 0; s < toy.params.count(); ++s) {
        CHECK(toy.params.tensor(s).data() == before[s]);
    }
}

TEST_CASE("attack is deterministic") {
    SyntheticConfig cfg;
    cfg.users = 5;
    cfg.recipes = 10;
    cfg.ingredients = 6;
    cfg.classes = 2;
    cfg.image_dim = cfg.text_dim = 3;
    cfg.nutrient_dim = cfg.user_dim = 2;
    const HetGraph g = generate_synthetic(cfg);
    std::vector<NodeIndex> batch;
    for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
        if (g.type(v) == NodeType::Recipe) batch.push_back(v);
    }
    const SampleSet samples = rur_samples(g, batch);
    ModelDims dims;
    dims.hidden = 3;
    dims.classes = 2;
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        dims.input_dims[m] = g.attribute_dim(static_cast<Modality>(m));
    }
    const ModelParams params = ModelParams::init(dims, 31);
    const LabelSet& labels = g.labels(Task::Cuisine);

    const Perturbation a = pgd_attack(params, g, samples, batch, labels, {});
    const Perturbation b = pgd_attack(params, g, samples, batch, labels, {});
    auto ita = a.begin();
    auto itb = b.begin();
    for (; ita != a.end(); ++ita, ++itb) {
        CHECK(ita->first == itb->first);
        CHECK(ita->second.data() == itb->second.data());
    }
    // The bound invariant holds on the full model as well.
    AttackTrace trace;
    pgd_attack(params, g, samples, batch, labels, {}, {}, &trace);
    for (const double mx : trace.max_abs) CHECK(mx <= 0.02);
    CHECK(a.max_abs() > 0.0);
}

TEST_CASE("random start stays inside the ball and is seeded") {
    const Toy toy = convex_toy();
    AttackConfig cfg;
    cfg.random_start = true;
    cfg.seed = 4;
    AttackTrace trace;
    const Perturbation a = pgd_attack(toy.params, toy.g, toy.samples, toy.batch,
                                      toy.g.labels(Task::Cuisine), cfg, toy.switches, &trace);
    for (const double mx : trace.max_abs) CHECK(mx <= cfg.bound);
    const Perturbation b = pgd_attack(toy.params, toy.g, toy.samples, toy.batch,
                                      toy.g.labels(Task::Cuisine), cfg, toy.switches);
    auto ita = a.begin();
    auto itb = b.begin();
    for (; ita != a.end(); ++ita, ++itb) CHECK(ita->second.data() == itb->second.data());

    cfg.seed = 5;
    const Perturbation c = pgd_attack(toy.params, toy.g, toy.samples, toy.batch,
                                      toy.g.labels(Task::Cuisine), cfg, toy.switches);
    bool differs = false;
    auto itc = c.begin();
    for (ita = a.begin(); ita != a.end(); ++ita, ++itc) {
        if (ita->second.data() != itc->second.data()) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("joint loss arithmetic") {
    CHECK(joint_loss(2.0, 3.0, 0.0) == 2.0);
    CHECK(joint_loss(2.0, 3.0, 0.1) == doctest::Approx(2.3).epsilon(1e-15));
    CHECK(joint_loss(1.7, 0.0, 1.0) == 1.7);
    CHECK_THROWS_AS(joint_loss(1.0, 1.0, -0.5), DataError);
}
