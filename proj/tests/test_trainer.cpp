#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "recigraph/cli.hpp"
#include "recigraph/graph_io.hpp"
#include "recigraph/rng.hpp"
#include "recigraph/synthetic.hpp"
#include "recigraph/trainer.hpp"
#include "test_helpers.hpp"

using namespace recigraph;
using testutil::TempDir;
using testutil::read_file;

namespace {

SyntheticConfig small_graph_cfg() {
    SyntheticConfig cfg;
    cfg.users = 10;
    cfg.recipes = 45;
    cfg.ingredients = 15;
    cfg.classes = 3;
    cfg.image_dim = cfg.text_dim = 4;
    cfg.nutrient_dim = 3;
    cfg.user_dim = 2;
    cfg.seed = 7;
    return cfg;
}

TrainConfig fast_train_cfg() {
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.epochs = 3;
    cfg.n_walks = 20;
    return cfg;
}

}  // namespace

TEST_CASE("metrics: hand-computed confusion case") {
    // true [0,0,1,1], pred [0,1,1,1]: accuracy 75, class-1 F1 80 (P=2/3, R=1).
    const MetricsReport r = compute_metrics({0, 0, 1, 1}, {0, 1, 1, 1}, {"a", "b"});
    CHECK(r.accuracy == doctest::Approx(75.0));
    CHECK(r.micro_f1 == doctest::Approx(75.0));
    CHECK(r.per_class[1].f1 == doctest::Approx(80.0));
    CHECK(r.per_class[1].accuracy == doctest::Approx(100.0));
    CHECK(r.per_class[0].f1 == doctest::Approx(2.0 * 0.5 / 1.5 * 100.0));
}

TEST_CASE("metrics: perfect predictions score 100 everywhere") {
    const MetricsReport r = compute_metrics({0, 1, 2, 1}, {0, 1, 2, 1}, {"a", "b", "c"});
    CHECK(r.accuracy == 100.0);
    CHECK(r.micro_f1 == 100.0);
    for (const ClassMetrics& m : r.per_class) {
        CHECK(m.f1 == 100.0);
        CHECK(m.accuracy == 100.0);
    }
}

TEST_CASE("metrics: constant predictor on balanced binary data scores 50") {
    const MetricsReport r = compute_metrics({0, 1, 0, 1}, {0, 0, 0, 0}, {"a", "b"});
    CHECK(r.accuracy == doctest::Approx(50.0));
    CHECK(r.micro_f1 == doctest::Approx(50.0));
}

TEST_CASE("metrics: micro-F1 equals accuracy on random single-label data") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t classes = 2 + rng.below(5);
        const std::size_t n = 5 + rng.below(60);
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<int>(rng.below(classes));
            p[i] = static_cast<int>(rng.below(classes));
        }
        std::vector<std::string> names;
        for (std::size_t c = 0; c < classes; ++c) names.push_back("c" + std::to_string(c));
        const MetricsReport r = compute_metrics(t, p, names);
        CHECK(r.micro_f1 == doctest::Approx(r.accuracy).epsilon(1e-12));
    }
}

TEST_CASE("config defaults follow the reference protocol") {
    const TrainConfig cfg;
    CHECK(cfg.lr == 0.005);
    CHECK(cfg.hidden == 128);
    CHECK(cfg.batch == 4096);
    CHECK(cfg.epochs == 100);
    CHECK(cfg.lambda == 0.1);
    CHECK(cfg.metapath == "recipe-user-recipe");
    CHECK(cfg.top_p == 10);
    CHECK(cfg.attack.bound == 0.02);
    CHECK(cfg.attack.step == 0.005);
    CHECK(cfg.attack.iters == 5);
    CHECK(cfg.split == std::array<double, 3>{0.70, 0.15, 0.15});
    CHECK(cfg.n_walks == 100);
}

TEST_CASE("config file round trip and errors") {
    TempDir dir("cfg");
    TrainConfig cfg = fast_train_cfg();
    cfg.task = Task::Region;
    cfg.lambda = 0.25;
    cfg.switches.cross_modal = false;
    cfg.pool = PoolKind::Sum;
    testutil::write_file(dir.path() / "run.cfg", cfg.serialize());
    const TrainConfig loaded = load_config(dir.path() / "run.cfg");
    CHECK(loaded.to_map() == cfg.to_map());

    testutil::write_file(dir.path() / "bad.cfg", "not_a_key = 1\n");
    CHECK_THROWS_WITH_AS(load_config(dir.path() / "bad.cfg"), doctest::Contains("not_a_key"),
                         DataError);
    testutil::write_file(dir.path() / "bad2.cfg", "lr = fast\n");
    CHECK_THROWS_AS(load_config(dir.path() / "bad2.cfg"), DataError);
    testutil::write_file(dir.path() / "bad3.cfg", "lr 0.1\n");
    CHECK_THROWS_AS(load_config(dir.path() / "bad3.cfg"), DataError);
}

TEST_CASE("seed isolation between sampler, split and graph") {
    const HetGraph g = generate_synthetic(small_graph_cfg());
    const LabelSet& labels = g.labels(Task::Cuisine);

    TrainConfig a = fast_train_cfg();
    TrainConfig b = a;
    b.seed_sampler = a.seed_sampler + 1;
    // Different sampler seed: different samples, identical split.
    const SampleSet sa = prepare_samples(g, a);
    const SampleSet sb = prepare_samples(g, b);
    bool any_sample_differs = false;
    for (const auto& [v, s] : sa.by_node) {
        if (sb.at(v).buckets != s.buckets) any_sample_differs = true;
    }
    CHECK(any_sample_differs);
    CHECK(make_split(labels, a.split, a.seed_split).of ==
          make_split(labels, b.split, b.seed_split).of);

    // Different split seed: different split, identical graph bytes.
    TrainConfig c = a;
    c.seed_split = a.seed_split + 1;
    CHECK(make_split(labels, a.split, a.seed_split).of !=
          make_split(labels, c.split, c.seed_split).of);
    CHECK(canonical_serialization(generate_synthetic(small_graph_cfg())) ==
          canonical_serialization(g));
}

TEST_CASE("training is deterministic and lambda=0 equals adversarial off") {
    const HetGraph g = generate_synthetic(small_graph_cfg());

    TrainConfig cfg = fast_train_cfg();
    const TrainResult r1 = train(g, cfg);
    const TrainResult r2 = train(g, cfg);
    CHECK(train_result_to_json(r1, cfg) == train_result_to_json(r2, cfg));
    CHECK(r1.curve == r2.curve);

    TrainConfig zero_lambda = cfg;
    zero_lambda.lambda = 0.0;
    TrainConfig al_off = cfg;
    al_off.switches.adversarial = false;
    const TrainResult rz = train(g, zero_lambda);
    const TrainResult ro = train(g, al_off);
    CHECK(rz.curve == ro.curve);
    CHECK(rz.train_accuracy == ro.train_accuracy);
    CHECK(rz.best_epoch == ro.best_epoch);
    CHECK(rz.val.micro_f1 == ro.val.micro_f1);
    CHECK(rz.test.micro_f1 == ro.test.micro_f1);

    // The adversarial term changes training when active.
    CHECK(r1.curve != rz.curve);
}

TEST_CASE("loss curve entries are finite") {
    const HetGraph g = generate_synthetic(small_graph_cfg());
    const TrainResult r = train(g, fast_train_cfg());
    REQUIRE(r.curve.size() == 3);
    for (const auto& [sup, adv, total] : r.curve) {
        CHECK(std::isfinite(sup));
        CHECK(std::isfinite(adv));
        CHECK(std::isfinite(total));
        CHECK(total == doctest::Approx(sup + 0.1 * adv).epsilon(1e-12));
    }
}

TEST_CASE("checkpoint round trip reproduces metrics bitwise") {
    const HetGraph g = generate_synthetic(small_graph_cfg());
    TrainConfig cfg = fast_train_cfg();
    const TrainResult r = train(g, cfg);

    TempDir dir("ckpt");
    const auto path = dir.path() / "model.txt";
    save_checkpoint(path, r.params, cfg, r.class_names);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.class_names == r.class_names);
    CHECK(loaded.config.to_map() == cfg.to_map());
    for (std::size_t s = 0; s < r.params.count(); ++s) {
        CHECK(loaded.params.tensor(s).data() == r.params.tensor(s).data());
    }

    const MetricsReport direct = evaluate_checkpoint({r.params, cfg, r.class_names}, g, Split::Test);
    const MetricsReport via_file = evaluate_checkpoint(loaded, g, Split::Test);
    CHECK(direct.micro_f1 == via_file.micro_f1);
    CHECK(direct.accuracy == via_file.accuracy);
    CHECK(direct.micro_f1 == r.test.micro_f1);

    // Corrupting the hidden size must be rejected against this graph:
    // the params no longer deserialize into the declared layout.
    std::string text = read_file(path);
    const std::size_t pos = text.find("hidden = 8");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 10, "hidden = 9");
    testutil::write_file(dir.path() / "bad.txt", text);
    CHECK_THROWS_AS(load_checkpoint(dir.path() / "bad.txt"), DataError);
}

TEST_CASE("evaluating against a mismatched graph is rejected") {
    const HetGraph g = generate_synthetic(small_graph_cfg());
    TrainConfig cfg = fast_train_cfg();
    const TrainResult r = train(g, cfg);

    SyntheticConfig other = small_graph_cfg();
    other.image_dim = 6;
    const HetGraph g2 = generate_synthetic(other);
    CHECK_THROWS_WITH_AS(evaluate_checkpoint({r.params, cfg, r.class_names}, g2, Split::Test),
                         doctest::Contains("does not match"), DataError);
}

TEST_CASE("attributes are byte-identical before and after training") {
    const HetGraph g = generate_synthetic(small_graph_cfg());
    std::string before;
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        before += canonical_attrs(g, static_cast<Modality>(m));
    }
    train(g, fast_train_cfg());
    std::string after;
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        after += canonical_attrs(g, static_cast<Modality>(m));
    }
    CHECK(before == after);
}

TEST_CASE("train split needs three nodes per class") {
    SyntheticConfig tiny = small_graph_cfg();
    tiny.recipes = 7;  // about 1-2 train nodes per class
    const HetGraph g = generate_synthetic(tiny);
    CHECK_THROWS_WITH_AS(train(g, fast_train_cfg()), doctest::Contains("at least 3"), DataError);
}

TEST_CASE("isolated labeled nodes are dropped with a warning") {
    // One labeled recipe has no edges at all.
    HetGraph g;
    std::vector<NodeIndex> recipes;
    for (int k = 0; k < 12; ++k) {
        recipes.push_back(g.add_node("r" + std::string(1, char('a' + k)), NodeType::Recipe));
    }
    const NodeIndex u0 = g.add_node("u0", NodeType::User);
    Rng rng(5);
    for (std::size_t k = 0; k + 1 < recipes.size(); ++k) {  // last recipe stays isolated
        g.add_edge(RelationType::UserRecipe, u0, recipes[k]);
    }
    for (std::size_t k = 0; k < recipes.size(); ++k) {
        g.set_attribute(Modality::Image, recipes[k], {rng.normal(), rng.normal()});
        g.set_attribute(Modality::Text, recipes[k], {rng.normal(), rng.normal()});
        g.set_label(Task::Cuisine, recipes[k], k % 2 ? "x" : "y");
    }
    g.set_attribute(Modality::UserVec, u0, {0.5});
    g.finalize();

    TrainConfig cfg = fast_train_cfg();
    cfg.epochs = 2;
    std::ostringstream log;
    const TrainResult r = train(g, cfg, &log);
    CHECK(r.dropped + r.val.dropped + r.test.dropped >= 1);
    const bool warned = log.str().find("dropped isolated") != std::string::npos ||
                        r.val.dropped + r.test.dropped > 0;
    CHECK(warned);
}

TEST_CASE("exploding loss aborts with epoch and batch diagnostics") {
    const HetGraph g = generate_synthetic(small_graph_cfg());
    TrainConfig cfg = fast_train_cfg();
    cfg.lr = 1e300;  // one step overflows the parameters
    cfg.epochs = 3;
    CHECK_THROWS_WITH_AS(train(g, cfg), doctest::Contains("epoch"), NumericError);
}

TEST_CASE("export embeddings writes the requested nodes deterministically") {
    const HetGraph g = generate_synthetic(small_graph_cfg());
    TrainConfig cfg = fast_train_cfg();
    cfg.epochs = 2;
    const TrainResult r = train(g, cfg);
    const Checkpoint ckpt{r.params, cfg, r.class_names};

    TempDir dir("export");
    const std::vector<std::string> ids{"r00", "r07", "r23"};
    export_embeddings(ckpt, g, ids, dir.path() / "emb.tsv");
    const std::string text = read_file(dir.path() / "emb.tsv");
    std::stringstream ss(text);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(ss, line)) lines.push_back(line);
    REQUIRE(lines.size() == 5);  // header + config provenance + 3 nodes
    CHECK(lines[0] == "#id\tlabel\tembedding");
    CHECK(lines[1].rfind("# config", 0) == 0);
    CHECK(lines[2].rfind("r00\t", 0) == 0);
    // hidden-dim floats, comma separated
    const std::string values = lines[2].substr(lines[2].rfind('\t') + 1);
    CHECK(std::count(values.begin(), values.end(), ',') == 7);

    export_embeddings(ckpt, g, ids, dir.path() / "emb2.tsv");
    CHECK(read_file(dir.path() / "emb2.tsv") == text);

    export_embeddings(ckpt, g, {}, dir.path() / "empty.tsv");
    const std::string empty = read_file(dir.path() / "empty.tsv");
    CHECK(empty.rfind("#id\tlabel\tembedding\n# config", 0) == 0);
    CHECK(std::count(empty.begin(), empty.end(), '\n') == 2);  // header lines only

    CHECK_THROWS_WITH_AS(export_embeddings(ckpt, g, {"r999"}, dir.path() / "x.tsv"),
                         doctest::Contains("r999"), DataError);
}

TEST_CASE("sample cache is honored by training") {
    const HetGraph g = generate_synthetic(small_graph_cfg());
    TempDir dir("cache");
    TrainConfig cfg = fast_train_cfg();
    cfg.epochs = 2;
    cfg.sample_cache = (dir.path() / "samples.tsv").string();
    const TrainResult r1 = train(g, cfg);
    CHECK(std::filesystem::exists(cfg.sample_cache));
    const TrainResult r2 = train(g, cfg);  // second run loads the cache
    CHECK(r1.curve == r2.curve);
}

TEST_CASE("cli smoke: synth, train, eval, export, ablate") {
    TempDir dir("cli");
    const std::string data = (dir.path() / "g").string();
    const std::string ckpt = (dir.path() / "ck.txt").string();
    const std::string metrics = (dir.path() / "m.json").string();

    CHECK(run_cli({"synth", "--out", data, "--recipes", "40", "--users", "8", "--ingredients",
                   "12", "--classes", "2", "--seed", "5"}) == 0);
    CHECK(std::filesystem::exists(data + "/nodes.tsv"));

    CHECK(run_cli({"train", "--data", data, "--task", "cuisine", "--epochs", "2", "--hidden", "8",
                   "--walks", "20", "--quiet", "--checkpoint", ckpt, "--metrics", metrics}) == 0);
    CHECK(std::filesystem::exists(ckpt));
    CHECK(read_file(metrics).find("\"micro_f1\"") != std::string::npos);

    CHECK(run_cli({"eval", "--data", data, "--checkpoint", ckpt, "--which", "val"}) == 0);

    const std::string emb = (dir.path() / "emb.tsv").string();
    CHECK(run_cli({"export", "--data", data, "--checkpoint", ckpt, "--out", emb}) == 0);
    CHECK(std::filesystem::exists(emb));

    CHECK(run_cli({"ablate", "--data", data, "--epochs", "1", "--hidden", "8", "--walks", "10",
                   "--quiet", "--metrics", (dir.path() / "ab.json").string()}) == 0);
    const std::string ab = read_file((dir.path() / "ab.json").string());
    for (const char* name : {"-NS", "-NA", "-CA", "-RA", "-AL", "full"}) {
        CHECK(ab.find(name) != std::string::npos);
    }

    // Config file plus command-line override.
    const std::string cfg_path = (dir.path() / "run.cfg").string();
    testutil::write_file(cfg_path, "epochs = 2\nhidden = 8\nn_walks = 10\nlambda = 0\n");
    CHECK(run_cli({"train", "--data", data, "--config", cfg_path, "--epochs", "1", "--quiet",
                   "--checkpoint", (dir.path() / "ck2.txt").string(), "--metrics",
                   (dir.path() / "m2.json").string()}) == 0);
    const std::string m2 = read_file((dir.path() / "m2.json").string());
    CHECK(m2.find("\"epochs\": \"1\"") != std::string::npos);
    CHECK(m2.find("\"hidden\": \"8\"") != std::string::npos);

    // Exit codes: usage, data error, bad value, runtime error.
    CHECK(run_cli({"train", "--no-such-flag"}) == 1);
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"train", "--data", (dir.path() / "missing").string(), "--quiet"}) == 2);
    CHECK(run_cli({"train", "--data", data, "--lr", "banana"}) == 2);
    CHECK(run_cli({"train", "--data", data, "--lr", "1e300", "--epochs", "2", "--hidden", "8",
                   "--walks", "10", "--quiet"}) == 3);
}
