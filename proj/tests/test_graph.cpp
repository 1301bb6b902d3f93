#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "recigraph/graph.hpp"
#include "recigraph/graph_io.hpp"
#include "recigraph/synthetic.hpp"
#include "test_helpers.hpp"

using namespace recigraph;
using testutil::TempDir;
using testutil::read_file;
using testutil::write_file;

namespace {

void write_minimal_graph(const std::filesystem::path& dir) {
    write_file(dir / "nodes.tsv",
               "# three nodes\n"
               "u1\tuser\t-\t-\n"
               "r1\trecipe\titalian\tg0\n"
               "i1\tingredient\t-\t-\n");
    write_file(dir / "edges.tsv",
               "user-recipe\tu1\tr1\n"
               "recipe-ingredient\tr1\ti1\n");
    write_file(dir / "attrs.image.tsv", "r1\t0.5,0.25\n");
    write_file(dir / "attrs.text.tsv", "r1\t1,2,3\n");
    write_file(dir / "attrs.nutrient.tsv", "i1\t4,5\n");
    write_file(dir / "attrs.uservec.tsv", "u1\t0.125\n");
}

}  // namespace

TEST_CASE("minimal three-node graph loads") {
    TempDir dir("minimal");
    write_minimal_graph(dir.path());
    const HetGraph g = load_graph(dir.path());
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges(RelationType::UserRecipe) == 1);
    CHECK(g.num_edges(RelationType::RecipeIngredient) == 1);
    const NodeIndex r1 = g.index_of("r1");
    const std::size_t degree = g.neighbors(r1, RelationType::UserRecipe).size() +
                               g.neighbors(r1, RelationType::RecipeIngredient).size();
    CHECK(degree == 2);
    CHECK(g.labels(Task::Cuisine).num_classes() == 1);
    CHECK(g.labels(Task::Cuisine).label_of(r1) == 0);
}

TEST_CASE("edge with unknown id names the id and line") {
    TempDir dir("unknown_id");
    write_minimal_graph(dir.path());
    write_file(dir.path() / "edges.tsv",
               "user-recipe\tu1\tr1\n"
               "recipe-ingredient\tr999\ti1\n");
    CHECK_THROWS_WITH_AS(load_graph(dir.path()), doctest::Contains("r999"), DataError);
    CHECK_THROWS_WITH_AS(load_graph(dir.path()), doctest::Contains("edges.tsv:2"), DataError);
}

TEST_CASE("attribute dimension inconsistency is rejected") {
    TempDir dir("attr_dim");
    write_minimal_graph(dir.path());
    write_file(dir.path() / "nodes.tsv",
               "u1\tuser\t-\t-\n"
               "r1\trecipe\titalian\tg0\n"
               "i1\tingredient\t-\t-\n"
               "i2\tingredient\t-\t-\n");
    // First row declares 3 nutrient dims, second supplies 2.
    write_file(dir.path() / "attrs.nutrient.tsv",
               "i1\t4,5,6\n"
               "i2\t4,5\n");
    CHECK_THROWS_WITH_AS(load_graph(dir.path()), doctest::Contains("expected 3"), DataError);
}

TEST_CASE("type-mismatched edge is rejected") {
    TempDir dir("bad_edge");
    write_minimal_graph(dir.path());
    write_file(dir.path() / "edges.tsv", "user-recipe\tu1\ti1\n");
    CHECK_THROWS_WITH_AS(load_graph(dir.path()), doctest::Contains("user-recipe"), DataError);
}

TEST_CASE("malformed line is reported with its number") {
    TempDir dir("malformed");
    write_minimal_graph(dir.path());
    write_file(dir.path() / "edges.tsv", "# comment\nuser-recipe\tu1\n");
    CHECK_THROWS_WITH_AS(load_graph(dir.path()), doctest::Contains("edges.tsv:2"), DataError);
}

TEST_CASE("neighbors are ascending, deduplicated, empty when isolated") {
    TempDir dir("neighbors");
    write_file(dir.path() / "nodes.tsv",
               "i1\tingredient\n"
               "i2\tingredient\n"
               "r1\trecipe\tc0\t-\n"
               "r2\trecipe\tc0\t-\n");
    // i2 listed before i1, and the r1-i2 edge duplicated.
    write_file(dir.path() / "edges.tsv",
               "recipe-ingredient\tr1\ti2\n"
               "recipe-ingredient\tr1\ti1\n"
               "recipe-ingredient\tr1\ti2\n");
    write_file(dir.path() / "attrs.image.tsv", "r1\t1\nr2\t2\n");
    write_file(dir.path() / "attrs.text.tsv", "r1\t1\nr2\t2\n");
    write_file(dir.path() / "attrs.nutrient.tsv", "i1\t1\ni2\t2\n");
    const HetGraph g = load_graph(dir.path());
    const NodeIndex r1 = g.index_of("r1");
    const std::span<const NodeIndex> ns = g.neighbors(r1, RelationType::RecipeIngredient);
    REQUIRE(ns.size() == 2);
    CHECK(g.id(ns[0]) == "i1");
    CHECK(g.id(ns[1]) == "i2");
    CHECK(g.num_edges(RelationType::RecipeIngredient) == 2);

    const NodeIndex r2 = g.index_of("r2");
    CHECK(g.neighbors(r2, RelationType::RecipeIngredient).empty());
    CHECK(g.neighbors(r2, RelationType::UserRecipe).empty());

    CHECK_THROWS_AS(g.index_of("r404"), DataError);
}

TEST_CASE("attribute access respects node type modalities") {
    TempDir dir("attr_access");
    write_minimal_graph(dir.path());
    const HetGraph g = load_graph(dir.path());
    CHECK(g.attribute(g.index_of("r1"), Modality::Image).size() == 2);
    CHECK(g.attribute(g.index_of("i1"), Modality::Nutrient).size() == 2);
    CHECK_THROWS_WITH_AS(g.attribute(g.index_of("u1"), Modality::Image),
                         doctest::Contains("absent"), DataError);
}

TEST_CASE("loader accepts production-scale attribute dims") {
    // 512-dim image/text embeddings and 46-dim nutrient vectors.
    TempDir dir("big_dims");
    write_minimal_graph(dir.path());
    auto row = [](std::size_t n) {
        std::string out;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) out += ',';
            out += std::to_string(0.01 * static_cast<double>(i));
        }
        return out;
    };
    write_file(dir.path() / "attrs.image.tsv", "r1\t" + row(512) + "\n");
    write_file(dir.path() / "attrs.text.tsv", "r1\t" + row(512) + "\n");
    write_file(dir.path() / "attrs.nutrient.tsv", "i1\t" + row(46) + "\n");
    const HetGraph g = load_graph(dir.path());
    CHECK(g.attribute(g.index_of("r1"), Modality::Image).size() == 512);
    CHECK(g.attribute(g.index_of("r1"), Modality::Text).size() == 512);
    CHECK(g.attribute(g.index_of("i1"), Modality::Nutrient).size() == 46);
}

TEST_CASE("synthetic generation is deterministic in the seed") {
    SyntheticConfig cfg;
    cfg.users = 10;
    cfg.recipes = 50;
    cfg.ingredients = 20;
    cfg.classes = 3;
    cfg.seed = 7;
    const HetGraph a = generate_synthetic(cfg);
    const HetGraph b = generate_synthetic(cfg);
    CHECK(canonical_serialization(a) == canonical_serialization(b));

    cfg.seed = 8;
    const HetGraph c = generate_synthetic(cfg);
    CHECK(canonical_serialization(a) != canonical_serialization(c));
}

TEST_CASE("zero noise with full signal collapses same-class attributes") {
    SyntheticConfig cfg;
    cfg.users = 5;
    cfg.recipes = 12;
    cfg.ingredients = 6;
    cfg.classes = 3;
    cfg.noise = 0.0;
    cfg.attr_signal = 1.0;
    const HetGraph g = generate_synthetic(cfg);
    const LabelSet& labels = g.labels(Task::Cuisine);
    for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
        if (g.type(v) != NodeType::Recipe) continue;
        for (NodeIndex w = v + 1; w < g.num_nodes(); ++w) {
            if (g.type(w) != NodeType::Recipe) continue;
            if (labels.label_of(v) != labels.label_of(w)) continue;
            const auto av = g.attribute(v, Modality::Image);
            const auto aw = g.attribute(w, Modality::Image);
            CHECK(std::equal(av.begin(), av.end(), aw.begin()));
        }
    }
}

TEST_CASE("synthetic config validation") {
    SyntheticConfig cfg;
    cfg.recipes = 0;
    CHECK_THROWS_AS(generate_synthetic(cfg), DataError);
    cfg = SyntheticConfig{};
    cfg.attr_signal = 1.5;
    CHECK_THROWS_AS(generate_synthetic(cfg), DataError);
    cfg = SyntheticConfig{};
    cfg.noise = -0.1;
    CHECK_THROWS_AS(generate_synthetic(cfg), DataError);
}

TEST_CASE("planted signal is learnable by logistic regression") {
    SyntheticConfig cfg;
    cfg.recipes = 300;
    cfg.classes = 3;
    cfg.attr_signal = 1.0;
    cfg.seed = 7;
    const HetGraph g = generate_synthetic(cfg);
    const LabelSet& labels = g.labels(Task::Cuisine);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
        if (g.type(v) != NodeType::Recipe) continue;
        const auto img = g.attribute(v, Modality::Image);
        const auto txt = g.attribute(v, Modality::Text);
        std::vector<double> row(img.begin(), img.end());
        row.insert(row.end(), txt.begin(), txt.end());
        x.push_back(std::move(row));
        y.push_back(labels.label_of(v));
    }
    CHECK(oracle::logreg_train_accuracy(x, y, 3) >= 0.95);
}

TEST_CASE("edge type safety and symmetry hold for generated graphs") {
    SyntheticConfig cfg;
    cfg.users = 15;
    cfg.recipes = 60;
    cfg.ingredients = 25;
    const HetGraph g = generate_synthetic(cfg);
    for (const RelationType r : kStoredRelations) {
        const RelationSignature sig = signature(r);
        for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
            for (const NodeIndex w : g.neighbors(v, r)) {
                const bool ok = (g.type(v) == sig.a && g.type(w) == sig.b) ||
                                (g.type(v) == sig.b && g.type(w) == sig.a);
                CHECK(ok);
                const auto back = g.neighbors(w, r);
                CHECK(std::binary_search(back.begin(), back.end(), v));
            }
        }
    }
}

TEST_CASE("save/load round trip is byte identical") {
    SyntheticConfig cfg;
    cfg.users = 8;
    cfg.recipes = 30;
    cfg.ingredients = 12;
    const HetGraph g = generate_synthetic(cfg);
    TempDir dir1("rt1");
    TempDir dir2("rt2");
    save_graph(g, dir1.path());
    const HetGraph loaded = load_graph(dir1.path());
    save_graph(loaded, dir2.path());
    for (const char* name :
         {"nodes.tsv", "edges.tsv", "attrs.image.tsv", "attrs.text.tsv", "attrs.nutrient.tsv",
          "attrs.uservec.tsv"}) {
        CHECK(read_file(dir1.path() / name) == read_file(dir2.path() / name));
        CHECK(!read_file(dir1.path() / name).empty());
    }
}

TEST_CASE("make_split honors fractions with largest-remainder rounding") {
    LabelSet labels;
    labels.task = Task::Cuisine;
    labels.class_names = {"a", "b"};
    for (NodeIndex v = 0; v < 100; ++v) labels.by_node[v] = static_cast<int>(v % 2);
    const SplitAssignment s = make_split(labels, {0.70, 0.15, 0.15}, 11);
    CHECK(s.sizes == std::array<std::size_t, 3>{70, 15, 15});

    LabelSet ten;
    ten.task = Task::Cuisine;
    ten.class_names = {"a"};
    for (NodeIndex v = 0; v < 10; ++v) ten.by_node[v] = 0;
    const SplitAssignment s10 = make_split(ten, {0.70, 0.15, 0.15}, 11);
    // 7.0 / 1.5 / 1.5: the remainder tie goes to val before test.
    CHECK(s10.sizes == std::array<std::size_t, 3>{7, 2, 1});
}

TEST_CASE("make_split is deterministic and partitions the labeled nodes") {
    LabelSet labels;
    labels.task = Task::Cuisine;
    labels.class_names = {"a"};
    for (NodeIndex v = 0; v < 57; ++v) labels.by_node[v] = 0;
    const SplitAssignment a = make_split(labels, {0.70, 0.15, 0.15}, 5);
    const SplitAssignment b = make_split(labels, {0.70, 0.15, 0.15}, 5);
    CHECK(a.of == b.of);
    const SplitAssignment c = make_split(labels, {0.70, 0.15, 0.15}, 6);
    CHECK(a.of != c.of);
    CHECK(a.of.size() == 57);
    CHECK(a.sizes[0] + a.sizes[1] + a.sizes[2] == 57);
}

TEST_CASE("make_split validates input") {
    LabelSet labels;
    labels.task = Task::Cuisine;
    labels.class_names = {"a"};
    labels.by_node[0] = 0;
    labels.by_node[1] = 0;
    CHECK_THROWS_AS(make_split(labels, {0.70, 0.15, 0.15}, 1), DataError);
    labels.by_node[2] = 0;
    CHECK_THROWS_AS(make_split(labels, {0.70, 0.30, 0.15}, 1), DataError);
    CHECK_THROWS_AS(make_split(labels, {1.00, 0.00, 0.00}, 1), DataError);
}

TEST_CASE("labels attach only to recipes and index densely") {
    HetGraph g;
    const NodeIndex i1 = g.add_node("i1", NodeType::Ingredient);
    const NodeIndex r1 = g.add_node("r1", NodeType::Recipe);
    const NodeIndex r2 = g.add_node("r2", NodeType::Recipe);
    CHECK_THROWS_AS(g.set_label(Task::Cuisine, i1, "x"), DataError);
    g.set_label(Task::Cuisine, r1, "soup");
    g.set_label(Task::Cuisine, r2, "bread");
    g.set_attribute(Modality::Nutrient, i1, {1.0});
    g.set_attribute(Modality::Image, r1, {1.0});
    g.set_attribute(Modality::Text, r1, {1.0});
    g.set_attribute(Modality::Image, r2, {2.0});
    g.set_attribute(Modality::Text, r2, {2.0});
    g.finalize();
    const LabelSet& labels = g.labels(Task::Cuisine);
    CHECK(labels.num_classes() == 2);
    // Sorted names: bread=0, soup=1.
    CHECK(labels.label_of(r1) == 1);
    CHECK(labels.label_of(r2) == 0);
}

TEST_CASE("self edges and pseudo-relation edges are rejected") {
    HetGraph g;
    const NodeIndex r1 = g.add_node("r1", NodeType::Recipe);
    const NodeIndex r2 = g.add_node("r2", NodeType::Recipe);
    CHECK_THROWS_AS(g.add_edge(RelationType::RecipeRecipe, r1, r1), DataError);
    CHECK_THROWS_AS(g.add_edge(RelationType::MetaPathNeighbor, r1, r2), DataError);
}
