#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <map>
#include <optional>

#include "recigraph/graph_io.hpp"
#include "recigraph/synthetic.hpp"
#include "recigraph/trainer.hpp"

namespace py = pybind11;
using namespace recigraph;

namespace {

SyntheticConfig synth_config_from(const std::map<std::string, std::string>& kwargs) {
    SyntheticConfig cfg;
    auto as_size = [](const std::string& v) { return static_cast<std::size_t>(std::stoull(v)); };
    for (const auto& [key, value] : kwargs) {
        if (key == "users") cfg.users = as_size(value);
        else if (key == "recipes") cfg.recipes = as_size(value);
        else if (key == "ingredients") cfg.ingredients = as_size(value);
        else if (key == "classes") cfg.classes = as_size(value);
        else if (key == "regions") cfg.region_classes = as_size(value);
        else if (key == "image_dim") cfg.image_dim = as_size(value);
        else if (key == "text_dim") cfg.text_dim = as_size(value);
        else if (key == "nutrient_dim") cfg.nutrient_dim = as_size(value);
        else if (key == "user_dim") cfg.user_dim = as_size(value);
        else if (key == "user_edges") cfg.user_edges_per_recipe = as_size(value);
        else if (key == "recipe_edges") cfg.recipe_edges_per_recipe = as_size(value);
        else if (key == "ingredient_edges") cfg.ingredient_edges_per_recipe = as_size(value);
        else if (key == "ii_edges") cfg.ingredient_edges_per_ingredient = as_size(value);
        else if (key == "signal") cfg.attr_signal = cfg.edge_signal = std::stod(value);
        else if (key == "attr_signal") cfg.attr_signal = std::stod(value);
        else if (key == "edge_signal") cfg.edge_signal = std::stod(value);
        else if (key == "noise") cfg.noise = std::stod(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else throw DataError("synthesize: unknown option '" + key + "'");
    }
    return cfg;
}

TrainConfig train_config_from(const std::map<std::string, std::string>& overrides) {
    TrainConfig cfg;
    for (const auto& [key, value] : overrides) apply_override(cfg, key, value);
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "heterogeneous recipe-graph embedding engine";
    m.attr("__version__") = "0.1.0";

    py::register_exception<DataError>(m, "DataError");
    py::register_exception<DimensionError>(m, "DimensionError");
    py::register_exception<NumericError>(m, "NumericError");

    py::class_<HetGraph>(m, "Graph")
        .def("num_nodes", [](const HetGraph& g) { return g.num_nodes(); })
        .def("num_nodes",
             [](const HetGraph& g, const std::string& t) { return g.num_nodes(node_type_from(t)); })
        .def("num_edges",
             [](const HetGraph& g, const std::string& r) { return g.num_edges(relation_from(r)); })
        .def("ids",
             [](const HetGraph& g, const std::optional<std::string>& type) {
                 std::vector<std::string> out;
                 for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
                     if (!type || g.type(v) == node_type_from(*type)) out.push_back(g.id(v));
                 }
                 return out;
             },
             py::arg("type") = std::nullopt)
        .def("node_type",
             [](const HetGraph& g, const std::string& id) {
                 return std::string(to_string(g.type(g.index_of(id))));
             })
        .def("neighbors",
             [](const HetGraph& g, const std::string& id, const std::string& rel) {
                 std::vector<std::string> out;
                 for (const NodeIndex w : g.neighbors(g.index_of(id), relation_from(rel))) {
                     out.push_back(g.id(w));
                 }
                 return out;
             })
        .def("attribute",
             [](const HetGraph& g, const std::string& id, const std::string& modality) {
                 const auto row = g.attribute(g.index_of(id), modality_from(modality));
                 return std::vector<double>(row.begin(), row.end());
             })
        .def("labels",
             [](const HetGraph& g, const std::string& task) {
                 const LabelSet& labels = g.labels(task_from(task));
                 std::map<std::string, std::string> out;
                 for (const auto& [v, c] : labels.by_node) {
                     out[g.id(v)] = labels.class_names[static_cast<std::size_t>(c)];
                 }
                 return out;
             },
             py::arg("task") = "cuisine")
        .def("class_names",
             [](const HetGraph& g, const std::string& task) {
                 return g.labels(task_from(task)).class_names;
             },
             py::arg("task") = "cuisine")
        .def("content_hash", &HetGraph::content_hash)
        .def("__repr__", [](const HetGraph& g) {
            return "<recigraph.Graph nodes=" + std::to_string(g.num_nodes()) + ">";
        });

    m.def("synthesize",
          [](const std::map<std::string, std::string>& kwargs) {
              return generate_synthetic(synth_config_from(kwargs));
          },
          py::arg("options"));

    m.def("load_graph",
          [](const std::string& dir) { return load_graph(std::filesystem::path(dir)); });
    m.def("save_graph", [](const HetGraph& g, const std::string& dir) {
        save_graph(g, std::filesystem::path(dir));
    });

    m.def("sample_neighbors",
          [](const HetGraph& g, const std::string& id, const std::string& metapath,
             std::size_t walks, std::size_t p, std::uint64_t seed) {
              WalkConfig cfg;
              cfg.n_walks = walks;
              cfg.top_p = p;
              cfg.seed = seed;
              const NeighborSample s =
                  sample_neighbors(g, g.index_of(id), MetaPath::parse(metapath), cfg);
              py::dict out;
              for (std::size_t r = 0; r < kRelationCount; ++r) {
                  py::list ids;
                  for (const NodeIndex w : s.buckets[r]) ids.append(g.id(w));
                  out[std::string(to_string(static_cast<RelationType>(r))).c_str()] = ids;
              }
              return out;
          },
          py::arg("graph"), py::arg("id"), py::arg("metapath") = "recipe-user-recipe",
          py::arg("walks") = 100, py::arg("p") = 10, py::arg("seed") = 1);

    m.def("make_split",
          [](const HetGraph& g, const std::string& task, const std::array<double, 3>& fractions,
             std::uint64_t seed) {
              const SplitAssignment split = make_split(g.labels(task_from(task)), fractions, seed);
              std::map<std::string, std::string> out;
              for (const auto& [v, s] : split.of) out[g.id(v)] = std::string(to_string(s));
              return out;
          },
          py::arg("graph"), py::arg("task") = "cuisine",
          py::arg("fractions") = std::array<double, 3>{0.70, 0.15, 0.15}, py::arg("seed") = 2);

    m.def("train_json",
          [](const HetGraph& g, const std::map<std::string, std::string>& overrides,
             const std::string& checkpoint_path, bool verbose) {
              const TrainConfig cfg = train_config_from(overrides);
              const TrainResult result = train(g, cfg, verbose ? &std::cout : nullptr);
              if (!checkpoint_path.empty()) {
                  save_checkpoint(checkpoint_path, result.params, cfg, result.class_names);
              }
              return train_result_to_json(result, cfg);
          },
          py::arg("graph"), py::arg("overrides"), py::arg("checkpoint") = "",
          py::arg("verbose") = false);

    m.def("evaluate_json",
          [](const std::string& checkpoint_path, const HetGraph& g, const std::string& which) {
              const Checkpoint ckpt = load_checkpoint(checkpoint_path);
              Split split = Split::Test;
              if (which == "val") split = Split::Val;
              else if (which == "train") split = Split::Train;
              else if (which != "test") throw DataError("which must be train, val or test");
              return metrics_to_json(evaluate_checkpoint(ckpt, g, split), ckpt.config, which);
          },
          py::arg("checkpoint"), py::arg("graph"), py::arg("which") = "test");

    m.def("export_embeddings",
          [](const std::string& checkpoint_path, const HetGraph& g,
             const std::vector<std::string>& ids, const std::string& out) {
              export_embeddings(load_checkpoint(checkpoint_path), g, ids,
                                std::filesystem::path(out));
          });

    m.def("default_config", [] { return TrainConfig{}.to_map(); });
}
