#include "recigraph/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>

#include "recigraph/graph_io.hpp"
#include "recigraph/synthetic.hpp"
#include "recigraph/trainer.hpp"

namespace recigraph {

namespace {

// Shared training flags; values flow through apply_override so the CLI and
// config files accept identical spellings and validation.
struct TrainFlags {
    std::string data;
    std::string config_file;
    std::vector<std::string> sets;
    std::vector<std::pair<std::string, std::string*>> direct;
    std::deque<std::string> storage;

    void add(CLI::App* cmd) {
        cmd->add_option("--data", data, "graph directory (nodes.tsv, edges.tsv, attrs.*.tsv)")
            ->required();
        cmd->add_option("--config", config_file, "key = value config file");
        cmd->add_option("--set", sets, "override a config key, e.g. --set lambda=0.2");
        auto direct_opt = [&](const char* flag, const char* key, const char* help) {
            storage.emplace_back();
            direct.emplace_back(key, &storage.back());
            cmd->add_option(flag, storage.back(), help);
        };
        direct_opt("--task", "task", "cuisine or region");
        direct_opt("--epochs", "epochs", "training epochs");
        direct_opt("--lr", "lr", "learning rate");
        direct_opt("--hidden", "hidden", "hidden size");
        direct_opt("--batch", "batch", "batch size");
        direct_opt("--lambda", "lambda", "adversarial loss weight");
        direct_opt("--metapath", "metapath", "meta-path, e.g. recipe-user-recipe");
        direct_opt("--p", "top_p", "meta-path neighbors to keep");
        direct_opt("--walks", "n_walks", "meta-path walks per seed");
        direct_opt("--layers", "layers", "stacked aggregation layers");
        direct_opt("--pool", "pool", "neighbor pooling: max or sum");
        direct_opt("--share-weights", "share_weights", "share aggregator weights (0/1)");
        direct_opt("--attack-bound", "attack_bound", "perturbation range");
        direct_opt("--attack-step", "attack_step", "attack step size");
        direct_opt("--attack-iters", "attack_iters", "attack iterations");
        direct_opt("--seed-model", "seed_model", "parameter init seed");
        direct_opt("--seed-split", "seed_split", "split seed");
        direct_opt("--seed-sampler", "seed_sampler", "sampler seed");
        direct_opt("--sample-cache", "sample_cache", "neighbor sample cache file");
        cmd->add_flag("--no-ns", "disable the meta-path neighbor view");
        cmd->add_flag("--no-na", "replace the adaptive node aggregator with a mean");
        cmd->add_flag("--no-ca", "replace the cross-modal aggregator with a mean");
        cmd->add_flag("--no-ra", "replace the relation attention with a mean");
        cmd->add_flag("--no-al", "disable adversarial learning");
        this->cmd = cmd;
    }

    TrainConfig build() const {
        TrainConfig cfg;
        if (!config_file.empty()) cfg = load_config(config_file);
        for (const std::string& entry : sets) {
            const std::size_t eq = entry.find('=');
            if (eq == std::string::npos) {
                throw DataError("--set expects key=value, got '" + entry + "'");
            }
            apply_override(cfg, entry.substr(0, eq), entry.substr(eq + 1));
        }
        for (const auto& [key, value] : direct) {
            if (!value->empty()) apply_override(cfg, key, *value);
        }
        if (cmd->count("--no-ns")) cfg.switches.neighbor_sampling = false;
        if (cmd->count("--no-na")) cfg.switches.node_aggregation = false;
        if (cmd->count("--no-ca")) cfg.switches.cross_modal = false;
        if (cmd->count("--no-ra")) cfg.switches.relation_attention = false;
        if (cmd->count("--no-al")) cfg.switches.adversarial = false;
        cfg.validate();
        return cfg;
    }

    CLI::App* cmd = nullptr;
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << content;
}

int run_synth(const SyntheticConfig& cfg, const std::string& out_dir) {
    const HetGraph g = generate_synthetic(cfg);
    save_graph(g, out_dir);
    std::cout << "wrote " << g.num_nodes(NodeType::User) << " users, "
              << g.num_nodes(NodeType::Recipe) << " recipes, "
              << g.num_nodes(NodeType::Ingredient) << " ingredients to " << out_dir << "\n";
    return 0;
}

int run_train(const TrainFlags& flags, const std::string& checkpoint_path,
              const std::string& metrics_path, bool quiet) {
    const TrainConfig cfg = flags.build();
    const HetGraph g = load_graph(flags.data);
    const TrainResult result = train(g, cfg, quiet ? nullptr : &std::cout);
    if (!checkpoint_path.empty()) {
        save_checkpoint(checkpoint_path, result.params, cfg, result.class_names);
    }
    if (!metrics_path.empty()) write_text(metrics_path, train_result_to_json(result, cfg));
    std::cout << "best epoch " << result.best_epoch << " (val micro-F1 "
              << round_pct(result.best_val_micro_f1) << ")\n";
    std::cout << "validation:\n" << metrics_table(result.val);
    std::cout << "test:\n" << metrics_table(result.test);
    return 0;
}

int run_eval(const std::string& data, const std::string& checkpoint_path, const std::string& which,
             const std::string& metrics_path) {
    const HetGraph g = load_graph(data);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    Split split = Split::Test;
    if (which == "val") split = Split::Val;
    else if (which == "test") split = Split::Test;
    else if (which == "train") split = Split::Train;
    else throw DataError("--which must be train, val or test");
    const MetricsReport report = evaluate_checkpoint(ckpt, g, split);
    if (!metrics_path.empty()) write_text(metrics_path, metrics_to_json(report, ckpt.config, which));
    std::cout << which << ":\n" << metrics_table(report);
    return 0;
}

int run_export(const std::string& data, const std::string& checkpoint_path,
               const std::string& nodes_arg, const std::string& out_path) {
    const HetGraph g = load_graph(data);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    std::vector<std::string> ids;
    if (nodes_arg == "labeled") {
        const LabelSet& labels = g.labels(ckpt.config.task);
        std::vector<NodeIndex> nodes;
        for (const auto& [v, c] : labels.by_node) nodes.push_back(v);
        std::sort(nodes.begin(), nodes.end());
        for (const NodeIndex v : nodes) ids.push_back(g.id(v));
    } else {
        std::ifstream in(nodes_arg);
        if (!in) throw DataError("cannot open node list " + nodes_arg);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            ids.push_back(line);
        }
    }
    export_embeddings(ckpt, g, ids, out_path);
    std::cout << "wrote " << ids.size() << " requested embeddings to " << out_path << "\n";
    return 0;
}

int run_ablate(const TrainFlags& flags, const std::string& metrics_path, bool quiet) {
    const TrainConfig base = flags.build();
    const HetGraph g = load_graph(flags.data);

    struct Variant {
        const char* name;
        AblationSwitches switches;
    };
    AblationSwitches full = base.switches;
    auto off = [&](int which) {
        AblationSwitches s = full;
        if (which == 0) s.neighbor_sampling = false;
        if (which == 1) s.node_aggregation = false;
        if (which == 2) s.cross_modal = false;
        if (which == 3) s.relation_attention = false;
        if (which == 4) s.adversarial = false;
        return s;
    };
    const std::vector<Variant> variants = {
        {"-NS", off(0)}, {"-NA", off(1)}, {"-CA", off(2)},
        {"-RA", off(3)}, {"-AL", off(4)}, {"full", full},
    };

    std::vector<TrainResult> results;
    for (const Variant& v : variants) {
        TrainConfig cfg = base;
        cfg.switches = v.switches;
        if (!quiet) std::cout << "training variant " << v.name << "\n";
        results.push_back(train(g, cfg, nullptr));
    }

    // Tab. layout: one row per class plus Total, one column per variant.
    const std::vector<std::string>& classes = results[0].class_names;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-16s", "class");
    std::string table = buf;
    for (const Variant& v : variants) {
        std::snprintf(buf, sizeof(buf), " %8s", v.name);
        table += buf;
    }
    table += "\n";
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%-16s", classes[c].c_str());
        table += buf;
        for (const TrainResult& r : results) {
            std::snprintf(buf, sizeof(buf), " %8.1f", round_pct(r.test.per_class[c].f1));
            table += buf;
        }
        table += "\n";
    }
    std::snprintf(buf, sizeof(buf), "%-16s", "Total");
    table += buf;
    for (const TrainResult& r : results) {
        std::snprintf(buf, sizeof(buf), " %8.1f", round_pct(r.test.micro_f1));
        table += buf;
    }
    table += "\n";
    std::cout << table;

    if (!metrics_path.empty()) {
        std::string json = "{\n  \"task\": \"" + std::string(to_string(base.task)) + "\",\n";
        json += "  \"variants\": {\n";
        for (std::size_t i = 0; i < variants.size(); ++i) {
            char num[32];
            std::snprintf(num, sizeof(num), "%.1f", round_pct(results[i].test.micro_f1));
            json += "    \"" + std::string(variants[i].name) + "\": " + num;
            json += (i + 1 < variants.size()) ? ",\n" : "\n";
        }
        json += "  }\n}\n";
        write_text(metrics_path, json);
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"heterogeneous recipe-graph embedding engine"};
    app.require_subcommand(1);

    // synth
    CLI::App* synth = app.add_subcommand("synth", "generate a planted-signal synthetic graph");
    SyntheticConfig synth_cfg;
    std::string synth_out;
    double synth_signal = -1.0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--users", synth_cfg.users);
    synth->add_option("--recipes", synth_cfg.recipes);
    synth->add_option("--ingredients", synth_cfg.ingredients);
    synth->add_option("--classes", synth_cfg.classes);
    synth->add_option("--regions", synth_cfg.region_classes);
    synth->add_option("--image-dim", synth_cfg.image_dim);
    synth->add_option("--text-dim", synth_cfg.text_dim);
    synth->add_option("--nutrient-dim", synth_cfg.nutrient_dim);
    synth->add_option("--user-dim", synth_cfg.user_dim);
    synth->add_option("--user-edges", synth_cfg.user_edges_per_recipe);
    synth->add_option("--recipe-edges", synth_cfg.recipe_edges_per_recipe);
    synth->add_option("--ingredient-edges", synth_cfg.ingredient_edges_per_recipe);
    synth->add_option("--ii-edges", synth_cfg.ingredient_edges_per_ingredient);
    synth->add_option("--signal", synth_signal, "sets both attribute and edge signal");
    synth->add_option("--attr-signal", synth_cfg.attr_signal);
    synth->add_option("--edge-signal", synth_cfg.edge_signal);
    synth->add_option("--noise", synth_cfg.noise);
    synth->add_option("--seed", synth_cfg.seed);

    // train
    CLI::App* train_cmd = app.add_subcommand("train", "train on a graph directory");
    TrainFlags train_flags;
    train_flags.add(train_cmd);
    std::string train_checkpoint = "checkpoint.txt";
    std::string train_metrics;
    bool train_quiet = false;
    train_cmd->add_option("--checkpoint", train_checkpoint, "checkpoint output path");
    train_cmd->add_option("--metrics", train_metrics, "metrics JSON output path");
    train_cmd->add_flag("--quiet", train_quiet, "suppress per-epoch logging");

    // eval
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_data, eval_checkpoint, eval_metrics;
    std::string eval_which = "test";
    eval_cmd->add_option("--data", eval_data)->required();
    eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
    eval_cmd->add_option("--which", eval_which, "train, val or test");
    eval_cmd->add_option("--metrics", eval_metrics, "metrics JSON output path");

    // export
    CLI::App* export_cmd = app.add_subcommand("export", "export recipe embeddings to TSV");
    std::string export_data, export_checkpoint, export_out;
    std::string export_nodes = "labeled";
    export_cmd->add_option("--data", export_data)->required();
    export_cmd->add_option("--checkpoint", export_checkpoint)->required();
    export_cmd->add_option("--out", export_out)->required();
    export_cmd->add_option("--nodes", export_nodes, "'labeled' or a file with one id per line");

    // ablate
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "train every single-component-off variant");
    TrainFlags ablate_flags;
    ablate_flags.add(ablate_cmd);
    std::string ablate_metrics;
    bool ablate_quiet = false;
    ablate_cmd->add_option("--metrics", ablate_metrics, "summary JSON output path");
    ablate_cmd->add_flag("--quiet", ablate_quiet, "suppress progress logging");

    std::vector<const char*> argv;
    argv.push_back("recigraph");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            if (synth_signal >= 0.0) {
                if (!synth->count("--attr-signal")) synth_cfg.attr_signal = synth_signal;
                if (!synth->count("--edge-signal")) synth_cfg.edge_signal = synth_signal;
            }
            return run_synth(synth_cfg, synth_out);
        }
        if (train_cmd->parsed()) {
            return run_train(train_flags, train_checkpoint, train_metrics, train_quiet);
        }
        if (eval_cmd->parsed()) {
            return run_eval(eval_data, eval_checkpoint, eval_which, eval_metrics);
        }
        if (export_cmd->parsed()) {
            return run_export(export_data, export_checkpoint, export_nodes, export_out);
        }
        if (ablate_cmd->parsed()) {
            return run_ablate(ablate_flags, ablate_metrics, ablate_quiet);
        }
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace recigraph
