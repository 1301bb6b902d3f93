#include "recigraph/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <set>

#include "recigraph/adam.hpp"
#include "recigraph/graph_io.hpp"
#include "recigraph/rng.hpp"

namespace recigraph {

namespace {

struct Predictions {
    std::vector<NodeIndex> nodes;
    std::vector<int> truth;
    std::vector<int> pred;
    std::size_t dropped = 0;
};

int argmax(const Tensor& logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

Predictions predict(const ModelParams& params, const TrainConfig& cfg, const HetGraph& g,
                    const SampleSet& samples, const std::vector<NodeIndex>& nodes,
                    const LabelSet& labels) {
    Predictions out;
    for (std::size_t start = 0; start < nodes.size(); start += cfg.batch) {
        const std::size_t stop = std::min(nodes.size(), start + cfg.batch);
        const std::span<const NodeIndex> chunk(nodes.data() + start, stop - start);
        Tape tape;
        const ParamBinding pb(tape, params, false);
        ForwardOptions opt;
        opt.switches = cfg.switches;
        const BatchForward fwd = model_forward(tape, pb, g, samples, chunk, opt);
        out.dropped += fwd.dropped.size();
        for (std::size_t i = 0; i < fwd.nodes.size(); ++i) {
            out.nodes.push_back(fwd.nodes[i]);
            out.truth.push_back(labels.label_of(fwd.nodes[i]));
            out.pred.push_back(argmax(tape.value(fwd.logits[i])));
        }
    }
    return out;
}

std::vector<NodeIndex> sorted_labeled_nodes(const LabelSet& labels) {
    std::vector<NodeIndex> out;
    out.reserve(labels.by_node.size());
    for (const auto& [v, c] : labels.by_node) out.push_back(v);
    std::sort(out.begin(), out.end());
    return out;
}

void check_dims_match(const ModelDims& dims, const HetGraph& g) {
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        const std::size_t have = g.attribute_dim(static_cast<Modality>(m));
        if (dims.input_dims[m] != have) {
            throw DataError("checkpoint " + std::string(to_string(static_cast<Modality>(m))) +
                            " dim " + std::to_string(dims.input_dims[m]) +
                            " does not match graph dim " + std::to_string(have));
        }
    }
}

ModelDims dims_for(const HetGraph& g, const TrainConfig& cfg, std::size_t classes) {
    ModelDims dims;
    dims.hidden = cfg.hidden;
    dims.layers = cfg.layers;
    dims.pool = cfg.pool;
    dims.share_weights = cfg.share_weights;
    dims.classes = classes;
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        dims.input_dims[m] = g.attribute_dim(static_cast<Modality>(m));
    }
    return dims;
}

}  // namespace

SampleSet prepare_samples(const HetGraph& g, const TrainConfig& cfg) {
    const MetaPath path = MetaPath::parse(cfg.metapath);
    WalkConfig wcfg;
    wcfg.n_walks = cfg.n_walks;
    wcfg.top_p = cfg.top_p;
    wcfg.seed = cfg.seed_sampler;

    std::vector<NodeIndex> seeds;
    if (cfg.layers > 1) {
        for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
            if (g.type(v) == NodeType::Recipe) seeds.push_back(v);
        }
    } else {
        seeds = sorted_labeled_nodes(g.labels(cfg.task));
    }

    const std::uint64_t fingerprint = sample_fingerprint(g, path, wcfg);
    if (!cfg.sample_cache.empty()) {
        if (auto cached = load_samples(g, fingerprint, cfg.sample_cache)) {
            const bool covers = std::all_of(seeds.begin(), seeds.end(), [&](NodeIndex v) {
                return cached->by_node.count(v) != 0;
            });
            if (covers) return std::move(*cached);
        }
    }
    SampleSet samples = build_samples(g, seeds, path, wcfg);
    if (!cfg.sample_cache.empty()) save_samples(samples, g, cfg.sample_cache);
    return samples;
}

TrainResult train(const HetGraph& g, const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    const LabelSet& labels = g.labels(cfg.task);
    if (labels.empty()) {
        throw DataError("graph has no " + std::string(to_string(cfg.task)) + " labels");
    }

    TrainResult result;
    result.class_names = labels.class_names;
    result.split = make_split(labels, cfg.split, cfg.seed_split);
    const std::vector<NodeIndex> train_nodes = result.split.members(Split::Train);
    const std::vector<NodeIndex> val_nodes = result.split.members(Split::Val);
    const std::vector<NodeIndex> test_nodes = result.split.members(Split::Test);

    std::vector<std::size_t> per_class(labels.num_classes(), 0);
    for (const NodeIndex v : train_nodes) ++per_class[static_cast<std::size_t>(labels.label_of(v))];
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (per_class[c] < 3) {
            throw DataError("train split holds only " + std::to_string(per_class[c]) + " '" +
                            labels.class_names[c] + "' nodes; need at least 3 per class");
        }
    }

    const SampleSet samples = prepare_samples(g, cfg);
    ModelParams params = ModelParams::init(dims_for(g, cfg, labels.num_classes()), cfg.seed_model);
    Adam adam(AdamConfig{.lr = cfg.lr});

    ModelParams best = params;
    std::set<NodeIndex> dropped_seen;
    bool warned_dropped = false;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<NodeIndex> order = train_nodes;
        Rng shuffle_rng(Rng::mix(cfg.seed_model, epoch));
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[shuffle_rng.below(i + 1)]);
        }

        double sup_sum = 0.0, adv_sum = 0.0, total_sum = 0.0;
        std::size_t seen = 0, correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch);
            const std::span<const NodeIndex> chunk(order.data() + start, stop - start);
            try {
                Tape tape;
                const ParamBinding pb(tape, params, true);
                ForwardOptions opt;
                opt.switches = cfg.switches;
                const BatchForward fwd = model_forward(tape, pb, g, samples, chunk, opt);
                for (const NodeIndex v : fwd.dropped) dropped_seen.insert(v);
                if (!fwd.dropped.empty() && !warned_dropped && log) {
                    (*log) << "warning: dropped isolated labeled node '" << g.id(fwd.dropped[0])
                           << "'\n";
                    warned_dropped = true;
                }
                if (fwd.nodes.empty()) continue;

                const VarId l_sup = batch_cross_entropy(tape, fwd, labels);
                for (std::size_t i = 0; i < fwd.nodes.size(); ++i) {
                    if (argmax(tape.value(fwd.logits[i])) == labels.label_of(fwd.nodes[i])) {
                        ++correct;
                    }
                }

                VarId total = l_sup;
                double l_adv_value = 0.0;
                if (cfg.switches.adversarial && cfg.lambda > 0.0) {
                    const Perturbation eps = pgd_attack(params, g, samples, chunk, labels,
                                                        cfg.attack, cfg.switches);
                    const VarId l_adv = adversarial_loss(tape, pb, g, samples, chunk, labels, eps,
                                                         cfg.attack.bound, cfg.switches);
                    l_adv_value = tape.value(l_adv)[0];
                    total = tape.add(l_sup, tape.scale(l_adv, cfg.lambda));
                }

                const double l_sup_value = tape.value(l_sup)[0];
                const double total_value = tape.value(total)[0];
                if (!std::isfinite(total_value)) throw NumericError("non-finite loss");

                const GradientMap grads = tape.backward(total);
                std::vector<Tensor> grad_list = pb.collect(grads);
                adam.step(params.tensors(), grad_list);

                const double w = static_cast<double>(fwd.nodes.size());
                sup_sum += w * l_sup_value;
                adv_sum += w * l_adv_value;
                total_sum += w * total_value;
                seen += fwd.nodes.size();
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(start / cfg.batch + 1) + ": " + e.what());
            }
        }
        if (seen == 0) throw DataError("every training node is isolated");

        const double denom = static_cast<double>(seen);
        result.curve.push_back({sup_sum / denom, adv_sum / denom, total_sum / denom});
        const double train_acc = 100.0 * static_cast<double>(correct) / denom;
        result.train_accuracy.push_back(train_acc);

        Predictions val;
        try {
            val = predict(params, cfg, g, samples, val_nodes, labels);
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + " validation: " + e.what());
        }
        const double val_f1 =
            compute_metrics(val.truth, val.pred, labels.class_names).micro_f1;
        if (val_f1 > result.best_val_micro_f1 || result.best_epoch == 0) {
            result.best_val_micro_f1 = val_f1;
            result.best_epoch = epoch;
            best = params;
        }
        if (log) {
            (*log) << "epoch " << epoch << " l_sup " << result.curve.back()[0] << " l_adv "
                   << result.curve.back()[1] << " loss " << result.curve.back()[2] << " train_acc "
                   << train_acc << " val_f1 " << val_f1 << "\n";
        }
    }

    result.params = std::move(best);
    const Predictions val = predict(result.params, cfg, g, samples, val_nodes, labels);
    result.val = compute_metrics(val.truth, val.pred, labels.class_names);
    result.val.dropped = val.dropped;
    const Predictions test = predict(result.params, cfg, g, samples, test_nodes, labels);
    result.test = compute_metrics(test.truth, test.pred, labels.class_names);
    result.test.dropped = test.dropped;
    result.dropped = dropped_seen.size();
    return result;
}

MetricsReport evaluate_checkpoint(const Checkpoint& ckpt, const HetGraph& g, Split which) {
    const LabelSet& labels = g.labels(ckpt.config.task);
    if (labels.class_names != ckpt.class_names) {
        throw DataError("checkpoint class names do not match the graph's labels");
    }
    check_dims_match(ckpt.params.dims(), g);
    const SplitAssignment split = make_split(labels, ckpt.config.split, ckpt.config.seed_split);
    const SampleSet samples = prepare_samples(g, ckpt.config);
    const Predictions preds =
        predict(ckpt.params, ckpt.config, g, samples, split.members(which), labels);
    MetricsReport report = compute_metrics(preds.truth, preds.pred, labels.class_names);
    report.dropped = preds.dropped;
    return report;
}

void export_embeddings(const Checkpoint& ckpt, const HetGraph& g,
                       const std::vector<std::string>& ids, const std::filesystem::path& out) {
    check_dims_match(ckpt.params.dims(), g);
    std::vector<NodeIndex> nodes;
    nodes.reserve(ids.size());
    for (const std::string& id : ids) nodes.push_back(g.index_of(id));

    std::ofstream file(out, std::ios::binary);
    if (!file) throw DataError("cannot write " + out.string());
    file << "#id\tlabel\tembedding\n";
    file << "# config";
    for (const auto& [key, value] : ckpt.config.to_map()) file << ' ' << key << '=' << value;
    file << '\n';
    if (nodes.empty()) return;

    const SampleSet samples = prepare_samples(g, ckpt.config);
    Tape tape;
    const ParamBinding pb(tape, ckpt.params, false);
    ForwardOptions opt;
    opt.switches = ckpt.config.switches;
    const BatchForward fwd = model_forward(tape, pb, g, samples, nodes, opt);
    std::map<NodeIndex, VarId> embedding;
    for (std::size_t i = 0; i < fwd.nodes.size(); ++i) {
        embedding.emplace(fwd.nodes[i], fwd.embeddings[i]);
    }
    for (const NodeIndex v : nodes) {
        const auto it = embedding.find(v);
        if (it == embedding.end()) continue;  // isolated, skipped
        const std::string* label = g.raw_label(ckpt.config.task, v);
        file << g.id(v) << '\t' << (label ? *label : "-") << '\t';
        const Tensor& h = tape.value(it->second);
        for (std::size_t k = 0; k < h.size(); ++k) {
            if (k) file << ',';
            file << format_double(h[k]);
        }
        file << '\n';
    }
}

namespace {

nlohmann::ordered_json report_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["per_class"] = nlohmann::ordered_json::array();
    for (const ClassMetrics& m : report.per_class) {
        j["per_class"].push_back({{"name", m.name},
                                  {"f1", round_pct(m.f1)},
                                  {"accuracy", round_pct(m.accuracy)},
                                  {"support", m.support}});
    }
    j["total"] = {{"micro_f1", round_pct(report.micro_f1)},
                  {"accuracy", round_pct(report.accuracy)},
                  {"macro_f1", round_pct(report.macro_f1)},
                  {"evaluated", report.evaluated},
                  {"dropped", report.dropped}};
    return j;
}

nlohmann::ordered_json config_json(const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    for (const auto& [key, value] : cfg.to_map()) j[key] = value;
    return j;
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report, const TrainConfig& cfg,
                            std::string_view split_name) {
    nlohmann::ordered_json j;
    j["task"] = to_string(cfg.task);
    j["split"] = split_name;
    j["config"] = config_json(cfg);
    j["metrics"] = report_json(report);
    return j.dump(2) + "\n";
}

std::string train_result_to_json(const TrainResult& result, const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["task"] = to_string(cfg.task);
    j["config"] = config_json(cfg);
    j["best_epoch"] = result.best_epoch;
    j["best_val_micro_f1"] = round_pct(result.best_val_micro_f1);
    j["final_train_accuracy"] =
        result.train_accuracy.empty() ? 0.0 : round_pct(result.train_accuracy.back());
    j["dropped"] = result.dropped;
    j["val"] = report_json(result.val);
    j["test"] = report_json(result.test);
    j["curve"] = nlohmann::ordered_json::array();
    for (std::size_t e = 0; e < result.curve.size(); ++e) {
        j["curve"].push_back({{"epoch", e + 1},
                              {"l_sup", result.curve[e][0]},
                              {"l_adv", result.curve[e][1]},
                              {"loss", result.curve[e][2]},
                              {"train_accuracy", result.train_accuracy[e]}});
    }
    return j.dump(2) + "\n";
}

}  // namespace recigraph
