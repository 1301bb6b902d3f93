#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "recigraph/checkpoint.hpp"
#include "recigraph/metrics.hpp"

namespace recigraph {

struct TrainResult {
    ModelParams params;  // best-validation parameters
    std::vector<std::string> class_names;
    MetricsReport val;   // at the best epoch's parameters
    MetricsReport test;  // same parameters
    std::vector<std::array<double, 3>> curve;  // per epoch {l_sup, l_adv, total}
    std::vector<double> train_accuracy;        // per epoch, percent
    std::size_t best_epoch = 0;                // 1-based
    double best_val_micro_f1 = 0.0;
    SplitAssignment split;
    std::size_t dropped = 0;  // isolated labeled nodes encountered
};

// Joint supervised + adversarial training. Per epoch the train nodes are
// reshuffled (epoch-seeded), batched, and stepped with Adam on
// L = L_sup + lambda * L_adv, where the adversarial term comes from a PGD
// attack on the projected features. The checkpoint with the best validation
// micro-F1 wins. Deterministic given the config's seeds.
TrainResult train(const HetGraph& g, const TrainConfig& cfg, std::ostream* log = nullptr);

MetricsReport evaluate_checkpoint(const Checkpoint& ckpt, const HetGraph& g, Split which);

// TSV export: "#id\tlabel\tembedding" header, then one line per embedded
// node in the requested order. Unknown ids raise; isolated nodes are
// skipped.
void export_embeddings(const Checkpoint& ckpt, const HetGraph& g,
                       const std::vector<std::string>& ids, const std::filesystem::path& out);

// Machine-readable reports (stable field order, deterministic bytes).
std::string metrics_to_json(const MetricsReport& report, const TrainConfig& cfg,
                            std::string_view split_name);
std::string train_result_to_json(const TrainResult& result, const TrainConfig& cfg);

// Samples for a training/eval run: every labeled recipe (all recipes when
// layers > 1), honoring the config's cache file when set.
SampleSet prepare_samples(const HetGraph& g, const TrainConfig& cfg);

}  // namespace recigraph
