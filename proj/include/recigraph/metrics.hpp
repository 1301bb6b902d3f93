#pragma once

#include <array>
#include <string>
#include <vector>

#include "recigraph/errors.hpp"

namespace recigraph {

struct ClassMetrics {
    std::string name;
    double f1 = 0.0;        // one-vs-rest F1, percent
    double accuracy = 0.0;  // within-class accuracy (recall), percent
    std::size_t support = 0;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    double micro_f1 = 0.0;  // percent, pooled over classes
    double accuracy = 0.0;  // percent
    double macro_f1 = 0.0;  // percent, mean of per-class F1
    std::size_t evaluated = 0;
    std::size_t dropped = 0;
};

// Confusion-matrix metrics for single-label multiclass predictions.
// micro-F1 is computed from pooled true/false positives and negatives; for
// single-label predictions it must equal accuracy, which doubles as a
// self-check of the implementation.
MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              const std::vector<std::string>& class_names);

// Percent with one decimal, the table convention.
double round_pct(double pct);

// Human-readable per-class table.
std::string metrics_table(const MetricsReport& report);

}  // namespace recigraph
