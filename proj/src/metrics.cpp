#include "recigraph/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace recigraph {

double round_pct(double pct) { return std::round(pct * 10.0) / 10.0; }

MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              const std::vector<std::string>& class_names) {
    if (y_true.size() != y_pred.size()) {
        throw DimensionError("metrics: " + std::to_string(y_true.size()) + " labels vs " +
                             std::to_string(y_pred.size()) + " predictions");
    }
    const std::size_t classes = class_names.size();
    const std::size_t n = y_true.size();
    std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0), support(classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || static_cast<std::size_t>(t) >= classes || p < 0 ||
            static_cast<std::size_t>(p) >= classes) {
            throw DataError("metrics: class index out of range");
        }
        ++support[static_cast<std::size_t>(t)];
        if (t == p) {
            ++correct;
            ++tp[static_cast<std::size_t>(t)];
        } else {
            ++fn[static_cast<std::size_t>(t)];
            ++fp[static_cast<std::size_t>(p)];
        }
    }

    MetricsReport report;
    report.evaluated = n;
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
        ClassMetrics m;
        m.name = class_names[c];
        m.support = support[c];
        const double denom_p = static_cast<double>(tp[c] + fp[c]);
        const double denom_r = static_cast<double>(tp[c] + fn[c]);
        const double precision = denom_p > 0.0 ? static_cast<double>(tp[c]) / denom_p : 0.0;
        const double recall = denom_r > 0.0 ? static_cast<double>(tp[c]) / denom_r : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        m.f1 = 100.0 * f1;
        m.accuracy = 100.0 * recall;
        f1_sum += m.f1;
        report.per_class.push_back(std::move(m));
    }
    report.macro_f1 = classes > 0 ? f1_sum / static_cast<double>(classes) : 0.0;
    report.accuracy = n > 0 ? 100.0 * static_cast<double>(correct) / static_cast<double>(n) : 0.0;

    // Pooled micro-F1: with one predicted and one true class per instance,
    // pooled FP == pooled FN, so this reduces to accuracy.
    std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        tp_all += tp[c];
        fp_all += fp[c];
        fn_all += fn[c];
    }
    const double denom = static_cast<double>(2 * tp_all + fp_all + fn_all);
    report.micro_f1 = denom > 0.0 ? 100.0 * 2.0 * static_cast<double>(tp_all) / denom : 0.0;
    return report;
}

std::string metrics_table(const MetricsReport& report) {
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-16s %8s %8s %8s\n", "class", "F1", "Acc", "n");
    out << buf;
    for (const ClassMetrics& m : report.per_class) {
        std::snprintf(buf, sizeof(buf), "%-16s %8.1f %8.1f %8zu\n", m.name.c_str(),
                      round_pct(m.f1), round_pct(m.accuracy), m.support);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-16s %8.1f %8.1f %8zu\n", "Total", round_pct(report.micro_f1),
                  round_pct(report.accuracy), report.evaluated);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-16s %8.1f\n", "Macro-F1", round_pct(report.macro_f1));
    out << buf;
    if (report.dropped > 0) {
        out << "(dropped " << report.dropped << " isolated nodes)\n";
    }
    return out.str();
}

}  // namespace recigraph
