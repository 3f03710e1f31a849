#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ecoscale {

struct LabelMetrics {
    long long tp = 0, fp = 0, fn = 0;
    long long support = 0;  // positive targets for this label
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct MetricsTable {
    std::vector<LabelMetrics> per_label;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

/// Per-label precision/recall/F1 from label bit-masks. Zero denominators
/// yield 0 (never NaN); macro scores are unweighted means over labels.
MetricsTable prf1(const std::vector<uint32_t>& predictions, const std::vector<uint32_t>& targets,
                  int num_classes);

/// Win counts and competition-ranked average ranks over score cells.
/// scores[model][cell]; every model must score every cell. A win is a
/// strictly best cell score (ties award no win); tied cells share the
/// minimum rank.
struct WinRank {
    std::vector<int> wins;
    std::vector<double> avg_rank;
};
WinRank win_rank(const std::vector<std::vector<double>>& scores);

/// CSV with one row per label plus a macro row:
/// label,precision,recall,f1,support
std::string metrics_csv(const MetricsTable& table,
                        const std::vector<std::string>& label_names = {});
std::string format_metrics_table(const MetricsTable& table,
                                 const std::vector<std::string>& label_names = {});

std::string win_rank_csv(const WinRank& wr, const std::vector<std::string>& model_names);
std::string format_win_rank_table(const WinRank& wr, const std::vector<std::string>& model_names);

}  // namespace ecoscale
