#include "ecoscale/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ecoscale {

MetricsTable prf1(const std::vector<uint32_t>& predictions, const std::vector<uint32_t>& targets,
                  int num_classes) {
    if (predictions.size() != targets.size())
        throw std::invalid_argument("metrics: prediction/target count mismatch");
    if (predictions.empty()) throw std::invalid_argument("metrics: no records to score");
    if (num_classes < 1 || num_classes > 32)
        throw std::invalid_argument("metrics: num_classes must be in [1, 32]");

    MetricsTable table;
    table.per_label.resize(num_classes);
    for (size_t i = 0; i < predictions.size(); ++i) {
        for (int m = 0; m < num_classes; ++m) {
            const bool p = (predictions[i] >> m) & 1u;
            const bool t = (targets[i] >> m) & 1u;
            LabelMetrics& lm = table.per_label[m];
            if (t) ++lm.support;
            if (p && t) ++lm.tp;
            else if (p && !t) ++lm.fp;
            else if (!p && t) ++lm.fn;
        }
    }
    for (LabelMetrics& lm : table.per_label) {
        lm.precision = (lm.tp + lm.fp > 0) ? static_cast<double>(lm.tp) / (lm.tp + lm.fp) : 0.0;
        lm.recall = (lm.tp + lm.fn > 0) ? static_cast<double>(lm.tp) / (lm.tp + lm.fn) : 0.0;
        lm.f1 = (lm.precision + lm.recall > 0.0)
                    ? 2.0 * lm.precision * lm.recall / (lm.precision + lm.recall)
                    : 0.0;
        table.macro_precision += lm.precision;
        table.macro_recall += lm.recall;
        table.macro_f1 += lm.f1;
    }
    table.macro_precision /= num_classes;
    table.macro_recall /= num_classes;
    table.macro_f1 /= num_classes;
    return table;
}

WinRank win_rank(const std::vector<std::vector<double>>& scores) {
    if (scores.empty()) throw std::invalid_argument("win_rank: no models");
    const size_t cells = scores[0].size();
    if (cells == 0) throw std::invalid_argument("win_rank: no score cells");
    for (const auto& row : scores)
        if (row.size() != cells)
            throw std::invalid_argument("win_rank: every model must score every cell");

    const size_t n = scores.size();
    WinRank wr;
    wr.wins.assign(n, 0);
    std::vector<double> rank_sum(n, 0.0);
    for (size_t c = 0; c < cells; ++c) {
        for (size_t i = 0; i < n; ++i) {
            int better = 0;
            bool tied = false;
            for (size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                if (scores[j][c] > scores[i][c]) ++better;
                else if (scores[j][c] == scores[i][c]) tied = true;
            }
            rank_sum[i] += 1 + better;           // competition ranking: ties share the minimum
            if (better == 0 && !tied) ++wr.wins[i];  // strict wins only
        }
    }
    wr.avg_rank.resize(n);
    for (size_t i = 0; i < n; ++i) wr.avg_rank[i] = rank_sum[i] / static_cast<double>(cells);
    return wr;
}

// ---------------------------------------------------------------------------
// Emitters
// ---------------------------------------------------------------------------

namespace {

std::string label_name(const std::vector<std::string>& names, size_t i) {
    if (i < names.size()) return names[i];
    return "label" + std::to_string(i);
}

}  // namespace

std::string metrics_csv(const MetricsTable& table, const std::vector<std::string>& label_names) {
    std::ostringstream os;
    char line[160];
    os << "label,precision,recall,f1,support\n";
    for (size_t i = 0; i < table.per_label.size(); ++i) {
        const LabelMetrics& lm = table.per_label[i];
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%lld\n",
                      label_name(label_names, i).c_str(), lm.precision, lm.recall, lm.f1,
                      lm.support);
        os << line;
    }
    std::snprintf(line, sizeof(line), "macro,%.6f,%.6f,%.6f,\n", table.macro_precision,
                  table.macro_recall, table.macro_f1);
    os << line;
    return os.str();
}

std::string format_metrics_table(const MetricsTable& table,
                                 const std::vector<std::string>& label_names) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %10s %10s %10s %9s\n", "label", "precision", "recall",
                  "f1", "support");
    os << line;
    for (size_t i = 0; i < table.per_label.size(); ++i) {
        const LabelMetrics& lm = table.per_label[i];
        std::snprintf(line, sizeof(line), "%-10s %10.4f %10.4f %10.4f %9lld\n",
                      label_name(label_names, i).c_str(), lm.precision, lm.recall, lm.f1,
                      lm.support);
        os << line;
    }
    std::snprintf(line, sizeof(line), "%-10s %10.4f %10.4f %10.4f %9s\n", "macro",
                  table.macro_precision, table.macro_recall, table.macro_f1, "");
    os << line;
    return os.str();
}

std::string win_rank_csv(const WinRank& wr, const std::vector<std::string>& model_names) {
    std::ostringstream os;
    os << "model,wins,avg_rank\n";
    char line[160];
    for (size_t i = 0; i < wr.wins.size(); ++i) {
        std::snprintf(line, sizeof(line), "%s,%d,%.6f\n", label_name(model_names, i).c_str(),
                      wr.wins[i], wr.avg_rank[i]);
        os << line;
    }
    return os.str();
}

std::string format_win_rank_table(const WinRank& wr, const std::vector<std::string>& model_names) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %6s %9s\n", "model", "wins", "avg_rank");
    os << line;
    for (size_t i = 0; i < wr.wins.size(); ++i) {
        std::snprintf(line, sizeof(line), "%-20s %6d %9.3f\n", label_name(model_names, i).c_str(),
                      wr.wins[i], wr.avg_rank[i]);
        os << line;
    }
    return os.str();
}

}  // namespace ecoscale
