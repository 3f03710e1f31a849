#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecoscale/analysis.hpp"
#include "ecoscale/config.hpp"
#include "ecoscale/dataio.hpp"
#include "ecoscale/kernel_plan.hpp"
#include "ecoscale/metrics.hpp"
#include "ecoscale/model.hpp"
#include "ecoscale/training.hpp"

namespace fs = std::filesystem;
using namespace ecoscale;

namespace {

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << content;
    if (!os) throw std::runtime_error("write failure on " + path);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw std::invalid_argument("empty entry in list '" + s + "'");
        out.push_back(std::stoi(item));
    }
    if (out.empty()) throw std::invalid_argument("expected a comma-separated integer list");
    return out;
}

void check_dataset_matches_model(const Dataset& ds, const ModelSpec& spec) {
    if (ds.leads != spec.leads || ds.T != spec.input_length)
        throw std::invalid_argument("dataset geometry " + std::to_string(ds.leads) + "x" +
                                    std::to_string(ds.T) + " does not match model " +
                                    std::to_string(spec.leads) + "x" +
                                    std::to_string(spec.input_length));
    if (ds.num_classes != spec.num_classes)
        throw std::invalid_argument("dataset has " + std::to_string(ds.num_classes) +
                                    " classes, model expects " +
                                    std::to_string(spec.num_classes));
}

std::vector<uint32_t> all_ids(const Dataset& ds) {
    std::vector<uint32_t> ids;
    ids.reserve(ds.records.size());
    for (const Record& r : ds.records) ids.push_back(r.id);
    return ids;
}

int cmd_plan(int length, int initial_cover, const std::string& factors_str, bool strict) {
    if ((length > 0) == (initial_cover > 0))
        throw std::invalid_argument("plan: give exactly one of --length or --initial-cover");
    std::vector<int> factors{1};
    int cover = length;
    if (initial_cover > 0) {
        cover = initial_cover;
        if (factors_str.empty())
            throw std::invalid_argument("plan: --initial-cover needs --factors a,b,c,...");
        factors = parse_int_list(factors_str);
    }
    const KernelPlan base = stage_plan(cover, factors, false);
    std::cout << format_plan_table(base, true);
    if (strict) {
        const KernelPlan raised = stage_plan(cover, factors, true);
        bool any = false;
        for (size_t i = 0; i < base.stages.size(); ++i) {
            if (raised.stages[i].kernel_set.p_k != base.stages[i].kernel_set.p_k) {
                std::cout << "strict: stage " << (i + 1) << " escalates p_k "
                          << base.stages[i].kernel_set.p_k << " -> "
                          << raised.stages[i].kernel_set.p_k << " to close the gaps above\n";
                any = true;
            }
        }
        if (!any) {
            std::cout << "strict: no escalation needed\n";
        } else {
            std::cout << format_plan_table(raised, true);
        }
    }
    return 0;
}

int cmd_analyze(const std::string& config_path, int input_length, const std::string& out) {
    const RunConfig cfg = load_config(config_path);
    const int len = (input_length > 0) ? input_length : cfg.model.input_length;
    const ComplexityReport report = analyze_model(cfg.model, len);
    std::cout << format_complexity_table(report);
    if (!out.empty()) {
        write_text_file(out, complexity_csv(report));
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_gen_data(const std::string& config_path, const std::string& out) {
    const RunConfig cfg = load_config(config_path);
    if (cfg.data.num_records < 1)
        throw std::invalid_argument("gen-data: [data] num_records must be >= 1");
    const Dataset ds = generate(cfg.data);
    write_dataset(out, ds);
    std::printf("wrote %zu records (%dx%d, %d classes, task %s) to %s\n", ds.records.size(),
                ds.leads, ds.T, ds.num_classes, task_name(cfg.data.task).c_str(), out.c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out, std::string log_path) {
    const RunConfig cfg = load_config(config_path);
    const Dataset full = read_dataset(data_path);
    check_dataset_matches_model(full, cfg.model);

    const SplitIds split = split_ids(all_ids(full), 0.90, 0.05, 0.05, cfg.split_seed());
    if (split.val.empty())
        throw std::invalid_argument("train: validation split is empty; need more records");
    const Dataset train_set = subset_by_ids(full, split.train);
    const Dataset val_set = subset_by_ids(full, split.val);

    Model model = build_model(cfg.model);
    init_params(model, cfg.init_seed());
    const FitResult result = fit(model, train_set, val_set, cfg.train);

    save_weights(model, out);
    if (log_path.empty()) log_path = out + ".log.csv";
    write_text_file(log_path, training_log_csv(result.log));
    std::printf("trained %s on %zu/%zu records: best val macro-F1 %.4f at epoch %d\n",
                variant_name(cfg.model.variant).c_str(), train_set.records.size(),
                val_set.records.size(), result.best_val_macro_f1, result.best_epoch);
    std::printf("weights -> %s, log -> %s\n", out.c_str(), log_path.c_str());
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& weights_path,
             const std::string& data_path, double threshold, const std::string& subset,
             const std::string& out) {
    const RunConfig cfg = load_config(config_path);
    const Dataset full = read_dataset(data_path);
    check_dataset_matches_model(full, cfg.model);

    Dataset chosen;
    if (subset == "all") {
        chosen = full;
    } else {
        const SplitIds split = split_ids(all_ids(full), 0.90, 0.05, 0.05, cfg.split_seed());
        const std::vector<uint32_t>* ids = nullptr;
        if (subset == "train") ids = &split.train;
        else if (subset == "val") ids = &split.val;
        else if (subset == "test") ids = &split.test;
        else throw std::invalid_argument("eval: --subset must be train|val|test|all");
        if (ids->empty()) throw std::invalid_argument("eval: subset '" + subset + "' is empty");
        chosen = subset_by_ids(full, *ids);
    }

    Model model = build_model(cfg.model);
    load_weights(model, weights_path);
    const MetricsTable table = evaluate(model, chosen, threshold);
    std::cout << format_metrics_table(table);
    std::printf("subset %s: %zu records, macro-F1 %.4f at threshold %.2f\n", subset.c_str(),
                chosen.records.size(), table.macro_f1, threshold);
    if (!out.empty()) {
        write_text_file(out, metrics_csv(table));
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

// Parse a metrics CSV produced by `eval` back into per-cell scores
// (precision, recall, f1 per label row; the macro row is skipped).
std::vector<double> metrics_csv_cells(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("label,precision", 0) != 0)
        throw std::runtime_error(path + ": not a metrics CSV (bad header)");
    std::vector<double> cells;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string label, p, r, f1;
        std::getline(ss, label, ',');
        std::getline(ss, p, ',');
        std::getline(ss, r, ',');
        std::getline(ss, f1, ',');
        if (label == "macro") continue;
        cells.push_back(std::stod(p));
        cells.push_back(std::stod(r));
        cells.push_back(std::stod(f1));
    }
    if (cells.empty()) throw std::runtime_error(path + ": no label rows");
    return cells;
}

int cmd_report(const std::string& runs_dir, const std::string& out) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> scores;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
        names.push_back(f.stem().string());
        scores.push_back(metrics_csv_cells(f.string()));
    }
    if (scores.empty())
        throw std::invalid_argument("report: no .csv metrics files in " + runs_dir);
    const WinRank wr = win_rank(scores);
    std::cout << format_win_rank_table(wr, names);
    std::printf("%zu models compared over %zu cells\n", scores.size(), scores[0].size());
    if (!out.empty()) {
        write_text_file(out, win_rank_csv(wr, names));
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prime-kernel omni-scale network: planning, analysis, training, evaluation"};
    app.require_subcommand(1);

    auto* plan = app.add_subcommand("plan", "print the kernel plan for a cover length or cascade");
    int plan_length = 0, plan_cover = 0;
    std::string plan_factors;
    bool plan_strict = false;
    plan->add_option("--length", plan_length, "single-stage cover length");
    plan->add_option("--initial-cover", plan_cover, "first-stage cover length of a cascade");
    plan->add_option("--factors", plan_factors,
                     "comma-separated cumulative downsample factors, e.g. 1,2,4,8");
    plan->add_flag("--strict", plan_strict,
                   "also escalate primes until the coverage audit reports no gaps");

    auto* analyze = app.add_subcommand("analyze", "analytic parameter/MAC/FLOP report");
    std::string an_config, an_out;
    int an_length = 0;
    analyze->add_option("--config", an_config, "run config file")->required();
    analyze->add_option("--input-length", an_length, "override the spec input length");
    analyze->add_option("--out", an_out, "write the report as CSV to this path");

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    std::string gen_config, gen_out;
    gen->add_option("--config", gen_config, "run config file")->required();
    gen->add_option("--out", gen_out, "output dataset path")->required();

    auto* train = app.add_subcommand("train", "train a model and save its weights");
    std::string tr_config, tr_data, tr_out, tr_log;
    train->add_option("--config", tr_config, "run config file")->required();
    train->add_option("--data", tr_data, "dataset path")->required();
    train->add_option("--out", tr_out, "output weights path")->required();
    train->add_option("--log", tr_log, "training log CSV path (default: <out>.log.csv)");

    auto* eval = app.add_subcommand("eval", "evaluate saved weights on a dataset split");
    std::string ev_config, ev_weights, ev_data, ev_subset = "test", ev_out;
    double ev_threshold = 0.5;
    eval->add_option("--config", ev_config, "run config file")->required();
    eval->add_option("--weights", ev_weights, "weights path")->required();
    eval->add_option("--data", ev_data, "dataset path")->required();
    eval->add_option("--threshold", ev_threshold, "decision threshold (default 0.5)");
    eval->add_option("--subset", ev_subset, "train|val|test|all (default test)");
    eval->add_option("--out", ev_out, "write metrics CSV to this path");

    auto* report = app.add_subcommand("report", "win counts and average ranks over metrics CSVs");
    std::string rp_runs, rp_out;
    report->add_option("--runs", rp_runs, "directory of per-model metrics CSV files")->required();
    report->add_option("--out", rp_out, "write the win/rank table as CSV to this path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plan) return cmd_plan(plan_length, plan_cover, plan_factors, plan_strict);
        if (*analyze) return cmd_analyze(an_config, an_length, an_out);
        if (*gen) return cmd_gen_data(gen_config, gen_out);
        if (*train) return cmd_train(tr_config, tr_data, tr_out, tr_log);
        if (*eval) return cmd_eval(ev_config, ev_weights, ev_data, ev_threshold, ev_subset, ev_out);
        if (*report) return cmd_report(rp_runs, rp_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
