// Command-line front end: run benchmark/learn experiments, resume histories,
// and emit the results plot and summary table.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gpal/experiment.hpp"
#include "gpal/plot.hpp"

namespace {

constexpr int kExitFlagError = 2;
constexpr int kExitRuntimeError = 3;

gpal::KernelKind kernel_from_flag(const std::string& s) {
    if (s == "rbf") return gpal::KernelKind::rbf;
    if (s == "matern12") return gpal::KernelKind::matern_half;
    if (s == "matern32") return gpal::KernelKind::matern_three_halves;
    throw std::invalid_argument("--kernel must be rbf, matern12 or matern32 (got '" + s + "')");
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<gpal::SelectionMethod> parse_methods(const std::string& s) {
    std::vector<gpal::SelectionMethod> out;
    for (const auto& tok : split_commas(s)) out.push_back(gpal::selection_method_from_name(tok));
    if (out.empty()) throw std::invalid_argument("--methods must list at least one method");
    return out;
}

void write_summary_and_plot(const std::vector<gpal::MethodResult>& results,
                            const gpal::ExperimentConfig& config) {
    const auto dir = std::filesystem::path(config.output_dir);
    std::ofstream tsv(dir / "summary.tsv");
    if (!tsv) throw std::runtime_error("cannot write summary.tsv");
    tsv << "method\tfinal_metric\tauc\truntime_s\n";
    gpal::PlotSpec plot;
    plot.init_set_size = config.init_set_size;
    plot.metric_name = gpal::metric_kind_name(config.metric);
    for (const auto& r : results) {
        tsv << gpal::selection_method_name(r.method) << '\t' << gpal::format_double(r.final_metric)
            << '\t' << gpal::format_double(r.auc) << '\t' << gpal::format_double(r.runtime_s)
            << '\n';
        plot.series.push_back({gpal::selection_method_name(r.method), r.metric_series, r.auc});
    }
    gpal::emit_plot(plot, (dir / "plot.svg").string());
}

struct OracleFlags {
    std::string command;
    bool prompt = false;

    std::unique_ptr<gpal::Oracle> make() const {
        if (!command.empty() && prompt)
            throw std::invalid_argument("--oracle-cmd and --oracle-prompt are mutually exclusive");
        if (!command.empty()) return std::make_unique<gpal::CommandOracle>(command);
        if (prompt) return std::make_unique<gpal::PromptOracle>();
        throw std::invalid_argument("one of --oracle-cmd or --oracle-prompt is required");
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pool-based active learning for Gaussian-process regression"};
    app.require_subcommand(1);

    // shared flag storage
    std::string data_path, label_column, methods_str, metric_str = "rmse", kernel_str = "rbf";
    std::string out_dir = ".", history_path, known_indices_str, known_labels_str;
    int iterations = 20, init_set_size = 0, extra_iterations = 0;
    long seed = 0;
    OracleFlags oracle_flags;

    auto* bench = app.add_subcommand("benchmark", "benchmark selection methods on labeled data");
    bench->add_option("--data", data_path, "input CSV")->required();
    bench->add_option("--label-column", label_column, "name of the label column")->required();
    bench->add_option("--methods", methods_str, "comma-separated selection methods")->required();
    bench->add_option("--iterations", iterations, "active learning iterations")->required();
    bench->add_option("--init-set-size", init_set_size, "initial labeled set size")->required();
    bench->add_option("--metric", metric_str, "rmse or r2");
    bench->add_option("--seed", seed, "randomization seed");
    bench->add_option("--kernel", kernel_str, "main model kernel: rbf, matern12, matern32");
    bench->add_option("--out", out_dir, "output directory");

    auto* learn = app.add_subcommand("learn", "active learning with an oracle");
    learn->add_option("--data", data_path, "input CSV (no label column)")->required();
    learn->add_option("--methods", methods_str, "comma-separated selection methods")->required();
    learn->add_option("--iterations", iterations, "active learning iterations")->required();
    learn->add_option("--known-indices", known_indices_str, "initially labeled pool indices")
        ->required();
    learn->add_option("--known-labels", known_labels_str, "labels of the known indices")
        ->required();
    learn->add_option("--seed", seed, "randomization seed");
    learn->add_option("--kernel", kernel_str, "main model kernel: rbf, matern12, matern32");
    learn->add_option("--out", out_dir, "output directory");
    learn->add_option("--oracle-cmd", oracle_flags.command, "labeling program");
    learn->add_flag("--oracle-prompt", oracle_flags.prompt, "interactive labeling");

    auto* resume = app.add_subcommand("resume", "extend an existing run history");
    resume->add_option("--history", history_path, "run history file")->required();
    resume->add_option("--extra-iterations", extra_iterations, "additional iterations")->required();
    resume->add_option("--data", data_path, "original dataset CSV");
    resume->add_option("--label-column", label_column, "label column (benchmark resume)");
    resume->add_option("--oracle-cmd", oracle_flags.command, "labeling program (learn resume)");
    resume->add_flag("--oracle-prompt", oracle_flags.prompt, "interactive labeling (learn resume)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitFlagError;
    }

    try {
        if (bench->parsed()) {
            const auto csv = gpal::load_csv(data_path, label_column);
            gpal::ExperimentConfig config;
            config.mode = gpal::Mode::benchmark;
            config.iterations = iterations;
            config.methods = parse_methods(methods_str);
            config.metric = gpal::metric_kind_from_name(metric_str);
            config.init_set_size = init_set_size;
            config.seed = seed;
            config.output_dir = out_dir;
            config.kernel.kind = kernel_from_flag(kernel_str);
            const auto results = gpal::run_benchmark(config, csv.features, *csv.labels);
            write_summary_and_plot(results, config);
            for (const auto& r : results)
                std::cout << gpal::selection_method_name(r.method)
                          << ": AUC=" << gpal::format_double(r.auc) << " -> " << r.history_path
                          << "\n";
        } else if (learn->parsed()) {
            const auto csv = gpal::load_csv(data_path);
            auto oracle = oracle_flags.make();
            gpal::ExperimentConfig config;
            config.mode = gpal::Mode::learn;
            config.iterations = iterations;
            config.methods = parse_methods(methods_str);
            for (const auto& tok : split_commas(known_indices_str))
                config.known_indices.push_back(static_cast<int>(gpal::parse_long(tok)));
            for (const auto& tok : split_commas(known_labels_str))
                config.known_labels.push_back(gpal::parse_double(tok));
            config.seed = seed;
            config.output_dir = out_dir;
            config.kernel.kind = kernel_from_flag(kernel_str);
            const auto results = gpal::run_learn(config, csv.features, *oracle);
            for (const auto& r : results) std::cout << r.final_snapshot_path << "\n";
        } else {
            const auto header = gpal::parse_history(history_path).first;
            std::optional<gpal::LabelVector> labels;
            std::unique_ptr<gpal::Oracle> oracle;
            if (data_path.empty())
                throw std::invalid_argument("--data is required to resume an experiment");
            if (header.mode == gpal::Mode::benchmark) {
                if (label_column.empty())
                    throw std::invalid_argument(
                        "--label-column is required to resume a benchmark history");
                const auto csv = gpal::load_csv(data_path, label_column);
                labels = csv.labels;
                const auto r =
                    gpal::resume(history_path, extra_iterations, csv.features, labels, nullptr);
                std::cout << r.history_path << ": +" << extra_iterations << " iterations, AUC="
                          << gpal::format_double(r.auc) << "\n";
            } else {
                const auto csv = gpal::load_csv(data_path);
                oracle = oracle_flags.make();
                const auto r = gpal::resume(history_path, extra_iterations, csv.features,
                                            std::nullopt, oracle.get());
                std::cout << r.final_snapshot_path << "\n";
            }
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFlagError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return 0;
}
