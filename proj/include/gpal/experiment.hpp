#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpal/dataset.hpp"
#include "gpal/gp.hpp"
#include "gpal/history.hpp"
#include "gpal/metrics.hpp"
#include "gpal/oracle.hpp"
#include "gpal/selection.hpp"

namespace gpal {

struct ExperimentConfig {
    Mode mode = Mode::benchmark;
    int iterations = 1;
    std::vector<SelectionMethod> methods;
    MetricKind metric = MetricKind::rmse;  // benchmark only
    int init_set_size = 0;                 // benchmark only
    std::vector<int> known_indices;        // learn only
    std::vector<double> known_labels;      // learn only
    long seed = 0;
    std::string output_dir = ".";
    Committee committee = Committee::default_committee();
    KernelSpec kernel;  // main model
    int restarts = 2;

    void validate(Eigen::Index pool_size) const {
        if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
        if (methods.empty()) throw std::invalid_argument("methods list must be nonempty");
        for (std::size_t i = 0; i < methods.size(); ++i)
            for (std::size_t j = i + 1; j < methods.size(); ++j)
                if (methods[i] == methods[j])
                    throw std::invalid_argument("duplicate selection method: " +
                                                selection_method_name(methods[i]));
        kernel.validate();
        committee.validate();
        if (mode == Mode::benchmark) {
            if (init_set_size < 1 || init_set_size >= pool_size)
                throw std::invalid_argument("init_set_size must satisfy 1 <= m < pool size");
            if (iterations > pool_size - init_set_size)
                throw std::invalid_argument("iterations exceed the unlabeled pool size");
        } else {
            if (known_indices.empty()) throw std::invalid_argument("known_indices must be nonempty");
            if (known_indices.size() != known_labels.size())
                throw std::invalid_argument("known_indices and known_labels lengths differ");
            std::set<int> seen;
            for (int idx : known_indices) {
                if (idx < 0 || idx >= pool_size)
                    throw std::invalid_argument("known index " + std::to_string(idx) +
                                                " outside pool");
                if (!seen.insert(idx).second)
                    throw std::invalid_argument("duplicate known index " + std::to_string(idx));
            }
            if (iterations > pool_size - static_cast<Eigen::Index>(known_indices.size()))
                throw std::invalid_argument("iterations exceed the unlabeled pool size");
        }
    }
};

struct MethodResult {
    SelectionMethod method;
    std::string history_path;
    std::string final_snapshot_path;
    std::vector<double> metric_series;  // benchmark only
    double final_metric = 0.0;
    double auc = 0.0;
    double runtime_s = 0.0;
};

namespace detail {

// RNG streams, per method run:
//   initial-set draw:  mt19937_64(seed)
//   selection draws:   substream {seed, 1}  (one draw per random-method iteration)
//   restarts:          substream {seed, 2, iteration, member} (member 0 = main model)
inline std::mt19937_64 selection_stream(long seed) {
    std::seed_seq seq{static_cast<unsigned>(seed), 1u};
    return std::mt19937_64(seq);
}

inline std::mt19937_64 restart_stream(long seed, int iteration, int member) {
    std::seed_seq seq{static_cast<unsigned>(seed), 2u, static_cast<unsigned>(iteration),
                      static_cast<unsigned>(member)};
    return std::mt19937_64(seq);
}

struct LoopState {
    IndexSets sets;
    std::map<int, double> labels;
    GPModel model;
    std::optional<CovarianceCache> cov_cache;
    std::mt19937_64 sel_rng;
    double prev_metric = 0.0;
    double auc_cum = 0.0;
    double runtime_cum = 0.0;
    int completed_iterations = 0;
};

inline std::vector<std::pair<std::string, double>> record_hyperparams(const GPModel& m) {
    return {{"signal_variance", m.spec.signal_variance},
            {"length_scale", m.spec.length_scale},
            {"noise_level", m.spec.noise_variance}};
}

inline GPModel fit_on_labeled(const FeatureMatrix& x, const LoopState& st, const KernelSpec& spec0,
                              int restarts, std::mt19937_64 rng) {
    const FeatureMatrix rows = rows_of(x, st.sets.labeled);
    LabelVector y(static_cast<Eigen::Index>(st.sets.labeled.size()));
    for (std::size_t i = 0; i < st.sets.labeled.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = st.labels.at(st.sets.labeled[i]);
    return fit(rows, y, st.sets.labeled, spec0, /*optimize=*/true, restarts, rng);
}

/// Metric of the current model on the held-out (unlabeled) pool. Undefined
/// cases (empty pool, degenerate R2) record 0 so the series stays finite.
inline double evaluate_metric(const GPModel& model, const FeatureMatrix& x,
                              const std::set<int>& unlabeled,
                              const std::map<int, double>& truth, MetricKind metric) {
    if (unlabeled.empty()) return 0.0;
    const std::vector<int> idx(unlabeled.begin(), unlabeled.end());
    const auto preds = predict(model, rows_of(x, idx));
    std::vector<double> p(idx.size()), t(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        p[i] = preds[i].mean;
        t[i] = truth.at(idx[i]);
    }
    try {
        return metric == MetricKind::rmse ? rmse(p, t) : r2(p, t);
    } catch (const std::invalid_argument&) {
        return 0.0;
    }
}

struct MethodRunner {
    const ExperimentConfig& config;
    const FeatureMatrix& x;
    SelectionMethod method;
    const std::map<int, double>* truth;  // benchmark: full label table
    Oracle* oracle;                      // learn mode
    std::string history_path;
    LoopState st;
    std::string last_snapshot_path;

    std::string snapshot_path(int iteration) const {
        return (std::filesystem::path(config.output_dir) / snapshot_name(method, iteration))
            .string();
    }

    void write_record(int iteration, double elapsed_s) {
        const std::string snap = snapshot_name(method, iteration);
        last_snapshot_path = snapshot_path(iteration);
        snapshot_save(st.model, last_snapshot_path);
        st.runtime_cum += elapsed_s;
        RunRecord rec;
        rec.snapshot_file = snap;
        rec.labeled = st.sets.labeled;
        for (int i : st.sets.labeled) rec.labels.push_back(st.labels.at(i));
        rec.hyperparams = record_hyperparams(st.model);
        rec.metric_value = st.prev_metric;
        rec.auc_cum = st.auc_cum;
        rec.runtime_cum = st.runtime_cum;
        append_record(history_path, rec, config.mode);
    }

    int select_next() {
        switch (method) {
            case SelectionMethod::random:
                return select_random(st.sets.unlabeled, st.sel_rng);
            case SelectionMethod::uncertainty:
                return select_uncertainty(st.model, x, st.sets.unlabeled);
            case SelectionMethod::covariance:
                return select_covariance(st.model, x, st.sets.unlabeled, *st.cov_cache);
            case SelectionMethod::fft:
                return select_fft(x, st.sets.labeled, st.sets.unlabeled);
            case SelectionMethod::qbc: {
                std::vector<GPModel> members;
                members.reserve(config.committee.members.size());
                const int it = st.completed_iterations + 1;
                for (std::size_t m = 0; m < config.committee.members.size(); ++m)
                    members.push_back(fit_on_labeled(
                        x, st, config.committee.members[m], config.restarts,
                        restart_stream(config.seed, it, static_cast<int>(m) + 1)));
                return select_qbc(members, x, st.sets.unlabeled);
            }
        }
        throw std::logic_error("unreachable selection method");
    }

    double label_of(int idx) {
        if (config.mode == Mode::benchmark) return truth->at(idx);
        return oracle->label(x.row(idx), idx);
    }

    void run_iterations(int count) {
        if (method == SelectionMethod::covariance && !st.cov_cache)
            st.cov_cache.emplace(x, st.sets.unlabeled);
        for (int i = 0; i < count; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            const int chosen = select_next();
            const double y_new = label_of(chosen);
            st.labels[chosen] = y_new;
            st.sets.move_to_labeled(chosen);
            if (st.cov_cache) st.cov_cache->remove(x, chosen);
            ++st.completed_iterations;
            st.model = fit_on_labeled(x, st, st.model.spec, config.restarts,
                                      restart_stream(config.seed, st.completed_iterations, 0));
            if (config.mode == Mode::benchmark) {
                const double e =
                    evaluate_metric(st.model, x, st.sets.unlabeled, *truth, config.metric);
                st.auc_cum += 0.5 * (st.prev_metric + e);
                st.prev_metric = e;
            }
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_record(st.completed_iterations, elapsed);
        }
    }

    /// Fresh run: draw/accept the initial set, fit the initial model, write
    /// header and the iteration-0 record, then iterate.
    MethodResult run_fresh() {
        std::filesystem::create_directories(config.output_dir);
        history_path =
            (std::filesystem::path(config.output_dir) / history_file_name(config.mode, method))
                .string();

        const auto t0 = std::chrono::steady_clock::now();
        if (config.mode == Mode::benchmark) {
            std::mt19937_64 init_rng(static_cast<std::uint64_t>(config.seed));
            st.sets = draw_initial_set(static_cast<int>(x.rows()), config.init_set_size, init_rng);
            for (int i : st.sets.labeled) st.labels[i] = truth->at(i);
        } else {
            st.sets.labeled = config.known_indices;
            std::set<int> lab(config.known_indices.begin(), config.known_indices.end());
            for (int i = 0; i < static_cast<int>(x.rows()); ++i)
                if (!lab.count(i)) st.sets.unlabeled.insert(i);
            for (std::size_t i = 0; i < config.known_indices.size(); ++i)
                st.labels[config.known_indices[i]] = config.known_labels[i];
        }
        st.sel_rng = selection_stream(config.seed);
        st.model = fit_on_labeled(x, st, config.kernel, config.restarts,
                                  restart_stream(config.seed, 0, 0));
        if (config.mode == Mode::benchmark)
            st.prev_metric = evaluate_metric(st.model, x, st.sets.unlabeled, *truth, config.metric);

        RunHeader header;
        header.start_time = current_time_token();
        header.mode = config.mode;
        header.method = method;
        header.seed = config.seed;
        header.metric = config.metric;
        write_header(history_path, header);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_record(0, elapsed);

        run_iterations(config.iterations);
        return result();
    }

    MethodResult result() const {
        MethodResult r;
        r.method = method;
        r.history_path = history_path;
        r.final_snapshot_path = last_snapshot_path;
        if (config.mode == Mode::benchmark) {
            const auto parsed = parse_history(history_path);
            for (const auto& rec : parsed.second) r.metric_series.push_back(rec.metric_value);
            r.final_metric = st.prev_metric;
        }
        r.auc = st.auc_cum;
        r.runtime_s = st.runtime_cum;
        return r;
    }
};

inline std::map<int, double> truth_table(const LabelVector& y) {
    std::map<int, double> t;
    for (Eigen::Index i = 0; i < y.size(); ++i) t[static_cast<int>(i)] = y(i);
    return t;
}

}  // namespace detail

/// Benchmark mode: labels are fully known and revealed incrementally. Each
/// method runs independently from the same seed, so all methods share one
/// initial set.
inline std::vector<MethodResult> run_benchmark(const ExperimentConfig& config,
                                               const FeatureMatrix& x, const LabelVector& y) {
    if (config.mode != Mode::benchmark)
        throw std::invalid_argument("run_benchmark requires mode=benchmark");
    if (y.size() != x.rows()) throw std::invalid_argument("label vector length != pool size");
    config.validate(x.rows());
    const auto truth = detail::truth_table(y);
    std::vector<MethodResult> results;
    for (auto method : config.methods) {
        detail::MethodRunner runner{config, x, method, &truth, nullptr};
        results.push_back(runner.run_fresh());
    }
    return results;
}

/// Learn mode: labels of selected samples come from the oracle. An oracle
/// failure aborts after all completed records are flushed, so the history
/// stays resumable.
inline std::vector<MethodResult> run_learn(const ExperimentConfig& config, const FeatureMatrix& x,
                                           Oracle& oracle) {
    if (config.mode != Mode::learn) throw std::invalid_argument("run_learn requires mode=learn");
    config.validate(x.rows());
    std::vector<MethodResult> results;
    for (auto method : config.methods) {
        detail::MethodRunner runner{config, x, method, nullptr, &oracle};
        results.push_back(runner.run_fresh());
    }
    return results;
}

/// Resume a history file by extra_iterations, reusing the fixed settings
/// from its header. Benchmark mode needs the original dataset's labels;
/// learn mode needs an oracle.
inline MethodResult resume(const std::string& history_path, int extra_iterations,
                           const FeatureMatrix& x, const std::optional<LabelVector>& y,
                           Oracle* oracle,
                           const Committee& committee = Committee::default_committee(),
                           int restarts = 2) {
    if (extra_iterations < 0) throw std::invalid_argument("extra_iterations must be >= 0");
    const auto [header, records] = parse_history(history_path);
    if (records.empty()) throw std::runtime_error(history_path + ": no records to resume from");
    if (header.mode == Mode::learn && oracle == nullptr)
        throw std::invalid_argument("resuming a learn history requires an oracle");
    if (header.mode == Mode::benchmark && !y)
        throw std::invalid_argument("resuming a benchmark history requires the original dataset");
    if (header.mode == Mode::benchmark && y->size() != x.rows())
        throw std::invalid_argument("label vector length != pool size");

    const auto& last = records.back();
    const std::string dir = std::filesystem::path(history_path).parent_path().string();

    ExperimentConfig config;
    config.mode = header.mode;
    config.iterations = extra_iterations;
    config.methods = {header.method};
    config.metric = header.metric;
    config.seed = header.seed;
    config.output_dir = dir.empty() ? "." : dir;
    config.committee = committee;
    config.restarts = restarts;

    std::map<int, double> truth;
    if (header.mode == Mode::benchmark) truth = detail::truth_table(*y);

    detail::MethodRunner runner{config, x, header.method,
                                header.mode == Mode::benchmark ? &truth : nullptr, oracle};
    runner.history_path = history_path;
    runner.last_snapshot_path = runner.snapshot_path(static_cast<int>(records.size()) - 1);
    if (!std::filesystem::exists(runner.last_snapshot_path))
        throw std::runtime_error("missing snapshot file: " + runner.last_snapshot_path);

    auto& st = runner.st;
    st.model = snapshot_load(runner.last_snapshot_path);
    if (st.model.train_indices != last.labeled)
        throw std::runtime_error(history_path +
                                 ": snapshot training indices disagree with last record");
    st.sets.labeled = last.labeled;
    {
        std::set<int> lab(last.labeled.begin(), last.labeled.end());
        for (int i = 0; i < static_cast<int>(x.rows()); ++i)
            if (!lab.count(i)) st.sets.unlabeled.insert(i);
    }
    for (std::size_t i = 0; i < last.labeled.size(); ++i)
        st.labels[last.labeled[i]] = last.labels[i];
    if (header.mode == Mode::benchmark) {
        for (const auto& [idx, lab] : st.labels)
            if (truth.at(idx) != lab)
                throw std::runtime_error(history_path +
                                         ": recorded labels disagree with the supplied dataset");
    }
    st.prev_metric = last.metric_value;
    st.auc_cum = last.auc_cum;
    st.runtime_cum = last.runtime_cum;
    st.completed_iterations = static_cast<int>(records.size()) - 1;
    if (extra_iterations >
        static_cast<int>(st.sets.unlabeled.size()))
        throw std::invalid_argument("extra_iterations exceed the unlabeled pool size");

    // replay the selection stream to its recorded position
    st.sel_rng = detail::selection_stream(header.seed);
    if (header.method == SelectionMethod::random) {
        const std::size_t init_size = records.front().labeled.size();
        const std::size_t n = static_cast<std::size_t>(x.rows());
        for (int k = 0; k < st.completed_iterations; ++k)
            uniform_index(st.sel_rng, n - init_size - static_cast<std::size_t>(k));
    }

    runner.run_iterations(extra_iterations);
    return runner.result();
}

}  // namespace gpal
