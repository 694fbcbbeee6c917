#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpal/experiment.hpp"

using namespace gpal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("test_experiment_out") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

FeatureMatrix grid_1d(int n, double lo, double hi) {
    FeatureMatrix x(n, 1);
    for (int i = 0; i < n; ++i)
        x(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

LabelVector apply_sin(const FeatureMatrix& x) {
    LabelVector y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = std::sin(2.0 * x(i, 0));
    return y;
}

ExperimentConfig small_config(const std::string& out_dir) {
    ExperimentConfig c;
    c.mode = Mode::benchmark;
    c.iterations = 3;
    c.methods = {SelectionMethod::uncertainty};
    c.init_set_size = 4;
    c.seed = 17;
    c.output_dir = out_dir;
    c.restarts = 1;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// strips the start-time token and the trailing runtime column
std::string masked(const std::string& content) {
    std::stringstream out;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("#start time: ", 0) == 0) {
            out << "#start time: <masked>" << line.substr(line.find(',')) << '\n';
        } else if (!line.empty() && line[0] != '#') {
            out << line.substr(0, line.rfind('\t')) << '\n';
        } else {
            out << line << '\n';
        }
    }
    return out.str();
}

}  // namespace

TEST_CASE("benchmark run produces iterations+1 chained records") {
    TempDir dir("basic");
    const auto x = grid_1d(20, -2, 2);
    const auto y = apply_sin(x);
    auto config = small_config(dir.path.string());
    config.methods = {SelectionMethod::random};
    config.iterations = 16;  // exhausts the pool of 20 - 4
    const auto results = run_benchmark(config, x, y);
    REQUIRE(results.size() == 1);
    const auto [header, records] = parse_history(results[0].history_path);
    REQUIRE(records.size() == 17);
    CHECK(records.front().labeled.size() == 4);
    CHECK(records.back().labeled.size() == 20);
    CHECK(header.method == SelectionMethod::random);
    for (const auto& rec : records)
        CHECK(fs::exists(dir.path / rec.snapshot_file));
}

TEST_CASE("all methods in one call share the initial set") {
    TempDir dir("shared_init");
    const auto x = grid_1d(25, -2, 2);
    const auto y = apply_sin(x);
    auto config = small_config(dir.path.string());
    config.iterations = 2;
    config.methods = {SelectionMethod::uncertainty, SelectionMethod::random,
                      SelectionMethod::fft};
    const auto results = run_benchmark(config, x, y);
    REQUIRE(results.size() == 3);
    std::vector<int> first;
    for (const auto& r : results) {
        const auto records = parse_history(r.history_path).second;
        if (first.empty())
            first = records.front().labeled;
        else
            CHECK(records.front().labeled == first);
    }
}

TEST_CASE("identical config and seed give masked-identical history files") {
    const auto x = grid_1d(25, -2, 2);
    const auto y = apply_sin(x);
    std::string c1, c2;
    {
        TempDir dir("det1");
        auto config = small_config(dir.path.string());
        const auto r = run_benchmark(config, x, y);
        c1 = slurp(r[0].history_path);
    }
    {
        TempDir dir("det2");
        auto config = small_config(dir.path.string());
        const auto r = run_benchmark(config, x, y);
        c2 = slurp(r[0].history_path);
    }
    CHECK(masked(c1) == masked(c2));
}

TEST_CASE("fit counts per iteration: 1 for plain methods, 1+committee for qbc") {
    const auto x = grid_1d(20, -2, 2);
    const auto y = apply_sin(x);
    for (auto method : {SelectionMethod::uncertainty, SelectionMethod::qbc}) {
        TempDir dir("fits_" + selection_method_name(method));
        auto config = small_config(dir.path.string());
        config.methods = {method};
        config.iterations = 3;
        const auto before = gp_fit_count.load();
        run_benchmark(config, x, y);
        const auto fits = gp_fit_count.load() - before;
        const std::uint64_t per_iter = method == SelectionMethod::qbc ? 4 : 1;
        CHECK(fits == 1 + 3 * per_iter);  // initial fit + per-iteration fits
    }
}

TEST_CASE("learn mode: known indices appear verbatim and the model improves") {
    TempDir dir("learn");
    const auto x = grid_1d(60, -2, 2);

    struct SquareOracle final : Oracle {
        double label(const Eigen::Ref<const Eigen::RowVectorXd>& x, int) override {
            return x(0) * x(0);
        }
    } oracle;

    ExperimentConfig config;
    config.mode = Mode::learn;
    config.iterations = 20;
    config.methods = {SelectionMethod::uncertainty};
    config.known_indices = {2, 20, 59};
    config.known_labels = {x(2, 0) * x(2, 0), x(20, 0) * x(20, 0), x(59, 0) * x(59, 0)};
    config.seed = 3;
    config.output_dir = dir.path.string();
    config.restarts = 1;

    const auto results = run_learn(config, x, oracle);
    const auto records = parse_history(results[0].history_path).second;
    REQUIRE(records.size() == 21);
    CHECK(records.front().labeled == std::vector<int>{2, 20, 59});

    const auto initial = snapshot_load((dir.path / records.front().snapshot_file).string());
    const auto final_model = snapshot_load((dir.path / records.back().snapshot_file).string());
    const auto grid = grid_1d(101, -2, 2);
    double rmse_initial = 0.0, rmse_final = 0.0;
    const auto p0 = predict(initial, grid);
    const auto p1 = predict(final_model, grid);
    for (int i = 0; i < 101; ++i) {
        const double truth = grid(i, 0) * grid(i, 0);
        rmse_initial += (p0[i].mean - truth) * (p0[i].mean - truth);
        rmse_final += (p1[i].mean - truth) * (p1[i].mean - truth);
    }
    CHECK(rmse_final < rmse_initial);
}

TEST_CASE("oracle failure aborts resumably after flushing records") {
    TempDir dir("abort");
    const auto x = grid_1d(40, -2, 2);

    struct FailingOracle final : Oracle {
        int calls = 0;
        double label(const Eigen::Ref<const Eigen::RowVectorXd>& x, int) override {
            if (++calls > 5) throw OracleFailure("lab equipment on fire");
            return x(0);
        }
    } oracle;

    ExperimentConfig config;
    config.mode = Mode::learn;
    config.iterations = 10;
    config.methods = {SelectionMethod::fft};
    config.known_indices = {0, 39};
    config.known_labels = {x(0, 0), x(39, 0)};
    config.seed = 1;
    config.output_dir = dir.path.string();
    config.restarts = 0;

    CHECK_THROWS_AS(run_learn(config, x, oracle), OracleFailure);
    const auto path = dir.path / history_file_name(Mode::learn, SelectionMethod::fft);
    const auto records = parse_history(path.string()).second;
    CHECK(records.size() == 6);  // initial + 5 completed iterations
}

TEST_CASE("resume extends a benchmark run identically to a straight run") {
    const auto x = grid_1d(30, -2, 2);
    const auto y = apply_sin(x);
    for (auto method : {SelectionMethod::random, SelectionMethod::uncertainty}) {
        TempDir d_split("res_split_" + selection_method_name(method));
        TempDir d_straight("res_straight_" + selection_method_name(method));
        auto config = small_config(d_split.path.string());
        config.methods = {method};
        config.iterations = 4;
        const auto part = run_benchmark(config, x, y);
        resume(part[0].history_path, 3, x, y, nullptr, config.committee, config.restarts);

        config.output_dir = d_straight.path.string();
        config.iterations = 7;
        const auto full = run_benchmark(config, x, y);

        const auto split_records = parse_history(part[0].history_path).second;
        const auto full_records = parse_history(full[0].history_path).second;
        REQUIRE(split_records.size() == full_records.size());
        for (std::size_t i = 0; i < split_records.size(); ++i) {
            REQUIRE(split_records[i].labeled == full_records[i].labeled);
            REQUIRE(split_records[i].hyperparams == full_records[i].hyperparams);
        }
    }
}

TEST_CASE("resume with zero extra iterations is a no-op") {
    TempDir dir("res_noop");
    const auto x = grid_1d(20, -2, 2);
    const auto y = apply_sin(x);
    auto config = small_config(dir.path.string());
    const auto r = run_benchmark(config, x, y);
    const auto before = slurp(r[0].history_path);
    resume(r[0].history_path, 0, x, y, nullptr);
    CHECK(slurp(r[0].history_path) == before);
}

TEST_CASE("resume preconditions") {
    TempDir dir("res_pre");
    const auto x = grid_1d(20, -2, 2);
    const auto y = apply_sin(x);

    struct EchoOracle final : Oracle {
        double label(const Eigen::Ref<const Eigen::RowVectorXd>& x, int) override {
            return x(0);
        }
    } oracle;

    ExperimentConfig config;
    config.mode = Mode::learn;
    config.iterations = 2;
    config.methods = {SelectionMethod::uncertainty};
    config.known_indices = {0, 19};
    config.known_labels = {x(0, 0), x(19, 0)};
    config.seed = 4;
    config.output_dir = dir.path.string();
    config.restarts = 0;
    const auto r = run_learn(config, x, oracle);

    // learn history without an oracle
    CHECK_THROWS(resume(r[0].history_path, 2, x, std::nullopt, nullptr));
    const auto before = slurp(r[0].history_path);
    CHECK(slurp(r[0].history_path) == before);  // no state change

    // missing snapshot
    fs::remove(dir.path / "model_uncertainty_00002.json");
    CHECK_THROWS_WITH(resume(r[0].history_path, 1, x, std::nullopt, &oracle),
                      Catch::Matchers::ContainsSubstring("snapshot"));
}

TEST_CASE("benchmark resume rejects a mismatched dataset") {
    TempDir dir("res_mismatch");
    const auto x = grid_1d(20, -2, 2);
    const auto y = apply_sin(x);
    auto config = small_config(dir.path.string());
    config.iterations = 2;
    const auto r = run_benchmark(config, x, y);
    LabelVector wrong = y;
    wrong(0) += 1.0;
    wrong(10) += 1.0;
    CHECK_THROWS_WITH(resume(r[0].history_path, 1, x, wrong, nullptr),
                      Catch::Matchers::ContainsSubstring("disagree"));
}

TEST_CASE("config validation") {
    const auto x = grid_1d(10, 0, 1);
    const auto y = apply_sin(x);
    ExperimentConfig config;
    config.mode = Mode::benchmark;
    config.methods = {SelectionMethod::random, SelectionMethod::random};
    config.init_set_size = 2;
    config.iterations = 1;
    CHECK_THROWS_WITH(config.validate(10), Catch::Matchers::ContainsSubstring("duplicate"));
    config.methods = {SelectionMethod::random};
    config.init_set_size = 0;
    CHECK_THROWS(config.validate(10));
    config.init_set_size = 2;
    config.iterations = 9;
    CHECK_THROWS_WITH(config.validate(10), Catch::Matchers::ContainsSubstring("exceed"));
    config.iterations = 8;
    CHECK_NOTHROW(config.validate(10));
}
