#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <stdexcept>
#include <vector>

#include "gpal/kernels.hpp"
#include "gpal/util.hpp"

namespace gpal {

struct Prediction {
    double mean;
    double std;
};

/// Counts successful fits; the experiment layer exposes it for runtime
/// accounting (one fit per iteration, plus one per committee member for QBC).
inline std::atomic<std::uint64_t> gp_fit_count{0};

struct GPModel {
    KernelSpec spec;
    std::vector<int> train_indices;
    FeatureMatrix train_features;
    LabelVector train_targets;  // raw target units
    double target_mean = 0.0;
    double target_std = 1.0;
    Eigen::MatrixXd chol;   // lower-triangular L with L L^T = K + (sigma_n^2+jitter) I
    Eigen::VectorXd dual;   // alpha solving K alpha = y_std
    double lml = 0.0;
};

namespace detail {

struct LmlResult {
    double value;
    Eigen::Vector3d gradient;  // d/dlog(sigma_f^2, l, sigma_n^2)
};

inline Eigen::LLT<Eigen::MatrixXd> noisy_cholesky(const KernelSpec& spec,
                                                  const FeatureMatrix& x) {
    Eigen::LLT<Eigen::MatrixXd> llt(kernel_matrix(spec, x, x, /*add_noise=*/true));
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("degenerate kernel: Cholesky factorization failed");
    return llt;
}

}  // namespace detail

/// Log marginal likelihood of standardized targets and its gradient in
/// log-hyperparameter space.
inline double log_marginal_likelihood(const KernelSpec& spec, const FeatureMatrix& x,
                                      const Eigen::VectorXd& y_std,
                                      Eigen::Vector3d* gradient = nullptr) {
    if (x.rows() == 0) throw std::invalid_argument("log_marginal_likelihood: empty training set");
    const auto llt = detail::noisy_cholesky(spec, x);
    const Eigen::VectorXd alpha = llt.solve(y_std);
    const Eigen::MatrixXd& l = llt.matrixLLT();
    const double n = static_cast<double>(x.rows());
    const double value = -0.5 * y_std.dot(alpha) - l.diagonal().array().log().sum() -
                         0.5 * n * std::log(2.0 * M_PI);
    if (gradient) {
        const Eigen::MatrixXd kinv =
            llt.solve(Eigen::MatrixXd::Identity(x.rows(), x.rows()));
        const Eigen::MatrixXd m = alpha * alpha.transpose() - kinv;
        const auto dk = kernel_gradient(spec, x);
        for (int j = 0; j < 3; ++j) (*gradient)(j) = 0.5 * m.cwiseProduct(dk[j]).sum();
    }
    return value;
}

namespace detail {

inline Eigen::Vector3d log_params(const KernelSpec& s) {
    return {std::log(s.signal_variance), std::log(s.length_scale), std::log(s.noise_variance)};
}

inline KernelSpec with_log_params(KernelSpec s, const Eigen::Vector3d& p) {
    // exp(log(bound)) can land one ulp outside the bound, so re-clamp linearly
    s.signal_variance = std::clamp(std::exp(p(0)), s.signal_bounds.lo, s.signal_bounds.hi);
    s.length_scale = std::clamp(std::exp(p(1)), s.length_bounds.lo, s.length_bounds.hi);
    s.noise_variance = std::clamp(std::exp(p(2)), s.noise_bounds.lo, s.noise_bounds.hi);
    return s;
}

inline Eigen::Vector3d clamp_log(const KernelSpec& s, Eigen::Vector3d p) {
    const Bounds* b[3] = {&s.signal_bounds, &s.length_bounds, &s.noise_bounds};
    for (int j = 0; j < 3; ++j)
        p(j) = std::clamp(p(j), std::log(b[j]->lo), std::log(b[j]->hi));
    return p;
}

/// Projected gradient ascent in log space with backtracking; deterministic.
/// Returns (best log params, achieved LML).
inline std::pair<Eigen::Vector3d, double> ascend_lml(const KernelSpec& spec0,
                                                     const FeatureMatrix& x,
                                                     const Eigen::VectorXd& y_std) {
    auto eval = [&](const Eigen::Vector3d& p, Eigen::Vector3d* g) -> double {
        try {
            return log_marginal_likelihood(with_log_params(spec0, p), x, y_std, g);
        } catch (const std::runtime_error&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    Eigen::Vector3d p = clamp_log(spec0, log_params(spec0));
    Eigen::Vector3d g;
    double f = eval(p, &g);
    if (!std::isfinite(f)) return {p, f};

    // Sign-based ascent with per-coordinate adaptive steps: the three log
    // gradients differ by orders of magnitude, so raw-gradient steps let one
    // coordinate starve the others and stall in poor optima.
    Eigen::Vector3d delta(0.1, 0.1, 0.1);
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::Vector3d pn;
        double fn = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        while (delta.maxCoeff() > 1e-14) {
            for (int j = 0; j < 3; ++j)
                pn(j) = p(j) + (g(j) > 0 ? delta(j) : g(j) < 0 ? -delta(j) : 0.0);
            pn = clamp_log(spec0, pn);
            fn = eval(pn, nullptr);
            if (fn > f) {
                accepted = true;
                break;
            }
            delta *= 0.5;
        }
        if (!accepted) break;
        const double gain = fn - f;
        Eigen::Vector3d gn;
        p = pn;
        f = eval(p, &gn);
        for (int j = 0; j < 3; ++j)
            delta(j) = gn(j) * g(j) > 0 ? std::min(delta(j) * 1.2, 1.0) : delta(j) * 0.5;
        g = gn;
        if (gain < 1e-9) break;
    }
    return {p, f};
}

}  // namespace detail

/// Fit a GP on the given rows. Targets are standardized internally; with
/// optimize, hyperparameters maximize the LML starting from spec0 plus
/// `restarts` log-uniform starts within bounds, best LML wins (first found
/// on ties).
inline GPModel fit(const FeatureMatrix& x_rows, const LabelVector& y,
                   const std::vector<int>& indices, KernelSpec spec0, bool optimize,
                   int restarts, std::mt19937_64& rng) {
    if (x_rows.rows() < 1) throw std::invalid_argument("fit: need at least one training sample");
    if (y.size() != x_rows.rows()) throw std::invalid_argument("fit: X/y size mismatch");
    if (!y.allFinite()) throw std::invalid_argument("fit: non-finite targets");
    spec0.validate();

    GPModel model;
    model.train_indices = indices;
    model.train_features = x_rows;
    model.train_targets = y;
    model.target_mean = y.mean();
    const double sd = std::sqrt((y.array() - model.target_mean).square().mean());
    model.target_std = sd < 1e-12 ? 1.0 : sd;
    const Eigen::VectorXd y_std = (y.array() - model.target_mean) / model.target_std;

    Eigen::Vector3d best_p = detail::clamp_log(spec0, detail::log_params(spec0));
    if (optimize) {
        auto [p, f] = detail::ascend_lml(spec0, x_rows, y_std);
        best_p = p;
        double best_f = f;
        const Bounds* b[3] = {&spec0.signal_bounds, &spec0.length_bounds, &spec0.noise_bounds};
        for (int r = 0; r < restarts; ++r) {
            Eigen::Vector3d start;
            for (int j = 0; j < 3; ++j)
                start(j) = uniform_real(rng, std::log(b[j]->lo), std::log(b[j]->hi));
            auto [pr, fr] = detail::ascend_lml(detail::with_log_params(spec0, start), x_rows, y_std);
            if (fr > best_f) {
                best_f = fr;
                best_p = pr;
            }
        }
    }

    model.spec = detail::with_log_params(spec0, best_p);
    const auto llt = detail::noisy_cholesky(model.spec, x_rows);
    model.chol = llt.matrixL();
    model.dual = llt.solve(y_std);
    model.lml = -0.5 * y_std.dot(model.dual) - model.chol.diagonal().array().log().sum() -
                0.5 * static_cast<double>(x_rows.rows()) * std::log(2.0 * M_PI);
    ++gp_fit_count;
    return model;
}

inline std::vector<Prediction> predict(const GPModel& model, const FeatureMatrix& x_query) {
    if (x_query.cols() != model.train_features.cols())
        throw std::invalid_argument("predict: feature dimension mismatch");
    const Eigen::MatrixXd kq = kernel_matrix(model.spec, x_query, model.train_features);
    const Eigen::VectorXd mean_std = kq * model.dual;
    // v = L^-1 k(X_t, x); var = k(x,x) + sigma_n^2 - ||v||^2
    const Eigen::MatrixXd v =
        model.chol.triangularView<Eigen::Lower>().solve(kq.transpose());
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(x_query.rows()));
    for (Eigen::Index i = 0; i < x_query.rows(); ++i) {
        double var = model.spec.signal_variance + model.spec.noise_variance -
                     v.col(i).squaredNorm();
        var = std::max(var, 0.0);
        out.push_back({model.target_mean + model.target_std * mean_std(i),
                       model.target_std * std::sqrt(var)});
    }
    return out;
}

inline constexpr int kSnapshotFormatVersion = 1;

inline void snapshot_save(const GPModel& model, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = kSnapshotFormatVersion;
    j["kernel"] = {{"kind", kernel_kind_name(model.spec.kind)},
                   {"signal_variance", model.spec.signal_variance},
                   {"length_scale", model.spec.length_scale},
                   {"noise_variance", model.spec.noise_variance}};
    j["train_indices"] = model.train_indices;
    std::vector<std::vector<double>> feats;
    for (Eigen::Index i = 0; i < model.train_features.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(model.train_features.cols()));
        for (Eigen::Index c = 0; c < model.train_features.cols(); ++c)
            row[static_cast<std::size_t>(c)] = model.train_features(i, c);
        feats.push_back(std::move(row));
    }
    j["train_features"] = feats;
    j["train_targets"] = std::vector<double>(model.train_targets.data(),
                                             model.train_targets.data() + model.train_targets.size());
    j["target_mean"] = model.target_mean;
    j["target_std"] = model.target_std;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write snapshot: " + path);
    out << j.dump() << '\n';
}

inline GPModel snapshot_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open snapshot: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed snapshot " + path + ": " + e.what());
    }
    auto require = [&](const char* field) -> const nlohmann::json& {
        if (!j.contains(field))
            throw std::runtime_error("malformed snapshot " + path + ": missing field '" +
                                     field + "'");
        return j.at(field);
    };
    if (require("format_version").get<int>() != kSnapshotFormatVersion)
        throw std::runtime_error("malformed snapshot " + path + ": wrong version tag");
    const auto& jk = require("kernel");
    for (const char* f : {"kind", "signal_variance", "length_scale", "noise_variance"})
        if (!jk.contains(f))
            throw std::runtime_error("malformed snapshot " + path + ": missing kernel field '" +
                                     std::string(f) + "'");
    GPModel model;
    model.spec.kind = kernel_kind_from_name(jk.at("kind").get<std::string>());
    model.spec.signal_variance = jk.at("signal_variance").get<double>();
    model.spec.length_scale = jk.at("length_scale").get<double>();
    model.spec.noise_variance = jk.at("noise_variance").get<double>();
    model.train_indices = require("train_indices").get<std::vector<int>>();
    const auto feats = require("train_features").get<std::vector<std::vector<double>>>();
    if (feats.empty()) throw std::runtime_error("malformed snapshot " + path + ": no training rows");
    model.train_features.resize(static_cast<Eigen::Index>(feats.size()),
                                static_cast<Eigen::Index>(feats[0].size()));
    for (std::size_t i = 0; i < feats.size(); ++i) {
        if (feats[i].size() != feats[0].size())
            throw std::runtime_error("malformed snapshot " + path + ": ragged train_features");
        for (std::size_t c = 0; c < feats[i].size(); ++c)
            model.train_features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                feats[i][c];
    }
    const auto targets = require("train_targets").get<std::vector<double>>();
    if (targets.size() != feats.size())
        throw std::runtime_error("malformed snapshot " + path + ": target/feature count mismatch");
    model.train_targets =
        Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
    model.target_mean = require("target_mean").get<double>();
    model.target_std = require("target_std").get<double>();
    if (!(model.target_std > 0))
        throw std::runtime_error("malformed snapshot " + path + ": target_std must be positive");

    // refit chol/dual from the stored data and hyperparameters, no optimization
    const Eigen::VectorXd y_std =
        (model.train_targets.array() - model.target_mean) / model.target_std;
    const auto llt = detail::noisy_cholesky(model.spec, model.train_features);
    model.chol = llt.matrixL();
    model.dual = llt.solve(y_std);
    model.lml = -0.5 * y_std.dot(model.dual) - model.chol.diagonal().array().log().sum() -
                0.5 * static_cast<double>(feats.size()) * std::log(2.0 * M_PI);
    return model;
}

}  // namespace gpal
