#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpal {

enum class MetricKind { rmse, r2 };

inline std::string metric_kind_name(MetricKind m) {
    return m == MetricKind::rmse ? "rmse" : "r2";
}

/// Header token of the run-history file ("RMSE" or "R2").
inline std::string metric_header_token(MetricKind m) {
    return m == MetricKind::rmse ? "RMSE" : "R2";
}

inline MetricKind metric_kind_from_name(const std::string& s) {
    if (s == "rmse") return MetricKind::rmse;
    if (s == "r2") return MetricKind::r2;
    throw std::runtime_error("unknown metric: '" + s + "'");
}

inline double rmse(const std::vector<double>& predictions, const std::vector<double>& truths) {
    if (predictions.size() != truths.size()) throw std::invalid_argument("rmse: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("rmse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - truths[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(predictions.size()));
}

inline double r2(const std::vector<double>& predictions, const std::vector<double>& truths) {
    if (predictions.size() != truths.size()) throw std::invalid_argument("r2: length mismatch");
    if (predictions.size() < 2) throw std::invalid_argument("r2: need at least 2 pairs");
    double mean = 0.0;
    for (double t : truths) mean += t;
    mean /= static_cast<double>(truths.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        ss_res += (predictions[i] - truths[i]) * (predictions[i] - truths[i]);
        ss_tot += (truths[i] - mean) * (truths[i] - mean);
    }
    if (ss_tot == 0.0) throw std::invalid_argument("r2: zero variance in truths");
    return 1.0 - ss_res / ss_tot;
}

/// Trapezoidal rule with unit spacing over the iteration index; a
/// length-1 series has area 0.
inline double auc(const std::vector<double>& series) {
    if (series.empty()) throw std::invalid_argument("auc: empty series");
    double a = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) a += 0.5 * (series[i - 1] + series[i]);
    return a;
}

}  // namespace gpal
