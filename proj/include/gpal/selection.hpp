#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpal/gp.hpp"

namespace gpal {

enum class SelectionMethod { random, uncertainty, covariance, qbc, fft };

inline std::string selection_method_name(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::random: return "random";
        case SelectionMethod::uncertainty: return "uncertainty";
        case SelectionMethod::covariance: return "covariance";
        case SelectionMethod::qbc: return "qbc";
        case SelectionMethod::fft: return "fft";
    }
    throw std::logic_error("unreachable selection method");
}

inline SelectionMethod selection_method_from_name(const std::string& s) {
    if (s == "random") return SelectionMethod::random;
    if (s == "uncertainty") return SelectionMethod::uncertainty;
    if (s == "covariance") return SelectionMethod::covariance;
    if (s == "qbc") return SelectionMethod::qbc;
    if (s == "fft") return SelectionMethod::fft;
    throw std::invalid_argument("unknown selection method: '" + s + "'");
}

/// Ordered committee of kernel specs for QBC; members must differ in kind
/// or hyperparameters.
struct Committee {
    std::vector<KernelSpec> members;

    static Committee default_committee() {
        Committee c;
        KernelSpec m12;
        m12.kind = KernelKind::matern_half;
        KernelSpec m32;
        m32.kind = KernelKind::matern_three_halves;
        KernelSpec rbf;
        rbf.kind = KernelKind::rbf;
        c.members = {m12, m32, rbf};
        return c;
    }

    void validate() const {
        if (members.size() < 2) throw std::invalid_argument("committee needs at least 2 members");
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                const auto& a = members[i];
                const auto& b = members[j];
                if (a.kind == b.kind && a.signal_variance == b.signal_variance &&
                    a.length_scale == b.length_scale && a.noise_variance == b.noise_variance)
                    throw std::invalid_argument("committee members must be pairwise distinct");
            }
    }
};

/// Row-wise covariance of two feature rows over their N components.
inline double feature_covariance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("feature_covariance: dimension mismatch");
    const Eigen::Index n = a.size();
    if (n < 2) throw std::invalid_argument("feature_covariance: need at least 2 components");
    const double ma = a.mean();
    const double mb = b.mean();
    return ((a.array() - ma) * (b.array() - mb)).sum() / static_cast<double>(n - 1);
}

/// Running sums S_i = sum over j in U, j != i of cov(x_i, x_j). Keeps the
/// full pairwise matrix up to 8192 unlabeled samples; beyond that the
/// removed sample's covariance column is recomputed per removal.
class CovarianceCache {
   public:
    static constexpr std::size_t kMatrixCeiling = 8192;

    CovarianceCache() = default;

    CovarianceCache(const FeatureMatrix& x, const std::set<int>& unlabeled) {
        const std::vector<int> idx(unlabeled.begin(), unlabeled.end());
        keep_matrix_ = idx.size() <= kMatrixCeiling;
        if (keep_matrix_) {
            for (std::size_t a = 0; a < idx.size(); ++a) {
                auto& row = pairwise_[idx[a]];
                for (std::size_t b = 0; b < idx.size(); ++b) {
                    if (a == b) continue;
                    row[idx[b]] = feature_covariance(x.row(idx[a]), x.row(idx[b]));
                }
            }
        } else {
            for (std::size_t a = 0; a < idx.size(); ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < idx.size(); ++b)
                    if (a != b) s += feature_covariance(x.row(idx[a]), x.row(idx[b]));
                sums_[idx[a]] = s;
            }
        }
    }

    std::size_t size() const { return keep_matrix_ ? pairwise_.size() : sums_.size(); }

    /// S_idx over the current unlabeled set. In matrix mode the sum is
    /// rebuilt from the stored row in ascending index order, so the value
    /// is bitwise independent of the removal history.
    double sum(int idx) const {
        if (keep_matrix_) {
            auto it = pairwise_.find(idx);
            if (it == pairwise_.end())
                throw std::invalid_argument("covariance cache: index " + std::to_string(idx) +
                                            " not cached");
            double s = 0.0;
            for (const auto& [j, c] : it->second) s += c;
            return s;
        }
        auto it = sums_.find(idx);
        if (it == sums_.end())
            throw std::invalid_argument("covariance cache: index " + std::to_string(idx) +
                                        " not cached");
        return it->second;
    }

    void remove(const FeatureMatrix& x, int removed) {
        if (keep_matrix_) {
            if (pairwise_.erase(removed) == 0)
                throw std::invalid_argument("covariance cache: cannot remove index " +
                                            std::to_string(removed));
            for (auto& [j, row] : pairwise_) row.erase(removed);
            return;
        }
        auto it = sums_.find(removed);
        if (it == sums_.end())
            throw std::invalid_argument("covariance cache: cannot remove index " +
                                        std::to_string(removed));
        sums_.erase(it);
        for (auto& [j, s] : sums_) s -= feature_covariance(x.row(j), x.row(removed));
    }

   private:
    bool keep_matrix_ = false;
    std::map<int, double> sums_;                    // fallback mode only
    std::map<int, std::map<int, double>> pairwise_;  // matrix mode only
};

namespace detail {

inline FeatureMatrix rows_of(const FeatureMatrix& x, const std::vector<int>& idx) {
    FeatureMatrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    return out;
}

// argmax with smallest-pool-index tie break; candidates iterate ascending
template <typename Score>
inline int argmax_over(const std::set<int>& unlabeled, Score&& score) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int idx : unlabeled) {
        const double s = score(idx);
        if (s > best_score) {
            best_score = s;
            best = idx;
        }
    }
    return best;
}

}  // namespace detail

inline int select_uncertainty(const GPModel& model, const FeatureMatrix& x,
                              const std::set<int>& unlabeled) {
    if (unlabeled.empty()) throw std::invalid_argument("select_uncertainty: empty unlabeled set");
    const std::vector<int> idx(unlabeled.begin(), unlabeled.end());
    const auto preds = predict(model, detail::rows_of(x, idx));
    std::size_t pos = 0;
    return detail::argmax_over(unlabeled, [&](int) { return preds[pos++].std; });
}

/// Uncertainty times summed pairwise feature covariance. With a single
/// unlabeled sample the sum is empty; that sample is selected directly.
inline int select_covariance(const GPModel& model, const FeatureMatrix& x,
                             const std::set<int>& unlabeled, const CovarianceCache& cache) {
    if (unlabeled.empty()) throw std::invalid_argument("select_covariance: empty unlabeled set");
    if (unlabeled.size() == 1) return *unlabeled.begin();
    if (cache.size() != unlabeled.size())
        throw std::invalid_argument("select_covariance: stale covariance cache");
    const std::vector<int> idx(unlabeled.begin(), unlabeled.end());
    const auto preds = predict(model, detail::rows_of(x, idx));
    std::size_t pos = 0;
    return detail::argmax_over(unlabeled,
                               [&](int i) { return preds[pos++].std * cache.sum(i); });
}

inline int select_qbc(const std::vector<GPModel>& committee_models, const FeatureMatrix& x,
                      const std::set<int>& unlabeled) {
    if (committee_models.size() < 2)
        throw std::invalid_argument("select_qbc: committee needs at least 2 fitted members");
    if (unlabeled.empty()) throw std::invalid_argument("select_qbc: empty unlabeled set");
    const std::vector<int> idx(unlabeled.begin(), unlabeled.end());
    const FeatureMatrix cand = detail::rows_of(x, idx);
    std::vector<std::vector<Prediction>> preds;
    preds.reserve(committee_models.size());
    for (const auto& m : committee_models) preds.push_back(predict(m, cand));
    std::size_t pos = 0;
    return detail::argmax_over(unlabeled, [&](int) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& p : preds) {
            lo = std::min(lo, p[pos].mean);
            hi = std::max(hi, p[pos].mean);
        }
        ++pos;
        return hi - lo;
    });
}

inline int select_random(const std::set<int>& unlabeled, std::mt19937_64& rng) {
    if (unlabeled.empty()) throw std::invalid_argument("select_random: empty unlabeled set");
    auto it = unlabeled.begin();
    std::advance(it, static_cast<long>(uniform_index(rng, unlabeled.size())));
    return *it;
}

inline int select_fft(const FeatureMatrix& x, const std::vector<int>& labeled,
                      const std::set<int>& unlabeled) {
    if (labeled.empty()) throw std::invalid_argument("select_fft: empty labeled set");
    if (unlabeled.empty()) throw std::invalid_argument("select_fft: empty unlabeled set");
    return detail::argmax_over(unlabeled, [&](int i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (int j : labeled) dmin = std::min(dmin, (x.row(i) - x.row(j)).norm());
        return dmin;
    });
}

}  // namespace gpal
