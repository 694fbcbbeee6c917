#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gpal/dataset.hpp"

namespace gpal {

enum class KernelKind { rbf, matern_half, matern_three_halves };

inline std::string kernel_kind_name(KernelKind k) {
    switch (k) {
        case KernelKind::rbf: return "rbf";
        case KernelKind::matern_half: return "matern_half";
        case KernelKind::matern_three_halves: return "matern_three_halves";
    }
    throw std::logic_error("unreachable kernel kind");
}

inline KernelKind kernel_kind_from_name(const std::string& s) {
    if (s == "rbf") return KernelKind::rbf;
    if (s == "matern_half") return KernelKind::matern_half;
    if (s == "matern_three_halves") return KernelKind::matern_three_halves;
    throw std::runtime_error("unknown kernel kind: '" + s + "'");
}

struct Bounds {
    double lo;
    double hi;
};

inline constexpr double kJitter = 1e-10;  // always added to training diagonals

/// Kernel family plus hyperparameters and their optimization bounds.
/// The noise term sigma_n^2 lives here but is never part of kernel_eval;
/// it is added (with jitter) to training-matrix diagonals only.
struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double signal_variance = 1.0;
    double length_scale = 1.0;
    double noise_variance = 1e-5;
    Bounds signal_bounds{1e-5, 1e5};
    Bounds length_bounds{1e-5, 1e5};
    Bounds noise_bounds{1e-10, 1e1};

    void validate() const {
        if (!(signal_variance > 0) || !(length_scale > 0) || !(noise_variance >= 0))
            throw std::invalid_argument("kernel hyperparameters must be positive");
        for (const auto& b : {signal_bounds, length_bounds, noise_bounds})
            if (!(b.lo > 0) || !(b.hi > b.lo) || !std::isfinite(b.hi))
                throw std::invalid_argument("kernel bounds must be positive finite intervals");
    }
};

inline double euclidean_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("euclidean_distance: dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                    ")");
    return (a - b).norm();
}

namespace detail {

inline double kernel_of_distance(const KernelSpec& spec, double d) {
    const double l = spec.length_scale;
    switch (spec.kind) {
        case KernelKind::rbf:
            return spec.signal_variance * std::exp(-d * d / (2.0 * l * l));
        case KernelKind::matern_half:
            return spec.signal_variance * std::exp(-d / l);
        case KernelKind::matern_three_halves: {
            const double a = std::sqrt(3.0) * d / l;
            return spec.signal_variance * (1.0 + a) * std::exp(-a);
        }
    }
    throw std::logic_error("unreachable kernel kind");
}

// d(noise-free k)/d(log l)
inline double kernel_dlogl(const KernelSpec& spec, double d) {
    const double l = spec.length_scale;
    switch (spec.kind) {
        case KernelKind::rbf: {
            const double q = d * d / (l * l);
            return spec.signal_variance * std::exp(-0.5 * q) * q;
        }
        case KernelKind::matern_half: {
            const double a = d / l;
            return spec.signal_variance * std::exp(-a) * a;
        }
        case KernelKind::matern_three_halves: {
            const double a = std::sqrt(3.0) * d / l;
            return spec.signal_variance * a * a * std::exp(-a);
        }
    }
    throw std::logic_error("unreachable kernel kind");
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                          const Eigen::Ref<const Eigen::RowVectorXd>& b) {
    spec.validate();
    return detail::kernel_of_distance(spec, euclidean_distance(a, b));
}

/// Pairwise kernel matrix K(i,j) = k(x_a_i, x_b_j). With add_noise the
/// caller asserts X_a == X_b and sigma_n^2 + jitter is added to the diagonal.
inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const FeatureMatrix& a,
                                     const FeatureMatrix& b, bool add_noise = false) {
    spec.validate();
    if (a.cols() != b.cols())
        throw std::invalid_argument("kernel_matrix: feature dimension mismatch");
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            k(i, j) = detail::kernel_of_distance(spec, (a.row(i) - b.row(j)).norm());
    if (add_noise) {
        if (a.rows() != b.rows())
            throw std::invalid_argument("kernel_matrix: add_noise requires a square matrix");
        k.diagonal().array() += spec.noise_variance + kJitter;
    }
    return k;
}

/// Analytic derivatives of the noisy training matrix with respect to
/// (log sigma_f^2, log l, log sigma_n^2), in that order.
inline std::array<Eigen::MatrixXd, 3> kernel_gradient(const KernelSpec& spec,
                                                      const FeatureMatrix& x) {
    spec.validate();
    const Eigen::Index n = x.rows();
    std::array<Eigen::MatrixXd, 3> g{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n),
                                     Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = (x.row(i) - x.row(j)).norm();
            g[0](i, j) = detail::kernel_of_distance(spec, d);  // dK/dlog sigma_f^2
            g[1](i, j) = detail::kernel_dlogl(spec, d);
        }
    g[2].diagonal().setConstant(spec.noise_variance);
    return g;
}

}  // namespace gpal
