#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "altrade/errors.hpp"
#include "altrade/kernels.hpp"
#include "altrade/linalg.hpp"

namespace altrade {

struct LengthScaleBounds {
    double lo = 1e-2;
    double hi = 1e2;
    // When set, the bounds multiply the median pairwise distance of the training inputs.
    bool relative_to_median_distance = true;
};

struct GprConfig {
    KernelSpec kernel = KernelSpec::leaf(KernelFamily::Matern32);
    double noise_variance = 1e-6;
    bool fit_noise = true;
    std::pair<double, double> noise_bounds{1e-6, 10.0};
    LengthScaleBounds length_scale_bounds;
    std::pair<double, double> rq_shape_bounds{1e-2, 1e2};
    std::pair<double, double> dot_constant_bounds{1e-3, 1e3};
    int optimizer_restarts = 8;
    // false keeps the kernel and noise exactly as given.
    bool optimize = true;
    // Standardize labels before fitting; predictions are mapped back.
    bool normalize_y = false;
};

struct GpPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    std::size_t training_size = 0;
};

// Mean and pointwise variance only, for large candidate pools.
struct GpMarginals {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    std::size_t training_size = 0;
};

namespace gpr_detail {

inline void check_training_data(const PointList& x, const Eigen::VectorXd& y) {
    if (x.rows() < 1) throw InputError("gpr: at least one training point is required");
    if (x.rows() != y.size())
        throw InputError("gpr: " + std::to_string(x.rows()) + " inputs but " + std::to_string(y.size()) + " labels");
    if (!y.allFinite()) throw InputError("gpr: labels must be finite");
    if (!x.allFinite()) throw InputError("gpr: inputs must be finite");
}

inline double median_pairwise_distance(const PairGeometry& geometry) {
    std::vector<double> d;
    const auto n = geometry.distance.rows();
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index j = 1; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i) d.push_back(geometry.distance(i, j));
    if (d.empty()) return 1.0;
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid > 0.0 ? *mid : 1.0;
}

// Gaussian log marginal likelihood on a precomputed geometry; -inf when the
// covariance cannot be factorized.
inline double log_marginal(const KernelSpec& spec, double noise, const PairGeometry& geometry,
                           const Eigen::VectorXd& y) {
    GramMatrix g;
    g.values = kernel_matrix(spec, geometry);
    g.jitter_applied = kRelativeJitter * variance_scale(spec);
    g.values.diagonal().array() += noise + g.jitter_applied;
    try {
        RegularizedCholesky chol(g);
        const Eigen::VectorXd alpha = chol.solve(y);
        const double n = static_cast<double>(y.size());
        const double value = -0.5 * y.dot(alpha) - 0.5 * chol.log_determinant() -
                             0.5 * n * std::log(2.0 * std::numbers::pi);
        return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

inline double radical_inverse(unsigned index, unsigned base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * (index % base);
        index /= base;
        f /= base;
    }
    return result;
}

// Golden-section maximization of a unimodal-ish function on [lo, hi].
template <typename F>
std::pair<double, double> golden_maximize(F&& f, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace gpr_detail

/// Gaussian log marginal likelihood log p(y | X, kernel, noise).
inline double log_marginal_likelihood(const KernelSpec& spec, double noise_variance, const PointList& x,
                                      const Eigen::VectorXd& y) {
    gpr_detail::check_training_data(x, y);
    return gpr_detail::log_marginal(spec, noise_variance, PairGeometry(x, x), y);
}

class FittedGp;
FittedGp fit(const GprConfig& config, const PointList& x, const Eigen::VectorXd& y);

/// A trained zero-mean GP. Immutable; prediction is const and thread-safe.
class FittedGp {
public:
    const KernelSpec& kernel() const { return kernel_; }
    double noise_variance() const { return noise_; }
    double log_marginal_likelihood() const { return lml_; }
    const PointList& inputs() const { return x_; }
    const Eigen::VectorXd& targets() const { return y_; }
    std::size_t training_size() const { return static_cast<std::size_t>(x_.rows()); }
    Eigen::Index dimension() const { return x_.cols(); }
    const RegularizedCholesky& factor() const { return chol_; }
    double label_offset() const { return y_offset_; }
    double label_scale() const { return y_scale_; }

    Eigen::VectorXd predict_mean(const PointList& query) const {
        check_query(query);
        const Eigen::MatrixXd k_uo = cross_covariance(kernel_, query, x_);
        return (k_uo * alpha_).array() * y_scale_ + y_offset_;
    }

    GpMarginals predict_marginals(const PointList& query) const {
        check_query(query);
        const Eigen::MatrixXd k_uo = cross_covariance(kernel_, query, x_);
        const Eigen::MatrixXd v = chol_.solve(k_uo.transpose());
        GpMarginals out;
        out.training_size = training_size();
        out.mean = (k_uo * alpha_).array() * y_scale_ + y_offset_;
        out.variance.resize(query.rows());
        for (Eigen::Index j = 0; j < query.rows(); ++j) {
            const double prior = kernel_detail::eval_geometry(kernel_, 0.0, query.row(j).squaredNorm());
            out.variance(j) = (prior - k_uo.row(j).dot(v.col(j))) * y_scale_ * y_scale_;
        }
        return out;
    }

    GpPosterior predict(const PointList& query) const {
        check_query(query);
        const Eigen::MatrixXd k_uo = cross_covariance(kernel_, query, x_);
        const Eigen::MatrixXd k_uu = cross_covariance(kernel_, query, query);
        const Eigen::MatrixXd v = chol_.solve(k_uo.transpose());
        GpPosterior out;
        out.training_size = training_size();
        out.mean = (k_uo * alpha_).array() * y_scale_ + y_offset_;
        Eigen::MatrixXd cov = (k_uu - k_uo * v) * (y_scale_ * y_scale_);
        out.covariance = 0.5 * (cov + cov.transpose());
        return out;
    }

private:
    friend FittedGp fit(const GprConfig&, const PointList&, const Eigen::VectorXd&);

    void check_query(const PointList& query) const {
        if (query.rows() == 0) throw InputError("predict: query list is empty");
        if (query.cols() != x_.cols())
            throw InputError("predict: query dimension " + std::to_string(query.cols()) +
                             " does not match training dimension " + std::to_string(x_.cols()));
    }

    KernelSpec kernel_;
    double noise_ = 0.0;
    PointList x_;
    Eigen::VectorXd y_;
    double y_offset_ = 0.0;
    double y_scale_ = 1.0;
    RegularizedCholesky chol_;
    Eigen::VectorXd alpha_;
    double lml_ = 0.0;
};

/// Fits kernel hyperparameters (and the noise variance when `fit_noise`) by
/// maximizing the log marginal likelihood, then caches the factorization.
///
/// Search: deterministic multi-start (Halton starts in the log-parameter box),
/// each followed by three passes of golden-section coordinate search with a
/// shrinking bracket.
inline FittedGp fit(const GprConfig& config, const PointList& x, const Eigen::VectorXd& y) {
    gpr_detail::check_training_data(x, y);
    validate(config.kernel);
    if (config.optimizer_restarts < 1) throw ConfigError("gpr: optimizer_restarts must be >= 1");
    if (config.noise_variance < 0.0) throw ConfigError("gpr: noise_variance must be nonnegative");

    FittedGp model;
    model.x_ = x;
    model.y_ = y;
    if (config.normalize_y) {
        model.y_offset_ = y.mean();
        const double var = y.size() > 1 ? (y.array() - model.y_offset_).square().sum() / static_cast<double>(y.size()) : 0.0;
        model.y_scale_ = var > 1e-300 ? std::sqrt(var) : 1.0;
    }
    const Eigen::VectorXd ys = (y.array() - model.y_offset_) / model.y_scale_;
    const PairGeometry geometry(x, x);

    KernelSpec kernel = config.kernel;
    double noise = config.noise_variance;

    if (config.optimize) {
        struct Slot {
            double* value;
            double lo, hi;  // log bounds
        };
        std::vector<Slot> slots;
        const double median = gpr_detail::median_pairwise_distance(geometry);
        for (const KernelParam& p : tunable_parameters(kernel)) {
            double lo = 0.0, hi = 0.0;
            switch (p.role) {
                case ParamRole::LengthScale: {
                    const double m = config.length_scale_bounds.relative_to_median_distance ? median : 1.0;
                    lo = config.length_scale_bounds.lo * m;
                    hi = config.length_scale_bounds.hi * m;
                    break;
                }
                case ParamRole::RqShape: std::tie(lo, hi) = config.rq_shape_bounds; break;
                case ParamRole::DotConstant: std::tie(lo, hi) = config.dot_constant_bounds; break;
            }
            if (!(lo > 0.0 && lo < hi)) throw ConfigError("gpr: hyperparameter bounds must satisfy 0 < lo < hi");
            slots.push_back({p.value, std::log(lo), std::log(hi)});
        }
        if (config.fit_noise) {
            const auto [lo, hi] = config.noise_bounds;
            if (!(lo > 0.0 && lo < hi)) throw ConfigError("gpr: noise bounds must satisfy 0 < lo < hi");
            slots.push_back({&noise, std::log(lo), std::log(hi)});
        }

        auto objective = [&]() { return gpr_detail::log_marginal(kernel, noise, geometry, ys); };

        static constexpr std::array<unsigned, 6> kBases{2, 3, 5, 7, 11, 13};
        std::vector<double> best(slots.size());
        double best_value = -std::numeric_limits<double>::infinity();
        for (int restart = 0; restart < config.optimizer_restarts; ++restart) {
            for (std::size_t s = 0; s < slots.size(); ++s) {
                const double u = gpr_detail::radical_inverse(static_cast<unsigned>(restart) + 1, kBases[s % kBases.size()]);
                *slots[s].value = std::exp(slots[s].lo + u * (slots[s].hi - slots[s].lo));
            }
            double value = objective();
            for (int pass = 0; pass < 3; ++pass) {
                for (auto& slot : slots) {
                    const double range = slot.hi - slot.lo;
                    const double half = range / std::pow(4.0, pass);
                    const double centre = std::log(*slot.value);
                    const double a = std::max(slot.lo, centre - half);
                    const double b = std::min(slot.hi, centre + half);
                    const double keep = *slot.value;
                    auto line = [&](double t) {
                        *slot.value = std::exp(t);
                        return objective();
                    };
                    const auto [t, v] = gpr_detail::golden_maximize(line, a, b, 1e-2);
                    if (v > value) {
                        *slot.value = std::exp(t);
                        value = v;
                    } else {
                        *slot.value = keep;
                    }
                }
            }
            if (value > best_value) {
                best_value = value;
                for (std::size_t s = 0; s < slots.size(); ++s) best[s] = *slots[s].value;
            }
        }
        if (!std::isfinite(best_value)) throw NumericalError("gpr: no hyperparameter setting gave a finite likelihood");
        for (std::size_t s = 0; s < slots.size(); ++s) *slots[s].value = best[s];
    }

    model.kernel_ = kernel;
    model.noise_ = noise;
    GramMatrix g = gram(kernel, x, noise);
    model.chol_ = RegularizedCholesky(g);
    model.alpha_ = model.chol_.solve(ys);
    const double n = static_cast<double>(ys.size());
    model.lml_ = -0.5 * ys.dot(model.alpha_) - 0.5 * model.chol_.log_determinant() -
                 0.5 * n * std::log(2.0 * std::numbers::pi);
    return model;
}

inline GpPosterior predict(const FittedGp& model, const PointList& query) { return model.predict(query); }

/// Differential entropy of the joint Gaussian posterior:
/// 0.5 log|cov| + (D/2) log(2 pi e). Returns -inf for a degenerate covariance.
inline double posterior_entropy(const GpPosterior& posterior) {
    const Eigen::Index d = posterior.covariance.rows();
    if (d == 0 || posterior.covariance.cols() != d) throw InputError("posterior_entropy: covariance must be square and nonempty");
    double log_det = 0.0;
    if (d == 1) {
        const double v = posterior.covariance(0, 0);
        if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
        log_det = std::log(v);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(posterior.covariance, Eigen::EigenvaluesOnly);
        for (Eigen::Index i = 0; i < d; ++i) {
            const double lambda = eig.eigenvalues()(i);
            if (!(lambda > 0.0)) return -std::numeric_limits<double>::infinity();
            log_det += std::log(lambda);
        }
    }
    return 0.5 * log_det + 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

}  // namespace altrade
