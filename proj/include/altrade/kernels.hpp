#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "altrade/errors.hpp"
#include "altrade/types.hpp"

namespace altrade {

enum class KernelFamily {
    SquaredExponential,
    Exponential,
    Matern32,
    Matern52,
    RationalQuadratic,
    DotProductTimesConstant,
    Product,
};

inline std::string_view to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SquaredExponential: return "squared_exponential";
        case KernelFamily::Exponential: return "exponential";
        case KernelFamily::Matern32: return "matern32";
        case KernelFamily::Matern52: return "matern52";
        case KernelFamily::RationalQuadratic: return "rational_quadratic";
        case KernelFamily::DotProductTimesConstant: return "dot_product_constant";
        case KernelFamily::Product: return "product";
    }
    return "unknown";
}

/// Covariance function configuration.
///
/// Leaf families use `signal_variance` and `length_scale`; the rational
/// quadratic additionally uses `rq_shape`, and the dot-product kernel is
/// `dot_constant * <x, x2>` (its length scale is carried but unused).
/// A `Product` holds exactly two leaf factors, each with its own parameters.
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern32;
    double signal_variance = 1.0;
    double length_scale = 1.0;
    double rq_shape = 1.0;
    double dot_constant = 1.0;
    std::vector<KernelSpec> factors;

    static KernelSpec leaf(KernelFamily family, double signal_variance = 1.0, double length_scale = 1.0) {
        KernelSpec spec;
        spec.family = family;
        spec.signal_variance = signal_variance;
        spec.length_scale = length_scale;
        return spec;
    }

    static KernelSpec product(KernelSpec first, KernelSpec second) {
        KernelSpec spec;
        spec.family = KernelFamily::Product;
        spec.factors = {std::move(first), std::move(second)};
        return spec;
    }

    std::string name() const {
        if (family != KernelFamily::Product) return std::string(to_string(family));
        return std::string(to_string(factors[0].family)) + "*" + std::string(to_string(factors[1].family));
    }
};

inline bool is_stationary(const KernelSpec& spec) {
    if (spec.family == KernelFamily::DotProductTimesConstant) return false;
    if (spec.family == KernelFamily::Product) {
        for (const auto& f : spec.factors) {
            if (!is_stationary(f)) return false;
        }
    }
    return true;
}

inline void validate(const KernelSpec& spec) {
    if (spec.family == KernelFamily::Product) {
        if (spec.factors.size() != 2) throw ConfigError("product kernel needs exactly two factors");
        for (const auto& f : spec.factors) {
            if (f.family == KernelFamily::Product) throw ConfigError("product kernels nest at most one level");
            validate(f);
        }
        return;
    }
    if (!(spec.signal_variance > 0.0) || !std::isfinite(spec.signal_variance))
        throw ConfigError("kernel signal_variance must be positive");
    if (!(spec.length_scale > 0.0) || !std::isfinite(spec.length_scale))
        throw ConfigError("kernel length_scale must be positive");
    if (spec.family == KernelFamily::RationalQuadratic && !(spec.rq_shape > 0.0))
        throw ConfigError("rational quadratic shape must be positive");
    if (spec.family == KernelFamily::DotProductTimesConstant && !(spec.dot_constant > 0.0))
        throw ConfigError("dot product constant must be positive");
}

// Prior variance used to scale diagonal jitter (sigma_f^2 for leaf families).
inline double variance_scale(const KernelSpec& spec) {
    switch (spec.family) {
        case KernelFamily::Product: return variance_scale(spec.factors[0]) * variance_scale(spec.factors[1]);
        case KernelFamily::DotProductTimesConstant: return spec.dot_constant;
        default: return spec.signal_variance;
    }
}

namespace kernel_detail {

inline constexpr double kSqrt3 = 1.7320508075688772935;
inline constexpr double kSqrt5 = 2.2360679774997896964;

// Every supported family is a function of the Euclidean distance and the
// inner product of its two arguments.
inline double eval_geometry(const KernelSpec& spec, double dist, double inner) {
    const double l = spec.length_scale;
    switch (spec.family) {
        case KernelFamily::SquaredExponential:
            return spec.signal_variance * std::exp(-0.5 * dist * dist / (l * l));
        case KernelFamily::Exponential:
            return spec.signal_variance * std::exp(-dist / l);
        case KernelFamily::Matern32: {
            const double s = kSqrt3 * dist / l;
            return spec.signal_variance * (1.0 + s) * std::exp(-s);
        }
        case KernelFamily::Matern52: {
            const double s = kSqrt5 * dist / l;
            return spec.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
        }
        case KernelFamily::RationalQuadratic:
            return spec.signal_variance *
                   std::pow(1.0 + dist * dist / (2.0 * spec.rq_shape * l * l), -spec.rq_shape);
        case KernelFamily::DotProductTimesConstant:
            return spec.dot_constant * inner;
        case KernelFamily::Product:
            return eval_geometry(spec.factors[0], dist, inner) * eval_geometry(spec.factors[1], dist, inner);
    }
    return 0.0;
}

inline Eigen::ArrayXXd apply_geometry(const KernelSpec& spec, const Eigen::ArrayXXd& dist, const Eigen::ArrayXXd& inner) {
    const double l = spec.length_scale;
    switch (spec.family) {
        case KernelFamily::SquaredExponential:
            return spec.signal_variance * (-0.5 / (l * l) * dist.square()).exp();
        case KernelFamily::Exponential:
            return spec.signal_variance * (-dist / l).exp();
        case KernelFamily::Matern32: {
            const Eigen::ArrayXXd s = (kSqrt3 / l) * dist;
            return spec.signal_variance * (1.0 + s) * (-s).exp();
        }
        case KernelFamily::Matern52: {
            const Eigen::ArrayXXd s = (kSqrt5 / l) * dist;
            return spec.signal_variance * (1.0 + s + s.square() / 3.0) * (-s).exp();
        }
        case KernelFamily::RationalQuadratic:
            return spec.signal_variance *
                   (1.0 + dist.square() / (2.0 * spec.rq_shape * l * l)).pow(-spec.rq_shape);
        case KernelFamily::DotProductTimesConstant:
            return spec.dot_constant * inner;
        case KernelFamily::Product:
            return apply_geometry(spec.factors[0], dist, inner) * apply_geometry(spec.factors[1], dist, inner);
    }
    return Eigen::ArrayXXd::Zero(dist.rows(), dist.cols());
}

}  // namespace kernel_detail

inline double eval_kernel(const KernelSpec& spec, const Point& x, const Point& x2) {
    if (x.size() != x2.size())
        throw InputError("eval_kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(x2.size()) + ")");
    return kernel_detail::eval_geometry(spec, (x - x2).norm(), x.dot(x2));
}

/// Pairwise distances and inner products between two point lists. Fitting
/// reuses one geometry across every hyperparameter trial.
struct PairGeometry {
    Eigen::ArrayXXd distance;
    Eigen::ArrayXXd inner;

    PairGeometry() = default;
    PairGeometry(const PointList& a, const PointList& b) {
        if (a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols())
            throw InputError("point lists have different dimensions (" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.cols()) + ")");
        distance.resize(a.rows(), b.rows());
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                distance(i, j) = (a.row(i) - b.row(j)).norm();
            }
        }
        inner = (a * b.transpose()).array();
    }
};

inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const PairGeometry& geometry) {
    if (geometry.distance.size() == 0) return Eigen::MatrixXd(geometry.distance.rows(), geometry.distance.cols());
    return kernel_detail::apply_geometry(spec, geometry.distance, geometry.inner).matrix();
}

inline constexpr double kRelativeJitter = 1e-8;
inline constexpr double kMaxRelativeJitter = 1e-4;

struct GramMatrix {
    Eigen::MatrixXd values;
    // Stabilizing jitter on the diagonal (excludes the requested noise).
    double jitter_applied = 0.0;
};

/// Square Gram K(A, A) + (noise + jitter) I.
inline GramMatrix gram(const KernelSpec& spec, const PointList& points, double noise_on_diagonal) {
    if (noise_on_diagonal < 0.0) throw InputError("gram: noise must be nonnegative");
    GramMatrix out;
    out.values = kernel_matrix(spec, PairGeometry(points, points));
    out.jitter_applied = points.rows() > 0 ? kRelativeJitter * variance_scale(spec) : 0.0;
    out.values.diagonal().array() += noise_on_diagonal + out.jitter_applied;
    return out;
}

/// K(A, B). When A and B are the same list the result is the square Gram
/// with noise and jitter on its diagonal.
inline GramMatrix gram(const KernelSpec& spec, const PointList& a, const PointList& b, double noise_on_diagonal) {
    const bool same = (&a == &b) || (a.rows() == b.rows() && a.cols() == b.cols() && a == b);
    if (same) return gram(spec, a, noise_on_diagonal);
    GramMatrix out;
    out.values = kernel_matrix(spec, PairGeometry(a, b));
    return out;
}

inline Eigen::MatrixXd cross_covariance(const KernelSpec& spec, const PointList& a, const PointList& b) {
    return kernel_matrix(spec, PairGeometry(a, b));
}

/// Tunable kernel hyperparameters, exposed for the marginal-likelihood search.
enum class ParamRole { LengthScale, RqShape, DotConstant };

struct KernelParam {
    double* value;
    ParamRole role;
};

inline std::vector<KernelParam> tunable_parameters(KernelSpec& spec) {
    std::vector<KernelParam> out;
    switch (spec.family) {
        case KernelFamily::Product:
            for (auto& f : spec.factors) {
                auto sub = tunable_parameters(f);
                out.insert(out.end(), sub.begin(), sub.end());
            }
            break;
        case KernelFamily::DotProductTimesConstant:
            out.push_back({&spec.dot_constant, ParamRole::DotConstant});
            break;
        case KernelFamily::RationalQuadratic:
            out.push_back({&spec.length_scale, ParamRole::LengthScale});
            out.push_back({&spec.rq_shape, ParamRole::RqShape});
            break;
        default:
            out.push_back({&spec.length_scale, ParamRole::LengthScale});
    }
    return out;
}

}  // namespace altrade
