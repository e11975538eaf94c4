#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "altrade/errors.hpp"
#include "altrade/types.hpp"

namespace altrade {

enum class BenchmarkId { F1, F2, F3, F4, F5, F6 };

// Two readings of the printed F6 sum.
enum class F6Grouping {
    PerTerm,    // sum_i [x_i^2 / 2 - cos(2 pi x_i)]
    HalfOuter,  // 0.5 * sum_i [x_i^2 - cos(2 pi x_i)]
};

struct Box {
    std::vector<std::pair<double, double>> bounds;
    std::size_t dimension() const { return bounds.size(); }
};

struct BenchmarkFunction {
    BenchmarkId id = BenchmarkId::F2;
    std::size_t dimension = 1;
    Box domain;
    F6Grouping f6_grouping = F6Grouping::PerTerm;

    std::string name() const { return "f" + std::to_string(static_cast<int>(id) + 1); }
};

inline BenchmarkFunction make_benchmark(BenchmarkId id) {
    BenchmarkFunction f;
    f.id = id;
    auto cube = [](std::size_t d, double lo, double hi) {
        Box b;
        b.bounds.assign(d, {lo, hi});
        return b;
    };
    switch (id) {
        case BenchmarkId::F1: f.dimension = 1; f.domain = cube(1, 0.0, 50.0); break;
        case BenchmarkId::F2: f.dimension = 1; f.domain = cube(1, -2.0, 2.0); break;
        case BenchmarkId::F3: f.dimension = 2; f.domain = cube(2, -5.0, 5.0); break;
        case BenchmarkId::F4: f.dimension = 2; f.domain = cube(2, -5.0, 5.0); break;
        case BenchmarkId::F5: f.dimension = 2; f.domain = cube(2, -2.0, 2.0); break;
        case BenchmarkId::F6: f.dimension = 10; f.domain = cube(10, -5.0, 5.0); break;
    }
    return f;
}

inline std::optional<BenchmarkId> parse_benchmark_id(std::string_view name) {
    static constexpr std::string_view names[] = {"f1", "f2", "f3", "f4", "f5", "f6"};
    for (int i = 0; i < 6; ++i) {
        if (name == names[i]) return static_cast<BenchmarkId>(i);
    }
    return std::nullopt;
}

inline bool in_domain(const BenchmarkFunction& f, const Point& x) {
    if (static_cast<std::size_t>(x.size()) != f.dimension) return false;
    for (std::size_t i = 0; i < f.dimension; ++i) {
        const auto [lo, hi] = f.domain.bounds[i];
        const double v = x(static_cast<Eigen::Index>(i));
        if (!(v >= lo && v <= hi)) return false;
    }
    return true;
}

/// Noise-free benchmark value.
inline double eval_true(const BenchmarkFunction& f, const Point& x) {
    if (static_cast<std::size_t>(x.size()) != f.dimension)
        throw InputError(f.name() + ": expected a " + std::to_string(f.dimension) + "-dimensional point, got " +
                         std::to_string(x.size()));
    if (!in_domain(f, x)) throw InputError(f.name() + ": point outside the function domain");
    switch (f.id) {
        case BenchmarkId::F1: {
            const double t = x(0);
            if (t <= 25.0) return 3.5 * std::exp(-(t - 10.0) * (t - 10.0) / 200.0);
            return 8.0 - 3.5 * std::exp(-(t - 35.0) * (t - 35.0) / 200.0);
        }
        case BenchmarkId::F2:
            return std::sin(x(0)) + 2.0 * std::exp(-30.0 * x(0) * x(0));
        case BenchmarkId::F3: {
            double s = 0.0;
            for (Eigen::Index i = 0; i < 2; ++i) s += std::abs(x(i) * std::sin(x(i)) + 0.1 * x(i));
            return s;
        }
        case BenchmarkId::F4: {
            const double a = x(0), b = x(1);
            return 2.0 * a * a - 1.05 * std::pow(a, 4) + std::pow(a, 6) / 6.0 + a * b + b * b;
        }
        case BenchmarkId::F5: {
            const double a = x(0), b = x(1);
            return (4.0 - 2.1 * a * a + std::pow(a, 4) / 3.0) * a * a + a * b + (4.0 * std::pow(b, 4) - 4.0) * b * b;
        }
        case BenchmarkId::F6: {
            double s = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double c = std::cos(2.0 * std::numbers::pi * x(i));
                s += f.f6_grouping == F6Grouping::PerTerm ? 0.5 * x(i) * x(i) - c : 0.5 * (x(i) * x(i) - c);
            }
            return s;
        }
    }
    return 0.0;
}

inline Eigen::VectorXd eval_true(const BenchmarkFunction& f, const PointList& points) {
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = eval_true(f, row_point(points, i));
    return out;
}

/// Additive Gaussian label noise calibrated to a signal-to-noise ratio in dB.
struct NoiseModel {
    double snr_db = 10.0;
    double noise_variance = 0.0;
};

// Population variance of the noise-free signal (its AC power).
inline double signal_power(const Eigen::VectorXd& truth) {
    if (truth.size() == 0) throw InputError("signal_power: empty signal");
    const double mean = truth.mean();
    return (truth.array() - mean).square().sum() / static_cast<double>(truth.size());
}

inline NoiseModel calibrate_noise(const Eigen::VectorXd& truth_on_grid, double snr_db) {
    NoiseModel m;
    m.snr_db = snr_db;
    m.noise_variance = signal_power(truth_on_grid) / std::pow(10.0, snr_db / 10.0);
    return m;
}

inline double sample_label(const BenchmarkFunction& f, const Point& x, const NoiseModel& noise, Rng& rng) {
    const double clean = eval_true(f, x);
    if (noise.noise_variance <= 0.0) return clean;
    std::normal_distribution<double> eps(0.0, std::sqrt(noise.noise_variance));
    return clean + eps(rng);
}

inline double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
    if (predicted.size() != truth.size())
        throw InputError("rmse: " + std::to_string(predicted.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " truth values");
    if (truth.size() == 0) throw InputError("rmse: empty vectors");
    return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(truth.size()));
}

struct PoolSpec {
    std::size_t grid_1d = 1000;
    std::size_t grid_2d = 50;  // per axis
    std::size_t lhs_count = 2000;
};

/// Candidate pool: a uniform grid for d <= 2, Latin-hypercube sample otherwise.
inline PointList make_candidate_pool(const Box& domain, const PoolSpec& spec, Rng& rng) {
    const std::size_t d = domain.dimension();
    if (d == 0) throw InputError("candidate pool: zero-dimensional domain");
    auto axis = [&](std::size_t dim, std::size_t n, std::size_t k) {
        const auto [lo, hi] = domain.bounds[dim];
        return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    };
    if (d == 1) {
        PointList pts(static_cast<Eigen::Index>(spec.grid_1d), 1);
        for (std::size_t k = 0; k < spec.grid_1d; ++k) pts(static_cast<Eigen::Index>(k), 0) = axis(0, spec.grid_1d, k);
        return pts;
    }
    if (d == 2) {
        const std::size_t n = spec.grid_2d;
        PointList pts(static_cast<Eigen::Index>(n * n), 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const auto row = static_cast<Eigen::Index>(i * n + j);
                pts(row, 0) = axis(0, n, i);
                pts(row, 1) = axis(1, n, j);
            }
        return pts;
    }
    const std::size_t n = spec.lhs_count;
    PointList pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> strata(n);
    for (std::size_t dim = 0; dim < d; ++dim) {
        for (std::size_t k = 0; k < n; ++k) strata[k] = k;
        std::shuffle(strata.begin(), strata.end(), rng);
        const auto [lo, hi] = domain.bounds[dim];
        for (std::size_t k = 0; k < n; ++k) {
            const double u = (static_cast<double>(strata[k]) + unit(rng)) / static_cast<double>(n);
            pts(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim)) = lo + (hi - lo) * u;
        }
    }
    return pts;
}

}  // namespace altrade
