#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string_view>
#include <vector>

#include "altrade/errors.hpp"
#include "altrade/gpr.hpp"

namespace altrade {

enum class ExploreKind { Igs, MaxVariance, MaxEntropy };

inline std::string_view to_string(ExploreKind kind) {
    switch (kind) {
        case ExploreKind::Igs: return "igs";
        case ExploreKind::MaxVariance: return "maxvar";
        case ExploreKind::MaxEntropy: return "maxent";
    }
    return "unknown";
}

struct AcquisitionScore {
    std::size_t candidate_index = 0;
    double exploration_score = 0.0;  // normalized F1
    double exploitation_score = 0.0; // normalized F2
    double combined = 0.0;
};

/// Index of the largest score; ties resolve to the lowest index. NaN never wins.
inline std::size_t argmax(const Eigen::VectorXd& scores) {
    if (scores.size() == 0) throw InputError("argmax: empty score vector");
    std::size_t best = 0;
    double value = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
        const double v = scores(j);
        if (std::isnan(v)) continue;
        if (!found || v > value) {
            best = static_cast<std::size_t>(j);
            value = v;
            found = true;
        }
    }
    return best;
}

/// Improved greedy sampling: for each candidate, the smallest product of its
/// input distance and output distance to any one training point.
inline Eigen::VectorXd score_igs(const Eigen::VectorXd& pool_mean, const PointList& labeled_x,
                                 const Eigen::VectorXd& labeled_y, const PointList& pool) {
    if (labeled_x.rows() == 0) throw InputError("score_igs: labeled set is empty");
    if (pool.rows() == 0) throw InputError("score_igs: pool is empty");
    if (labeled_x.rows() != labeled_y.size()) throw InputError("score_igs: labeled inputs and labels differ in length");
    if (pool_mean.size() != pool.rows()) throw InputError("score_igs: one predicted mean per pool point is required");
    if (pool.cols() != labeled_x.cols()) throw InputError("score_igs: pool and labeled dimensions differ");
    Eigen::VectorXd out(pool.rows());
    for (Eigen::Index j = 0; j < pool.rows(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < labeled_x.rows(); ++i) {
            const double u = (pool.row(j) - labeled_x.row(i)).norm();
            const double v = std::abs(pool_mean(j) - labeled_y(i));
            best = std::min(best, u * v);
        }
        out(j) = best;
    }
    return out;
}

inline Eigen::VectorXd score_igs(const FittedGp& model, const PointList& labeled_x, const Eigen::VectorXd& labeled_y,
                                 const PointList& pool) {
    if (pool.rows() == 0) throw InputError("score_igs: pool is empty");
    return score_igs(model.predict_mean(pool), labeled_x, labeled_y, pool);
}

/// Query-by-committee members, one GP per kernel family, all trained on the same data.
struct Committee {
    std::vector<FittedGp> members;
};

/// The ten committee kernels: SE, Exp, Matern 3/2, Matern 5/2, RQ,
/// dot-product x constant, SE*M32, SE*M52, Exp*M32, Exp*M52.
inline std::vector<KernelSpec> committee_kernels() {
    using F = KernelFamily;
    auto leaf = [](F f) { return KernelSpec::leaf(f); };
    return {
        leaf(F::SquaredExponential),
        leaf(F::Exponential),
        leaf(F::Matern32),
        leaf(F::Matern52),
        leaf(F::RationalQuadratic),
        leaf(F::DotProductTimesConstant),
        KernelSpec::product(leaf(F::SquaredExponential), leaf(F::Matern32)),
        KernelSpec::product(leaf(F::SquaredExponential), leaf(F::Matern52)),
        KernelSpec::product(leaf(F::Exponential), leaf(F::Matern32)),
        KernelSpec::product(leaf(F::Exponential), leaf(F::Matern52)),
    };
}

inline Committee fit_committee(const GprConfig& base, const std::vector<KernelSpec>& kernels, const PointList& x,
                               const Eigen::VectorXd& y) {
    Committee committee;
    committee.members.reserve(kernels.size());
    for (const auto& kernel : kernels) {
        GprConfig config = base;
        config.kernel = kernel;
        committee.members.push_back(fit(config, x, y));
    }
    return committee;
}

inline Committee fit_committee(const GprConfig& base, const PointList& x, const Eigen::VectorXd& y) {
    return fit_committee(base, committee_kernels(), x, y);
}

// Pool x member matrix of predictive means.
inline Eigen::MatrixXd committee_means(const Committee& committee, const PointList& pool) {
    Eigen::MatrixXd means(pool.rows(), static_cast<Eigen::Index>(committee.members.size()));
    for (std::size_t q = 0; q < committee.members.size(); ++q) {
        means.col(static_cast<Eigen::Index>(q)) = committee.members[q].predict_mean(pool);
    }
    return means;
}

/// Largest pairwise disagreement among member means, i.e. max minus min.
inline Eigen::VectorXd score_qbc_from_means(const Eigen::MatrixXd& means) {
    if (means.cols() < 2) throw ConfigError("score_qbc: a committee needs at least two members");
    return means.rowwise().maxCoeff() - means.rowwise().minCoeff();
}

inline Eigen::VectorXd score_qbc(const Committee& committee, const PointList& pool) {
    if (committee.members.size() < 2) throw ConfigError("score_qbc: a committee needs at least two members");
    if (pool.rows() == 0) throw InputError("score_qbc: pool is empty");
    return score_qbc_from_means(committee_means(committee, pool));
}

inline Eigen::VectorXd score_maxvar(const Eigen::VectorXd& variance) { return variance.cwiseMax(0.0); }
inline Eigen::VectorXd score_maxvar(const GpMarginals& marginals) { return score_maxvar(marginals.variance); }
inline Eigen::VectorXd score_maxvar(const GpPosterior& posterior) {
    return score_maxvar(Eigen::VectorXd(posterior.covariance.diagonal()));
}

/// Pointwise Gaussian entropy 0.5 log v + 0.5 log(2 pi e); -inf where v <= 0.
inline Eigen::VectorXd entropy_scores(const Eigen::VectorXd& variance) {
    const double c = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
    Eigen::VectorXd out(variance.size());
    for (Eigen::Index j = 0; j < variance.size(); ++j) {
        out(j) = variance(j) > 0.0 ? 0.5 * std::log(variance(j)) + c : -std::numeric_limits<double>::infinity();
    }
    return out;
}

inline Eigen::VectorXd score_maxent(const FittedGp& model, const PointList& pool) {
    return entropy_scores(model.predict_marginals(pool).variance);
}

inline Eigen::VectorXd score_random(std::size_t pool_size, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd out(static_cast<Eigen::Index>(pool_size));
    for (auto& v : out) v = unit(rng);
    return out;
}

/// Min-max scaling onto [0, 1]. Non-finite low scores (the -inf entropy
/// sentinel) map to 0; a pool with no spread maps to 0.5 everywhere.
inline Eigen::VectorXd min_max_normalize(const Eigen::VectorXd& raw) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : raw) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Eigen::VectorXd out(raw.size());
    const bool flat = !(hi > lo);
    for (Eigen::Index j = 0; j < raw.size(); ++j) {
        const double v = raw(j);
        if (std::isnan(v) || v == -std::numeric_limits<double>::infinity()) out(j) = 0.0;
        else if (v == std::numeric_limits<double>::infinity()) out(j) = 1.0;
        else out(j) = flat ? 0.5 : (v - lo) / (hi - lo);
    }
    return out;
}

/// eta * F1 + (1 - eta) * F2 over min-max normalized scores.
inline std::vector<AcquisitionScore> combine(const Eigen::VectorXd& explore, const Eigen::VectorXd& exploit, double eta) {
    if (explore.size() != exploit.size())
        throw InputError("combine: exploration and exploitation score vectors differ in length");
    if (!(eta >= 0.0 && eta <= 1.0)) throw InputError("combine: eta must lie in [0, 1]");
    const Eigen::VectorXd e = min_max_normalize(explore);
    const Eigen::VectorXd x = min_max_normalize(exploit);
    std::vector<AcquisitionScore> out(static_cast<std::size_t>(explore.size()));
    for (Eigen::Index j = 0; j < explore.size(); ++j) {
        auto& s = out[static_cast<std::size_t>(j)];
        s.candidate_index = static_cast<std::size_t>(j);
        s.exploration_score = e(j);
        s.exploitation_score = x(j);
        s.combined = eta * e(j) + (1.0 - eta) * x(j);
    }
    return out;
}

inline std::size_t best_candidate(const std::vector<AcquisitionScore>& scores) {
    if (scores.empty()) throw InputError("best_candidate: no scores");
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.size(); ++j) {
        if (scores[j].combined > scores[best].combined) best = j;
    }
    return scores[best].candidate_index;
}

/// Upper envelope of the lines eta -> eta * e_j + (1 - eta) * x_j over
/// eta in [0, 1], so the combined argmax for any eta costs a binary search
/// instead of a pool scan. Agrees with `combine` + `best_candidate`.
class TradeOffEnvelope {
public:
    TradeOffEnvelope(const Eigen::VectorXd& explore, const Eigen::VectorXd& exploit) {
        if (explore.size() != exploit.size()) throw InputError("envelope: score vectors differ in length");
        if (explore.size() == 0) throw InputError("envelope: empty pool");
        e_ = min_max_normalize(explore);
        x_ = min_max_normalize(exploit);
        build();
    }

    std::size_t argmax(double eta) const {
        if (eta <= 0.0 || eta >= 1.0) return scan(eta);
        // First segment whose right end reaches eta.
        auto it = std::lower_bound(ends_.begin(), ends_.end(), eta);
        std::size_t seg = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - ends_.begin(),
                                                                             static_cast<std::ptrdiff_t>(lines_.size()) - 1));
        std::size_t best = lines_[seg];
        double value = at(best, eta);
        // At a breakpoint neighbours tie; prefer the lowest candidate index.
        for (std::size_t k : {seg > 0 ? seg - 1 : seg, seg + 1 < lines_.size() ? seg + 1 : seg}) {
            const std::size_t c = lines_[k];
            const double v = at(c, eta);
            if (v > value || (v == value && c < best)) {
                best = c;
                value = v;
            }
        }
        return best;
    }

    // Candidates appearing on the envelope, left (eta = 0) to right (eta = 1).
    const std::vector<std::size_t>& segments() const { return lines_; }
    const std::vector<double>& segment_ends() const { return ends_; }

private:
    // Several lines can meet at an endpoint; resolve those by direct scan.
    std::size_t scan(double eta) const {
        std::size_t best = 0;
        for (std::size_t j = 1; j < static_cast<std::size_t>(e_.size()); ++j) {
            if (at(j, eta) > at(best, eta)) best = j;
        }
        return best;
    }

    double at(std::size_t j, double eta) const {
        return eta * e_(static_cast<Eigen::Index>(j)) + (1.0 - eta) * x_(static_cast<Eigen::Index>(j));
    }

    void build() {
        // Lines value(eta) = x + (e - x) eta. Sort by slope, then intercept desc, then index.
        std::vector<std::size_t> order(static_cast<std::size_t>(e_.size()));
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        auto slope = [&](std::size_t j) { return e_(static_cast<Eigen::Index>(j)) - x_(static_cast<Eigen::Index>(j)); };
        auto icpt = [&](std::size_t j) { return x_(static_cast<Eigen::Index>(j)); };
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (slope(a) != slope(b)) return slope(a) < slope(b);
            if (icpt(a) != icpt(b)) return icpt(a) > icpt(b);
            return a < b;
        });
        // Drop lines dominated by an equal-slope line.
        std::vector<std::size_t> uniq;
        for (std::size_t j : order) {
            if (!uniq.empty() && slope(uniq.back()) == slope(j)) continue;
            uniq.push_back(j);
        }
        // Convex hull trick: start of each kept line's winning interval.
        std::vector<std::size_t> hull;
        std::vector<double> starts;
        auto cross = [&](std::size_t a, std::size_t b) {  // eta where line b overtakes line a (slope b > slope a)
            return (icpt(a) - icpt(b)) / (slope(b) - slope(a));
        };
        for (std::size_t j : uniq) {
            double start = -std::numeric_limits<double>::infinity();
            while (!hull.empty()) {
                start = cross(hull.back(), j);
                if (start <= starts.back()) {
                    hull.pop_back();
                    starts.pop_back();
                    start = -std::numeric_limits<double>::infinity();
                } else {
                    break;
                }
            }
            hull.push_back(j);
            starts.push_back(start);
        }
        // Restrict to [0, 1].
        for (std::size_t k = 0; k < hull.size(); ++k) {
            const double begin = std::max(starts[k], 0.0);
            const double end = k + 1 < hull.size() ? std::min(starts[k + 1], 1.0) : 1.0;
            if (end >= begin && !(k + 1 < hull.size() && starts[k + 1] < 0.0) && starts[k] <= 1.0) {
                lines_.push_back(hull[k]);
                ends_.push_back(end);
            }
        }
        if (lines_.empty()) {
            lines_.push_back(hull.back());
            ends_.push_back(1.0);
        }
    }

    Eigen::VectorXd e_;
    Eigen::VectorXd x_;
    std::vector<std::size_t> lines_;
    std::vector<double> ends_;
};

}  // namespace altrade
