#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "altrade/errors.hpp"
#include "altrade/kernels.hpp"
#include "altrade/linalg.hpp"

namespace altrade {

// Support of the uniform hyperprior on the Beta parameters.
struct HyperPriorBounds {
    double a = 0.1;
    double b = 5.0;
};

struct ChainState {
    double alpha = 1.0;
    double beta = 1.0;
    double eta = 0.5;
};

// One row per sweep. `delta` is the gate statistic of the last accepted eta
// proposal in the sweep, or of the last evaluated one when none was
// accepted (NaN when no proposal reached the gate).
struct SweepRecord {
    std::size_t sweep = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double eta = 0.0;
    double delta = std::numeric_limits<double>::quiet_NaN();
    bool accepted = false;
};

struct TradeOffChain {
    ChainState state;
    std::vector<SweepRecord> history;
    std::size_t iterations = 1000;
};

struct ChainConfig {
    std::size_t iterations = 1000;
    std::size_t inner_steps = 5;
    double burn_in = 0.2;
    HyperPriorBounds bounds;
    double nu = 1e-3;
    // Diagnostics: freeze alpha and beta at their initial values.
    bool hold_hyperparameters = false;
};

inline void validate(const ChainConfig& config) {
    if (config.iterations < 1) throw ConfigError("mcmc.iterations must be >= 1");
    if (config.inner_steps < 1) throw ConfigError("mcmc.inner must be >= 1");
    if (!(config.burn_in >= 0.0 && config.burn_in < 1.0)) throw ConfigError("mcmc.burn_in must lie in [0, 1)");
    if (!(config.bounds.a > 0.0 && config.bounds.a < config.bounds.b)) throw ConfigError("mcmc bounds need 0 < a < b");
    if (!(config.nu > 0.0)) throw ConfigError("mcmc.nu must be positive");
}

/// log Beta(eta; alpha, beta). -inf outside the open unit interval.
inline double beta_log_density(double eta, double alpha, double beta) {
    if (!(eta > 0.0 && eta < 1.0)) return -std::numeric_limits<double>::infinity();
    return std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta) + (alpha - 1.0) * std::log(eta) +
           (beta - 1.0) * std::log1p(-eta);
}

/// Proposal variance keeping three standard deviations inside the support
/// on the side of the nearer bound.
inline double adaptive_tau2(double center, double lo, double hi) {
    const double room = std::max(0.0, std::min(center - lo, hi - center));
    return std::max((room / 3.0) * (room / 3.0), 1e-6);
}

struct AldConfig {
    double nu = 1e-3;
    KernelSpec kernel = KernelSpec::leaf(KernelFamily::Matern32);
};

struct AldResult {
    double delta = 0.0;
    Eigen::VectorXd coefficients;
};

/// Approximate-linear-dependence residual of candidates against a fixed
/// training set. Factorizes K(X_o, X_o) once.
class AldStatistic {
public:
    AldStatistic(KernelSpec kernel, PointList training)
        : kernel_(std::move(kernel)), training_(std::move(training)) {
        if (training_.rows() == 0) throw InputError("ald_distance: training set is empty");
        chol_ = RegularizedCholesky(gram(kernel_, training_, 0.0));
    }

    AldResult operator()(const Point& candidate) const {
        if (candidate.size() != training_.cols()) throw InputError("ald_distance: candidate dimension mismatch");
        Eigen::VectorXd k(training_.rows());
        for (Eigen::Index i = 0; i < training_.rows(); ++i) k(i) = eval_kernel(kernel_, row_point(training_, i), candidate);
        AldResult out;
        out.coefficients = chol_.solve(k);
        const double raw = eval_kernel(kernel_, candidate, candidate) - k.dot(out.coefficients);
        out.delta = std::max(raw, 0.0);
        return out;
    }

private:
    KernelSpec kernel_;
    PointList training_;
    RegularizedCholesky chol_;
};

inline AldResult ald_distance(const AldConfig& config, const PointList& training, const Point& candidate) {
    return AldStatistic(config.kernel, training)(candidate);
}

inline bool metropolis_accept(double log_ratio, Rng& rng) {
    if (std::isnan(log_ratio)) return false;
    if (log_ratio >= 0.0) return true;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return std::log(unit(rng)) < log_ratio;
}

/// log r_alpha: uniform hyperprior indicator times the Beta likelihood ratio of the current eta.
inline double alpha_log_ratio(double proposed, const ChainState& state, const HyperPriorBounds& bounds) {
    if (proposed < bounds.a || proposed > bounds.b) return -std::numeric_limits<double>::infinity();
    const double num = beta_log_density(state.eta, proposed, state.beta);
    const double den = beta_log_density(state.eta, state.alpha, state.beta);
    if (!std::isfinite(num) && !std::isfinite(den)) return 0.0;
    return num - den;
}

inline double beta_log_ratio(double proposed, const ChainState& state, const HyperPriorBounds& bounds) {
    if (proposed < bounds.a || proposed > bounds.b) return -std::numeric_limits<double>::infinity();
    const double num = beta_log_density(state.eta, state.alpha, proposed);
    const double den = beta_log_density(state.eta, state.alpha, state.beta);
    if (!std::isfinite(num) && !std::isfinite(den)) return 0.0;
    return num - den;
}

/// Prior part of r_eta; the gate indicator is applied separately.
inline double eta_prior_log_ratio(double proposed, const ChainState& state) {
    if (proposed < 0.0 || proposed > 1.0) return -std::numeric_limits<double>::infinity();
    const double num = beta_log_density(proposed, state.alpha, state.beta);
    const double den = beta_log_density(state.eta, state.alpha, state.beta);
    if (!std::isfinite(num) && !std::isfinite(den)) return 0.0;
    return num - den;
}

inline double propose(double center, double lo, double hi, Rng& rng) {
    std::normal_distribution<double> step(0.0, std::sqrt(adaptive_tau2(center, lo, hi)));
    return center + step(rng);
}

/// log q(current | proposed) - log q(proposed | current) for the adaptive
/// proposal. The variance depends on the center, so the proposal is not
/// symmetric and this term keeps the target invariant. Zero for in-support
/// moves between points with equal variance.
inline double proposal_log_correction(double current, double proposed, double lo, double hi) {
    if (proposed < lo || proposed > hi) return 0.0;
    const double t_cur = adaptive_tau2(current, lo, hi), t_prop = adaptive_tau2(proposed, lo, hi);
    const double d2 = (proposed - current) * (proposed - current);
    return 0.5 * (std::log(t_cur) - std::log(t_prop)) - 0.5 * d2 / t_prop + 0.5 * d2 / t_cur;
}

inline double gibbs_step_alpha(const ChainState& state, const HyperPriorBounds& bounds, Rng& rng) {
    const double proposed = propose(state.alpha, bounds.a, bounds.b, rng);
    const double log_r =
        alpha_log_ratio(proposed, state, bounds) + proposal_log_correction(state.alpha, proposed, bounds.a, bounds.b);
    return metropolis_accept(log_r, rng) ? proposed : state.alpha;
}

inline double gibbs_step_beta(const ChainState& state, const HyperPriorBounds& bounds, Rng& rng) {
    const double proposed = propose(state.beta, bounds.a, bounds.b, rng);
    const double log_r =
        beta_log_ratio(proposed, state, bounds) + proposal_log_correction(state.beta, proposed, bounds.a, bounds.b);
    return metropolis_accept(log_r, rng) ? proposed : state.beta;
}

// eta -> index of the candidate the combined acquisition nominates.
using Nominator = std::function<std::size_t(double)>;
// candidate index -> ALD residual against the training set.
using GateDistance = std::function<double(std::size_t)>;

struct EtaStep {
    double eta = 0.0;
    double proposed = 0.0;
    std::optional<std::size_t> nominated;
    double delta = std::numeric_limits<double>::quiet_NaN();
    bool gate_open = false;
    bool accepted = false;
};

/// ABC-Metropolis update for eta, with alpha and beta already refreshed in
/// `state`. An in-support proposal nominates a candidate; the move can only
/// be accepted when that candidate passes the gate (delta >= nu).
inline EtaStep gibbs_step_eta(const ChainState& state, const Nominator& nominate, const GateDistance& gate, double nu,
                              Rng& rng) {
    EtaStep out;
    out.eta = state.eta;
    out.proposed = propose(state.eta, 0.0, 1.0, rng);
    if (out.proposed < 0.0 || out.proposed > 1.0) return out;
    out.nominated = nominate(out.proposed);
    out.delta = gate(*out.nominated);
    out.gate_open = out.delta >= nu;
    if (!out.gate_open) return out;
    const double log_r = eta_prior_log_ratio(out.proposed, state) + proposal_log_correction(state.eta, out.proposed, 0.0, 1.0);
    if (metropolis_accept(log_r, rng)) {
        out.eta = out.proposed;
        out.accepted = true;
    }
    return out;
}

inline ChainState draw_initial_state(const HyperPriorBounds& bounds, Rng& rng) {
    std::uniform_real_distribution<double> hyper(bounds.a, bounds.b);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ChainState s;
    s.alpha = hyper(rng);
    s.beta = hyper(rng);
    s.eta = unit(rng);
    return s;
}

struct ChainResult {
    double eta_bar = 0.0;
    TradeOffChain chain;
};

/// Metropolis-within-Gibbs over (alpha, beta, eta). Each sweep runs
/// `inner_steps` Metropolis updates of alpha, then beta, then eta; eta_bar
/// averages the sweep-end eta values after burn-in.
inline ChainResult run_chain(const ChainState& initial, const ChainConfig& config, const Nominator& nominate,
                             const GateDistance& gate, Rng& rng) {
    validate(config);
    ChainResult out;
    out.chain.iterations = config.iterations;
    out.chain.history.reserve(config.iterations);
    ChainState state = initial;
    for (std::size_t sweep = 0; sweep < config.iterations; ++sweep) {
        if (!config.hold_hyperparameters) {
            for (std::size_t k = 0; k < config.inner_steps; ++k) state.alpha = gibbs_step_alpha(state, config.bounds, rng);
            for (std::size_t k = 0; k < config.inner_steps; ++k) state.beta = gibbs_step_beta(state, config.bounds, rng);
        }
        SweepRecord rec;
        rec.sweep = sweep;
        for (std::size_t k = 0; k < config.inner_steps; ++k) {
            const EtaStep step = gibbs_step_eta(state, nominate, gate, config.nu, rng);
            if (step.nominated && !rec.accepted) rec.delta = step.delta;
            if (step.accepted) {
                rec.accepted = true;
                rec.delta = step.delta;
            }
            state.eta = step.eta;
        }
        rec.alpha = state.alpha;
        rec.beta = state.beta;
        rec.eta = state.eta;
        out.chain.history.push_back(rec);
    }
    out.chain.state = state;
    const auto burn = std::min(static_cast<std::size_t>(std::floor(config.burn_in * static_cast<double>(config.iterations))),
                               config.iterations - 1);
    double sum = 0.0;
    for (std::size_t s = burn; s < config.iterations; ++s) sum += out.chain.history[s].eta;
    out.eta_bar = sum / static_cast<double>(config.iterations - burn);
    return out;
}

}  // namespace altrade
