#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "altrade/acquisition.hpp"
#include "altrade/benchmarks.hpp"
#include "altrade/dataset.hpp"
#include "altrade/errors.hpp"
#include "altrade/gpr.hpp"
#include "altrade/tradeoff.hpp"

namespace altrade {

enum class StrategyKind { Proposed, PureExplore, PureExploit, Static, Probabilistic, Random };

struct StrategySpec {
    StrategyKind kind = StrategyKind::Proposed;
    // Exploration score used by every strategy that has an exploration side.
    ExploreKind explore = ExploreKind::Igs;
    double eta = 0.5;    // Static
    double decay = 0.7;  // Probabilistic

    static StrategySpec proposed(ExploreKind e = ExploreKind::Igs) { return {StrategyKind::Proposed, e}; }
    static StrategySpec pure_explore(ExploreKind e = ExploreKind::Igs) { return {StrategyKind::PureExplore, e}; }
    static StrategySpec pure_exploit() { return {StrategyKind::PureExploit}; }
    static StrategySpec fixed(double eta, ExploreKind e = ExploreKind::Igs) { return {StrategyKind::Static, e, eta}; }
    static StrategySpec probabilistic(double decay = 0.7, ExploreKind e = ExploreKind::Igs) {
        return {StrategyKind::Probabilistic, e, 0.5, decay};
    }
    static StrategySpec random() { return {StrategyKind::Random}; }

    /// Stable identity, used in output tables and for seed derivation.
    std::string name() const {
        auto num = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", v);
            return std::string(buf);
        };
        const std::string suffix = explore == ExploreKind::Igs ? "" : "+" + std::string(to_string(explore));
        switch (kind) {
            case StrategyKind::Proposed: return "proposed" + suffix;
            case StrategyKind::PureExplore: return std::string(to_string(explore));
            case StrategyKind::PureExploit: return "qbc";
            case StrategyKind::Static: return "static" + num(eta) + suffix;
            case StrategyKind::Probabilistic: return "probabilistic" + num(decay) + suffix;
            case StrategyKind::Random: return "random";
        }
        return "unknown";
    }

    bool needs_committee() const {
        return kind == StrategyKind::Proposed || kind == StrategyKind::PureExploit || kind == StrategyKind::Static ||
               kind == StrategyKind::Probabilistic;
    }
    bool needs_explore() const {
        return kind == StrategyKind::Proposed || kind == StrategyKind::PureExplore || kind == StrategyKind::Static ||
               kind == StrategyKind::Probabilistic;
    }
};

inline void validate(const StrategySpec& s) {
    if (s.kind == StrategyKind::Static && !(s.eta >= 0.0 && s.eta <= 1.0))
        throw ConfigError("static strategy eta must lie in [0, 1]");
    if (s.kind == StrategyKind::Probabilistic && !(s.decay > 0.0 && s.decay < 1.0))
        throw ConfigError("probabilistic strategy decay must lie in (0, 1)");
}

/// Label source for candidate points.
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual double query(std::size_t candidate_index, const Point& x) = 0;
};

/// Benchmark function plus calibrated Gaussian noise, with its own noise stream.
class SyntheticOracle final : public Oracle {
public:
    SyntheticOracle(BenchmarkFunction function, NoiseModel noise, std::uint64_t seed)
        : function_(std::move(function)), noise_(noise), rng_(seed) {}

    double query(std::size_t, const Point& x) override { return sample_label(function_, x, noise_, rng_); }

    const BenchmarkFunction& function() const { return function_; }
    const NoiseModel& noise() const { return noise_; }

private:
    BenchmarkFunction function_;
    NoiseModel noise_;
    Rng rng_;
};

/// Stored labels, each released at most once.
class TabularOracle final : public Oracle {
public:
    explicit TabularOracle(Eigen::VectorXd labels)
        : labels_(std::move(labels)), served_(static_cast<std::size_t>(labels_.size()), false) {}

    double query(std::size_t candidate_index, const Point&) override {
        if (candidate_index >= served_.size()) throw InputError("tabular oracle: row out of range");
        if (served_[candidate_index])
            throw InputError("tabular oracle: row " + std::to_string(candidate_index) + " was already queried");
        served_[candidate_index] = true;
        return labels_(static_cast<Eigen::Index>(candidate_index));
    }

    // Marks rows labeled outside the oracle (the initial split).
    void mark_served(const std::vector<std::size_t>& rows) {
        for (auto r : rows) served_.at(r) = true;
    }

private:
    Eigen::VectorXd labels_;
    std::vector<bool> served_;
};

/// Noise-free reference the RMSE is measured against.
struct Evaluation {
    PointList points;
    Eigen::VectorXd truth;
};

inline GprConfig default_learner_config() {
    GprConfig c;
    c.kernel = KernelSpec::leaf(KernelFamily::Matern32, 1.0, 1.0);
    c.normalize_y = true;
    c.fit_noise = true;
    return c;
}

struct SelectionContext {
    const Dataset& data;
    const PointList& pool_x;
    const FittedGp& learner;
    const Committee* committee = nullptr;
    ChainConfig chain;
    std::size_t iteration = 1;  // 1-based query number t
};

struct Selection {
    std::size_t pool_position = 0;
    std::optional<double> eta;
    std::optional<TradeOffChain> chain;
};

inline Eigen::VectorXd exploration_scores(ExploreKind kind, const SelectionContext& ctx) {
    switch (kind) {
        case ExploreKind::Igs:
            return score_igs(ctx.learner, ctx.data.labeled_x(), ctx.data.labeled_y(), ctx.pool_x);
        case ExploreKind::MaxVariance:
            return score_maxvar(ctx.learner.predict_marginals(ctx.pool_x));
        case ExploreKind::MaxEntropy:
            return score_maxent(ctx.learner, ctx.pool_x);
    }
    return {};
}

inline Eigen::VectorXd exploitation_scores(const SelectionContext& ctx) {
    if (ctx.committee == nullptr) throw ConfigError("strategy needs a fitted QBC committee");
    return score_qbc(*ctx.committee, ctx.pool_x);
}

/// Runs the trade-off chain for the current state and returns eta_bar with the chain.
inline ChainResult estimate_tradeoff(const Eigen::VectorXd& explore, const Eigen::VectorXd& exploit,
                                     const SelectionContext& ctx, Rng& rng) {
    const TradeOffEnvelope envelope(explore, exploit);
    const AldStatistic ald(ctx.learner.kernel(), ctx.data.labeled_x());
    std::vector<double> memo(static_cast<std::size_t>(ctx.pool_x.rows()), std::numeric_limits<double>::quiet_NaN());
    Nominator nominate = [&](double eta) { return envelope.argmax(eta); };
    GateDistance gate = [&](std::size_t j) {
        if (std::isnan(memo[j])) memo[j] = ald(row_point(ctx.pool_x, static_cast<Eigen::Index>(j))).delta;
        return memo[j];
    };
    const ChainState init = draw_initial_state(ctx.chain.bounds, rng);
    return run_chain(init, ctx.chain, nominate, gate, rng);
}

/// Chooses the next query from the pool according to `strategy`.
inline Selection select_next(const StrategySpec& strategy, const SelectionContext& ctx, Rng& rng) {
    validate(strategy);
    if (ctx.pool_x.rows() == 0) throw InputError("select_next: the pool is empty");
    Selection out;
    switch (strategy.kind) {
        case StrategyKind::Random:
            out.pool_position = argmax(score_random(static_cast<std::size_t>(ctx.pool_x.rows()), rng));
            return out;
        case StrategyKind::PureExplore:
            out.pool_position = argmax(exploration_scores(strategy.explore, ctx));
            return out;
        case StrategyKind::PureExploit:
            out.pool_position = argmax(exploitation_scores(ctx));
            return out;
        default:
            break;
    }
    const Eigen::VectorXd explore = exploration_scores(strategy.explore, ctx);
    const Eigen::VectorXd exploit = exploitation_scores(ctx);
    double eta = 0.0;
    if (strategy.kind == StrategyKind::Static) {
        eta = strategy.eta;
    } else if (strategy.kind == StrategyKind::Probabilistic) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double p_explore = std::pow(strategy.decay, static_cast<double>(ctx.iteration) - 1.0);
        eta = unit(rng) <= p_explore ? 1.0 : 0.0;
    } else {
        ChainResult chain = estimate_tradeoff(explore, exploit, ctx, rng);
        eta = chain.eta_bar;
        out.chain = std::move(chain.chain);
    }
    out.eta = eta;
    out.pool_position = best_candidate(combine(explore, exploit, eta));
    return out;
}

struct LoopConfig {
    StrategySpec strategy;
    std::size_t budget = 100;
    ChainConfig chain;
    GprConfig learner = default_learner_config();
    // Base settings for committee members; the kernel is replaced per member.
    GprConfig committee = default_learner_config();
    bool keep_chains = false;
};

struct RunRecord {
    std::size_t iteration = 0;
    std::size_t chosen_index = 0;  // candidate index
    Point chosen_point;
    double label = 0.0;
    std::optional<double> eta_bar;
    double rmse = 0.0;
    double wall_ms = 0.0;
    std::optional<TradeOffChain> chain;
};

struct RunResult {
    std::vector<RunRecord> records;
    // The pool emptied before the budget was spent.
    bool exhausted = false;
    Dataset final_data;
};

/// Labels `n_initial` uniformly drawn pool candidates through the oracle.
inline void seed_initial_design(Dataset& data, std::size_t n_initial, Oracle& oracle, Rng& rng) {
    if (n_initial < 1) throw ConfigError("n_initial must be >= 1");
    const auto positions = draw_pool_positions(data.pool.size(), n_initial, rng);
    std::vector<std::size_t> picks;
    for (auto p : positions) picks.push_back(data.pool[p]);
    for (auto idx : picks) data.label_candidate(idx, oracle.query(idx, row_point(data.candidates, static_cast<Eigen::Index>(idx))));
}

/// The outer active-learning loop: fit, select, query, grow, score.
inline RunResult run_active_learning(const LoopConfig& config, Dataset data, Oracle& oracle,
                                     const Evaluation& evaluation, Rng& rng) {
    validate(config.strategy);
    validate(config.chain);
    if (config.budget < 1) throw ConfigError("budget must be >= 1");
    if (data.labeled.empty()) throw ConfigError("active learning needs at least one labeled point");
    RunResult result;
    FittedGp learner = fit(config.learner, data.labeled_x(), data.labeled_y());
    for (std::size_t t = 1; t <= config.budget; ++t) {
        if (data.pool.empty()) {
            result.exhausted = true;
            break;
        }
        const auto start = std::chrono::steady_clock::now();
        const PointList labeled_x = data.labeled_x();
        const Eigen::VectorXd labeled_y = data.labeled_y();
        std::optional<Committee> committee;
        if (config.strategy.needs_committee()) committee = fit_committee(config.committee, labeled_x, labeled_y);
        const PointList pool_x = data.pool_x();
        SelectionContext ctx{data, pool_x, learner, committee ? &*committee : nullptr, config.chain, t};
        Selection sel = select_next(config.strategy, ctx, rng);

        RunRecord rec;
        rec.iteration = t;
        rec.chosen_index = data.pool[sel.pool_position];
        rec.chosen_point = row_point(data.candidates, static_cast<Eigen::Index>(rec.chosen_index));
        rec.label = oracle.query(rec.chosen_index, rec.chosen_point);
        if (!std::isfinite(rec.label)) throw InputError("oracle returned a non-finite label");
        data.label(sel.pool_position, rec.label);
        rec.eta_bar = sel.eta;
        if (config.keep_chains) rec.chain = std::move(sel.chain);

        learner = fit(config.learner, data.labeled_x(), data.labeled_y());
        rec.rmse = rmse(learner.predict_mean(evaluation.points), evaluation.truth);
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        result.records.push_back(std::move(rec));
    }
    result.final_data = std::move(data);
    return result;
}

}  // namespace altrade
