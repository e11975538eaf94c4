#include <gtest/gtest.h>

#include "altrade/tradeoff.hpp"
#include "test_support.hpp"

using namespace altrade;
using altrade::testing::random_points;

namespace {

// The quadratic-form minimization min_a |sum_i a_i phi(x_i) - phi(x_hat)|^2
// solved directly in an explicit feature space built from the eigenvectors
// of the joint Gram matrix.
double least_squares_delta(const KernelSpec& k, const PointList& xo, const Point& xhat) {
    PointList all(xo.rows() + 1, xo.cols());
    all << xo, xhat.transpose();
    const Eigen::MatrixXd K = altrade::testing::reference_matrix(k, all, all);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    const Eigen::MatrixXd phi = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const Eigen::MatrixXd A = phi.topRows(xo.rows()).transpose();  // features as columns
    const Eigen::VectorXd target = phi.row(xo.rows()).transpose();
    const Eigen::VectorXd a = A.completeOrthogonalDecomposition().solve(target);
    return (A * a - target).squaredNorm();
}

ChainConfig quick(std::size_t iterations) {
    ChainConfig c;
    c.iterations = iterations;
    return c;
}

const Nominator kFirst = [](double) { return std::size_t{0}; };
const GateDistance kOpen = [](std::size_t) { return 1.0; };

}  // namespace

TEST(BetaDensity, ClosedForms) {
    EXPECT_NEAR(beta_log_density(0.3, 1.0, 1.0), 0.0, 1e-15);
    EXPECT_NEAR(beta_log_density(0.5, 2.0, 1.0), 0.0, 1e-15);
    EXPECT_EQ(beta_log_density(0.0, 2.0, 2.0), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(beta_log_density(1.0, 2.0, 2.0), -std::numeric_limits<double>::infinity());
    EXPECT_NEAR(std::exp(beta_log_density(0.9, 2.0, 0.5)), 2.1345374206136554, 1e-14);
}

TEST(BetaDensity, UShapeHasLocalMinimumAtHalf) {
    const double mid = beta_log_density(0.5, 0.5, 0.5);
    for (double d : {0.01, 0.1, 0.3, 0.45}) {
        EXPECT_GT(beta_log_density(0.5 - d, 0.5, 0.5), mid);
        EXPECT_GT(beta_log_density(0.5 + d, 0.5, 0.5), mid);
    }
}

TEST(Tau2, WorkedValues) {
    EXPECT_NEAR(adaptive_tau2(0.75, 0.0, 1.0), 0.006944444444444444, 1e-15);
    EXPECT_NEAR(adaptive_tau2(0.5, 0.0, 1.0), 0.027777777777777776, 1e-15);
    EXPECT_DOUBLE_EQ(adaptive_tau2(0.0, 0.0, 1.0), 1e-6);
    for (double c = 0.0; c <= 1.0; c += 0.05) EXPECT_LE(adaptive_tau2(c, 0.0, 1.0), adaptive_tau2(0.5, 0.0, 1.0));
    EXPECT_NEAR(adaptive_tau2(2.55, 0.1, 5.0), std::pow(2.45 / 3.0, 2), 1e-14);
}

TEST(AlphaRatio, HandComputedBetaRatio) {
    const ChainState s{1.0, 0.5, 0.9};
    EXPECT_NEAR(std::exp(alpha_log_ratio(2.0, s, {})), 1.35, 1e-12);
    EXPECT_NEAR(std::exp(alpha_log_ratio(1.0, s, {})), 1.0, 1e-15);
    EXPECT_EQ(alpha_log_ratio(5.01, s, {}), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(alpha_log_ratio(0.09, s, {}), -std::numeric_limits<double>::infinity());
}

TEST(BetaRatio, MirroredHandComputation) {
    EXPECT_NEAR(std::exp(beta_log_ratio(2.0, ChainState{0.5, 1.0, 0.1}, {})), 1.35, 1e-12);
    EXPECT_NEAR(std::exp(beta_log_ratio(2.0, ChainState{0.5, 1.0, 0.9}, {})), 0.15, 1e-12);
    EXPECT_EQ(beta_log_ratio(-1.0, ChainState{}, {}), -std::numeric_limits<double>::infinity());
}

TEST(GibbsSteps, OutOfSupportProposalsAreRejected) {
    Rng rng(1);
    HyperPriorBounds tight{0.1, 5.0};
    for (int i = 0; i < 2000; ++i) {
        ChainState s{0.1 + 1e-4, 5.0 - 1e-4, 0.5};
        const double a = gibbs_step_alpha(s, tight, rng);
        const double b = gibbs_step_beta(s, tight, rng);
        EXPECT_GE(a, 0.1);
        EXPECT_LE(b, 5.0);
    }
}

TEST(GibbsSteps, AcceptanceFrequencyMatchesRatio) {
    // Accept probability of one step equals E[min(1, r)] over the proposal,
    // estimated by replaying the same proposals.
    const ChainState s{1.0, 0.5, 0.9};
    Rng a(2), b(2);
    int accepted = 0;
    double expected = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        if (gibbs_step_alpha(s, {}, a) != s.alpha) ++accepted;
        const double prop = propose(s.alpha, 0.1, 5.0, b);
        const double log_r = alpha_log_ratio(prop, s, {}) + proposal_log_correction(s.alpha, prop, 0.1, 5.0);
        expected += std::min(1.0, std::exp(log_r));
        if (log_r < 0.0) std::uniform_real_distribution<double>(0, 1)(b);
    }
    EXPECT_NEAR(static_cast<double>(accepted) / n, expected / n, 0.02);
}

TEST(ProposalCorrection, ClosedFormAndAntisymmetry) {
    EXPECT_NEAR(proposal_log_correction(0.5, 0.25, 0.0, 1.0), -2.6818528194400546, 1e-12);
    EXPECT_NEAR(proposal_log_correction(0.3, 0.7, 0.0, 1.0), 0.0, 1e-12);
    EXPECT_EQ(proposal_log_correction(0.5, 1.2, 0.0, 1.0), 0.0);
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng), y = u(rng);
        EXPECT_NEAR(proposal_log_correction(x, y, 0.1, 5.0), -proposal_log_correction(y, x, 0.1, 5.0), 1e-9);
    }
}

TEST(Ald, DuplicateTrainingPointHasZeroDelta) {
    Rng rng(3);
    const auto xo = random_points(5, 2, rng);
    const AldConfig cfg;
    for (Eigen::Index i = 0; i < xo.rows(); ++i) {
        const AldResult r = ald_distance(cfg, xo, row_point(xo, i));
        EXPECT_LE(r.delta, 1e-8);
        Eigen::VectorXd indicator = Eigen::VectorXd::Zero(5);
        indicator(i) = 1.0;
        EXPECT_LT((r.coefficients - indicator).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(Ald, FarCandidateApproachesSignalVariance) {
    AldConfig cfg;
    cfg.kernel = KernelSpec::leaf(KernelFamily::Matern32, 1.3, 0.5);
    const PointList xo = PointList::Zero(3, 1) + Eigen::Vector3d(0, 0.2, 0.5);
    EXPECT_NEAR(ald_distance(cfg, xo, Point::Constant(1, 500.0)).delta, 1.3, 1e-12);
}

TEST(Ald, ThreePointMaternMatchesLeastSquares) {
    PointList xo(3, 1);
    xo << 0.0, 0.7, 1.9;
    AldConfig cfg;
    const Point xhat = Point::Constant(1, 1.2);
    EXPECT_NEAR(ald_distance(cfg, xo, xhat).delta, least_squares_delta(cfg.kernel, xo, xhat), 1e-8);
}

TEST(Ald, RandomInstancesMatchLeastSquares) {
    Rng rng(4);
    std::uniform_int_distribution<int> n(1, 8), d(1, 3);
    std::uniform_real_distribution<double> ls(0.3, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        const int dim = d(rng);
        AldConfig cfg;
        cfg.kernel = KernelSpec::leaf(KernelFamily::Matern32, 1.0, ls(rng));
        const auto xo = random_points(n(rng), dim, rng);
        const Point xhat = row_point(random_points(1, dim, rng), 0);
        EXPECT_NEAR(ald_distance(cfg, xo, xhat).delta, least_squares_delta(cfg.kernel, xo, xhat), 1e-8);
    }
}

TEST(Ald, EmptyTrainingSetThrows) {
    EXPECT_THROW(ald_distance(AldConfig{}, PointList(0, 1), Point::Zero(1)), InputError);
}

TEST(EtaStep, DuplicateNominationKeepsEta) {
    Rng rng(5);
    const GateDistance closed = [](std::size_t) { return 0.0; };
    for (int i = 0; i < 200; ++i) {
        const EtaStep s = gibbs_step_eta(ChainState{1, 1, 0.4}, kFirst, closed, 1e-3, rng);
        EXPECT_EQ(s.eta, 0.4);
        EXPECT_FALSE(s.accepted);
    }
}

TEST(EtaStep, UniformPriorAcceptanceIsProposalCorrection) {
    Rng rng(6);
    const ChainState s{1, 1, 0.3};
    int accepted = 0;
    double expected = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const EtaStep step = gibbs_step_eta(s, kFirst, kOpen, 1e-3, rng);
        if (step.proposed < 0.0 || step.proposed > 1.0) {
            EXPECT_FALSE(step.accepted);
            continue;
        }
        EXPECT_EQ(eta_prior_log_ratio(step.proposed, s), 0.0);
        const double log_r = proposal_log_correction(s.eta, step.proposed, 0.0, 1.0);
        if (log_r >= 0.0) {
            EXPECT_TRUE(step.accepted);
        }
        expected += std::min(1.0, std::exp(log_r));
        accepted += step.accepted;
    }
    EXPECT_NEAR(static_cast<double>(accepted) / n, expected / n, 0.015);
}

TEST(EtaStep, AcceptanceRequiresOpenGate) {
    Rng rng(7);
    // Gate open for even candidate indices; nominate by which tenth eta falls in.
    const Nominator nominate = [](double eta) { return static_cast<std::size_t>(eta * 10.0); };
    const GateDistance gate = [](std::size_t j) { return j % 2 == 0 ? 1.0 : 0.0; };
    ChainState s{1, 1, 0.55};
    int open = 0, accepted = 0;
    for (int i = 0; i < 1000; ++i) {
        const EtaStep step = gibbs_step_eta(s, nominate, gate, 1e-3, rng);
        if (step.gate_open) ++open;
        if (step.accepted) {
            ++accepted;
            EXPECT_TRUE(step.gate_open);
            EXPECT_EQ(nominate(step.eta) % 2, 0u);
        }
        s.eta = step.eta;
    }
    EXPECT_GT(accepted, 0);
    EXPECT_LE(accepted, open);
}

TEST(Chain, SingleIterationReturnsItsSample) {
    Rng rng(8);
    const ChainResult r = run_chain(ChainState{1, 1, 0.3}, quick(1), kFirst, kOpen, rng);
    ASSERT_EQ(r.chain.history.size(), 1u);
    EXPECT_DOUBLE_EQ(r.eta_bar, r.chain.history[0].eta);
}

TEST(Chain, ClosedGateFreezesEta) {
    Rng rng(9);
    ChainConfig c = quick(200);
    c.nu = std::numeric_limits<double>::infinity();
    const ChainResult r = run_chain(ChainState{1, 1, 0.37}, c, kFirst, kOpen, rng);
    EXPECT_NEAR(r.eta_bar, 0.37, 1e-12);
}

TEST(Chain, SupportDeterminismAndGateSoundness) {
    const Nominator nominate = [](double eta) { return static_cast<std::size_t>(eta * 20.0); };
    const GateDistance gate = [](std::size_t j) { return j % 3 == 0 ? 0.0 : 0.01 * (1.0 + static_cast<double>(j)); };
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng init(seed), a(seed + 100), b(seed + 100);
        const ChainState s0 = draw_initial_state({}, init);
        const ChainResult r1 = run_chain(s0, quick(1000), nominate, gate, a);
        const ChainResult r2 = run_chain(s0, quick(1000), nominate, gate, b);
        ASSERT_EQ(r1.chain.history.size(), 1000u);
        double prev = s0.eta;
        for (std::size_t k = 0; k < 1000; ++k) {
            const auto& h = r1.chain.history[k];
            EXPECT_GE(h.alpha, 0.1);
            EXPECT_LE(h.alpha, 5.0);
            EXPECT_GE(h.beta, 0.1);
            EXPECT_LE(h.beta, 5.0);
            EXPECT_GE(h.eta, 0.0);
            EXPECT_LE(h.eta, 1.0);
            if (h.eta != prev) {
                EXPECT_TRUE(h.accepted);
                EXPECT_GE(h.delta, 1e-3);
            }
            prev = h.eta;
            const auto& g = r2.chain.history[k];
            EXPECT_EQ(h.alpha, g.alpha);
            EXPECT_EQ(h.beta, g.beta);
            EXPECT_EQ(h.eta, g.eta);
        }
        EXPECT_EQ(r1.eta_bar, r2.eta_bar);
    }
}

TEST(Chain, BurnInIsExcludedFromAverage) {
    Rng rng(10);
    const ChainResult r = run_chain(ChainState{1, 1, 0.5}, quick(50), kFirst, kOpen, rng);
    double sum = 0;
    for (std::size_t k = 10; k < 50; ++k) sum += r.chain.history[k].eta;
    EXPECT_DOUBLE_EQ(r.eta_bar, sum / 40.0);
}

TEST(Chain, HeldHyperparametersStayFixed) {
    Rng rng(11);
    ChainConfig c = quick(100);
    c.hold_hyperparameters = true;
    const ChainResult r = run_chain(ChainState{1, 1, 0.5}, c, kFirst, kOpen, rng);
    for (const auto& h : r.chain.history) {
        EXPECT_EQ(h.alpha, 1.0);
        EXPECT_EQ(h.beta, 1.0);
    }
}

TEST(Chain, InitialStateDrawnFromPriors) {
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
        const ChainState s = draw_initial_state({}, rng);
        EXPECT_GE(s.alpha, 0.1);
        EXPECT_LE(s.alpha, 5.0);
        EXPECT_GE(s.beta, 0.1);
        EXPECT_LE(s.beta, 5.0);
        EXPECT_GE(s.eta, 0.0);
        EXPECT_LE(s.eta, 1.0);
    }
}

TEST(Chain, ConfigValidation) {
    ChainConfig c;
    c.iterations = 0;
    EXPECT_THROW(validate(c), ConfigError);
    c = ChainConfig{};
    c.burn_in = 1.0;
    EXPECT_THROW(validate(c), ConfigError);
    c = ChainConfig{};
    c.bounds = {5.0, 0.1};
    EXPECT_THROW(validate(c), ConfigError);
}
