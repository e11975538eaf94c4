// Ten queries on F2 with the adaptive trade-off strategy.
#include <cstdio>

#include "altrade/altrade.hpp"

int main() {
    using namespace altrade;
    const BenchmarkFunction f2 = make_benchmark(BenchmarkId::F2);
    Rng rng(42);
    PointList pool = make_candidate_pool(f2.domain, PoolSpec{}, rng);
    const Eigen::VectorXd truth = eval_true(f2, pool);
    SyntheticOracle oracle(f2, calibrate_noise(truth, 10.0), 7);

    Dataset data = make_pool_dataset(pool);
    seed_initial_design(data, 3, oracle, rng);

    LoopConfig config;
    config.strategy = StrategySpec::proposed();
    config.budget = 10;
    const RunResult result = run_active_learning(config, std::move(data), oracle, {pool, truth}, rng);
    for (const auto& r : result.records)
        std::printf("t=%2zu x=%+.4f eta_bar=%.3f rmse=%.4f (%.0f ms)\n", r.iteration, r.chosen_point(0), r.eta_bar.value_or(0.0),
                    r.rmse, r.wall_ms);
}
