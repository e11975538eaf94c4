#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "altrade/experiment.hpp"

using namespace altrade;
using nlohmann::json;

namespace {

ExperimentConfig must_parse(const json& j) {
    auto p = parse_config(j);
    for (const auto& d : p.diagnostics) ADD_FAILURE() << format_diagnostic(d);
    return *p.config;
}

json small_config(json strategies) {
    return {{"oracle", "f2"},
            {"strategies", std::move(strategies)},
            {"budget", 3},
            {"repetitions", 2},
            {"pool", {{"grid_1d", 150}}},
            {"mcmc", {{"iterations", 60}}},
            {"gpr", {{"restarts", 2}}},
            {"master_seed", 11}};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

bool mentions(const std::vector<Diagnostic>& ds, const std::string& path, const std::string& text) {
    for (const auto& d : ds)
        if (d.path == path && d.message.find(text) != std::string::npos) return true;
    return false;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("altrade_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST(Experiment, RandomGridRowCount) {
    const auto cfg = must_parse(small_config({"random"}));
    const auto out = run_grid(cfg, 1);
    ASSERT_EQ(out.runs.size(), 2u);
    EXPECT_TRUE(out.complete());
    std::ostringstream os;
    write_results(os, cfg, out);
    EXPECT_EQ(count_lines(os.str()), 1u + 6u);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), kResultsHeader);
}

TEST(Experiment, RerunIsByteIdentical) {
    const auto cfg = must_parse(small_config({"proposed", "random"}));
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    write_outputs(a, cfg, run_grid(cfg, 1));
    write_outputs(b, cfg, run_grid(cfg, 2));
    for (const char* f : {"results.csv", "summary.csv", "manifest.csv", "chains/f2__proposed__rep1.csv"}) {
        const auto x = slurp(a / f);
        EXPECT_FALSE(x.empty()) << f;
        EXPECT_EQ(x, slurp(b / f)) << f;
    }
    EXPECT_EQ(count_lines(slurp(a / "timings.csv")), 1u + 12u);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST(Experiment, StrategyOrderDoesNotChangeRuns) {
    const auto fwd = must_parse(small_config({"proposed", "qbc", "random"}));
    const auto rev = must_parse(small_config({"random", "qbc", "proposed"}));
    const auto a = run_grid(fwd, 1), b = run_grid(rev, 1);
    for (const auto& ra : a.runs) {
        const std::string name = fwd.strategies[ra.strategy].name();
        const auto rb = std::find_if(b.runs.begin(), b.runs.end(), [&](const GridRun& r) {
            return rev.strategies[r.strategy].name() == name && r.repetition == ra.repetition;
        });
        ASSERT_NE(rb, b.runs.end());
        ASSERT_EQ(ra.records.size(), rb->records.size());
        for (std::size_t i = 0; i < ra.records.size(); ++i) {
            EXPECT_EQ(ra.records[i].chosen_index, rb->records[i].chosen_index) << name;
            EXPECT_EQ(ra.records[i].rmse, rb->records[i].rmse) << name;
            EXPECT_EQ(ra.records[i].eta_bar, rb->records[i].eta_bar) << name;
        }
    }
}

TEST(Experiment, SharedDesignAcrossStrategies) {
    const auto cfg = must_parse(small_config({"igs", "random"}));
    const ProblemFactory factory(cfg);
    const auto p = factory.make(cfg.oracles[0], 1), q = factory.make(cfg.oracles[0], 1);
    EXPECT_EQ(p.data.labeled, q.data.labeled);
    EXPECT_EQ(p.data.labels, q.data.labels);
    EXPECT_NE(factory.make(cfg.oracles[0], 0).data.labeled, p.data.labeled);
}

TEST(Experiment, SummaryStatisticsAndImprovement) {
    const auto cfg = must_parse(small_config({"random", "proposed"}));
    ExperimentOutcome out;
    auto add = [&](std::size_t s, std::size_t rep, std::vector<double> rmses) {
        GridRun run;
        run.strategy = s;
        run.repetition = rep;
        for (std::size_t t = 0; t < rmses.size(); ++t) {
            RunRecord rec;
            rec.iteration = t + 1;
            rec.rmse = rmses[t];
            run.records.push_back(rec);
        }
        out.runs.push_back(run);
    };
    add(0, 0, {3.0, 2.0});
    add(0, 1, {5.0, 2.0});
    add(1, 0, {1.0, 2.0});
    add(1, 1, {2.0, 1.0});
    const auto rows = summarize(cfg, out);
    ASSERT_EQ(rows.size(), 4u);
    const auto find = [&](const std::string& s, std::size_t t) {
        return *std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) { return r.strategy == s && r.iteration == t; });
    };
    const auto r1 = find("random", 1);
    EXPECT_EQ(r1.mean, 4.0);
    EXPECT_EQ(r1.median, 4.0);
    EXPECT_EQ(r1.q1, 3.5);
    EXPECT_EQ(r1.q3, 4.5);
    ASSERT_TRUE(r1.improvement_pct);
    EXPECT_DOUBLE_EQ(*r1.improvement_pct, 100.0 * (4.0 - 1.5) / 4.0);
    EXPECT_DOUBLE_EQ(*find("random", 2).improvement_pct, 25.0);
    EXPECT_FALSE(find("proposed", 1).improvement_pct);
}

TEST(Experiment, ImprovementMatchesResultsTable) {
    const auto cfg = must_parse(small_config({"proposed", "igs"}));
    const auto out = run_grid(cfg, 1);
    std::ostringstream os;
    write_results(os, cfg, out);
    // Recompute mean RMSE by (strategy, iteration) straight from results.csv.
    std::map<std::pair<std::string, int>, std::pair<double, int>> acc;
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
        auto& a = acc[{f[0], std::stoi(f[3])}];
        a.first += std::stod(f[4]);
        a.second += 1;
    }
    for (const auto& row : summarize(cfg, out)) {
        if (row.strategy != "igs") continue;
        const auto& b = acc[{"igs", static_cast<int>(row.iteration)}];
        const auto& p = acc[{"proposed", static_cast<int>(row.iteration)}];
        const double mb = b.first / b.second, mp = p.first / p.second;
        ASSERT_TRUE(row.improvement_pct);
        EXPECT_NEAR(*row.improvement_pct, 100.0 * (mb - mp) / mb, 1e-9);
    }
}

TEST(Config, StaticEtaOutOfRange) {
    auto p = parse_config(small_config({{{"kind", "static"}, {"eta", 1.5}}}));
    EXPECT_FALSE(p.config);
    ASSERT_EQ(p.diagnostics.size(), 1u);
    EXPECT_EQ(p.diagnostics[0].path, "strategies[0].eta");
    EXPECT_NE(p.diagnostics[0].message.find("[0, 1]"), std::string::npos);
    EXPECT_NE(p.diagnostics[0].message.find("1.5"), std::string::npos);
}

TEST(Config, MissingOracle) {
    json j = small_config({"random"});
    j.erase("oracle");
    const auto p = parse_config(j);
    EXPECT_FALSE(p.config);
    EXPECT_TRUE(mentions(p.diagnostics, "oracle", "missing"));
}

TEST(Config, UnknownKeysAndBadValues) {
    json j = small_config({"random", "random", "bogus", {{"kind", "probabilistic"}, {"decay", 1.0}}});
    j["budgit"] = 4;
    j["mcmc"]["burn"] = 0.1;
    j["repetitions"] = 0;
    const auto p = parse_config(j);
    EXPECT_FALSE(p.config);
    EXPECT_TRUE(mentions(p.diagnostics, "budgit", "unknown"));
    EXPECT_TRUE(mentions(p.diagnostics, "mcmc.burn", "unknown"));
    EXPECT_TRUE(mentions(p.diagnostics, "repetitions", ""));
    EXPECT_TRUE(mentions(p.diagnostics, "strategies[1]", "duplicate"));
    EXPECT_TRUE(mentions(p.diagnostics, "strategies[2]", ""));
    EXPECT_TRUE(mentions(p.diagnostics, "strategies[3].decay", ""));
}

TEST(Config, ShippedConfigsValidate) {
    for (const char* name : {"default.json", "tradeoffs.json", "acceptance.json", "smoke.json"}) {
        const auto ds = validate_config_file(std::string(ALTRADE_SOURCE_DIR) + "/configs/" + name);
        for (const auto& d : ds) ADD_FAILURE() << name << ": " << format_diagnostic(d);
    }
    const auto p = parse_config_file(std::string(ALTRADE_SOURCE_DIR) + "/configs/default.json");
    ASSERT_TRUE(p.config);
    EXPECT_EQ(p.config->oracles.size(), 6u);
    EXPECT_EQ(p.config->strategies.size(), 6u);
    EXPECT_EQ(p.config->budget, 100u);
    EXPECT_EQ(p.config->repetitions, 100u);
}

TEST(Config, DryRunCatchesSmallPoolsAndMissingFiles) {
    json j = small_config({"random"});
    j["pool"]["grid_1d"] = 3;
    j["n_initial"] = 3;
    EXPECT_FALSE(dry_run(must_parse(j)).empty());
    json c = small_config({"random"});
    c["oracle"] = {{"csv", "/nonexistent/table.csv"}, {"schema", {{"numeric", {"a"}}, {"target", "y"}}}};
    const auto p = parse_config(c);
    ASSERT_TRUE(p.config) << (p.diagnostics.empty() ? "" : format_diagnostic(p.diagnostics[0]));
    EXPECT_FALSE(dry_run(*p.config).empty());
}

TEST(Experiment, CsvOracleRun) {
    const auto dir = scratch("csv");
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "table.csv");
        f.precision(17);
        f << "site,a,y\n";
        for (int i = 0; i < 30; ++i) f << (i % 3 == 0 ? "Ti" : "Zr") << ',' << i * 0.1 << ',' << std::sin(i * 0.1) << '\n';
    }
    json c = small_config({"igs", "random"});
    c["budget"] = 5;
    c["oracle"] = {{"name", "tab"},
                   {"csv", (dir / "table.csv").string()},
                   {"schema", {{"categorical", {"site"}}, {"numeric", {"a"}}, {"target", "y"}}}};
    const auto cfg = must_parse(c);
    EXPECT_TRUE(dry_run(cfg).empty());
    const auto out = run_grid(cfg, 1);
    EXPECT_TRUE(out.complete());
    for (const auto& run : out.runs) {
        ASSERT_FALSE(run.error) << *run.error;
        ASSERT_EQ(run.records.size(), 5u);
        for (const auto& rec : run.records) {
            EXPECT_EQ(rec.chosen_point.size(), 3);
            EXPECT_NEAR(rec.label, std::sin(static_cast<double>(rec.chosen_index) * 0.1), 1e-12);
        }
    }
    std::filesystem::remove_all(dir);
}

TEST(Experiment, FailedRunIsReportedNotThrown) {
    auto cfg = must_parse(small_config({"random"}));
    cfg.n_initial = 1000;  // larger than the pool, bypassing dry_run on purpose
    const auto out = run_grid(cfg, 1);
    EXPECT_FALSE(out.complete());
    std::ostringstream os;
    write_manifest(os, cfg, out);
    EXPECT_NE(os.str().find(",failed,0,"), std::string::npos);
}

TEST(Seeds, StableAndKeyed) {
    EXPECT_EQ(derive_seed(1, "run|f2|random|0"), derive_seed(1, "run|f2|random|0"));
    EXPECT_NE(run_seed(1, "f2", "random", 0), run_seed(1, "f2", "random", 1));
    EXPECT_NE(run_seed(1, "f2", "random", 0), run_seed(2, "f2", "random", 0));
    EXPECT_NE(design_seed(1, "f2", 0), noise_seed(1, "f2", 0));
}

TEST(Format, Reals) {
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(format_real(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_real(-std::numeric_limits<double>::infinity()), "-inf");
    Point p(2);
    p << 1.0, -2.5;
    EXPECT_EQ(format_point(p), "1;-2.5");
}
