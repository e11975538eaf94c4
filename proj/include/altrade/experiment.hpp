#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "altrade/active_loop.hpp"
#include "altrade/benchmarks.hpp"
#include "altrade/data_io.hpp"

namespace altrade {

struct CsvOracleSpec {
    std::string path;
    TabularSchema schema;
};

struct OracleSpec {
    std::string name;
    BenchmarkFunction function;                // when !csv
    std::optional<CsvOracleSpec> csv;
};

struct ExperimentConfig {
    std::vector<OracleSpec> oracles;
    std::vector<StrategySpec> strategies;
    std::size_t budget = 100;
    std::size_t n_initial = 3;
    std::size_t repetitions = 100;
    PoolSpec pool;
    double snr_db = 10.0;
    ChainConfig mcmc;
    int gpr_restarts = 8;
    std::uint64_t master_seed = 0;
    bool export_chains = true;
};

struct Diagnostic {
    std::string path;
    std::string message;
};

inline std::string format_diagnostic(const Diagnostic& d) { return d.path + ": " + d.message; }

// ---------------------------------------------------------------------------
// Config parsing

namespace config_detail {

using nlohmann::json;

class Reader {
public:
    std::vector<Diagnostic> diagnostics;

    void error(const std::string& path, const std::string& message) { diagnostics.push_back({path, message}); }

    void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || it.key() == a;
            if (!ok) error(join(path, it.key()), "unknown key");
        }
    }

    static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

    template <typename T>
    void read_unsigned(const json& obj, const std::string& path, const char* key, T& out, T min_value) {
        if (!obj.contains(key)) return;
        const auto& v = obj[key];
        const std::string p = join(path, key);
        if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
            error(p, "must be an integer >= " + std::to_string(min_value));
            return;
        }
        out = static_cast<T>(v.get<long long>());
    }

    void read_real(const json& obj, const std::string& path, const char* key, double& out) {
        if (!obj.contains(key)) return;
        const auto& v = obj[key];
        if (!v.is_number()) {
            error(join(path, key), "must be a number");
            return;
        }
        out = v.get<double>();
    }
};

inline std::optional<ExploreKind> parse_explore(const std::string& s) {
    if (s == "igs") return ExploreKind::Igs;
    if (s == "maxvar") return ExploreKind::MaxVariance;
    if (s == "maxent") return ExploreKind::MaxEntropy;
    return std::nullopt;
}

inline std::optional<StrategySpec> parse_strategy(const json& j, const std::string& path, Reader& r) {
    StrategySpec s;
    std::string kind;
    if (j.is_string()) {
        kind = j.get<std::string>();
    } else if (j.is_object()) {
        r.check_keys(j, path, {"kind", "eta", "decay", "explore"});
        if (!j.contains("kind") || !j["kind"].is_string()) {
            r.error(path + ".kind", "required string");
            return std::nullopt;
        }
        kind = j["kind"].get<std::string>();
        if (j.contains("explore")) {
            const auto e = j["explore"].is_string() ? parse_explore(j["explore"].get<std::string>()) : std::nullopt;
            if (!e) r.error(path + ".explore", "must be one of igs, maxvar, maxent");
            else s.explore = *e;
        }
    } else {
        r.error(path, "must be a strategy name or object");
        return std::nullopt;
    }
    if (kind == "proposed") s.kind = StrategyKind::Proposed;
    else if (kind == "qbc") s.kind = StrategyKind::PureExploit;
    else if (kind == "random") s.kind = StrategyKind::Random;
    else if (kind == "static") s.kind = StrategyKind::Static;
    else if (kind == "probabilistic") s.kind = StrategyKind::Probabilistic;
    else if (auto e = parse_explore(kind)) {
        s.kind = StrategyKind::PureExplore;
        s.explore = *e;
    } else {
        r.error(path + (j.is_object() ? ".kind" : ""), "unknown strategy '" + kind + "'");
        return std::nullopt;
    }
    if (j.is_object()) {
        if (s.kind == StrategyKind::Static) {
            if (!j.contains("eta")) r.error(path + ".eta", "required for a static strategy");
            r.read_real(j, path, "eta", s.eta);
            if (!(s.eta >= 0.0 && s.eta <= 1.0)) r.error(path + ".eta", "must lie in [0, 1], got " + j.value("eta", json()).dump());
        } else if (j.contains("eta")) {
            r.error(path + ".eta", "only valid for a static strategy");
        }
        if (s.kind == StrategyKind::Probabilistic) {
            r.read_real(j, path, "decay", s.decay);
            if (!(s.decay > 0.0 && s.decay < 1.0)) r.error(path + ".decay", "must lie in (0, 1), got " + j["decay"].dump());
        } else if (j.contains("decay")) {
            r.error(path + ".decay", "only valid for a probabilistic strategy");
        }
    } else if (s.kind == StrategyKind::Static) {
        r.error(path, "a static strategy needs an object with an eta field");
    }
    return s;
}

inline std::optional<TabularSchema> parse_schema(const json& j, const std::string& path, Reader& r) {
    if (!j.is_object()) {
        r.error(path, "must be an object");
        return std::nullopt;
    }
    r.check_keys(j, path, {"categorical", "numeric", "target"});
    TabularSchema schema;
    if (j.contains("categorical")) {
        if (!j["categorical"].is_array()) r.error(path + ".categorical", "must be an array");
        else {
            for (std::size_t i = 0; i < j["categorical"].size(); ++i) {
                const auto& c = j["categorical"][i];
                const std::string p = path + ".categorical[" + std::to_string(i) + "]";
                CategoricalColumn col;
                if (c.is_string()) col.name = c.get<std::string>();
                else if (c.is_object() && c.contains("name") && c["name"].is_string()) {
                    col.name = c["name"].get<std::string>();
                    if (c.contains("categories")) {
                        if (!c["categories"].is_array()) r.error(p + ".categories", "must be an array of strings");
                        else
                            for (const auto& v : c["categories"]) {
                                if (v.is_string()) col.categories.push_back(v.get<std::string>());
                                else r.error(p + ".categories", "must be an array of strings");
                            }
                    }
                } else {
                    r.error(p, "must be a column name or {name, categories}");
                    continue;
                }
                schema.categorical_columns.push_back(col);
            }
        }
    }
    if (j.contains("numeric")) {
        if (!j["numeric"].is_array()) r.error(path + ".numeric", "must be an array");
        else
            for (const auto& v : j["numeric"]) {
                if (v.is_string()) schema.numeric_columns.push_back(v.get<std::string>());
                else r.error(path + ".numeric", "must be an array of column names");
            }
    }
    if (!j.contains("target") || !j["target"].is_string()) r.error(path + ".target", "required column name");
    else schema.target_column = j["target"].get<std::string>();
    try {
        validate(schema);
    } catch (const SchemaError& e) {
        r.error(path, e.what());
    }
    return schema;
}

inline std::optional<OracleSpec> parse_oracle(const json& j, const std::string& path, Reader& r) {
    OracleSpec o;
    if (j.is_string()) {
        const auto id = parse_benchmark_id(j.get<std::string>());
        if (!id) {
            r.error(path, "unknown benchmark '" + j.get<std::string>() + "' (expected f1..f6)");
            return std::nullopt;
        }
        o.function = make_benchmark(*id);
        o.name = o.function.name();
        return o;
    }
    if (!j.is_object()) {
        r.error(path, "must be a benchmark id or an object");
        return std::nullopt;
    }
    r.check_keys(j, path, {"function", "domain", "f6_grouping", "csv", "schema", "name"});
    if (j.contains("csv")) {
        if (!j["csv"].is_string()) {
            r.error(path + ".csv", "must be a file path");
            return std::nullopt;
        }
        CsvOracleSpec csv;
        csv.path = j["csv"].get<std::string>();
        if (!j.contains("schema")) {
            r.error(path + ".schema", "required for a csv oracle");
            return std::nullopt;
        }
        auto schema = parse_schema(j["schema"], path + ".schema", r);
        if (!schema) return std::nullopt;
        csv.schema = *schema;
        o.csv = csv;
        o.name = j.value("name", std::filesystem::path(csv.path).stem().string());
        return o;
    }
    if (!j.contains("function") || !j["function"].is_string()) {
        r.error(path + ".function", "required (f1..f6) unless csv is given");
        return std::nullopt;
    }
    const auto id = parse_benchmark_id(j["function"].get<std::string>());
    if (!id) {
        r.error(path + ".function", "unknown benchmark '" + j["function"].get<std::string>() + "'");
        return std::nullopt;
    }
    o.function = make_benchmark(*id);
    if (j.contains("domain")) {
        const auto& d = j["domain"];
        bool ok = d.is_array() && d.size() == o.function.dimension;
        Box box;
        if (ok) {
            for (const auto& b : d) {
                if (!(b.is_array() && b.size() == 2 && b[0].is_number() && b[1].is_number() &&
                      b[0].get<double>() < b[1].get<double>())) {
                    ok = false;
                    break;
                }
                box.bounds.emplace_back(b[0].get<double>(), b[1].get<double>());
            }
        }
        if (!ok)
            r.error(path + ".domain", "must list " + std::to_string(o.function.dimension) + " [lo, hi] pairs with lo < hi");
        else
            o.function.domain = box;
    }
    if (j.contains("f6_grouping")) {
        const auto g = j["f6_grouping"].is_string() ? j["f6_grouping"].get<std::string>() : "";
        if (g == "per_term") o.function.f6_grouping = F6Grouping::PerTerm;
        else if (g == "half_outer") o.function.f6_grouping = F6Grouping::HalfOuter;
        else r.error(path + ".f6_grouping", "must be per_term or half_outer");
    }
    o.name = j.value("name", o.function.name());
    return o;
}

}  // namespace config_detail

struct ParsedConfig {
    std::optional<ExperimentConfig> config;
    std::vector<Diagnostic> diagnostics;
};

/// Schema and domain checks over a JSON experiment description. Every problem
/// is reported; `config` is set only when there are none.
inline ParsedConfig parse_config(const nlohmann::json& j) {
    using config_detail::Reader;
    Reader r;
    ParsedConfig out;
    ExperimentConfig cfg;
    if (!j.is_object()) {
        out.diagnostics.push_back({"<root>", "config must be a JSON object"});
        return out;
    }
    r.check_keys(j, "", {"oracle", "oracles", "strategies", "budget", "n_initial", "repetitions", "pool", "snr_db",
                         "mcmc", "gpr", "master_seed", "export_chains"});
    if (j.contains("oracle") && j.contains("oracles")) r.error("oracles", "give either oracle or oracles, not both");
    if (j.contains("oracle")) {
        if (auto o = config_detail::parse_oracle(j["oracle"], "oracle", r)) cfg.oracles.push_back(*o);
    } else if (j.contains("oracles")) {
        if (!j["oracles"].is_array() || j["oracles"].empty()) r.error("oracles", "must be a nonempty array");
        else
            for (std::size_t i = 0; i < j["oracles"].size(); ++i)
                if (auto o = config_detail::parse_oracle(j["oracles"][i], "oracles[" + std::to_string(i) + "]", r))
                    cfg.oracles.push_back(*o);
    } else {
        r.error("oracle", "missing: an oracle (or oracles list) is required");
    }
    if (!j.contains("strategies") || !j["strategies"].is_array() || j["strategies"].empty()) {
        r.error("strategies", "required nonempty array");
    } else {
        for (std::size_t i = 0; i < j["strategies"].size(); ++i)
            if (auto s = config_detail::parse_strategy(j["strategies"][i], "strategies[" + std::to_string(i) + "]", r))
                cfg.strategies.push_back(*s);
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
        if (!names.insert(cfg.strategies[i].name()).second)
            r.error("strategies[" + std::to_string(i) + "]", "duplicate strategy '" + cfg.strategies[i].name() + "'");
    names.clear();
    for (std::size_t i = 0; i < cfg.oracles.size(); ++i)
        if (!names.insert(cfg.oracles[i].name).second)
            r.error("oracles[" + std::to_string(i) + "]", "duplicate oracle name '" + cfg.oracles[i].name + "'");

    r.read_unsigned(j, "", "budget", cfg.budget, std::size_t{1});
    r.read_unsigned(j, "", "n_initial", cfg.n_initial, std::size_t{1});
    r.read_unsigned(j, "", "repetitions", cfg.repetitions, std::size_t{1});
    r.read_real(j, "", "snr_db", cfg.snr_db);
    if (!std::isfinite(cfg.snr_db)) r.error("snr_db", "must be finite");
    if (j.contains("master_seed")) {
        const auto& m = j["master_seed"];
        if (!m.is_number_unsigned() && !(m.is_number_integer() && m.get<long long>() >= 0))
            r.error("master_seed", "must be a nonnegative integer");
        else cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    }
    if (j.contains("export_chains")) {
        if (!j["export_chains"].is_boolean()) r.error("export_chains", "must be true or false");
        else cfg.export_chains = j["export_chains"].get<bool>();
    }
    if (j.contains("pool")) {
        const auto& p = j["pool"];
        if (!p.is_object()) r.error("pool", "must be an object");
        else {
            r.check_keys(p, "pool", {"grid_1d", "grid_2d", "lhs"});
            r.read_unsigned(p, "pool", "grid_1d", cfg.pool.grid_1d, std::size_t{2});
            r.read_unsigned(p, "pool", "grid_2d", cfg.pool.grid_2d, std::size_t{2});
            r.read_unsigned(p, "pool", "lhs", cfg.pool.lhs_count, std::size_t{2});
        }
    }
    if (j.contains("mcmc")) {
        const auto& m = j["mcmc"];
        if (!m.is_object()) r.error("mcmc", "must be an object");
        else {
            r.check_keys(m, "mcmc", {"iterations", "burn_in", "inner", "nu", "a", "b"});
            r.read_unsigned(m, "mcmc", "iterations", cfg.mcmc.iterations, std::size_t{1});
            r.read_unsigned(m, "mcmc", "inner", cfg.mcmc.inner_steps, std::size_t{1});
            r.read_real(m, "mcmc", "burn_in", cfg.mcmc.burn_in);
            r.read_real(m, "mcmc", "nu", cfg.mcmc.nu);
            r.read_real(m, "mcmc", "a", cfg.mcmc.bounds.a);
            r.read_real(m, "mcmc", "b", cfg.mcmc.bounds.b);
            if (!(cfg.mcmc.burn_in >= 0.0 && cfg.mcmc.burn_in < 1.0)) r.error("mcmc.burn_in", "must lie in [0, 1)");
            if (!(cfg.mcmc.nu > 0.0)) r.error("mcmc.nu", "must be positive");
            if (!(cfg.mcmc.bounds.a > 0.0 && cfg.mcmc.bounds.a < cfg.mcmc.bounds.b)) r.error("mcmc.a", "need 0 < a < b");
        }
    }
    if (j.contains("gpr")) {
        const auto& g = j["gpr"];
        if (!g.is_object()) r.error("gpr", "must be an object");
        else {
            r.check_keys(g, "gpr", {"restarts"});
            r.read_unsigned(g, "gpr", "restarts", cfg.gpr_restarts, 1);
        }
    }
    out.diagnostics = std::move(r.diagnostics);
    if (out.diagnostics.empty()) out.config = std::move(cfg);
    return out;
}

inline ParsedConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return {std::nullopt, {{"<file>", "cannot open '" + path + "'"}}};
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        return {std::nullopt, {{"<file>", std::string("invalid JSON: ") + e.what()}}};
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Seeds

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Pure function of the master seed and a textual key (FNV-1a, then splitmix).
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& key) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return splitmix64(master ^ splitmix64(h));
}

// The initial design, pool sample and label noise depend only on
// (oracle, repetition), so strategies are compared on common draws.
inline std::uint64_t design_seed(std::uint64_t master, const std::string& oracle, std::size_t rep) {
    return derive_seed(master, "design|" + oracle + "|" + std::to_string(rep));
}
inline std::uint64_t noise_seed(std::uint64_t master, const std::string& oracle, std::size_t rep) {
    return derive_seed(master, "noise|" + oracle + "|" + std::to_string(rep));
}
inline std::uint64_t run_seed(std::uint64_t master, const std::string& oracle, const std::string& strategy, std::size_t rep) {
    return derive_seed(master, "run|" + oracle + "|" + strategy + "|" + std::to_string(rep));
}

// ---------------------------------------------------------------------------
// Problem instances

/// Everything one repetition of one oracle needs: candidates with the
/// initial labels applied, the label source and the RMSE reference.
struct ProblemInstance {
    Dataset data;
    std::unique_ptr<Oracle> oracle;
    Evaluation evaluation;
};

class ProblemFactory {
public:
    ProblemFactory(const ExperimentConfig& config) : config_(config) {
        for (const auto& o : config.oracles) {
            if (o.csv) tables_.emplace(o.name, load_csv(o.csv->path, o.csv->schema));
        }
    }

    const EncodedTable* table(const std::string& oracle) const {
        auto it = tables_.find(oracle);
        return it == tables_.end() ? nullptr : &it->second;
    }

    ProblemInstance make(const OracleSpec& spec, std::size_t rep) const {
        ProblemInstance p;
        Rng design(design_seed(config_.master_seed, spec.name, rep));
        if (spec.csv) {
            const EncodedTable& t = tables_.at(spec.name);
            p.data = split_pool(t, config_.n_initial, design);
            auto oracle = std::make_unique<TabularOracle>(t.y);
            oracle->mark_served(p.data.labeled);
            p.oracle = std::move(oracle);
            p.evaluation = {t.x, t.y};
            return p;
        }
        PointList pool = make_candidate_pool(spec.function.domain, config_.pool, design);
        const Eigen::VectorXd truth = eval_true(spec.function, pool);
        const NoiseModel noise = calibrate_noise(truth, config_.snr_db);
        p.oracle = std::make_unique<SyntheticOracle>(spec.function, noise, noise_seed(config_.master_seed, spec.name, rep));
        p.evaluation = {pool, truth};
        p.data = make_pool_dataset(std::move(pool));
        if (config_.n_initial >= p.data.pool.size())
            throw ConfigError("n_initial must be smaller than the candidate pool");
        seed_initial_design(p.data, config_.n_initial, *p.oracle, design);
        return p;
    }

private:
    const ExperimentConfig& config_;
    std::map<std::string, EncodedTable> tables_;
};

/// Config checks that need data: CSV files load against their schema and
/// every pool is large enough for the initial design.
inline std::vector<Diagnostic> dry_run(const ExperimentConfig& config) {
    std::vector<Diagnostic> out;
    for (std::size_t i = 0; i < config.oracles.size(); ++i) {
        const auto& o = config.oracles[i];
        const std::string path = "oracles[" + std::to_string(i) + "]";
        try {
            std::size_t pool_size = 0;
            if (o.csv) {
                pool_size = static_cast<std::size_t>(load_csv(o.csv->path, o.csv->schema).x.rows());
            } else {
                Rng rng(0);
                pool_size = static_cast<std::size_t>(make_candidate_pool(o.function.domain, config.pool, rng).rows());
            }
            if (config.n_initial >= pool_size)
                out.push_back({path, "pool of " + std::to_string(pool_size) + " candidates is too small for n_initial=" +
                                         std::to_string(config.n_initial)});
        } catch (const std::exception& e) {
            out.push_back({path, e.what()});
        }
    }
    return out;
}

inline std::vector<Diagnostic> validate_config_file(const std::string& path) {
    ParsedConfig p = parse_config_file(path);
    if (!p.config) return p.diagnostics;
    return dry_run(*p.config);
}

// ---------------------------------------------------------------------------
// Running the grid

struct GridRun {
    std::size_t oracle = 0;
    std::size_t strategy = 0;
    std::size_t repetition = 0;
    std::vector<RunRecord> records;
    bool exhausted = false;
    std::optional<std::string> error;
};

struct ExperimentOutcome {
    std::vector<GridRun> runs;  // ordered by (oracle, strategy, repetition)
    bool complete() const {
        for (const auto& r : runs)
            if (r.error || r.exhausted) return false;
        return true;
    }
};

inline LoopConfig loop_config_for(const ExperimentConfig& config, const StrategySpec& strategy) {
    LoopConfig loop;
    loop.strategy = strategy;
    loop.budget = config.budget;
    loop.chain = config.mcmc;
    loop.learner.optimizer_restarts = config.gpr_restarts;
    loop.committee.optimizer_restarts = config.gpr_restarts;
    loop.keep_chains = config.export_chains;
    return loop;
}

inline GridRun run_one(const ExperimentConfig& config, const ProblemFactory& factory, std::size_t o, std::size_t s,
                       std::size_t rep) {
    GridRun run;
    run.oracle = o;
    run.strategy = s;
    run.repetition = rep;
    try {
        const OracleSpec& oracle_spec = config.oracles[o];
        const StrategySpec& strategy = config.strategies[s];
        ProblemInstance problem = factory.make(oracle_spec, rep);
        Rng rng(run_seed(config.master_seed, oracle_spec.name, strategy.name(), rep));
        RunResult result = run_active_learning(loop_config_for(config, strategy), std::move(problem.data),
                                               *problem.oracle, problem.evaluation, rng);
        run.records = std::move(result.records);
        run.exhausted = result.exhausted;
    } catch (const std::exception& e) {
        run.error = e.what();
    }
    return run;
}

/// Executes every (oracle, strategy, repetition) run on up to `jobs` threads.
/// Results are ordered independently of scheduling.
inline ExperimentOutcome run_grid(const ExperimentConfig& config, unsigned jobs) {
    const ProblemFactory factory(config);
    ExperimentOutcome out;
    const std::size_t no = config.oracles.size(), ns = config.strategies.size(), nr = config.repetitions;
    out.runs.resize(no * ns * nr);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next++; k < out.runs.size(); k = next++) {
            const std::size_t o = k / (ns * nr), s = (k / nr) % ns, r = k % nr;
            out.runs[k] = run_one(config, factory, o, s, r);
        }
    };
    jobs = std::max(1u, jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output tables

inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_point(const Point& p) {
    std::string s;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (i) s += ';';
        s += format_real(p(i));
    }
    return s;
}

inline constexpr const char* kResultsHeader = "strategy,oracle,repetition,iteration,rmse,eta_bar,chosen_point,chosen_index,label";
inline constexpr const char* kSummaryHeader =
    "oracle,strategy,iteration,runs,mean_rmse,median_rmse,q1_rmse,q3_rmse,improvement_pct";
inline constexpr const char* kChainHeader = "iteration,sweep,alpha,beta,eta,delta,accepted";

inline void write_results(std::ostream& os, const ExperimentConfig& config, const ExperimentOutcome& outcome) {
    os << kResultsHeader << '\n';
    for (const auto& run : outcome.runs) {
        for (const auto& rec : run.records) {
            os << config.strategies[run.strategy].name() << ',' << config.oracles[run.oracle].name << ','
               << run.repetition << ',' << rec.iteration << ',' << format_real(rec.rmse) << ','
               << (rec.eta_bar ? format_real(*rec.eta_bar) : "") << ',' << format_point(rec.chosen_point) << ','
               << rec.chosen_index << ',' << format_real(rec.label) << '\n';
        }
    }
}

inline void write_timings(std::ostream& os, const ExperimentConfig& config, const ExperimentOutcome& outcome) {
    os << "strategy,oracle,repetition,iteration,wall_ms\n";
    for (const auto& run : outcome.runs)
        for (const auto& rec : run.records)
            os << config.strategies[run.strategy].name() << ',' << config.oracles[run.oracle].name << ','
               << run.repetition << ',' << rec.iteration << ',' << format_real(rec.wall_ms) << '\n';
}

// Linear-interpolation quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct SummaryRow {
    std::string oracle;
    std::string strategy;
    std::size_t iteration = 0;
    std::size_t runs = 0;
    double mean = 0.0, median = 0.0, q1 = 0.0, q3 = 0.0;
    std::optional<double> improvement_pct;  // of the first proposed strategy over this one
};

inline std::vector<SummaryRow> summarize(const ExperimentConfig& config, const ExperimentOutcome& outcome) {
    std::optional<std::size_t> reference;
    for (std::size_t s = 0; s < config.strategies.size(); ++s)
        if (config.strategies[s].kind == StrategyKind::Proposed) {
            reference = s;
            break;
        }
    // (oracle, strategy, iteration) -> rmse values
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<double>> groups;
    for (const auto& run : outcome.runs)
        for (const auto& rec : run.records) groups[{run.oracle, run.strategy, rec.iteration}].push_back(rec.rmse);
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> means;
    std::vector<SummaryRow> rows;
    for (auto& [key, values] : groups) {
        std::sort(values.begin(), values.end());
        SummaryRow row;
        row.oracle = config.oracles[std::get<0>(key)].name;
        row.strategy = config.strategies[std::get<1>(key)].name();
        row.iteration = std::get<2>(key);
        row.runs = values.size();
        double sum = 0.0;
        for (double v : values) sum += v;
        row.mean = sum / static_cast<double>(values.size());
        row.median = quantile_sorted(values, 0.5);
        row.q1 = quantile_sorted(values, 0.25);
        row.q3 = quantile_sorted(values, 0.75);
        means[key] = row.mean;
        rows.push_back(row);
    }
    if (reference) {
        std::size_t k = 0;
        for (auto& [key, values] : groups) {
            auto& row = rows[k++];
            if (std::get<1>(key) == *reference) continue;
            auto ref = means.find({std::get<0>(key), *reference, std::get<2>(key)});
            if (ref == means.end() || row.mean == 0.0) continue;
            row.improvement_pct = 100.0 * (row.mean - ref->second) / row.mean;
        }
    }
    return rows;
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << kSummaryHeader << '\n';
    for (const auto& r : rows) {
        os << r.oracle << ',' << r.strategy << ',' << r.iteration << ',' << r.runs << ',' << format_real(r.mean) << ','
           << format_real(r.median) << ',' << format_real(r.q1) << ',' << format_real(r.q3) << ','
           << (r.improvement_pct ? format_real(*r.improvement_pct) : "") << '\n';
    }
}

inline void write_chain(std::ostream& os, const std::vector<RunRecord>& records) {
    os << kChainHeader << '\n';
    for (const auto& rec : records) {
        if (!rec.chain) continue;
        for (const auto& s : rec.chain->history)
            os << rec.iteration << ',' << s.sweep << ',' << format_real(s.alpha) << ',' << format_real(s.beta) << ','
               << format_real(s.eta) << ',' << format_real(s.delta) << ',' << (s.accepted ? 1 : 0) << '\n';
    }
}

inline void write_manifest(std::ostream& os, const ExperimentConfig& config, const ExperimentOutcome& outcome) {
    os << "oracle,strategy,repetition,status,records,message\n";
    for (const auto& run : outcome.runs) {
        std::string status = run.error ? "failed" : run.exhausted ? "exhausted" : "complete";
        std::string message = run.error ? *run.error : run.exhausted ? "pool emptied before the budget" : "";
        std::replace(message.begin(), message.end(), ',', ';');
        std::replace(message.begin(), message.end(), '\n', ' ');
        os << config.oracles[run.oracle].name << ',' << config.strategies[run.strategy].name() << ',' << run.repetition
           << ',' << status << ',' << run.records.size() << ',' << message << '\n';
    }
}

/// Writes results.csv, summary.csv, timings.csv, manifest.csv and (when
/// enabled) chains/<oracle>__<strategy>__rep<r>.csv for proposed runs.
inline void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                          const ExperimentOutcome& outcome) {
    std::filesystem::create_directories(dir);
    auto open = [](const std::filesystem::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw InputError("cannot write '" + p.string() + "'");
        return f;
    };
    {
        auto f = open(dir / "results.csv");
        write_results(f, config, outcome);
    }
    {
        auto f = open(dir / "summary.csv");
        write_summary(f, summarize(config, outcome));
    }
    {
        auto f = open(dir / "timings.csv");
        write_timings(f, config, outcome);
    }
    {
        auto f = open(dir / "manifest.csv");
        write_manifest(f, config, outcome);
    }
    if (config.export_chains) {
        for (const auto& run : outcome.runs) {
            if (config.strategies[run.strategy].kind != StrategyKind::Proposed || run.records.empty()) continue;
            std::filesystem::create_directories(dir / "chains");
            auto f = open(dir / "chains" /
                          (config.oracles[run.oracle].name + "__" + config.strategies[run.strategy].name() + "__rep" +
                           std::to_string(run.repetition) + ".csv"));
            write_chain(f, run.records);
        }
    }
}

}  // namespace altrade
