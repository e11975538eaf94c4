#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "altrade/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

std::string default_out_dir() {
    if (const char* env = std::getenv("ALTRADE_OUT_DIR"); env != nullptr && *env != '\0') return env;
    return "altrade_out";
}

int report(const std::vector<altrade::Diagnostic>& diagnostics) {
    for (const auto& d : diagnostics) std::cerr << "error: " << altrade::format_diagnostic(d) << '\n';
    return diagnostics.empty() ? kExitOk : kExitConfig;
}

int cmd_validate(const std::string& path) {
    const auto diagnostics = altrade::validate_config_file(path);
    if (diagnostics.empty()) std::cout << path << ": ok\n";
    return report(diagnostics);
}

int cmd_run(const std::string& path, unsigned jobs, const std::string& out_dir) {
    const auto parsed = altrade::parse_config_file(path);
    if (!parsed.config) return report(parsed.diagnostics);
    if (int rc = report(altrade::dry_run(*parsed.config)); rc != kExitOk) return rc;
    const auto& config = *parsed.config;
    std::cerr << "running " << config.oracles.size() << " oracle(s) x " << config.strategies.size() << " strategies x "
              << config.repetitions << " repetitions, budget " << config.budget << ", " << jobs << " job(s)\n";
    const auto outcome = altrade::run_grid(config, jobs);
    altrade::write_outputs(out_dir, config, outcome);
    std::size_t failed = 0;
    for (const auto& run : outcome.runs) {
        if (!run.error) continue;
        ++failed;
        std::cerr << "run failed: " << config.oracles[run.oracle].name << ' ' << config.strategies[run.strategy].name()
                  << " rep " << run.repetition << ": " << *run.error << '\n';
    }
    std::cerr << "wrote " << out_dir << '\n';
    if (!outcome.complete()) {
        std::cerr << "grid incomplete (" << failed << " failed run(s)); see manifest.csv\n";
        return kExitPartial;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active-learning trade-off experiment runner"};
    app.require_subcommand(1);

    std::string run_config, validate_config;
    std::string out_dir = default_out_dir();
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* run = app.add_subcommand("run", "Execute a strategy x oracle x repetition grid");
    run->add_option("config", run_config, "Experiment config (JSON)")->required();
    run->add_option("--jobs,-j", jobs, "Parallel runs")->check(CLI::PositiveNumber);
    run->add_option("--out,-o", out_dir, "Output directory (default: $ALTRADE_OUT_DIR or ./altrade_out)");

    auto* val = app.add_subcommand("validate", "Check a config without running it");
    val->add_option("config", validate_config, "Experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_config, jobs, out_dir);
        return cmd_validate(validate_config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
