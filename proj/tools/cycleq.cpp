// Command-line entry point: run a circuit file or a named scenario under the
// schedule engine, the reference state-vector engine, or both, and emit a
// report. Exit codes: 0 success, 1 usage/parse/input error, 2 statistical or
// scenario assertion failure.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include <cycleq/cycleq.hpp>

namespace {

int default_parallel() {
    const unsigned int hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// CYCLEQ_SEED provides the default seed; the --seed flag wins.
bool env_seed(std::uint64_t& seed, std::string& error) {
    const char* raw = std::getenv("CYCLEQ_SEED");
    if (raw == nullptr) return true;
    const std::string text(raw);
    try {
        std::size_t used = 0;
        seed = std::stoull(text, &used, 10);
        if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        error = "CYCLEQ_SEED is not a valid unsigned integer: '" + text + "'";
        return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    cycleq::RunConfig cfg;
    cfg.parallel = default_parallel();

    std::string env_error;
    if (!env_seed(cfg.seed, env_error)) {
        std::cerr << "error: " << env_error << "\n";
        return 1;
    }

    CLI::App app{"cycleq: cycle-schedule quantum engine with a state-vector reference"};
    app.get_formatter()->column_width(34);

    auto* circuit_opt = app.add_option("--circuit", cfg.circuit_path, ".cyq circuit file to run");
    auto* scenario_opt =
        app.add_option("--scenario", cfg.scenario,
                       "named scenario: bell-psi1, bell-psi2, adder, teleport, noncommuting");
    circuit_opt->excludes(scenario_opt);

    app.add_option("--engine", cfg.engine, "engine selection (default: both)")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, cycleq::EngineSelect>{
                {"schedule", cycleq::EngineSelect::schedule},
                {"statevector", cycleq::EngineSelect::statevector},
                {"both", cycleq::EngineSelect::both}},
            CLI::ignore_case));
    app.add_option("--shots", cfg.shots, "shots per engine (default: 100000)")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "64-bit seed (default: $CYCLEQ_SEED, else 0)");
    app.add_option("--ordering", cfg.ordering,
                   "segment ordering policy: canonical | shuffled (default: canonical)")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, cycleq::OrderingPolicy::Kind>{
                {"canonical", cycleq::OrderingPolicy::Kind::canonical_ascending},
                {"shuffled", cycleq::OrderingPolicy::Kind::seeded_permutation}},
            CLI::ignore_case));
    app.add_option("--mode", cfg.mode,
                   "measurement mode: standard | exclusive-axis (default: standard)")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, cycleq::MeasureMode>{
                {"standard", cycleq::MeasureMode::standard},
                {"exclusive-axis", cycleq::MeasureMode::exclusive_axis}},
            CLI::ignore_case));
    app.add_option("--format", cfg.format, "report format: json | csv | text (default: json)")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, cycleq::ReportFormat>{{"json", cycleq::ReportFormat::json},
                                                        {"csv", cycleq::ReportFormat::csv},
                                                        {"text", cycleq::ReportFormat::text}},
            CLI::ignore_case));
    app.add_option("--trace", cfg.trace_path, "write schedule events as JSON lines to this path");
    app.add_option("--parallel", cfg.parallel,
                   "worker threads for shot execution (default: available cores)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--timing", cfg.timing, "include wall_time_ms in the report (breaks"
                                         " byte-for-byte report reproducibility)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // --help is code 0; all other parse outcomes are usage errors
    }

    try {
        const cycleq::RunReport report = cycleq::run(cfg);
        std::cout << report.rendered;
        return report.exit_code;
    } catch (const cycleq::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const cycleq::ParseError& e) {
        std::cerr << "error: " << cfg.circuit_path << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
