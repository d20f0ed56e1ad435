// Run orchestration and report rendering for the CLI: execute a circuit file
// or a named scenario under one or both engines, attach goodness-of-fit and
// engine-agreement verdicts, and render JSON (machine-diffable), CSV
// (histograms only), or text.
//
// JSON reports are byte-identical for identical semantic inputs: the config
// block records only inputs that affect outcomes (so not the parallelism
// degree), keys are emitted in sorted order, and doubles use
// shortest-round-trip formatting. Wall time is opt-in for the same reason.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cycleq/circuit.hpp"
#include "cycleq/run.hpp"
#include "cycleq/scenarios.hpp"
#include "cycleq/stats.hpp"

namespace cycleq {

enum class EngineSelect { schedule, statevector, both };
enum class ReportFormat { json, csv, text };

struct RunConfig {
    std::string circuit_path; // exactly one of circuit_path / scenario is set
    std::string scenario;
    EngineSelect engine = EngineSelect::both;
    std::uint64_t shots = 100000;
    std::uint64_t seed = 0;
    OrderingPolicy::Kind ordering = OrderingPolicy::Kind::canonical_ascending;
    MeasureMode mode = MeasureMode::standard;
    ReportFormat format = ReportFormat::json;
    std::string trace_path; // empty: no trace
    int parallel = 1;
    bool timing = false;
};

// Raised for bad configurations and unreadable inputs; the CLI maps it (and
// ParseError) to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunReport {
    nlohmann::json document;
    std::string rendered;
    int exit_code = 0; // 0 ok, 2 assertion/GoF failure (1 is thrown, not returned)
};

namespace detail {

inline nlohmann::json histogram_json(const Histogram& h, int bits) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [pattern, count] : h.counts) {
        out[format_bits(pattern, bits)] = count;
    }
    return out;
}

inline nlohmann::json gof_json(const GofReport& g) {
    return nlohmann::json{{"statistic", g.statistic},
                          {"dof", g.dof},
                          {"p_value", g.p_value},
                          {"alpha", g.alpha},
                          {"pass", g.pass}};
}

inline nlohmann::json assertion_json(const std::string& engine, const Assertion& a) {
    return nlohmann::json{
        {"engine", engine}, {"description", a.description}, {"pass", a.pass}, {"value", a.value}};
}

inline OrderingPolicy make_policy(OrderingPolicy::Kind kind, std::uint64_t seed) {
    return kind == OrderingPolicy::Kind::canonical_ascending ? OrderingPolicy::canonical()
                                                             : OrderingPolicy::shuffled(seed);
}

// Verdicts are only attached when the chi-square test is well powered: at
// least two cells survive pooling for sure. Conservative (counts only cells
// individually above the pooling threshold), which matters only at sample
// sizes far below anything the suites run.
inline bool gof_well_powered(const std::map<std::uint64_t, double>& law, std::uint64_t shots) {
    int retained = 0;
    for (const auto& [pattern, p] : law) {
        if (p * static_cast<double>(shots) >= kMinExpected) ++retained;
    }
    return retained >= 2;
}

inline bool two_sample_well_powered(const Histogram& a, const Histogram& b) {
    const double na = static_cast<double>(a.total);
    const double nb = static_cast<double>(b.total);
    const double n = na + nb;
    std::map<std::uint64_t, double> totals;
    for (const auto& [pattern, count] : a.counts) totals[pattern] += static_cast<double>(count);
    for (const auto& [pattern, count] : b.counts) totals[pattern] += static_cast<double>(count);
    int retained = 0;
    for (const auto& [pattern, total] : totals) {
        if (std::min(na, nb) * total / n >= kMinExpected) ++retained;
    }
    return retained >= 2;
}

inline std::vector<Engine> selected_engines(EngineSelect sel) {
    switch (sel) {
    case EngineSelect::schedule: return {Engine::schedule};
    case EngineSelect::statevector: return {Engine::statevector};
    default: return {Engine::schedule, Engine::statevector};
    }
}

inline const char* select_name(EngineSelect sel) {
    switch (sel) {
    case EngineSelect::schedule: return "schedule";
    case EngineSelect::statevector: return "statevector";
    default: return "both";
    }
}

inline const char* format_name(ReportFormat f) {
    switch (f) {
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    default: return "text";
    }
}

// Trace records: one JSON object per line, cumulative segment starts
// computed in stored order.
inline void write_trace(std::ostream& out, const std::vector<TraceEvent>& events) {
    for (const auto& [shot, ev] : events) {
        nlohmann::json record;
        record["shot"] = shot;
        record["qubits"] = ev.qubits;
        switch (ev.kind) {
        case ScheduleEvent::Kind::rebuild: record["kind"] = "rebuild"; break;
        case ScheduleEvent::Kind::measure: record["kind"] = "measure"; break;
        case ScheduleEvent::Kind::collapse: record["kind"] = "collapse"; break;
        }
        if (!ev.segments.empty()) {
            nlohmann::json segs = nlohmann::json::array();
            double start = 0.0;
            for (const auto& s : ev.segments) {
                segs.push_back({{"label", format_bits(s.basis_index,
                                                      static_cast<int>(ev.qubits.size()))},
                                {"dwell", s.dwell},
                                {"start", start}});
                start += s.dwell;
            }
            record["segments"] = std::move(segs);
        }
        if (ev.u) record["u"] = *ev.u;
        if (ev.outcome) {
            record["outcome"] = format_bits(*ev.outcome, static_cast<int>(ev.qubits.size()));
        }
        out << record.dump() << "\n";
    }
}

struct EngineRun {
    Engine engine;
    Histogram histogram;
    int outcome_bits = 0;
    std::optional<GofReport> gof;
    std::vector<Assertion> assertions;
    std::map<std::string, std::uint64_t> labeled_counts;
    std::optional<double> min_fidelity;
};

inline ScenarioResult dispatch_scenario(const std::string& name, Engine engine,
                                        const RunConfig& cfg, OrderingPolicy policy) {
    if (name == "bell-psi1") {
        return run_bell_commuting(BellVariant::psi1, engine, cfg.shots, cfg.seed, policy,
                                  cfg.parallel);
    }
    if (name == "bell-psi2") {
        return run_bell_commuting(BellVariant::psi2, engine, cfg.shots, cfg.seed, policy,
                                  cfg.parallel);
    }
    if (name == "adder") {
        return run_adder(engine, cfg.shots, cfg.seed, policy, cfg.parallel);
    }
    if (name == "teleport") {
        // Fixed demonstration amplitudes (3-4-5 normalization); the library
        // API accepts arbitrary (alpha, beta).
        return run_teleportation(Amplitude{0.6, 0.0}, Amplitude{0.8, 0.0}, engine, cfg.shots,
                                 cfg.seed, policy, cfg.parallel);
    }
    if (name == "noncommuting") {
        return run_noncommuting_demo(cfg.shots, cfg.seed, cfg.mode, cfg.parallel);
    }
    throw UsageError("unknown scenario '" + name +
                     "' (expected bell-psi1, bell-psi2, adder, teleport, or noncommuting)");
}

} // namespace detail

// Executes one configuration end to end and renders the report. Exit code 0
// when every verdict passes, 2 when any statistical or scenario assertion
// fails. Configuration and input errors throw (UsageError, ParseError);
// the CLI maps those to exit code 1.
inline RunReport run(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();

    if (cfg.circuit_path.empty() == cfg.scenario.empty()) {
        throw UsageError("exactly one of --circuit and --scenario is required");
    }
    if (cfg.shots < 1) throw UsageError("--shots must be >= 1");
    if (cfg.parallel < 1) throw UsageError("--parallel must be >= 1");
    if (!cfg.trace_path.empty() && cfg.circuit_path.empty()) {
        throw UsageError("--trace requires --circuit (schedule traces follow circuit shots)");
    }
    if (cfg.mode == MeasureMode::exclusive_axis) {
        if (cfg.scenario != "noncommuting") {
            throw UsageError("exclusive-axis mode only runs the noncommuting scenario");
        }
        if (cfg.engine != EngineSelect::schedule) {
            throw UsageError("the noncommuting scenario runs on the schedule engine only");
        }
    }
    if (cfg.scenario == "noncommuting" && cfg.mode != MeasureMode::exclusive_axis) {
        throw UsageError("the noncommuting scenario requires exclusive-axis mode");
    }

    const OrderingPolicy policy = detail::make_policy(cfg.ordering, cfg.seed);
    std::vector<detail::EngineRun> runs;
    std::vector<TraceEvent> trace_events;

    if (!cfg.circuit_path.empty()) {
        std::ifstream in(cfg.circuit_path);
        if (!in) throw UsageError("cannot open circuit file '" + cfg.circuit_path + "'");
        std::stringstream buffer;
        buffer << in.rdbuf();
        const Circuit circuit = parse(buffer.str()); // ParseError carries line numbers

        for (Engine engine : detail::selected_engines(cfg.engine)) {
            const bool trace = !cfg.trace_path.empty() && engine == Engine::schedule;
            RunResult r = run_circuit(circuit, engine, cfg.seed, cfg.shots, policy, cfg.parallel,
                                      trace);
            detail::EngineRun er;
            er.engine = engine;
            er.outcome_bits = r.outcome_bits;
            er.histogram = std::move(r.histogram);
            if (trace) trace_events = std::move(r.trace);

            // Verify the sampled histogram against the engine's own analytic
            // law (kept to tractable outcome spaces).
            if (r.outcome_bits <= 16) {
                const auto law = engine == Engine::schedule
                                     ? schedule_circuit_distribution(circuit, policy)
                                     : oracle_circuit_distribution(circuit);
                if (detail::gof_well_powered(law, cfg.shots)) {
                    er.gof = chi_square_gof(er.histogram, law);
                }
            }
            runs.push_back(std::move(er));
        }
    } else {
        for (Engine engine : detail::selected_engines(cfg.engine)) {
            ScenarioResult sr = detail::dispatch_scenario(cfg.scenario, engine, cfg, policy);
            detail::EngineRun er;
            er.engine = engine;
            er.outcome_bits = sr.outcome_bits;
            er.histogram = std::move(sr.histogram);
            er.assertions = std::move(sr.assertions);
            er.labeled_counts = std::move(sr.counts);
            er.min_fidelity = sr.min_fidelity;
            runs.push_back(std::move(er));
        }
    }

    std::optional<GofReport> two_sample;
    if (runs.size() == 2 && detail::two_sample_well_powered(runs[0].histogram, runs[1].histogram)) {
        two_sample = two_sample_chi_square(runs[0].histogram, runs[1].histogram);
    }

    // --- assemble the document -------------------------------------------
    nlohmann::json doc;
    doc["config"] = {{"circuit", cfg.circuit_path},
                     {"scenario", cfg.scenario},
                     {"engine", detail::select_name(cfg.engine)},
                     {"shots", cfg.shots},
                     {"seed", cfg.seed},
                     {"ordering", cfg.ordering == OrderingPolicy::Kind::canonical_ascending
                                      ? "canonical"
                                      : "shuffled"},
                     {"mode", cfg.mode == MeasureMode::standard ? "standard" : "exclusive-axis"}};

    bool all_pass = true;
    nlohmann::json engines = nlohmann::json::object();
    nlohmann::json assertions = nlohmann::json::array();
    for (const auto& er : runs) {
        nlohmann::json e;
        e["histogram"] = detail::histogram_json(er.histogram, er.outcome_bits);
        e["outcome_bits"] = er.outcome_bits;
        e["shots"] = cfg.shots;
        if (!er.labeled_counts.empty()) {
            nlohmann::json counts = nlohmann::json::object();
            for (const auto& [label, count] : er.labeled_counts) counts[label] = count;
            e["counts"] = std::move(counts);
        }
        if (er.gof) {
            e["gof"] = detail::gof_json(*er.gof);
            all_pass = all_pass && er.gof->pass;
        }
        if (er.min_fidelity) e["min_fidelity"] = *er.min_fidelity;
        engines[engine_name(er.engine)] = std::move(e);

        for (const auto& a : er.assertions) {
            assertions.push_back(detail::assertion_json(engine_name(er.engine), a));
            all_pass = all_pass && a.pass;
        }
    }
    doc["engines"] = std::move(engines);
    doc["assertions"] = std::move(assertions);
    if (two_sample) {
        doc["comparison"] = {{"two_sample", detail::gof_json(*two_sample)}};
        all_pass = all_pass && two_sample->pass;
    }
    if (!cfg.scenario.empty()) doc["scenario_name"] = cfg.scenario;
    doc["pass"] = all_pass;
    if (cfg.timing) {
        const auto elapsed = std::chrono::steady_clock::now() - t0;
        doc["wall_time_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    }

    if (!cfg.trace_path.empty()) {
        std::ofstream out(cfg.trace_path);
        if (!out) throw UsageError("cannot write trace file '" + cfg.trace_path + "'");
        detail::write_trace(out, trace_events);
    }

    // --- render ------------------------------------------------------------
    RunReport report;
    report.exit_code = all_pass ? 0 : 2;
    report.document = std::move(doc);
    switch (cfg.format) {
    case ReportFormat::json: report.rendered = report.document.dump(2) + "\n"; break;
    case ReportFormat::csv: {
        std::string csv = "engine,pattern,count,frequency\n";
        for (const auto& er : runs) {
            const double total = static_cast<double>(er.histogram.total);
            if (!er.labeled_counts.empty()) {
                for (const auto& [label, count] : er.labeled_counts) {
                    csv += std::string(engine_name(er.engine)) + "," + label + "," +
                           std::to_string(count) + "," +
                           nlohmann::json(static_cast<double>(count) /
                                          static_cast<double>(cfg.shots))
                               .dump() +
                           "\n";
                }
            } else {
                for (const auto& [pattern, count] : er.histogram.counts) {
                    csv += std::string(engine_name(er.engine)) + "," +
                           format_bits(pattern, er.outcome_bits) + "," + std::to_string(count) +
                           "," + nlohmann::json(static_cast<double>(count) / total).dump() + "\n";
                }
            }
        }
        report.rendered = std::move(csv);
        break;
    }
    case ReportFormat::text: {
        std::string text;
        text += "run: " + (cfg.scenario.empty() ? cfg.circuit_path : cfg.scenario) + "\n";
        text += "engine: " + std::string(detail::select_name(cfg.engine)) + "  shots: " +
                std::to_string(cfg.shots) + "  seed: " + std::to_string(cfg.seed) + "\n";
        for (const auto& er : runs) {
            text += "\n[" + std::string(engine_name(er.engine)) + "]\n";
            if (!er.labeled_counts.empty()) {
                for (const auto& [label, count] : er.labeled_counts) {
                    text += "  " + label + "  " + std::to_string(count) + "\n";
                }
            } else {
                for (const auto& [pattern, count] : er.histogram.counts) {
                    text += "  " + format_bits(pattern, er.outcome_bits) + "  " +
                            std::to_string(count) + "\n";
                }
            }
            if (er.gof) {
                text += "  gof: statistic=" + nlohmann::json(er.gof->statistic).dump() +
                        " p=" + nlohmann::json(er.gof->p_value).dump() +
                        (er.gof->pass ? " pass" : " FAIL") + "\n";
            }
            if (er.min_fidelity) {
                text += "  min fidelity: " + nlohmann::json(*er.min_fidelity).dump() + "\n";
            }
            for (const auto& a : er.assertions) {
                text += std::string("  [") + (a.pass ? "ok" : "FAIL") + "] " + a.description +
                        " (" + nlohmann::json(a.value).dump() + ")\n";
            }
        }
        if (two_sample) {
            text += "\nengine agreement: statistic=" +
                    nlohmann::json(two_sample->statistic).dump() +
                    " p=" + nlohmann::json(two_sample->p_value).dump() +
                    (two_sample->pass ? " pass" : " FAIL") + "\n";
        }
        text += std::string("\nresult: ") + (all_pass ? "pass" : "FAIL") + "\n";
        report.rendered = std::move(text);
        break;
    }
    }
    return report;
}

} // namespace cycleq
