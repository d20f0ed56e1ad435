#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include <cycleq/circuit.hpp>
#include <cycleq/report.hpp>

namespace cycleq {
namespace {

std::string write_file(const std::string& name, const std::string& content) {
    const std::string path = ::testing::TempDir() + name;
    std::ofstream out(path);
    out << content;
    return path;
}

RunConfig bell_config(const std::string& path) {
    RunConfig cfg;
    cfg.circuit_path = path;
    cfg.shots = 20000;
    cfg.seed = 42;
    return cfg;
}

TEST(Report, JsonIsByteIdenticalAcrossParallelismAndReruns) {
    const std::string path = write_file("bell.cyq", "qubits 2\nh 0\ncx 0 1\nmeasure_all\n");
    RunConfig cfg = bell_config(path);

    cfg.parallel = 1;
    const RunReport base = run(cfg);
    const RunReport again = run(cfg);
    EXPECT_EQ(base.rendered, again.rendered);

    for (int parallel : {2, 3, 7}) {
        cfg.parallel = parallel;
        const RunReport chunked = run(cfg);
        EXPECT_EQ(base.rendered, chunked.rendered) << "parallel=" << parallel;
    }
}

TEST(Report, DocumentShapeForACircuitRun) {
    const std::string path = write_file("bell_shape.cyq", "qubits 2\nh 0\ncx 0 1\nmeasure_all\n");
    const RunReport r = run(bell_config(path));
    EXPECT_EQ(r.exit_code, 0);

    const auto& doc = r.document;
    EXPECT_EQ(doc.at("config").at("circuit"), path);
    EXPECT_EQ(doc.at("config").at("scenario"), "");
    EXPECT_EQ(doc.at("config").at("engine"), "both");
    EXPECT_EQ(doc.at("config").at("shots"), 20000);
    EXPECT_EQ(doc.at("config").at("seed"), 42);
    EXPECT_EQ(doc.at("config").at("ordering"), "canonical");
    EXPECT_EQ(doc.at("config").at("mode"), "standard");
    // execution-irrelevant knobs must not leak into the config block
    EXPECT_FALSE(doc.at("config").contains("parallel"));
    EXPECT_FALSE(doc.contains("wall_time_ms"));

    for (const char* engine : {"schedule", "statevector"}) {
        const auto& e = doc.at("engines").at(engine);
        EXPECT_EQ(e.at("outcome_bits"), 2);
        EXPECT_EQ(e.at("shots"), 20000);
        std::uint64_t total = 0;
        for (const auto& [label, count] : e.at("histogram").items()) {
            EXPECT_TRUE(label == "00" || label == "11") << label;
            total += count.get<std::uint64_t>();
        }
        EXPECT_EQ(total, 20000u);
        EXPECT_TRUE(e.at("gof").at("pass").get<bool>());
    }
    EXPECT_TRUE(doc.at("comparison").at("two_sample").at("pass").get<bool>());
    EXPECT_TRUE(doc.at("pass").get<bool>());
}

TEST(Report, ScenarioRunCarriesAssertions) {
    RunConfig cfg;
    cfg.scenario = "bell-psi1";
    cfg.shots = 20000;
    cfg.seed = 42;
    const RunReport r = run(cfg);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.document.at("scenario_name"), "bell-psi1");
    // three assertions per engine
    EXPECT_EQ(r.document.at("assertions").size(), 6u);
    for (const auto& a : r.document.at("assertions")) {
        EXPECT_TRUE(a.at("pass").get<bool>()) << a.dump();
        const std::string engine = a.at("engine");
        EXPECT_TRUE(engine == "schedule" || engine == "statevector");
    }
    EXPECT_TRUE(r.document.at("engines").at("schedule").contains("counts"));
}

TEST(Report, TeleportScenarioReportsMinimumFidelity) {
    RunConfig cfg;
    cfg.scenario = "teleport";
    cfg.shots = 5000;
    cfg.seed = 7;
    cfg.engine = EngineSelect::schedule;
    const RunReport r = run(cfg);
    EXPECT_EQ(r.exit_code, 0);
    const auto& e = r.document.at("engines").at("schedule");
    EXPECT_GE(e.at("min_fidelity").get<double>(), 1.0 - 1e-10);
    EXPECT_FALSE(r.document.contains("comparison")); // single engine
}

TEST(Report, NoncommutingScenarioRunsInExclusiveAxisMode) {
    RunConfig cfg;
    cfg.scenario = "noncommuting";
    cfg.mode = MeasureMode::exclusive_axis;
    cfg.engine = EngineSelect::schedule;
    cfg.shots = 20000;
    cfg.seed = 42;
    const RunReport r = run(cfg);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.document.at("config").at("mode"), "exclusive-axis");
    const auto& counts = r.document.at("engines").at("schedule").at("counts");
    EXPECT_TRUE(counts.contains("null"));
    EXPECT_TRUE(counts.contains("x00"));
    EXPECT_TRUE(counts.contains("x11"));
}

TEST(Report, ConfigurationErrorsThrowUsageError) {
    const std::string path = write_file("usage.cyq", "qubits 1\nh 0\nmeasure 0\n");

    RunConfig both_sources;
    both_sources.circuit_path = path;
    both_sources.scenario = "adder";
    EXPECT_THROW(run(both_sources), UsageError);

    EXPECT_THROW(run(RunConfig{}), UsageError); // neither source

    RunConfig zero_shots;
    zero_shots.circuit_path = path;
    zero_shots.shots = 0;
    EXPECT_THROW(run(zero_shots), UsageError);

    RunConfig bad_parallel;
    bad_parallel.circuit_path = path;
    bad_parallel.parallel = 0;
    EXPECT_THROW(run(bad_parallel), UsageError);

    RunConfig scenario_trace;
    scenario_trace.scenario = "adder";
    scenario_trace.trace_path = ::testing::TempDir() + "t.jsonl";
    EXPECT_THROW(run(scenario_trace), UsageError);

    RunConfig missing;
    missing.circuit_path = ::testing::TempDir() + "does_not_exist.cyq";
    EXPECT_THROW(run(missing), UsageError);

    RunConfig unknown;
    unknown.scenario = "frobnicate";
    EXPECT_THROW(run(unknown), UsageError);
}

TEST(Report, ModeAndScenarioMustPairUp) {
    RunConfig wrong_scenario;
    wrong_scenario.scenario = "bell-psi1";
    wrong_scenario.mode = MeasureMode::exclusive_axis;
    wrong_scenario.engine = EngineSelect::schedule;
    EXPECT_THROW(run(wrong_scenario), UsageError);

    RunConfig wrong_engine;
    wrong_engine.scenario = "noncommuting";
    wrong_engine.mode = MeasureMode::exclusive_axis;
    wrong_engine.engine = EngineSelect::both;
    EXPECT_THROW(run(wrong_engine), UsageError);

    RunConfig missing_mode;
    missing_mode.scenario = "noncommuting";
    missing_mode.engine = EngineSelect::schedule;
    EXPECT_THROW(run(missing_mode), UsageError);

    RunConfig circuit_exclusive;
    circuit_exclusive.circuit_path = write_file("pair.cyq", "qubits 1\nh 0\nmeasure 0\n");
    circuit_exclusive.mode = MeasureMode::exclusive_axis;
    EXPECT_THROW(run(circuit_exclusive), UsageError);
}

TEST(Report, ParseErrorsCarryTheSourceLine) {
    const std::string path = write_file("broken.cyq", "qubits 1\nbadop 0\n");
    RunConfig cfg;
    cfg.circuit_path = path;
    try {
        run(cfg);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
    }
}

TEST(Report, TraceFileHoldsOneJsonRecordPerEvent) {
    const std::string circuit = write_file("traced.cyq", "qubits 2\nh 0\ncx 0 1\nmeasure_all\n");
    const std::string trace = ::testing::TempDir() + "trace.jsonl";

    RunConfig cfg;
    cfg.circuit_path = circuit;
    cfg.engine = EngineSelect::schedule;
    cfg.shots = 2;
    cfg.seed = 5;
    cfg.trace_path = trace;
    ASSERT_EQ(run(cfg).exit_code, 0);

    std::ifstream in(trace);
    ASSERT_TRUE(in.is_open());
    std::string line;
    int records = 0;
    int measures = 0;
    while (std::getline(in, line)) {
        ++records;
        const auto record = nlohmann::json::parse(line); // throws on malformed lines
        EXPECT_TRUE(record.contains("shot"));
        EXPECT_TRUE(record.contains("kind"));
        EXPECT_TRUE(record.contains("qubits"));
        if (record.at("kind") == "measure") {
            ++measures;
            const double u = record.at("u").get<double>();
            EXPECT_GE(u, 0.0);
            EXPECT_LT(u, 1.0);
            double expected_start = 0.0;
            for (const auto& seg : record.at("segments")) {
                EXPECT_NEAR(seg.at("start").get<double>(), expected_start, 1e-12);
                expected_start += seg.at("dwell").get<double>();
                EXPECT_EQ(seg.at("label").get<std::string>().size(),
                          record.at("qubits").size());
            }
            EXPECT_NEAR(expected_start, 1.0, 1e-9);
        }
        if (record.at("kind") == "collapse") {
            EXPECT_TRUE(record.contains("outcome"));
        }
    }
    EXPECT_GT(records, 0);
    EXPECT_EQ(measures, 2); // one entangled group per shot, two shots
}

TEST(Report, CsvRendersHistogramRows) {
    const std::string path = write_file("csv.cyq", "qubits 2\nh 0\ncx 0 1\nmeasure_all\n");
    RunConfig cfg = bell_config(path);
    cfg.format = ReportFormat::csv;
    cfg.engine = EngineSelect::schedule;
    const RunReport r = run(cfg);

    std::istringstream in(r.rendered);
    std::string line;
    ASSERT_TRUE(std::getline(in, line));
    EXPECT_EQ(line, "engine,pattern,count,frequency");
    int rows = 0;
    std::uint64_t total = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(line.rfind("schedule,", 0), 0u) << line;
        const auto second_comma = line.find(',', line.find(',') + 1);
        const auto third_comma = line.find(',', second_comma + 1);
        total += std::stoull(line.substr(second_comma + 1, third_comma - second_comma - 1));
    }
    EXPECT_EQ(rows, 2);
    EXPECT_EQ(total, 20000u);
}

TEST(Report, TextRenderingStatesTheVerdict) {
    RunConfig cfg;
    cfg.scenario = "adder";
    cfg.shots = 10000;
    cfg.seed = 42;
    cfg.format = ReportFormat::text;
    const RunReport r = run(cfg);
    EXPECT_NE(r.rendered.find("result: pass"), std::string::npos);
    EXPECT_NE(r.rendered.find("[schedule]"), std::string::npos);
    EXPECT_NE(r.rendered.find("[statevector]"), std::string::npos);
    EXPECT_NE(r.rendered.find("engine agreement"), std::string::npos);
}

TEST(Report, WallTimeIsOptIn) {
    RunConfig cfg;
    cfg.scenario = "bell-psi1";
    cfg.shots = 2000;
    cfg.seed = 1;
    EXPECT_FALSE(run(cfg).document.contains("wall_time_ms"));
    cfg.timing = true;
    EXPECT_TRUE(run(cfg).document.contains("wall_time_ms"));
}

TEST(Report, TinyRunsSkipUnderpoweredVerdicts) {
    const std::string path = write_file("tiny.cyq", "qubits 2\nh 0\ncx 0 1\nmeasure_all\n");
    RunConfig cfg = bell_config(path);
    cfg.shots = 2;
    const RunReport r = run(cfg);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_FALSE(r.document.at("engines").at("schedule").contains("gof"));
    EXPECT_FALSE(r.document.contains("comparison"));
}

TEST(Report, ShuffledOrderingIsRecordedAndHarmless) {
    const std::string path = write_file("shuffled.cyq", "qubits 2\nh 0\ncx 0 1\nmeasure_all\n");
    RunConfig cfg = bell_config(path);
    cfg.ordering = OrderingPolicy::Kind::seeded_permutation;
    const RunReport r = run(cfg);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.document.at("config").at("ordering"), "shuffled");
    EXPECT_TRUE(r.document.at("pass").get<bool>());
}

} // namespace
} // namespace cycleq
