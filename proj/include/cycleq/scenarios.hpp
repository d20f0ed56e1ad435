// Executable reproductions of the four worked examples: the two Bell-state
// measurements, the one-bit quantum adder, single-qubit teleportation with
// classically-controlled decoding, and the exclusive-axis entangled-pair
// demonstration. Each run emits a ScenarioResult whose assertions make the
// expected outcomes machine-checkable under either engine.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cycleq/circuit.hpp"
#include "cycleq/measurement.hpp"
#include "cycleq/run.hpp"
#include "cycleq/state.hpp"
#include "cycleq/stats.hpp"

namespace cycleq {

struct Assertion {
    std::string description;
    bool pass;
    double value; // the measured quantity the verdict is based on
};

struct ScenarioResult {
    std::string name;
    std::uint64_t shots = 0;
    int outcome_bits = 0;
    Histogram histogram;                          // bit-pattern outcomes
    std::map<std::string, std::uint64_t> counts;  // labeled view (includes "null")
    std::vector<Assertion> assertions;
    std::optional<double> min_fidelity;

    bool all_passed() const {
        for (const auto& a : assertions) {
            if (!a.pass) return false;
        }
        return true;
    }
};

// 5-sigma binomial half-width on an observed frequency at probability p.
inline double five_sigma(double p, std::uint64_t shots) {
    return 5.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(shots));
}

enum class BellVariant { psi1, psi2 };

inline const char* bell_scenario_name(BellVariant v) {
    return v == BellVariant::psi1 ? "bell-psi1" : "bell-psi2";
}

namespace detail {

// Shared skeleton for scenarios whose law is "uniform over an expected
// support": runs the circuit, fills the histogram, and asserts support and
// per-branch 5-sigma frequency bounds.
inline ScenarioResult uniform_support_scenario(
    const std::string& name, const std::string& circuit_text,
    const std::vector<std::uint64_t>& support, Engine engine, std::uint64_t shots,
    std::uint64_t seed, OrderingPolicy policy, int parallel) {
    const Circuit circuit = parse(circuit_text);

    ScenarioResult result;
    result.name = name;
    result.shots = shots;

    RunResult run = run_circuit(circuit, engine, seed, shots, policy, parallel);
    result.outcome_bits = run.outcome_bits;
    result.histogram = std::move(run.histogram);
    for (const auto& [pattern, count] : result.histogram.counts) {
        result.counts[format_bits(pattern, result.outcome_bits)] = count;
    }

    std::uint64_t off_support = 0;
    for (const auto& [pattern, count] : result.histogram.counts) {
        bool expected = false;
        for (std::uint64_t s : support) {
            if (pattern == s) expected = true;
        }
        if (!expected) off_support += count;
    }
    result.assertions.push_back({"no outcomes outside the expected support",
                                 off_support == 0, static_cast<double>(off_support)});

    const double p = 1.0 / static_cast<double>(support.size());
    const double bound = five_sigma(p, shots);
    double worst = 0.0;
    for (std::uint64_t s : support) {
        worst = std::max(worst, std::abs(result.histogram.frequency(s) - p));
    }
    result.assertions.push_back(
        {"each branch frequency within 5-sigma of " + std::to_string(p), worst <= bound, worst});
    return result;
}

} // namespace detail

// Bell pair measurement: psi1 = (|00> + |11>)/sqrt(2) collapses to equal
// spins, psi2 = (|01> + |10>)/sqrt(2) to opposite spins.
inline ScenarioResult run_bell_commuting(BellVariant variant, Engine engine, std::uint64_t shots,
                                         std::uint64_t seed,
                                         OrderingPolicy policy = OrderingPolicy::canonical(),
                                         int parallel = 1) {
    const bool psi1 = variant == BellVariant::psi1;
    const std::string text = psi1 ? "qubits 2\nh 0\ncx 0 1\nmeasure_all\n"
                                  : "qubits 2\nh 0\ncx 0 1\nx 1\nmeasure_all\n";
    const std::vector<std::uint64_t> support =
        psi1 ? std::vector<std::uint64_t>{0b00, 0b11} : std::vector<std::uint64_t>{0b01, 0b10};

    ScenarioResult result = detail::uniform_support_scenario(
        bell_scenario_name(variant), text, support, engine, shots, seed, policy, parallel);

    const std::uint64_t forbidden_a = psi1 ? 0b01 : 0b00;
    const std::uint64_t forbidden_b = psi1 ? 0b10 : 0b11;
    const double forbidden = static_cast<double>(
        (result.histogram.counts.count(forbidden_a) ? result.histogram.counts.at(forbidden_a) : 0) +
        (result.histogram.counts.count(forbidden_b) ? result.histogram.counts.at(forbidden_b) : 0));
    result.assertions.push_back({psi1 ? "anticorrelated patterns 01/10 never occur"
                                      : "correlated patterns 00/11 never occur",
                                 forbidden == 0.0, forbidden});
    return result;
}

// One-bit adder: Hadamard both inputs, Toffoli writes the carry, CNOT folds
// the sum onto the second qubit. Final state (|000> + |010> + |110> +
// |101>)/2; outcome bits read (a, s, c) with s = a XOR b and c = a AND b.
inline ScenarioResult run_adder(Engine engine, std::uint64_t shots, std::uint64_t seed,
                                OrderingPolicy policy = OrderingPolicy::canonical(),
                                int parallel = 1) {
    ScenarioResult result = detail::uniform_support_scenario(
        "adder", "qubits 3\nh 0\nh 1\nccx 0 1 2\ncx 0 1\nmeasure_all\n",
        {0b000, 0b010, 0b110, 0b101}, engine, shots, seed, policy, parallel);

    // Decode each observed pattern: b is recovered from s = a XOR b, then the
    // carry must equal a AND b. The decode is a pure function of the pattern,
    // so checking the histogram support checks every shot.
    std::uint64_t bad = 0;
    for (const auto& [pattern, count] : result.histogram.counts) {
        const std::uint64_t a = (pattern >> 2) & 1u;
        const std::uint64_t s = (pattern >> 1) & 1u;
        const std::uint64_t c = pattern & 1u;
        const std::uint64_t b = a ^ s;
        if (c != (a & b)) bad += count;
    }
    result.assertions.push_back(
        {"sum and carry decode consistently on every shot", bad == 0, static_cast<double>(bad)});
    return result;
}

namespace detail {

// Teleportation decoders, keyed by the joint outcome on qubits (0, 1), as
// maps on Bob's amplitudes. The 00 entry is the printed column map
// |0> -> -|1>, |1> -> |0>, applied literally.
inline std::array<Amplitude, 4> teleport_decoder(std::uint64_t outcome) {
    switch (outcome) {
    case 0b00: return {Amplitude{0, 0}, Amplitude{1, 0}, Amplitude{-1, 0}, Amplitude{0, 0}};
    case 0b01: return {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{-1, 0}};
    case 0b10: return {Amplitude{0, 0}, Amplitude{1, 0}, Amplitude{1, 0}, Amplitude{0, 0}};
    default: return {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{1, 0}};
    }
}

inline double max_component_deviation(const StateVector& got,
                                      const std::vector<Amplitude>& expected) {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < got.dim(); ++i) {
        worst = std::max(worst, std::abs(got.amp(i) - expected[i]));
    }
    return worst;
}

} // namespace detail

// Teleports phi = alpha|0> + beta|1> from qubit 0 to qubit 2 through the
// auxiliary pair chi = (|01> - |10>)/sqrt(2): CNOT(0 -> 1), H(0), joint
// measurement of qubits (0, 1), then the outcome-keyed decoder on qubit 2.
// Success is fidelity 1 against phi up to a global phase.
inline ScenarioResult run_teleportation(Amplitude alpha, Amplitude beta, Engine engine,
                                        std::uint64_t shots, std::uint64_t seed,
                                        OrderingPolicy policy = OrderingPolicy::canonical(),
                                        int parallel = 1) {
    const double norm = std::norm(alpha) + std::norm(beta);
    if (std::abs(norm - 1.0) > kNormTol) {
        throw std::invalid_argument("teleported amplitudes must be normalized");
    }

    ScenarioResult result;
    result.name = "teleport";
    result.shots = shots;
    result.outcome_bits = 2;

    const double r = 1.0 / std::sqrt(2.0);
    const StateVector phi = StateVector::from_amplitudes(1, {alpha, beta});
    const StateVector chi = StateVector::from_amplitudes(
        2, {Amplitude{0, 0}, Amplitude{r, 0}, Amplitude{-r, 0}, Amplitude{0, 0}});

    // The three intermediate states, built by the gate route...
    const StateVector psi0 = tensor(phi, chi);
    const StateVector psi1 = apply_gate(psi0, Gate::cnot(0, 1));
    const StateVector psi2 = apply_gate(psi1, Gate::h(0));

    // ...checked componentwise against the closed-form expansions.
    const Amplitude z{0, 0};
    const std::vector<Amplitude> expect0{z, alpha * r, -alpha * r, z, z, beta * r, -beta * r, z};
    const std::vector<Amplitude> expect1{z, alpha * r, -alpha * r, z, -beta * r, z, z, beta * r};
    const std::vector<Amplitude> expect2{-beta * 0.5, alpha * 0.5, -alpha * 0.5, beta * 0.5,
                                         beta * 0.5,  alpha * 0.5, -alpha * 0.5, -beta * 0.5};
    const double dev = std::max({detail::max_component_deviation(psi0, expect0),
                                 detail::max_component_deviation(psi1, expect1),
                                 detail::max_component_deviation(psi2, expect2)});
    result.assertions.push_back(
        {"intermediate states match their closed-form expansions", dev <= 1e-12, dev});

    const auto partition =
        engine == Engine::schedule
            ? std::optional<EntanglementPartition>(EntanglementPartition::from_state(psi2, policy))
            : std::nullopt;

    struct Acc {
        Histogram hist;
        double min_fidelity = 1.0;
    };

    MeasurementSpec spec;
    spec.qubits = {0, 1};

    auto body = [&](std::uint64_t shot, Acc& acc) {
        RandomSource rng(seed, engine_stream(engine, shot));

        std::uint64_t outcome;
        StateVector post = psi2;
        if (engine == Engine::schedule) {
            auto m = schedule_measure(*partition, psi2, spec, rng);
            outcome = m.outcome;
            post = std::move(m.post_state);
        } else {
            auto m = oracle_measure(psi2, spec.qubits, rng);
            outcome = m.outcome;
            post = std::move(m.post);
        }

        // Bob's qubit: amplitudes at |outcome, b> for b = 0, 1.
        const Amplitude b0 = post.amp((outcome << 1) | 0u);
        const Amplitude b1 = post.amp((outcome << 1) | 1u);
        const auto d = detail::teleport_decoder(outcome);
        const Amplitude d0 = d[0] * b0 + d[1] * b1;
        const Amplitude d1 = d[2] * b0 + d[3] * b1;

        // Fidelity to phi, insensitive to the global phase the decoders leave.
        const double f = std::norm(std::conj(alpha) * d0 + std::conj(beta) * d1);
        acc.min_fidelity = std::min(acc.min_fidelity, f);
        acc.hist.add(outcome);
    };

    double min_fidelity = 1.0;
    detail::parallel_shots<Acc>(shots, parallel, Acc{}, body, [&](Acc& acc) {
        for (const auto& [pattern, count] : acc.hist.counts) result.histogram.add(pattern, count);
        min_fidelity = std::min(min_fidelity, acc.min_fidelity);
    });
    result.min_fidelity = min_fidelity;
    for (const auto& [pattern, count] : result.histogram.counts) {
        result.counts[format_bits(pattern, 2)] = count;
    }

    result.assertions.push_back({"post-decode fidelity is 1 up to 1e-10 on every shot",
                                 min_fidelity >= 1.0 - 1e-10, min_fidelity});

    const double bound = five_sigma(0.25, shots);
    double worst = 0.0;
    for (std::uint64_t m = 0; m < 4; ++m) {
        worst = std::max(worst, std::abs(result.histogram.frequency(m) - 0.25));
    }
    result.assertions.push_back(
        {"each measurement outcome frequency within 5-sigma of 0.25", worst <= bound, worst});
    return result;
}

// Exclusive-axis pair demonstration: every shot prepares the fresh
// four-segment pair, probes the x axis, and on a non-null collapse probes
// the y axis, which the model says must come back null.
inline ScenarioResult run_noncommuting_demo(std::uint64_t shots, std::uint64_t seed,
                                            MeasureMode mode, int parallel = 1) {
    if (mode != MeasureMode::exclusive_axis) {
        throw std::invalid_argument("the exclusive-axis demo requires exclusive-axis mode");
    }

    ScenarioResult result;
    result.name = "noncommuting";
    result.shots = shots;
    result.outcome_bits = 2;

    struct Acc {
        std::uint64_t null_count = 0;
        std::uint64_t x00 = 0;
        std::uint64_t x11 = 0;
        std::uint64_t y_nonnull_after_x = 0;
    };

    auto body = [&](std::uint64_t shot, Acc& acc) {
        RandomSource rng(seed, engine_stream(Engine::schedule, shot));
        AxisExclusivePair pair;
        const auto x = pair.measure(Axis::x, mode, rng);
        if (x.is_null) {
            ++acc.null_count;
            return;
        }
        (x.outcome == 0b11 ? acc.x11 : acc.x00) += 1;
        const auto y = pair.measure(Axis::y, mode, rng);
        if (!y.is_null) ++acc.y_nonnull_after_x;
    };

    Acc total;
    detail::parallel_shots<Acc>(shots, parallel, Acc{}, body, [&total](Acc& acc) {
        total.null_count += acc.null_count;
        total.x00 += acc.x00;
        total.x11 += acc.x11;
        total.y_nonnull_after_x += acc.y_nonnull_after_x;
    });

    result.counts["x00"] = total.x00;
    result.counts["x11"] = total.x11;
    result.counts["null"] = total.null_count;
    result.histogram.add(0b00, total.x00);
    result.histogram.add(0b11, total.x11);

    const double non_null_fraction =
        static_cast<double>(total.x00 + total.x11) / static_cast<double>(shots);
    result.assertions.push_back({"non-null x-measure fraction within 5-sigma of 0.5",
                                 std::abs(non_null_fraction - 0.5) <= five_sigma(0.5, shots),
                                 non_null_fraction});
    result.assertions.push_back({"y-measure after x-collapse is always null",
                                 total.y_nonnull_after_x == 0,
                                 static_cast<double>(total.y_nonnull_after_x)});
    return result;
}

} // namespace cycleq
