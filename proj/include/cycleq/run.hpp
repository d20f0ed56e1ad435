// Shot execution for parsed circuits under either engine.
//
// statevector: the reference engine; applies gates to the state and samples
// measurements directly from the squared amplitudes.
// schedule: evolves the same state but derives every measurement from cycle
// schedules kept synchronized per entangled group.
//
// Randomness is counter-based with one stream per (shot, engine), so results
// are bit-reproducible at every parallelism degree and the two engines'
// samples stay statistically independent of each other.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cycleq/circuit.hpp"
#include "cycleq/measurement.hpp"
#include "cycleq/random.hpp"
#include "cycleq/schedule.hpp"
#include "cycleq/state.hpp"
#include "cycleq/stats.hpp"

namespace cycleq {

enum class Engine { schedule, statevector };

inline const char* engine_name(Engine e) {
    return e == Engine::schedule ? "schedule" : "statevector";
}

// High byte of the stream id encodes the engine so the two engines never
// share a random stream even on the same shot index.
inline std::uint64_t engine_stream(Engine engine, std::uint64_t shot) {
    const std::uint64_t lane = (engine == Engine::schedule) ? 0u : 1u;
    return shot | (lane << 56);
}

struct TraceEvent {
    std::uint64_t shot;
    ScheduleEvent event;
};

struct ShotResult {
    std::uint64_t outcome = 0; // measured bits, in measurement order, MSB first
    int outcome_bits = 0;
    StateVector post_state;
};

namespace detail {

inline Gate gate_for(const Instruction& inst) {
    switch (inst.op) {
    case Opcode::h: return Gate::h(inst.qubits[0]);
    case Opcode::x: return Gate::x(inst.qubits[0]);
    case Opcode::y: return Gate::y(inst.qubits[0]);
    case Opcode::z: return Gate::z(inst.qubits[0]);
    case Opcode::phase: return Gate::phase(inst.qubits[0], inst.angle);
    case Opcode::rot: return Gate::rot(inst.qubits[0], inst.angle);
    case Opcode::cx: return Gate::cnot(inst.qubits[0], inst.qubits[1]);
    case Opcode::ccx: return Gate::toffoli(inst.qubits[0], inst.qubits[1], inst.qubits[2]);
    default: throw std::logic_error("instruction is not a gate");
    }
}

inline bool is_gate(const Instruction& inst) {
    switch (inst.op) {
    case Opcode::h:
    case Opcode::x:
    case Opcode::y:
    case Opcode::z:
    case Opcode::phase:
    case Opcode::rot:
    case Opcode::cx:
    case Opcode::ccx: return true;
    default: return false;
    }
}

} // namespace detail

// Number of outcome bits one shot of this circuit produces. Circuits without
// any measure instruction get an implicit trailing measure_all.
inline int circuit_outcome_bits(const Circuit& circuit) {
    int bits = 0;
    bool measured = false;
    for (const auto& inst : circuit.instructions) {
        if (inst.op == Opcode::measure) {
            bits += static_cast<int>(inst.qubits.size());
            measured = true;
        } else if (inst.op == Opcode::measure_all) {
            bits += circuit.n_qubits;
            measured = true;
        }
    }
    if (!measured) bits = circuit.n_qubits;
    if (bits > 63) throw std::invalid_argument("circuit measures more than 63 bits per shot");
    return bits;
}

// Mid-shot execution state: the evolving register plus, for the schedule
// engine, its entanglement partition, plus the sticky per-qubit measurement
// basis angles set by rotbasis.
struct ShotContext {
    Engine engine;
    StateVector state;
    std::optional<EntanglementPartition> partition; // schedule engine only
    std::vector<double> basis_angle;                // per qubit, radians

    ShotContext(Engine eng, const StateVector& initial, OrderingPolicy policy,
                const ScheduleEventSink& sink)
        : engine(eng), state(initial),
          basis_angle(static_cast<std::size_t>(initial.n_qubits()), 0.0) {
        if (engine == Engine::schedule) {
            partition = EntanglementPartition::from_state(initial, policy, sink);
        }
    }

    void apply(const Gate& gate, const ScheduleEventSink& sink) {
        state = apply_gate(state, gate);
        if (partition) {
            partition = resync_after_unitary(*partition, gate, state, sink);
        }
    }

    // Measures `qubits` in their rotbasis-rotated bases, appends the bits to
    // `outcome` (MSB first), and collapses the state (and schedules).
    void measure(const std::vector<int>& qubits, RandomSource& rng, std::uint64_t& outcome,
                 int& bits_done, int total_bits, const ScheduleEventSink& sink) {
        std::uint64_t bits = 0;
        if (engine == Engine::schedule) {
            MeasurementSpec spec;
            spec.qubits = qubits;
            for (int q : qubits) {
                const double theta = basis_angle[static_cast<std::size_t>(q)];
                if (theta != 0.0) spec.rotations.push_back(BasisRotation{q, theta});
            }
            auto result = schedule_measure(*partition, state, spec, rng, sink);
            bits = result.outcome;
            state = std::move(result.post_state);
            partition = std::move(result.post_partition);
        } else {
            // Reference route for a rotated basis: rotate amplitudes into the
            // target basis, measure computationally, rotate the collapsed
            // state back.
            StateVector work = state;
            for (int q : qubits) {
                const double theta = basis_angle[static_cast<std::size_t>(q)];
                if (theta != 0.0) work = apply_gate(work, Gate::rot(q, theta));
            }
            auto result = oracle_measure(work, qubits, rng);
            bits = result.outcome;
            work = std::move(result.post);
            for (int q : qubits) {
                const double theta = basis_angle[static_cast<std::size_t>(q)];
                if (theta != 0.0) work = apply_gate(work, Gate::rot(q, -theta));
            }
            state = std::move(work);
        }
        bits_done += static_cast<int>(qubits.size());
        outcome |= bits << (total_bits - bits_done);
    }
};

// A circuit compiled for repeated shots. The instructions before the first
// measurement are deterministic, so their effect (state, schedules, basis
// angles, rebuild events) is computed once here and copied per shot.
class PreparedRun {
public:
    PreparedRun(const Circuit& circuit, Engine engine,
                OrderingPolicy policy = OrderingPolicy::canonical())
        : circuit_(circuit), engine_(engine), policy_(policy),
          total_bits_(circuit_outcome_bits(circuit)),
          prefix_(make_prefix(circuit, engine, policy, prefix_events_, resume_)) {}

    Engine engine() const { return engine_; }
    int outcome_bits() const { return total_bits_; }
    const StateVector& prefix_state() const { return prefix_.state; }

    ShotResult shot(RandomSource& rng, const ScheduleEventSink& sink = nullptr) const {
        if (sink) {
            for (const auto& ev : prefix_events_) sink(ev);
        }
        ShotContext ctx = prefix_;

        std::uint64_t outcome = 0;
        int bits_done = 0;
        bool measured = false;
        std::vector<int> all(static_cast<std::size_t>(circuit_.n_qubits));
        for (int q = 0; q < circuit_.n_qubits; ++q) all[static_cast<std::size_t>(q)] = q;

        for (std::size_t i = resume_; i < circuit_.instructions.size(); ++i) {
            const auto& inst = circuit_.instructions[i];
            if (detail::is_gate(inst)) {
                ctx.apply(detail::gate_for(inst), sink);
            } else if (inst.op == Opcode::rotbasis) {
                ctx.basis_angle[static_cast<std::size_t>(inst.qubits[0])] = inst.angle;
            } else if (inst.op == Opcode::measure) {
                ctx.measure(inst.qubits, rng, outcome, bits_done, total_bits_, sink);
                measured = true;
            } else if (inst.op == Opcode::measure_all) {
                ctx.measure(all, rng, outcome, bits_done, total_bits_, sink);
                measured = true;
            } else {
                throw std::logic_error("unexpected instruction in shot body");
            }
        }
        if (!measured) {
            ctx.measure(all, rng, outcome, bits_done, total_bits_, sink);
        }
        return ShotResult{outcome, total_bits_, std::move(ctx.state)};
    }

private:
    static ShotContext make_prefix(const Circuit& circuit, Engine engine, OrderingPolicy policy,
                                   std::vector<ScheduleEvent>& events, std::size_t& resume) {
        ScheduleEventSink recorder = [&events](const ScheduleEvent& ev) { events.push_back(ev); };

        std::uint64_t init_pattern = 0;
        std::size_t first = 0;
        if (!circuit.instructions.empty() && circuit.instructions[0].op == Opcode::init) {
            init_pattern = circuit.instructions[0].init_pattern;
            first = 1;
        }
        ShotContext ctx(engine, StateVector(circuit.n_qubits, init_pattern), policy, recorder);

        std::size_t i = first;
        for (; i < circuit.instructions.size(); ++i) {
            const auto& inst = circuit.instructions[i];
            if (detail::is_gate(inst)) {
                ctx.apply(detail::gate_for(inst), recorder);
            } else if (inst.op == Opcode::rotbasis) {
                ctx.basis_angle[static_cast<std::size_t>(inst.qubits[0])] = inst.angle;
            } else {
                break; // first measurement: shots diverge from here
            }
        }
        resume = i;
        return ctx;
    }

    const Circuit& circuit_;
    Engine engine_;
    OrderingPolicy policy_;
    int total_bits_;
    std::vector<ScheduleEvent> prefix_events_;
    std::size_t resume_ = 0;
    ShotContext prefix_;
};

// Executes `circuit` once. `shot_sink`, when set, receives every schedule
// event of the shot (schedule engine only).
inline ShotResult run_shot(const Circuit& circuit, Engine engine, RandomSource& rng,
                           OrderingPolicy policy = OrderingPolicy::canonical(),
                           const ScheduleEventSink& shot_sink = nullptr) {
    return PreparedRun(circuit, engine, policy).shot(rng, shot_sink);
}

struct RunResult {
    Histogram histogram;
    int outcome_bits = 0;
    std::vector<TraceEvent> trace; // empty unless tracing a schedule run
};

namespace detail {

// Runs fn(shot) for shots [0, n) split into `parallel` contiguous chunks.
// Each chunk owns an accumulator; `merge` folds them back in chunk order, so
// the aggregate is independent of thread scheduling.
template <typename Acc, typename ShotFn, typename MergeFn>
void parallel_shots(std::uint64_t shots, int parallel, Acc make, ShotFn fn, MergeFn merge) {
    if (parallel < 1) parallel = 1;
    const auto chunks = static_cast<std::uint64_t>(parallel) < shots
                            ? static_cast<std::uint64_t>(parallel)
                            : (shots == 0 ? 1 : shots);
    std::vector<Acc> accs(static_cast<std::size_t>(chunks), make);

    if (chunks == 1) {
        for (std::uint64_t s = 0; s < shots; ++s) fn(s, accs[0]);
    } else {
        std::vector<std::thread> workers;
        const std::uint64_t per = shots / chunks;
        const std::uint64_t extra = shots % chunks;
        std::uint64_t begin = 0;
        for (std::uint64_t c = 0; c < chunks; ++c) {
            const std::uint64_t end = begin + per + (c < extra ? 1 : 0);
            workers.emplace_back([&fn, &accs, c, begin, end]() {
                for (std::uint64_t s = begin; s < end; ++s) fn(s, accs[static_cast<std::size_t>(c)]);
            });
            begin = end;
        }
        for (auto& w : workers) w.join();
    }
    for (auto& acc : accs) merge(acc);
}

} // namespace detail

// Runs `shots` independent executions of the circuit and aggregates the
// outcome histogram. The gate-only prefix before the first measurement is
// deterministic, so it is evolved once and snapshotted for all shots.
inline RunResult run_circuit(const Circuit& circuit, Engine engine, std::uint64_t seed,
                             std::uint64_t shots, OrderingPolicy policy = OrderingPolicy::canonical(),
                             int parallel = 1, bool trace = false) {
    if (shots < 1) throw std::invalid_argument("shot count must be >= 1");

    RunResult result;
    result.outcome_bits = circuit_outcome_bits(circuit);
    const PreparedRun prepared(circuit, engine, policy);

    struct Acc {
        Histogram hist;
        std::vector<TraceEvent> trace;
    };

    auto body = [&](std::uint64_t shot, Acc& acc) {
        RandomSource rng(seed, engine_stream(engine, shot));
        ScheduleEventSink sink;
        if (trace && engine == Engine::schedule) {
            sink = [&acc, shot](const ScheduleEvent& ev) {
                acc.trace.push_back(TraceEvent{shot, ev});
            };
        }
        const ShotResult r = prepared.shot(rng, sink);
        acc.hist.add(r.outcome);
    };

    detail::parallel_shots<Acc>(
        shots, parallel, Acc{}, body,
        [&result](Acc& acc) {
            for (const auto& [pattern, count] : acc.hist.counts) {
                result.histogram.add(pattern, count);
            }
            result.trace.insert(result.trace.end(),
                                std::make_move_iterator(acc.trace.begin()),
                                std::make_move_iterator(acc.trace.end()));
        });
    return result;
}

// Analytic outcome distribution of the circuit under the schedule engine:
// gates evolve the partition, measurements multiply in the dwell masses of
// each joint pattern. Mid-circuit measurements enumerate every branch.
inline std::map<std::uint64_t, double> schedule_circuit_distribution(const Circuit& circuit,
                                                                     OrderingPolicy policy =
                                                                         OrderingPolicy::canonical()) {
    const int total_bits = circuit_outcome_bits(circuit);

    struct Branch {
        double weight;
        std::uint64_t outcome;
        int bits_done;
        StateVector state;
        EntanglementPartition partition;
        std::vector<double> basis_angle;
    };

    std::uint64_t init_pattern = 0;
    std::size_t first = 0;
    if (!circuit.instructions.empty() && circuit.instructions[0].op == Opcode::init) {
        init_pattern = circuit.instructions[0].init_pattern;
        first = 1;
    }
    StateVector initial(circuit.n_qubits, init_pattern);

    std::vector<Branch> branches;
    branches.push_back(Branch{1.0, 0, 0, initial,
                              EntanglementPartition::from_state(initial, policy),
                              std::vector<double>(static_cast<std::size_t>(circuit.n_qubits), 0.0)});

    std::vector<int> all(static_cast<std::size_t>(circuit.n_qubits));
    for (int q = 0; q < circuit.n_qubits; ++q) all[static_cast<std::size_t>(q)] = q;

    bool measured = false;
    auto measure_branches = [&](const std::vector<int>& qubits) {
        std::vector<Branch> next;
        for (auto& br : branches) {
            MeasurementSpec spec;
            spec.qubits = qubits;
            for (int q : qubits) {
                const double theta = br.basis_angle[static_cast<std::size_t>(q)];
                if (theta != 0.0) spec.rotations.push_back(BasisRotation{q, theta});
            }
            for (const auto& [bits, p] : schedule_outcome_distribution(br.partition, spec)) {
                Branch out = br;
                out.weight = br.weight * p;
                std::vector<double> angles;
                for (int q : qubits) angles.push_back(out.basis_angle[static_cast<std::size_t>(q)]);
                out.state = project_rotated(br.state, qubits, angles, bits);
                out.partition = EntanglementPartition::from_state(out.state, policy);
                out.bits_done += static_cast<int>(qubits.size());
                out.outcome |= bits << (total_bits - out.bits_done);
                next.push_back(std::move(out));
            }
        }
        branches = std::move(next);
    };

    for (std::size_t i = first; i < circuit.instructions.size(); ++i) {
        const auto& inst = circuit.instructions[i];
        if (detail::is_gate(inst)) {
            const Gate g = detail::gate_for(inst);
            for (auto& br : branches) {
                br.state = apply_gate(br.state, g);
                br.partition = resync_after_unitary(br.partition, g, br.state);
            }
        } else if (inst.op == Opcode::rotbasis) {
            for (auto& br : branches) {
                br.basis_angle[static_cast<std::size_t>(inst.qubits[0])] = inst.angle;
            }
        } else if (inst.op == Opcode::measure) {
            measure_branches(inst.qubits);
            measured = true;
        } else if (inst.op == Opcode::measure_all) {
            measure_branches(all);
            measured = true;
        }
    }
    if (!measured) measure_branches(all);

    std::map<std::uint64_t, double> dist;
    for (const auto& br : branches) dist[br.outcome] += br.weight;
    return dist;
}

// Oracle counterpart of schedule_circuit_distribution: exact Born-rule
// branch enumeration on the plain state vector.
inline std::map<std::uint64_t, double> oracle_circuit_distribution(const Circuit& circuit) {
    const int total_bits = circuit_outcome_bits(circuit);

    struct Branch {
        double weight;
        std::uint64_t outcome;
        int bits_done;
        StateVector state;
        std::vector<double> basis_angle;
    };

    std::uint64_t init_pattern = 0;
    std::size_t first = 0;
    if (!circuit.instructions.empty() && circuit.instructions[0].op == Opcode::init) {
        init_pattern = circuit.instructions[0].init_pattern;
        first = 1;
    }
    std::vector<Branch> branches;
    branches.push_back(Branch{1.0, 0, 0, StateVector(circuit.n_qubits, init_pattern),
                              std::vector<double>(static_cast<std::size_t>(circuit.n_qubits), 0.0)});

    std::vector<int> all(static_cast<std::size_t>(circuit.n_qubits));
    for (int q = 0; q < circuit.n_qubits; ++q) all[static_cast<std::size_t>(q)] = q;

    bool measured = false;
    auto measure_branches = [&](const std::vector<int>& qubits) {
        std::vector<Branch> next;
        for (auto& br : branches) {
            StateVector work = br.state;
            for (int q : qubits) {
                const double theta = br.basis_angle[static_cast<std::size_t>(q)];
                if (theta != 0.0) work = apply_gate(work, Gate::rot(q, theta));
            }
            for (const auto& [bits, p] : born_distribution(work, qubits)) {
                Branch out = br;
                out.weight = br.weight * p;
                StateVector collapsed = project_onto(work, qubits, bits);
                for (int q : qubits) {
                    const double theta = br.basis_angle[static_cast<std::size_t>(q)];
                    if (theta != 0.0) collapsed = apply_gate(collapsed, Gate::rot(q, -theta));
                }
                out.state = std::move(collapsed);
                out.bits_done += static_cast<int>(qubits.size());
                out.outcome |= bits << (total_bits - out.bits_done);
                next.push_back(std::move(out));
            }
        }
        branches = std::move(next);
    };

    for (std::size_t i = first; i < circuit.instructions.size(); ++i) {
        const auto& inst = circuit.instructions[i];
        if (detail::is_gate(inst)) {
            const Gate g = detail::gate_for(inst);
            for (auto& br : branches) br.state = apply_gate(br.state, g);
        } else if (inst.op == Opcode::rotbasis) {
            for (auto& br : branches) {
                br.basis_angle[static_cast<std::size_t>(inst.qubits[0])] = inst.angle;
            }
        } else if (inst.op == Opcode::measure) {
            measure_branches(inst.qubits);
            measured = true;
        } else if (inst.op == Opcode::measure_all) {
            measure_branches(all);
            measured = true;
        }
    }
    if (!measured) measure_branches(all);

    std::map<std::uint64_t, double> dist;
    for (const auto& br : branches) dist[br.outcome] += br.weight;
    return dist;
}

} // namespace cycleq
