// The classical measuring device of the schedule model: draw a random
// sampling instant, read off the eigenstate segment the cycle is in at that
// instant, and collapse both the global state and the schedules irrevocably.
//
// Each synchronized group carries its own cycle with an unknown phase
// offset, so the apparatus draws an independent instant per group; without
// this, unentangled qubits would show correlated outcomes.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cycleq/random.hpp"
#include "cycleq/schedule.hpp"
#include "cycleq/state.hpp"

namespace cycleq {

// standard: projective measurement consistent with the reference engine.
// exclusive_axis: the literal two-axis pair model where each sampling
// instant exposes a single basis axis and probing the other axis yields a
// null result (see AxisExclusivePair below).
enum class MeasureMode { standard, exclusive_axis };

struct MeasurementSpec {
    std::vector<int> qubits;               // outcome bit order, MSB first
    std::vector<BasisRotation> rotations;  // absent qubit means theta = 0
    MeasureMode mode = MeasureMode::standard;

    double angle_for(int qubit) const {
        for (const auto& r : rotations) {
            if (r.qubit == qubit) return r.theta;
        }
        return 0.0;
    }
};

struct ScheduleMeasureResult {
    std::uint64_t outcome; // pattern over spec.qubits, MSB first
    StateVector post_state;
    EntanglementPartition post_partition;
};

namespace detail {

// Basis vector b of the {|0>, |1>} basis rotated by theta:
// b=0 -> cos t |0> - sin t |1>,  b=1 -> sin t |0> + cos t |1>.
inline std::vector<Amplitude> rotated_projector(double theta, int bit) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double v0 = (bit == 0) ? c : s;
    const double v1 = (bit == 0) ? -s : c;
    return {Amplitude{v0 * v0, 0}, Amplitude{v0 * v1, 0},
            Amplitude{v1 * v0, 0}, Amplitude{v1 * v1, 0}};
}

// Segment label restricted to the given member qubits, MSB first.
inline std::uint64_t restrict_label(std::uint64_t label, const CycleSchedule& sched,
                                    const std::vector<int>& qubits) {
    std::uint64_t out = 0;
    for (int q : qubits) {
        const int pos = sched.local_position(q);
        out = (out << 1) | ((label >> (sched.width() - 1 - pos)) & 1u);
    }
    return out;
}

} // namespace detail

// Projection of the global state onto per-qubit rotated-basis outcomes,
// renormalized once at the end. With all angles zero this reduces to the
// computational-basis projection.
inline StateVector project_rotated(const StateVector& state, const std::vector<int>& qubits,
                                   const std::vector<double>& angles, std::uint64_t pattern) {
    if (qubits.size() != angles.size()) {
        throw std::invalid_argument("one angle per projected qubit required");
    }
    StateVector out = state;
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        const int bit = static_cast<int>((pattern >> (qubits.size() - 1 - i)) & 1u);
        out = apply_local_matrix(out, {qubits[i]}, detail::rotated_projector(angles[i], bit));
    }
    const double kept = out.norm_sq();
    if (kept <= 0.0) throw std::logic_error("projection onto a zero-probability outcome");
    const double scale = 1.0 / std::sqrt(kept);
    std::vector<Amplitude> amps = out.amplitudes();
    for (auto& a : amps) a *= scale;
    return StateVector::from_amplitudes(state.n_qubits(), std::move(amps));
}

class MeasurementApparatus {
public:
    // Measures spec.qubits: per synchronized group, draw one sampling
    // instant, take the segment of the (rotated where requested) joint
    // schedule at that instant, and read its restriction to the measured
    // members. The global state collapses by renormalized projection, the
    // measured group's schedules are rebuilt from the post state, and
    // untouched groups keep their schedules and ordering.
    static ScheduleMeasureResult measure(const EntanglementPartition& partition,
                                         const StateVector& state, const MeasurementSpec& spec,
                                         RandomSource& rng,
                                         const ScheduleEventSink& sink = nullptr) {
        validate(partition, state, spec);

        // Spec position of each measured qubit, for outcome assembly.
        std::map<int, std::size_t> spec_pos;
        for (std::size_t i = 0; i < spec.qubits.size(); ++i) spec_pos[spec.qubits[i]] = i;

        std::uint64_t outcome = 0;
        StateVector post = state;
        std::vector<bool> affected(partition.groups().size(), false);

        for (std::size_t gi = 0; gi < partition.groups().size(); ++gi) {
            const auto& group = partition.groups()[gi];
            std::vector<int> measured;
            for (int q : group.qubits) {
                if (spec_pos.count(q)) measured.push_back(q);
            }
            if (measured.empty()) continue;
            affected[gi] = true;

            CycleSchedule working = group.schedule;
            for (int q : measured) {
                const double theta = spec.angle_for(q);
                if (theta != 0.0) working = rotate_schedule(working, BasisRotation{q, theta});
            }

            const SamplingInstant instant = draw_instant(rng);
            const Segment& seg = working.segment_at(instant.u);
            const std::uint64_t group_bits = detail::restrict_label(seg.basis_index, working, measured);
            if (sink) {
                // The measure event shows the joint schedule sampled, so its
                // qubit list is the whole group; the collapse event reports
                // the restriction to the measured members.
                sink(ScheduleEvent{ScheduleEvent::Kind::measure, working.qubits(),
                                   working.segments(), instant.u, std::nullopt});
                sink(ScheduleEvent{ScheduleEvent::Kind::collapse, measured, {}, std::nullopt,
                                   group_bits});
            }

            std::vector<double> angles;
            for (int q : measured) angles.push_back(spec.angle_for(q));
            post = project_rotated(post, measured, angles, group_bits);

            for (std::size_t i = 0; i < measured.size(); ++i) {
                const std::uint64_t bit = (group_bits >> (measured.size() - 1 - i)) & 1u;
                outcome |= bit << (spec.qubits.size() - 1 - spec_pos[measured[i]]);
            }
        }

        // Rebuild the affected groups from the collapsed state: measured
        // qubits are definite now and factor out as singletons; what remains
        // of each group splits into exact factors.
        EntanglementPartition out;
        out.n_qubits_ = partition.n_qubits();
        out.policy_ = partition.policy();
        for (std::size_t gi = 0; gi < partition.groups().size(); ++gi) {
            const auto& group = partition.groups()[gi];
            if (!affected[gi]) {
                out.groups_.push_back(group);
                continue;
            }
            std::vector<int> remaining;
            for (int q : group.qubits) {
                if (spec_pos.count(q)) {
                    out.groups_.push_back(EntanglementPartition::make_group(
                        post, {q}, partition.policy(), sink));
                } else {
                    remaining.push_back(q);
                }
            }
            if (!remaining.empty()) {
                const auto amps = detail::extract_group_amplitudes(post, remaining);
                for (auto& qubits : EntanglementPartition::split_factors(amps, remaining)) {
                    out.groups_.push_back(EntanglementPartition::make_group(
                        post, std::move(qubits), partition.policy(), sink));
                }
            }
        }
        out.sort_groups();
        return ScheduleMeasureResult{outcome, std::move(post), std::move(out)};
    }

    // Analytic outcome distribution of measure(): the product over groups of
    // the dwell mass of segments restricting to each pattern. Used to check
    // that dwell arithmetic reproduces the reference probabilities without
    // sampling.
    static std::map<std::uint64_t, double> outcome_distribution(
        const EntanglementPartition& partition, const MeasurementSpec& spec) {
        std::map<int, std::size_t> spec_pos;
        for (std::size_t i = 0; i < spec.qubits.size(); ++i) spec_pos[spec.qubits[i]] = i;

        std::map<std::uint64_t, double> dist{{0, 1.0}};
        for (const auto& group : partition.groups()) {
            std::vector<int> measured;
            for (int q : group.qubits) {
                if (spec_pos.count(q)) measured.push_back(q);
            }
            if (measured.empty()) continue;

            CycleSchedule working = group.schedule;
            for (int q : measured) {
                const double theta = spec.angle_for(q);
                if (theta != 0.0) working = rotate_schedule(working, BasisRotation{q, theta});
            }
            std::map<std::uint64_t, double> group_dist;
            for (const auto& seg : working.segments()) {
                group_dist[detail::restrict_label(seg.basis_index, working, measured)] += seg.dwell;
            }

            std::map<std::uint64_t, double> next;
            for (const auto& [prefix, p] : dist) {
                for (const auto& [bits, q] : group_dist) {
                    std::uint64_t pattern = prefix;
                    for (std::size_t i = 0; i < measured.size(); ++i) {
                        const std::uint64_t bit = (bits >> (measured.size() - 1 - i)) & 1u;
                        pattern |= bit << (spec.qubits.size() - 1 - spec_pos[measured[i]]);
                    }
                    next[pattern] += p * q;
                }
            }
            dist = std::move(next);
        }
        return dist;
    }

private:
    static void validate(const EntanglementPartition& partition, const StateVector& state,
                         const MeasurementSpec& spec) {
        if (spec.mode != MeasureMode::standard) {
            throw std::invalid_argument(
                "exclusive-axis mode measures an AxisExclusivePair, not a register");
        }
        if (state.n_qubits() != partition.n_qubits()) {
            throw std::invalid_argument("state inconsistent with partition");
        }
        detail::check_targets(spec.qubits, state.n_qubits()); // rejects duplicates
        for (const auto& r : spec.rotations) {
            if (!std::isfinite(r.theta)) {
                throw std::invalid_argument("rotation angle is not finite");
            }
        }
    }
};

inline ScheduleMeasureResult schedule_measure(const EntanglementPartition& partition,
                                              const StateVector& state,
                                              const MeasurementSpec& spec, RandomSource& rng,
                                              const ScheduleEventSink& sink = nullptr) {
    return MeasurementApparatus::measure(partition, state, spec, rng, sink);
}

inline std::map<std::uint64_t, double> schedule_outcome_distribution(
    const EntanglementPartition& partition, const MeasurementSpec& spec) {
    return MeasurementApparatus::outcome_distribution(partition, spec);
}

// ---------------------------------------------------------------------------
// Exclusive-axis pair model
// ---------------------------------------------------------------------------

enum class Axis { x, y };

// Distinct physical outcome of probing the axis the pair is not currently
// exposing; never an error.
struct NullResult {};

struct AxisMeasureResult {
    Axis requested;
    bool is_null;          // true: NullResult, state untouched
    std::uint64_t outcome; // 0b00 or 0b11 along `requested`; valid when !is_null
};

// A two-spin singlet-like pair whose cycle interleaves four joint segments,
// |00> and |11> along each of two axes at dwell 1/4 each. At any sampling
// instant exactly one axis is exposed: measuring along it collapses the pair
// to that segment, measuring along the other yields NullResult and leaves
// the pair unchanged. This model is deliberately quarantined behind
// MeasureMode::exclusive_axis; it is not consistent with the standard-mode
// engines and must never mix with them.
class AxisExclusivePair {
public:
    struct AxisSegment {
        Axis axis;
        std::uint64_t joint; // 0b00 or 0b11
        double dwell;
    };

    AxisExclusivePair()
        : segments_{{Axis::x, 0b00, 0.25},
                    {Axis::x, 0b11, 0.25},
                    {Axis::y, 0b00, 0.25},
                    {Axis::y, 0b11, 0.25}} {}

    const std::vector<AxisSegment>& segments() const { return segments_; }
    bool collapsed() const { return collapsed_.has_value(); }

    AxisMeasureResult measure(Axis axis, MeasureMode mode, RandomSource& rng) {
        if (mode != MeasureMode::exclusive_axis) {
            throw std::invalid_argument(
                "the exclusive-axis pair is only measurable in exclusive-axis mode");
        }
        if (collapsed_) {
            // Once collapsed the pair sits in a single segment for the whole
            // cycle: same-axis probes reproduce the outcome, cross-axis
            // probes are null.
            if (collapsed_->axis == axis) return {axis, false, collapsed_->joint};
            return {axis, true, 0};
        }
        const double u = draw_instant(rng).u;
        const AxisSegment& seg = segment_at(u);
        if (seg.axis != axis) return {axis, true, 0};
        collapsed_ = seg;
        return {axis, false, seg.joint};
    }

private:
    const AxisSegment& segment_at(double u) const {
        double cum = 0.0;
        for (const auto& s : segments_) {
            cum += s.dwell;
            if (u < cum) return s;
        }
        return segments_.back();
    }

    std::vector<AxisSegment> segments_;
    std::optional<AxisSegment> collapsed_;
};

inline AxisMeasureResult axis_measure(AxisExclusivePair& pair, Axis axis, MeasureMode mode,
                                      RandomSource& rng) {
    return pair.measure(axis, mode, rng);
}

} // namespace cycleq
