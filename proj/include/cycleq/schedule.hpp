// The cycle-schedule model: a wave function is represented as one cycle of
// unit period sliced into eigenstate segments whose dwell fractions equal
// the squared amplitudes. Entangled qubits share one synchronized joint
// schedule; a basis rotation relabels segments and redistributes dwell.
//
// Segment order is chosen when a schedule is built and is immutable
// afterwards; the engine only rebuilds schedules at a unitary operation or a
// collapse, the two events allowed to change the wave function.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cycleq/random.hpp"
#include "cycleq/state.hpp"

namespace cycleq {

inline constexpr double kDwellPruneTol = 1e-12; // segments below this are dust
inline constexpr double kProductTol = 1e-10;    // rank-1 factorization test

struct Segment {
    std::uint64_t basis_index; // label in the schedule's (possibly joint) basis
    Amplitude amplitude;
    double dwell; // fraction of the cycle; equals |amplitude|^2
};

struct OrderingPolicy {
    enum class Kind { canonical_ascending, seeded_permutation };

    Kind kind = Kind::canonical_ascending;
    std::uint64_t seed = 0;

    static OrderingPolicy canonical() { return {}; }
    static OrderingPolicy shuffled(std::uint64_t seed) {
        return OrderingPolicy{Kind::seeded_permutation, seed};
    }
};

// One cycle of eigenstate segments over the joint basis of `qubits`
// (ascending global labels; label bits are MSB-first in that order).
// Immutable once built: there is no mutating API, so a fixed segment
// arrangement between rebuilds is structural.
class CycleSchedule {
public:
    CycleSchedule() = default;

    // Builds from a dense amplitude vector over the group's joint basis.
    // Zero-amplitude labels carry no segment; dust below kDwellPruneTol is
    // pruned and the remainder renormalized. When nothing is pruned the
    // amplitudes are kept bit-for-bit so dwell arithmetic matches the Born
    // rule exactly.
    static CycleSchedule from_amplitudes(std::vector<int> qubits,
                                         const std::vector<Amplitude>& amps,
                                         OrderingPolicy policy) {
        if (qubits.empty() || amps.size() != (std::size_t{1} << qubits.size())) {
            throw std::invalid_argument("schedule amplitude vector has wrong length");
        }
        if (!std::is_sorted(qubits.begin(), qubits.end())) {
            throw std::invalid_argument("schedule qubits must be ascending");
        }

        CycleSchedule sched;
        sched.qubits_ = std::move(qubits);
        sched.policy_ = policy;

        bool pruned = false;
        double kept = 0.0;
        for (std::uint64_t i = 0; i < amps.size(); ++i) {
            const double dwell = std::norm(amps[i]);
            if (dwell == 0.0) continue;
            if (dwell < kDwellPruneTol) {
                pruned = true;
                continue;
            }
            kept += dwell;
            sched.segments_.push_back(Segment{i, amps[i], dwell});
        }
        if (sched.segments_.empty()) {
            throw std::invalid_argument("schedule has no segments; state is zero");
        }
        if (pruned) {
            const double scale = 1.0 / std::sqrt(kept);
            for (auto& seg : sched.segments_) {
                seg.amplitude *= scale;
                seg.dwell = std::norm(seg.amplitude);
            }
        }

        if (policy.kind == OrderingPolicy::Kind::seeded_permutation) {
            std::uint64_t s = policy.seed;
            for (std::size_t i = sched.segments_.size(); i > 1; --i) {
                const std::size_t j =
                    static_cast<std::size_t>(detail::splitmix64(s) % i);
                std::swap(sched.segments_[i - 1], sched.segments_[j]);
            }
        }
        return sched;
    }

    const std::vector<int>& qubits() const { return qubits_; }
    const std::vector<Segment>& segments() const { return segments_; }
    OrderingPolicy policy() const { return policy_; }
    int width() const { return static_cast<int>(qubits_.size()); }

    double total_dwell() const {
        double t = 0.0;
        for (const auto& s : segments_) t += s.dwell;
        return t;
    }

    bool contains_qubit(int q) const {
        return std::find(qubits_.begin(), qubits_.end(), q) != qubits_.end();
    }

    // Local bit position of a global qubit label within segment labels.
    int local_position(int q) const {
        const auto it = std::find(qubits_.begin(), qubits_.end(), q);
        if (it == qubits_.end()) throw std::invalid_argument("qubit not in schedule");
        return static_cast<int>(it - qubits_.begin());
    }

    // Dense amplitude vector over the joint basis (inverse of from_amplitudes).
    std::vector<Amplitude> dense_amplitudes() const {
        std::vector<Amplitude> amps(std::size_t{1} << qubits_.size(), Amplitude{0, 0});
        for (const auto& s : segments_) amps[s.basis_index] = s.amplitude;
        return amps;
    }

    // Segment covering cycle fraction u in [0, 1); the last segment absorbs
    // any floating-point shortfall at the top of the cycle.
    const Segment& segment_at(double u) const {
        double cum = 0.0;
        for (const auto& s : segments_) {
            cum += s.dwell;
            if (u < cum) return s;
        }
        return segments_.back();
    }

private:
    std::vector<int> qubits_;
    std::vector<Segment> segments_;
    OrderingPolicy policy_;
};

// Anti-clockwise rotation of the {|0>, |1>} basis of one qubit by theta;
// amplitudes transform by [[cos t, -sin t], [sin t, cos t]].
struct BasisRotation {
    int qubit = 0;
    double theta = 0.0;
};

// Dwell fractions keyed by basis label; equal to the Born probabilities of
// the generating state.
inline std::map<std::uint64_t, double> schedule_distribution(const CycleSchedule& sched) {
    std::map<std::uint64_t, double> dist;
    for (const auto& s : sched.segments()) dist[s.basis_index] = s.dwell;
    return dist;
}

// Full-register schedule of a state: one segment per nonzero amplitude with
// dwell |amp|^2, ordered per policy.
inline CycleSchedule build_schedule(const StateVector& state,
                                    OrderingPolicy policy = OrderingPolicy::canonical()) {
    std::vector<int> qubits(static_cast<std::size_t>(state.n_qubits()));
    for (int q = 0; q < state.n_qubits(); ++q) qubits[static_cast<std::size_t>(q)] = q;
    return CycleSchedule::from_amplitudes(std::move(qubits), state.amplitudes(), policy);
}

// Relabels a schedule to the basis obtained by rotating one member qubit.
// For a single qubit with amplitudes (a, b): dwell(|x>) = |a cos t - b sin t|^2,
// dwell(|y>) = |a sin t + b cos t|^2.
inline CycleSchedule rotate_schedule(const CycleSchedule& sched, const BasisRotation& rot) {
    if (!sched.contains_qubit(rot.qubit)) {
        throw std::invalid_argument("rotated qubit is not in the schedule");
    }
    if (rot.theta == 0.0) return sched;

    const int pos = sched.local_position(rot.qubit);
    const int k = sched.width();
    auto amps = sched.dense_amplitudes();

    const double c = std::cos(rot.theta);
    const double s = std::sin(rot.theta);
    const std::uint64_t bit = std::uint64_t{1} << (k - 1 - pos);
    for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if (i & bit) continue;
        const Amplitude a0 = amps[i];
        const Amplitude a1 = amps[i | bit];
        amps[i] = a0 * c - a1 * s;
        amps[i | bit] = a0 * s + a1 * c;
    }
    return CycleSchedule::from_amplitudes(sched.qubits(), amps, sched.policy());
}

namespace detail {

// Extracts the pure factor of `group` (ascending qubits) from a state that
// factorizes as (group) x (rest). Returned amplitudes are normalized and
// defined up to a global phase; when the group covers the whole register the
// state's amplitudes are returned untouched.
inline std::vector<Amplitude> extract_group_amplitudes(const StateVector& state,
                                                       const std::vector<int>& group) {
    const int n = state.n_qubits();
    const int k = static_cast<int>(group.size());
    if (k == n) return state.amplitudes();

    std::vector<int> rest;
    rest.reserve(static_cast<std::size_t>(n - k));
    for (int q = 0; q < n; ++q) {
        if (std::find(group.begin(), group.end(), q) == group.end()) rest.push_back(q);
    }

    const std::uint64_t rows = std::uint64_t{1} << k;
    const std::uint64_t cols = std::uint64_t{1} << (n - k);

    // Column with the most mass gives the factor after normalization.
    std::uint64_t best_col = 0;
    double best_mass = -1.0;
    std::vector<double> col_mass(cols, 0.0);
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
        const std::uint64_t c = gather_pattern(i, rest, n);
        col_mass[c] += state.probability(i);
    }
    for (std::uint64_t c = 0; c < cols; ++c) {
        if (col_mass[c] > best_mass) {
            best_mass = col_mass[c];
            best_col = c;
        }
    }

    std::vector<Amplitude> out(rows, Amplitude{0, 0});
    const double scale = 1.0 / std::sqrt(best_mass);
    const std::uint64_t col_bits = scatter_pattern(best_col, rest, n);
    for (std::uint64_t r = 0; r < rows; ++r) {
        out[r] = state.amp(scatter_pattern(r, group, n) | col_bits) * scale;
    }
    return out;
}

// Max deviation of the (part, complement) amplitude matrix from its rank-1
// reconstruction through the largest pivot.
inline double product_deviation(const std::vector<Amplitude>& amps, int width,
                                const std::vector<int>& part_positions) {
    const int k = width;
    std::vector<int> rest_positions;
    for (int p = 0; p < k; ++p) {
        if (std::find(part_positions.begin(), part_positions.end(), p) ==
            part_positions.end()) {
            rest_positions.push_back(p);
        }
    }
    const std::uint64_t rows = std::uint64_t{1} << part_positions.size();
    const std::uint64_t cols = std::uint64_t{1} << rest_positions.size();

    auto entry = [&](std::uint64_t r, std::uint64_t c) {
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < part_positions.size(); ++i) {
            const std::uint64_t b = (r >> (part_positions.size() - 1 - i)) & 1u;
            idx |= b << (k - 1 - part_positions[i]);
        }
        for (std::size_t i = 0; i < rest_positions.size(); ++i) {
            const std::uint64_t b = (c >> (rest_positions.size() - 1 - i)) & 1u;
            idx |= b << (k - 1 - rest_positions[i]);
        }
        return amps[idx];
    };

    std::uint64_t pr = 0, pc = 0;
    double pivot = -1.0;
    for (std::uint64_t r = 0; r < rows; ++r) {
        for (std::uint64_t c = 0; c < cols; ++c) {
            const double mag = std::abs(entry(r, c));
            if (mag > pivot) {
                pivot = mag;
                pr = r;
                pc = c;
            }
        }
    }
    if (pivot <= 0.0) return 0.0;

    const Amplitude piv = entry(pr, pc);
    double worst = 0.0;
    for (std::uint64_t r = 0; r < rows; ++r) {
        for (std::uint64_t c = 0; c < cols; ++c) {
            const Amplitude recon = entry(r, pc) * entry(pr, c) / piv;
            worst = std::max(worst, std::abs(entry(r, c) - recon));
        }
    }
    return worst;
}

} // namespace detail

// Trace hook: structured view of schedule events for external rendering.
struct ScheduleEvent {
    enum class Kind { rebuild, measure, collapse };

    Kind kind;
    std::vector<int> qubits;
    std::vector<Segment> segments;
    std::optional<double> u;              // measure events only
    std::optional<std::uint64_t> outcome; // collapse events only
};

using ScheduleEventSink = std::function<void(const ScheduleEvent&)>;

// Grouping of the register into factors; each group owns one joint schedule.
class EntanglementPartition {
public:
    struct Group {
        std::vector<int> qubits; // ascending
        CycleSchedule schedule;
    };

    // Factorizes a state into groups: exact product factors are split apart
    // (rank-1 test), anything genuinely entangled stays together.
    static EntanglementPartition from_state(const StateVector& state,
                                            OrderingPolicy policy = OrderingPolicy::canonical(),
                                            const ScheduleEventSink& sink = nullptr) {
        EntanglementPartition part;
        part.n_qubits_ = state.n_qubits();
        part.policy_ = policy;

        std::vector<int> all(static_cast<std::size_t>(state.n_qubits()));
        for (int q = 0; q < state.n_qubits(); ++q) all[static_cast<std::size_t>(q)] = q;
        for (auto& qubits : split_factors(state.amplitudes(), all)) {
            part.groups_.push_back(make_group(state, std::move(qubits), policy, sink));
        }
        part.sort_groups();
        return part;
    }

    int n_qubits() const { return n_qubits_; }
    OrderingPolicy policy() const { return policy_; }
    const std::vector<Group>& groups() const { return groups_; }

    const Group& group_of(int qubit) const {
        for (const auto& g : groups_) {
            if (std::find(g.qubits.begin(), g.qubits.end(), qubit) != g.qubits.end()) return g;
        }
        throw std::out_of_range("qubit not covered by partition");
    }

    friend EntanglementPartition resync_after_unitary(const EntanglementPartition&, const Gate&,
                                                      const StateVector&,
                                                      const ScheduleEventSink&);
    friend class MeasurementApparatus;

private:
    static Group make_group(const StateVector& state, std::vector<int> qubits,
                            OrderingPolicy policy, const ScheduleEventSink& sink) {
        const auto amps = detail::extract_group_amplitudes(state, qubits);
        Group g;
        g.schedule = CycleSchedule::from_amplitudes(qubits, amps, policy);
        g.qubits = std::move(qubits);
        if (sink) {
            sink(ScheduleEvent{ScheduleEvent::Kind::rebuild, g.qubits,
                               g.schedule.segments(), std::nullopt, std::nullopt});
        }
        return g;
    }

    // Recursively splits `qubits` into exact tensor factors of `amps`
    // (amplitudes over the joint basis of `qubits`). Groups of more than
    // 8 qubits only try single-qubit splits; failing the product test keeps
    // the group merged, which is always statistically safe.
    static std::vector<std::vector<int>> split_factors(const std::vector<Amplitude>& amps,
                                                       const std::vector<int>& qubits) {
        const int k = static_cast<int>(qubits.size());
        if (k == 1) return {qubits};

        std::vector<std::vector<std::size_t>> candidates;
        if (k <= 8) {
            // All proper bipartitions, anchored so position 0 is always in
            // the first part; mask == 2^(k-1) - 1 would be the full set.
            for (std::uint64_t mask = 0; mask + 1 < (std::uint64_t{1} << (k - 1)); ++mask) {
                std::vector<std::size_t> part{0};
                for (int p = 1; p < k; ++p) {
                    if ((mask >> (p - 1)) & 1u) part.push_back(static_cast<std::size_t>(p));
                }
                candidates.push_back(std::move(part));
            }
        } else {
            for (int p = 0; p < k; ++p) candidates.push_back({static_cast<std::size_t>(p)});
        }

        for (const auto& part : candidates) {
            std::vector<int> part_positions(part.begin(), part.end());
            if (detail::product_deviation(amps, k, part_positions) > kProductTol) continue;

            std::vector<int> in_qubits, out_qubits;
            std::vector<int> in_positions, out_positions;
            for (int p = 0; p < k; ++p) {
                if (std::find(part_positions.begin(), part_positions.end(), p) !=
                    part_positions.end()) {
                    in_qubits.push_back(qubits[static_cast<std::size_t>(p)]);
                    in_positions.push_back(p);
                } else {
                    out_qubits.push_back(qubits[static_cast<std::size_t>(p)]);
                    out_positions.push_back(p);
                }
            }
            auto in_amps = sub_factor(amps, k, in_positions, out_positions);
            auto out_amps = sub_factor(amps, k, out_positions, in_positions);

            auto result = split_factors(in_amps, in_qubits);
            for (auto& rest : split_factors(out_amps, out_qubits)) {
                result.push_back(std::move(rest));
            }
            return result;
        }
        return {qubits};
    }

    // Normalized factor over `keep_positions` given the complement positions.
    static std::vector<Amplitude> sub_factor(const std::vector<Amplitude>& amps, int width,
                                             const std::vector<int>& keep_positions,
                                             const std::vector<int>& drop_positions) {
        const std::uint64_t rows = std::uint64_t{1} << keep_positions.size();
        const std::uint64_t cols = std::uint64_t{1} << drop_positions.size();
        auto index_of = [&](std::uint64_t r, std::uint64_t c) {
            std::uint64_t idx = 0;
            for (std::size_t i = 0; i < keep_positions.size(); ++i) {
                const std::uint64_t b = (r >> (keep_positions.size() - 1 - i)) & 1u;
                idx |= b << (width - 1 - keep_positions[i]);
            }
            for (std::size_t i = 0; i < drop_positions.size(); ++i) {
                const std::uint64_t b = (c >> (drop_positions.size() - 1 - i)) & 1u;
                idx |= b << (width - 1 - drop_positions[i]);
            }
            return idx;
        };

        std::uint64_t best_col = 0;
        double best_mass = -1.0;
        for (std::uint64_t c = 0; c < cols; ++c) {
            double mass = 0.0;
            for (std::uint64_t r = 0; r < rows; ++r) {
                mass += std::norm(amps[index_of(r, c)]);
            }
            if (mass > best_mass) {
                best_mass = mass;
                best_col = c;
            }
        }
        std::vector<Amplitude> out(rows);
        const double scale = 1.0 / std::sqrt(best_mass);
        for (std::uint64_t r = 0; r < rows; ++r) {
            out[r] = amps[index_of(r, best_col)] * scale;
        }
        return out;
    }

    void sort_groups() {
        std::sort(groups_.begin(), groups_.end(),
                  [](const Group& a, const Group& b) { return a.qubits.front() < b.qubits.front(); });
    }

    int n_qubits_ = 0;
    OrderingPolicy policy_;
    std::vector<Group> groups_;
};

// Re-synchronizes the partition after `gate` produced `state`: qubits coupled
// by a multi-qubit gate merge into one group with a joint schedule rebuilt
// from the reduced amplitudes; a merged group that factorizes exactly is
// split back apart. Groups the gate did not touch keep their schedules (their
// factor of the wave function is unchanged, so their segment order must stay
// fixed).
inline EntanglementPartition resync_after_unitary(const EntanglementPartition& partition,
                                                  const Gate& gate, const StateVector& state,
                                                  const ScheduleEventSink& sink = nullptr) {
    if (state.n_qubits() != partition.n_qubits()) {
        throw std::invalid_argument("state inconsistent with partition");
    }
    detail::check_targets(gate.targets(), state.n_qubits());

    // Union of groups containing any target.
    std::vector<int> merged;
    std::vector<bool> affected(partition.groups().size(), false);
    for (std::size_t gi = 0; gi < partition.groups().size(); ++gi) {
        const auto& g = partition.groups()[gi];
        for (int t : gate.targets()) {
            if (std::find(g.qubits.begin(), g.qubits.end(), t) != g.qubits.end()) {
                affected[gi] = true;
            }
        }
        if (affected[gi]) merged.insert(merged.end(), g.qubits.begin(), g.qubits.end());
    }
    std::sort(merged.begin(), merged.end());

    EntanglementPartition out;
    out.n_qubits_ = partition.n_qubits();
    out.policy_ = partition.policy();
    for (std::size_t gi = 0; gi < partition.groups().size(); ++gi) {
        if (!affected[gi]) out.groups_.push_back(partition.groups()[gi]);
    }

    if (gate.arity() == 1) {
        // A local unitary cannot change the group structure.
        out.groups_.push_back(
            EntanglementPartition::make_group(state, merged, partition.policy(), sink));
    } else {
        const auto merged_amps = detail::extract_group_amplitudes(state, merged);
        for (auto& qubits :
             EntanglementPartition::split_factors(merged_amps, merged)) {
            out.groups_.push_back(
                EntanglementPartition::make_group(state, std::move(qubits), partition.policy(), sink));
        }
    }
    out.sort_groups();
    return out;
}

} // namespace cycleq
