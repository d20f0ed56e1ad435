#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include <cycleq/measurement.hpp>
#include <cycleq/random.hpp>
#include <cycleq/schedule.hpp>
#include <cycleq/state.hpp>

namespace cycleq {
namespace {

StateVector bell_psi1() {
    StateVector s(2);
    s = apply_gate(s, Gate::h(0));
    return apply_gate(s, Gate::cnot(0, 1));
}

// Teleportation state psi2 for arbitrary (alpha, beta): qubit 0 and 1 are
// measured jointly, qubit 2 is Bob's.
StateVector teleport_psi2(Amplitude alpha, Amplitude beta) {
    const double r = 1.0 / std::sqrt(2.0);
    const StateVector phi = StateVector::from_amplitudes(1, {alpha, beta});
    const StateVector chi = StateVector::from_amplitudes(
        2, {Amplitude{0, 0}, Amplitude{r, 0}, Amplitude{-r, 0}, Amplitude{0, 0}});
    StateVector s = tensor(phi, chi);
    s = apply_gate(s, Gate::cnot(0, 1));
    return apply_gate(s, Gate::h(0));
}

TEST(ScheduleMeasure, SingleBasisStateIsDeterministic) {
    const StateVector s(1, 0);
    const auto part = EntanglementPartition::from_state(s);
    MeasurementSpec spec;
    spec.qubits = {0};
    for (std::uint64_t shot = 0; shot < 100; ++shot) {
        RandomSource rng(1, shot);
        const auto r = schedule_measure(part, s, spec, rng);
        ASSERT_EQ(r.outcome, 0u);
        ASSERT_DOUBLE_EQ(r.post_state.probability(0), 1.0);
    }
}

TEST(ScheduleMeasure, BellPairCollapsesToEqualSpins) {
    const StateVector s = bell_psi1();
    const auto part = EntanglementPartition::from_state(s);
    MeasurementSpec spec;
    spec.qubits = {0, 1};

    std::map<std::uint64_t, int> counts;
    constexpr int kShots = 2000;
    for (std::uint64_t shot = 0; shot < kShots; ++shot) {
        RandomSource rng(42, shot);
        const auto r = schedule_measure(part, s, spec, rng);
        ASSERT_TRUE(r.outcome == 0b00 || r.outcome == 0b11) << r.outcome;
        counts[r.outcome]++;
        // the post state is the matching basis state
        ASSERT_NEAR(r.post_state.probability(r.outcome), 1.0, 1e-12);
    }
    EXPECT_GT(counts[0b00], 0);
    EXPECT_GT(counts[0b11], 0);
}

TEST(ScheduleMeasure, MeasuredQubitsBecomeSingletonGroups) {
    const StateVector s = bell_psi1();
    const auto part = EntanglementPartition::from_state(s);
    ASSERT_EQ(part.groups().size(), 1u);
    MeasurementSpec spec;
    spec.qubits = {0, 1};
    RandomSource rng(7, 0);
    const auto r = schedule_measure(part, s, spec, rng);
    ASSERT_EQ(r.post_partition.groups().size(), 2u);
    for (int q = 0; q < 2; ++q) {
        const auto& g = r.post_partition.group_of(q);
        ASSERT_EQ(g.schedule.segments().size(), 1u);
        EXPECT_DOUBLE_EQ(g.schedule.segments()[0].dwell, 1.0);
    }
}

// Subset measurement on an entangled group: the unmeasured members collapse
// consistently and instantaneously to the conditional state.
TEST(ScheduleMeasure, SubsetCollapseMatchesTheOracleConditional) {
    // (|000> + |011> + |110>)/sqrt(3): measuring qubit 0 leaves either a
    // Bell pair (outcome 0) or a definite |10> (outcome 1) on qubits 1,2.
    const double r3 = 1.0 / std::sqrt(3.0);
    const StateVector s = StateVector::from_amplitudes(
        3, {Amplitude{r3, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{r3, 0},
            Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{r3, 0}, Amplitude{0, 0}});
    const auto part = EntanglementPartition::from_state(s);
    ASSERT_EQ(part.groups().size(), 1u);

    MeasurementSpec spec;
    spec.qubits = {0};
    bool saw_zero = false;
    bool saw_one = false;
    for (std::uint64_t shot = 0; shot < 64; ++shot) {
        RandomSource rng(13, shot);
        const auto r = schedule_measure(part, s, spec, rng);
        const StateVector conditional = project_onto(s, {0}, r.outcome);
        for (std::uint64_t i = 0; i < s.dim(); ++i) {
            ASSERT_LE(std::abs(r.post_state.amp(i) - conditional.amp(i)), 1e-12);
        }
        if (r.outcome == 0) {
            saw_zero = true;
            // Bell pair stays one synchronized group
            ASSERT_EQ(r.post_partition.group_of(1).qubits, (std::vector<int>{1, 2}));
        } else {
            saw_one = true;
            ASSERT_EQ(r.post_partition.group_of(1).qubits, std::vector<int>{1});
        }
    }
    EXPECT_TRUE(saw_zero);
    EXPECT_TRUE(saw_one);
}

// Outcome 00 on the teleportation measurement leaves Bob's qubit in
// alpha|1> - beta|0>, exactly as the outcome table states.
TEST(ScheduleMeasure, TeleportOutcome00LeavesTheMappedState) {
    const Amplitude alpha{0.6, 0.0};
    const Amplitude beta{0.48, 0.64};
    const StateVector psi2 = teleport_psi2(alpha, beta);
    const auto part = EntanglementPartition::from_state(psi2);
    MeasurementSpec spec;
    spec.qubits = {0, 1};

    bool found = false;
    for (std::uint64_t shot = 0; shot < 64 && !found; ++shot) {
        RandomSource rng(21, shot);
        const auto r = schedule_measure(part, psi2, spec, rng);
        if (r.outcome != 0b00) continue;
        found = true;
        EXPECT_LE(std::abs(r.post_state.amp(0b000) - (-beta)), 1e-12);
        EXPECT_LE(std::abs(r.post_state.amp(0b001) - alpha), 1e-12);
    }
    ASSERT_TRUE(found) << "outcome 00 never sampled";
}

TEST(ScheduleMeasure, CollapseIsIdempotent) {
    const StateVector s = bell_psi1();
    const auto part = EntanglementPartition::from_state(s);
    MeasurementSpec spec;
    spec.qubits = {0, 1};
    for (std::uint64_t shot = 0; shot < 300; ++shot) {
        RandomSource rng(5, shot);
        const auto first = schedule_measure(part, s, spec, rng);
        const auto second =
            schedule_measure(first.post_partition, first.post_state, spec, rng);
        ASSERT_EQ(first.outcome, second.outcome);
    }
}

TEST(ScheduleMeasure, RotatedCollapseIsIdempotent) {
    const StateVector plus = apply_gate(StateVector(1), Gate::h(0));
    const auto part = EntanglementPartition::from_state(plus);
    MeasurementSpec spec;
    spec.qubits = {0};
    spec.rotations = {BasisRotation{0, 0.5235987755982988}};
    for (std::uint64_t shot = 0; shot < 300; ++shot) {
        RandomSource rng(6, shot);
        const auto first = schedule_measure(part, plus, spec, rng);
        const auto second =
            schedule_measure(first.post_partition, first.post_state, spec, rng);
        ASSERT_EQ(first.outcome, second.outcome);
    }
}

// Two unentangled qubits have independent cycles: their outcomes must be
// uncorrelated, which requires one sampling instant per group.
TEST(ScheduleMeasure, IndependentGroupsSampleIndependentInstants) {
    StateVector s(2);
    s = apply_gate(s, Gate::h(0));
    s = apply_gate(s, Gate::h(1));
    const auto part = EntanglementPartition::from_state(s);
    ASSERT_EQ(part.groups().size(), 2u);

    MeasurementSpec spec;
    spec.qubits = {0, 1};
    constexpr std::uint64_t kShots = 20000;
    std::uint64_t agree = 0;
    for (std::uint64_t shot = 0; shot < kShots; ++shot) {
        RandomSource rng(42, shot);
        const auto r = schedule_measure(part, s, spec, rng);
        const int b0 = static_cast<int>((r.outcome >> 1) & 1u);
        const int b1 = static_cast<int>(r.outcome & 1u);
        if (b0 == b1) ++agree;
    }
    const double rate = static_cast<double>(agree) / kShots;
    EXPECT_NEAR(rate, 0.5, 5.0 * std::sqrt(0.25 / kShots));
}

TEST(ScheduleMeasure, AnalyticDistributionMatchesBornUnderRotation) {
    const Amplitude a{0.6, 0.0};
    const Amplitude b{0.48, 0.64};
    const StateVector s = StateVector::from_amplitudes(1, {a, b});
    const double theta = 1.1;

    MeasurementSpec spec;
    spec.qubits = {0};
    spec.rotations = {BasisRotation{0, theta}};
    const auto dist =
        schedule_outcome_distribution(EntanglementPartition::from_state(s), spec);

    const StateVector rotated = apply_gate(s, Gate::rot(0, theta));
    ASSERT_LE(std::abs(dist.at(0) - rotated.probability(0)), 1e-12);
    ASSERT_LE(std::abs(dist.at(1) - rotated.probability(1)), 1e-12);
}

TEST(ScheduleMeasure, JointDistributionSpansGroups) {
    // qubit 0: |+>, qubit 1: definite |1> -> joint law {01: 1/2, 11: 1/2}
    StateVector s(2, 0b01);
    s = apply_gate(s, Gate::h(0));
    MeasurementSpec spec;
    spec.qubits = {0, 1};
    const auto dist =
        schedule_outcome_distribution(EntanglementPartition::from_state(s), spec);
    ASSERT_EQ(dist.size(), 2u);
    EXPECT_NEAR(dist.at(0b01), 0.5, 1e-12);
    EXPECT_NEAR(dist.at(0b11), 0.5, 1e-12);
}

TEST(ScheduleMeasure, RejectsDuplicateQubitsAndWrongMode) {
    const StateVector s = bell_psi1();
    const auto part = EntanglementPartition::from_state(s);
    RandomSource rng(1, 1);
    MeasurementSpec dup;
    dup.qubits = {0, 0};
    EXPECT_THROW(schedule_measure(part, s, dup, rng), std::invalid_argument);

    MeasurementSpec wrong_mode;
    wrong_mode.qubits = {0};
    wrong_mode.mode = MeasureMode::exclusive_axis;
    EXPECT_THROW(schedule_measure(part, s, wrong_mode, rng), std::invalid_argument);
}

TEST(ProjectRotated, ZeroAngleMatchesPlainProjection) {
    const StateVector s = bell_psi1();
    const StateVector a = project_rotated(s, {0}, {0.0}, 1);
    const StateVector b = project_onto(s, {0}, 1);
    for (std::uint64_t i = 0; i < s.dim(); ++i) {
        ASSERT_EQ(a.amp(i), b.amp(i));
    }
}

TEST(ProjectRotated, MatchesTheGateRoute) {
    const Amplitude a{0.6, 0.0};
    const Amplitude b{0.48, 0.64};
    const StateVector s = StateVector::from_amplitudes(1, {a, b});
    const double theta = 0.9;

    const StateVector direct = project_rotated(s, {0}, {theta}, 0);
    // gate route: rotate, project computationally, rotate back
    StateVector via_gate = apply_gate(s, Gate::rot(0, theta));
    via_gate = project_onto(via_gate, {0}, 0);
    via_gate = apply_gate(via_gate, Gate::rot(0, -theta));
    for (std::uint64_t i = 0; i < s.dim(); ++i) {
        ASSERT_LE(std::abs(direct.amp(i) - via_gate.amp(i)), 1e-12);
    }
}

// ---------------------------------------------------------------------------
// Exclusive-axis pair model
// ---------------------------------------------------------------------------

TEST(AxisExclusivePair, FourEqualSegments) {
    const AxisExclusivePair pair;
    ASSERT_EQ(pair.segments().size(), 4u);
    for (const auto& seg : pair.segments()) {
        EXPECT_DOUBLE_EQ(seg.dwell, 0.25);
        EXPECT_TRUE(seg.joint == 0b00 || seg.joint == 0b11);
    }
}

TEST(AxisExclusivePair, RequiresExclusiveAxisMode) {
    AxisExclusivePair pair;
    RandomSource rng(1, 0);
    EXPECT_THROW(pair.measure(Axis::x, MeasureMode::standard, rng), std::invalid_argument);
}

TEST(AxisExclusivePair, NonNullFractionIsOneHalf) {
    constexpr std::uint64_t kShots = 100000;
    std::uint64_t non_null = 0;
    for (std::uint64_t shot = 0; shot < kShots; ++shot) {
        RandomSource rng(42, shot);
        AxisExclusivePair pair;
        const auto r = pair.measure(Axis::x, MeasureMode::exclusive_axis, rng);
        if (!r.is_null) {
            ++non_null;
            ASSERT_TRUE(r.outcome == 0b00 || r.outcome == 0b11);
        }
    }
    EXPECT_NEAR(static_cast<double>(non_null) / kShots, 0.5, 0.008);
}

TEST(AxisExclusivePair, CrossAxisProbeAfterCollapseIsAlwaysNull) {
    std::uint64_t collapsed = 0;
    for (std::uint64_t shot = 0; shot < 100000; ++shot) {
        RandomSource rng(43, shot);
        AxisExclusivePair pair;
        const auto x = pair.measure(Axis::x, MeasureMode::exclusive_axis, rng);
        if (x.is_null) continue;
        ++collapsed;
        const auto y = pair.measure(Axis::y, MeasureMode::exclusive_axis, rng);
        ASSERT_TRUE(y.is_null);
    }
    EXPECT_GT(collapsed, 0u);
}

TEST(AxisExclusivePair, SameAxisProbeRepeatsTheOutcome) {
    for (std::uint64_t shot = 0; shot < 1000; ++shot) {
        RandomSource rng(44, shot);
        AxisExclusivePair pair;
        const auto first = pair.measure(Axis::y, MeasureMode::exclusive_axis, rng);
        if (first.is_null) continue;
        const auto again = pair.measure(Axis::y, MeasureMode::exclusive_axis, rng);
        ASSERT_FALSE(again.is_null);
        ASSERT_EQ(again.outcome, first.outcome);
    }
}

TEST(AxisExclusivePair, NullResultLeavesThePairUncollapsed) {
    for (std::uint64_t shot = 0; shot < 1000; ++shot) {
        RandomSource rng(45, shot);
        AxisExclusivePair pair;
        const auto first = pair.measure(Axis::x, MeasureMode::exclusive_axis, rng);
        if (!first.is_null) continue;
        ASSERT_FALSE(pair.collapsed());
        // a later probe can still collapse it on either axis
        const auto second = pair.measure(Axis::y, MeasureMode::exclusive_axis, rng);
        (void)second;
    }
}

} // namespace
} // namespace cycleq
