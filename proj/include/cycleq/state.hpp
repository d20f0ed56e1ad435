// Complex state vectors, gate application, and reference measurement
// semantics. This is the ground-truth engine the schedule model is checked
// against.
//
// Conventions: qubit 0 is the leftmost label in ket notation, i.e. the most
// significant bit of a basis index, and bit patterns print most-significant
// first (|q0 q1 q2>).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cycleq/random.hpp"

namespace cycleq {

using Amplitude = std::complex<double>;

inline constexpr double kNormTol = 1e-12;    // norms, probability sums
inline constexpr double kUnitaryTol = 1e-10; // unitarity, round-trip identities
inline constexpr int kMaxQubits = 20;

inline bool amplitude_finite(const Amplitude& a) {
    return std::isfinite(a.real()) && std::isfinite(a.imag());
}

// Bit of `index` belonging to `qubit` under the MSB-first labeling.
inline int bit_of(std::uint64_t index, int qubit, int n_qubits) {
    return static_cast<int>((index >> (n_qubits - 1 - qubit)) & 1u);
}

inline std::string format_bits(std::uint64_t pattern, int width) {
    std::string s(static_cast<std::size_t>(width), '0');
    for (int i = 0; i < width; ++i) {
        if ((pattern >> (width - 1 - i)) & 1u) s[static_cast<std::size_t>(i)] = '1';
    }
    return s;
}

class StateVector {
public:
    explicit StateVector(int n_qubits) : StateVector(n_qubits, 0) {}

    StateVector(int n_qubits, std::uint64_t basis_index)
        : n_qubits_(check_width(n_qubits)),
          amps_(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0}) {
        if (basis_index >= amps_.size()) {
            throw std::out_of_range("basis index out of range");
        }
        amps_[basis_index] = Amplitude{1.0, 0.0};
    }

    static StateVector from_amplitudes(int n_qubits, std::vector<Amplitude> amps) {
        StateVector s(check_width(n_qubits), 0);
        if (amps.size() != (std::size_t{1} << n_qubits)) {
            throw std::invalid_argument("amplitude vector has wrong length");
        }
        for (const auto& a : amps) {
            if (!amplitude_finite(a)) {
                throw std::invalid_argument("amplitude is not finite");
            }
        }
        s.amps_ = std::move(amps);
        const double n2 = s.norm_sq();
        if (std::abs(n2 - 1.0) > kNormTol) {
            throw std::invalid_argument("state vector is not normalized");
        }
        return s;
    }

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }

    const Amplitude& amp(std::uint64_t i) const { return amps_[i]; }
    const std::vector<Amplitude>& amplitudes() const { return amps_; }

    double probability(std::uint64_t i) const { return std::norm(amps_[i]); }

    // Direct summation, no pairwise tricks: tests freeze against this.
    double norm_sq() const {
        double total = 0.0;
        for (const auto& a : amps_) total += std::norm(a);
        return total;
    }

    Amplitude inner_product(const StateVector& other) const {
        if (other.n_qubits_ != n_qubits_) {
            throw std::invalid_argument("qubit count mismatch");
        }
        Amplitude acc{0.0, 0.0};
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            acc += std::conj(amps_[i]) * other.amps_[i];
        }
        return acc;
    }

    // |<a|b>|^2; global-phase insensitive equality measure.
    double fidelity(const StateVector& other) const {
        return std::norm(inner_product(other));
    }

private:
    friend StateVector apply_local_matrix(const StateVector&, const std::vector<int>&,
                                          const std::vector<Amplitude>&);
    friend StateVector tensor(const StateVector&, const StateVector&);
    friend StateVector project_onto(const StateVector&, const std::vector<int>&,
                                    std::uint64_t);

    static int check_width(int n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("qubit count must be in [1, 20]");
        }
        return n_qubits;
    }

    int n_qubits_;
    std::vector<Amplitude> amps_;
};

enum class GateKind { X, Y, Z, H, Phase, Rot, CNOT, Toffoli, Custom };

// A gate is a small unitary plus the qubits it acts on; targets[0] is the
// most significant bit of the local basis index.
class Gate {
public:
    static Gate x(int q) { return Gate(GateKind::X, {q}, 0.0, {{0, 0}, {1, 0}, {1, 0}, {0, 0}}); }

    static Gate y(int q) {
        return Gate(GateKind::Y, {q}, 0.0, {{0, 0}, {0, -1}, {0, 1}, {0, 0}});
    }

    static Gate z(int q) { return Gate(GateKind::Z, {q}, 0.0, {{1, 0}, {0, 0}, {0, 0}, {-1, 0}}); }

    static Gate h(int q) {
        const double r = 1.0 / std::sqrt(2.0);
        return Gate(GateKind::H, {q}, 0.0, {{r, 0}, {r, 0}, {r, 0}, {-r, 0}});
    }

    static Gate phase(int q, double phi) {
        require_finite_angle(phi);
        return Gate(GateKind::Phase, {q}, phi,
                    {{1, 0}, {0, 0}, {0, 0}, std::polar(1.0, phi)});
    }

    // Real plane rotation [[cos t, -sin t], [sin t, cos t]]. Applying it to a
    // state expresses the amplitudes in the basis obtained by rotating
    // {|0>, |1>} by t, so rot(t) followed by a computational measurement is
    // the gate route to a rotated-basis measurement.
    static Gate rot(int q, double theta) {
        require_finite_angle(theta);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        return Gate(GateKind::Rot, {q}, theta, {{c, 0}, {-s, 0}, {s, 0}, {c, 0}});
    }

    static Gate cnot(int control, int target) {
        std::vector<Amplitude> m(16, Amplitude{0, 0});
        m[0 * 4 + 0] = 1;
        m[1 * 4 + 1] = 1;
        m[2 * 4 + 3] = 1;
        m[3 * 4 + 2] = 1;
        return Gate(GateKind::CNOT, {control, target}, 0.0, std::move(m));
    }

    static Gate toffoli(int control_a, int control_b, int target) {
        std::vector<Amplitude> m(64, Amplitude{0, 0});
        for (std::uint64_t i = 0; i < 8; ++i) {
            const std::uint64_t j = (i == 6) ? 7 : (i == 7) ? 6 : i;
            m[i * 8 + j] = 1;
        }
        return Gate(GateKind::Toffoli, {control_a, control_b, target}, 0.0, std::move(m));
    }

    static Gate custom(std::vector<int> targets, std::vector<Amplitude> unitary) {
        const std::size_t dim = std::size_t{1} << targets.size();
        if (unitary.size() != dim * dim) {
            throw std::invalid_argument("custom gate matrix has wrong shape");
        }
        if (unitarity_defect(unitary, dim) > kUnitaryTol) {
            throw std::invalid_argument("custom gate matrix is not unitary");
        }
        return Gate(GateKind::Custom, std::move(targets), 0.0, std::move(unitary));
    }

    GateKind kind() const { return kind_; }
    const std::vector<int>& targets() const { return targets_; }
    int arity() const { return static_cast<int>(targets_.size()); }
    double angle() const { return angle_; }
    const std::vector<Amplitude>& matrix() const { return matrix_; }

    Gate adjoint() const {
        const std::size_t dim = std::size_t{1} << targets_.size();
        std::vector<Amplitude> m(dim * dim);
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                m[r * dim + c] = std::conj(matrix_[c * dim + r]);
            }
        }
        return Gate(GateKind::Custom, targets_, 0.0, std::move(m));
    }

    // max |(U^dag U - I)_ij|
    static double unitarity_defect(const std::vector<Amplitude>& m, std::size_t dim) {
        double worst = 0.0;
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                Amplitude acc{0, 0};
                for (std::size_t k = 0; k < dim; ++k) {
                    acc += std::conj(m[k * dim + r]) * m[k * dim + c];
                }
                if (r == c) acc -= 1.0;
                worst = std::max(worst, std::abs(acc));
            }
        }
        return worst;
    }

private:
    Gate(GateKind kind, std::vector<int> targets, double angle, std::vector<Amplitude> matrix)
        : kind_(kind), targets_(std::move(targets)), angle_(angle), matrix_(std::move(matrix)) {}

    static void require_finite_angle(double a) {
        if (!std::isfinite(a)) throw std::invalid_argument("gate angle is not finite");
    }

    GateKind kind_;
    std::vector<int> targets_;
    double angle_;
    std::vector<Amplitude> matrix_; // row-major, 2^arity x 2^arity
};

namespace detail {

inline void check_targets(const std::vector<int>& targets, int n_qubits) {
    if (targets.empty()) throw std::invalid_argument("no target qubits");
    for (int t : targets) {
        if (t < 0 || t >= n_qubits) throw std::out_of_range("target qubit out of range");
    }
    std::vector<int> sorted = targets;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("target qubits must be distinct");
    }
}

// Spread a local pattern over the global bit positions of `targets`.
inline std::uint64_t scatter_pattern(std::uint64_t local, const std::vector<int>& targets,
                                     int n_qubits) {
    std::uint64_t out = 0;
    const int k = static_cast<int>(targets.size());
    for (int t = 0; t < k; ++t) {
        if ((local >> (k - 1 - t)) & 1u) {
            out |= std::uint64_t{1} << (n_qubits - 1 - targets[t]);
        }
    }
    return out;
}

inline std::uint64_t gather_pattern(std::uint64_t index, const std::vector<int>& targets,
                                    int n_qubits) {
    std::uint64_t out = 0;
    const int k = static_cast<int>(targets.size());
    for (int t = 0; t < k; ++t) {
        out = (out << 1) | static_cast<std::uint64_t>(bit_of(index, targets[t], n_qubits));
    }
    return out;
}

} // namespace detail

// Applies an arbitrary local matrix (not necessarily unitary; projectors use
// this too) to the listed qubits.
inline StateVector apply_local_matrix(const StateVector& state, const std::vector<int>& targets,
                                      const std::vector<Amplitude>& matrix) {
    detail::check_targets(targets, state.n_qubits());
    const int n = state.n_qubits();
    const int k = static_cast<int>(targets.size());
    const std::size_t m = std::size_t{1} << k;
    if (matrix.size() != m * m) throw std::invalid_argument("local matrix has wrong shape");

    std::uint64_t target_mask = 0;
    for (int t : targets) target_mask |= std::uint64_t{1} << (n - 1 - t);

    std::vector<std::uint64_t> offsets(m);
    for (std::uint64_t j = 0; j < m; ++j) {
        offsets[j] = detail::scatter_pattern(j, targets, n);
    }

    StateVector out = state;
    std::vector<Amplitude> sub(m);
    for (std::uint64_t base = 0; base < state.dim(); ++base) {
        if (base & target_mask) continue;
        for (std::uint64_t j = 0; j < m; ++j) sub[j] = state.amps_[base | offsets[j]];
        for (std::uint64_t i = 0; i < m; ++i) {
            Amplitude acc{0, 0};
            for (std::uint64_t j = 0; j < m; ++j) acc += matrix[i * m + j] * sub[j];
            out.amps_[base | offsets[i]] = acc;
        }
    }
    return out;
}

// U|psi> for the embedded unitary of `gate`.
inline StateVector apply_gate(const StateVector& state, const Gate& gate) {
    return apply_local_matrix(state, gate.targets(), gate.matrix());
}

inline StateVector tensor(const StateVector& a, const StateVector& b) {
    if (a.n_qubits() + b.n_qubits() > kMaxQubits) {
        throw std::invalid_argument("tensor product exceeds qubit cap");
    }
    StateVector out(a.n_qubits() + b.n_qubits(), 0);
    out.amps_[0] = Amplitude{0, 0};
    for (std::size_t i = 0; i < a.dim(); ++i) {
        for (std::size_t j = 0; j < b.dim(); ++j) {
            out.amps_[(i << b.n_qubits()) | j] = a.amp(i) * b.amp(j);
        }
    }
    return out;
}

// Born probabilities of the joint pattern of `qubits` (listed order, MSB
// first). For the full register this is exactly std::norm of each amplitude.
inline std::map<std::uint64_t, double> born_distribution(const StateVector& state,
                                                         const std::vector<int>& qubits) {
    detail::check_targets(qubits, state.n_qubits());
    std::map<std::uint64_t, double> dist;
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
        const double p = state.probability(i);
        if (p > 0.0) dist[detail::gather_pattern(i, qubits, state.n_qubits())] += p;
    }
    return dist;
}

inline std::map<std::uint64_t, double> born_distribution(const StateVector& state) {
    std::vector<int> all(static_cast<std::size_t>(state.n_qubits()));
    for (int q = 0; q < state.n_qubits(); ++q) all[static_cast<std::size_t>(q)] = q;
    return born_distribution(state, all);
}

// Renormalized projection onto `pattern` over `qubits`. Throws if the
// projection is (numerically) zero; sampling never requests such a pattern.
inline StateVector project_onto(const StateVector& state, const std::vector<int>& qubits,
                                std::uint64_t pattern) {
    detail::check_targets(qubits, state.n_qubits());
    StateVector out = state;
    double kept = 0.0;
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
        if (detail::gather_pattern(i, qubits, state.n_qubits()) == pattern) {
            kept += std::norm(out.amps_[i]);
        } else {
            out.amps_[i] = Amplitude{0, 0};
        }
    }
    if (kept <= 0.0) {
        throw std::logic_error("projection onto a zero-probability outcome");
    }
    const double scale = 1.0 / std::sqrt(kept);
    for (auto& a : out.amps_) a *= scale;
    return out;
}

struct OracleMeasureResult {
    std::uint64_t outcome; // pattern over the measured qubits, MSB first
    StateVector post;
};

// Projective measurement in the computational basis: outcome m is drawn with
// probability p(m) = <psi|P_m|psi> and the post state is the renormalized
// projection.
inline OracleMeasureResult oracle_measure(const StateVector& state,
                                          const std::vector<int>& qubits, RandomSource& rng) {
    const auto dist = born_distribution(state, qubits);
    const double u = rng.next_uniform();
    double cum = 0.0;
    std::uint64_t outcome = dist.rbegin()->first;
    for (const auto& [pattern, p] : dist) {
        cum += p;
        if (u < cum) {
            outcome = pattern;
            break;
        }
    }
    return OracleMeasureResult{outcome, project_onto(state, qubits, outcome)};
}

} // namespace cycleq
