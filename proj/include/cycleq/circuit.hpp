// Line-oriented circuit description language (.cyq): one instruction per
// line, `#` comments, first significant line `qubits N`, angles in radians.
// The same parsed Circuit drives both engines.
//
//   qubits 3
//   h 0
//   ccx 0 1 2        # Toffoli
//   rotbasis 2 0.5235987755982988
//   measure_all

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cycleq/state.hpp"

namespace cycleq {

enum class Opcode { init, h, x, y, z, phase, rot, cx, ccx, rotbasis, measure, measure_all };

struct Instruction {
    Opcode op;
    std::vector<int> qubits;        // targets, in source order
    double angle = 0.0;             // phase, rot, rotbasis
    std::uint64_t init_pattern = 0; // init: basis index, MSB-first bits
    int line = 0;                   // 1-based source line
};

struct Circuit {
    int n_qubits = 0;
    std::vector<Instruction> instructions;
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

struct Diagnostic {
    enum class Severity { warning, error };

    Severity severity;
    int line;
    std::string message;
};

namespace detail {

inline int parse_index(std::string_view token, int line) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(token.begin(), token.end(), value);
    if (ec != std::errc{} || ptr != token.end()) {
        throw ParseError(line, "malformed number '" + std::string(token) + "'");
    }
    return value;
}

inline double parse_angle(std::string_view token, int line) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.begin(), token.end(), value);
    if (ec != std::errc{} || ptr != token.end() || !std::isfinite(value)) {
        throw ParseError(line, "malformed number '" + std::string(token) + "'");
    }
    return value;
}

inline std::vector<std::string_view> tokenize(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

inline void check_arity(const std::vector<std::string_view>& tokens, std::size_t expected,
                        int line) {
    if (tokens.size() - 1 != expected) {
        throw ParseError(line, "'" + std::string(tokens[0]) + "' takes " +
                                   std::to_string(expected) + " argument(s), got " +
                                   std::to_string(tokens.size() - 1));
    }
}

inline std::vector<int> parse_targets(const std::vector<std::string_view>& tokens,
                                      std::size_t count, int n_qubits, int line) {
    std::vector<int> qs;
    for (std::size_t i = 1; i <= count; ++i) {
        const int q = parse_index(tokens[i], line);
        if (q < 0 || q >= n_qubits) {
            throw ParseError(line, "qubit index " + std::to_string(q) + " out of range [0, " +
                                       std::to_string(n_qubits - 1) + "]");
        }
        for (int seen : qs) {
            if (seen == q) {
                throw ParseError(line, "duplicate qubit index " + std::to_string(q));
            }
        }
        qs.push_back(q);
    }
    return qs;
}

} // namespace detail

inline Circuit parse(const std::string& text) {
    Circuit circuit;
    bool have_header = false;

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view sv = raw;
        if (const auto hash = sv.find('#'); hash != std::string_view::npos) {
            sv = sv.substr(0, hash);
        }
        const auto tokens = detail::tokenize(sv);
        if (tokens.empty()) continue;

        if (!have_header) {
            if (tokens[0] != "qubits") {
                throw ParseError(line, "expected 'qubits N' header, got '" +
                                           std::string(tokens[0]) + "'");
            }
            detail::check_arity(tokens, 1, line);
            const int n = detail::parse_index(tokens[1], line);
            if (n < 1 || n > kMaxQubits) {
                throw ParseError(line, "qubit count must be in [1, " +
                                           std::to_string(kMaxQubits) + "]");
            }
            circuit.n_qubits = n;
            have_header = true;
            continue;
        }

        Instruction inst;
        inst.line = line;
        const std::string_view op = tokens[0];
        if (op == "init") {
            detail::check_arity(tokens, 1, line);
            if (!circuit.instructions.empty()) {
                throw ParseError(line, "'init' must be the first instruction and appear once");
            }
            const std::string_view bits = tokens[1];
            if (bits.size() != static_cast<std::size_t>(circuit.n_qubits)) {
                throw ParseError(line, "'init' pattern must have exactly " +
                                           std::to_string(circuit.n_qubits) + " bits");
            }
            inst.op = Opcode::init;
            for (char c : bits) {
                if (c != '0' && c != '1') {
                    throw ParseError(line, "'init' pattern must be binary");
                }
                inst.init_pattern = (inst.init_pattern << 1) | static_cast<std::uint64_t>(c - '0');
            }
        } else if (op == "h" || op == "x" || op == "y" || op == "z") {
            detail::check_arity(tokens, 1, line);
            inst.op = (op == "h")   ? Opcode::h
                      : (op == "x") ? Opcode::x
                      : (op == "y") ? Opcode::y
                                    : Opcode::z;
            inst.qubits = detail::parse_targets(tokens, 1, circuit.n_qubits, line);
        } else if (op == "phase" || op == "rot" || op == "rotbasis") {
            detail::check_arity(tokens, 2, line);
            inst.op = (op == "phase") ? Opcode::phase
                      : (op == "rot") ? Opcode::rot
                                      : Opcode::rotbasis;
            inst.qubits = detail::parse_targets(tokens, 1, circuit.n_qubits, line);
            inst.angle = detail::parse_angle(tokens[2], line);
        } else if (op == "cx") {
            detail::check_arity(tokens, 2, line);
            inst.op = Opcode::cx;
            inst.qubits = detail::parse_targets(tokens, 2, circuit.n_qubits, line);
        } else if (op == "ccx") {
            detail::check_arity(tokens, 3, line);
            inst.op = Opcode::ccx;
            inst.qubits = detail::parse_targets(tokens, 3, circuit.n_qubits, line);
        } else if (op == "measure") {
            if (tokens.size() < 2) {
                throw ParseError(line, "'measure' takes at least one qubit index");
            }
            inst.op = Opcode::measure;
            inst.qubits = detail::parse_targets(tokens, tokens.size() - 1, circuit.n_qubits, line);
        } else if (op == "measure_all") {
            detail::check_arity(tokens, 0, line);
            inst.op = Opcode::measure_all;
        } else {
            throw ParseError(line, "unknown opcode '" + std::string(op) + "'");
        }
        circuit.instructions.push_back(std::move(inst));
    }

    if (!have_header) throw ParseError(line == 0 ? 1 : line, "missing 'qubits N' header");
    return circuit;
}

// Canonical form: normalized whitespace, lowercase opcodes, angles printed
// with enough digits to round-trip exactly. parse(print(parse(t))) equals
// parse(t) for every valid t.
inline std::string print_circuit(const Circuit& circuit) {
    auto angle_text = [](double a) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", a);
        return std::string(buf);
    };

    std::string out = "qubits " + std::to_string(circuit.n_qubits) + "\n";
    for (const auto& inst : circuit.instructions) {
        switch (inst.op) {
        case Opcode::init:
            out += "init " + format_bits(inst.init_pattern, circuit.n_qubits);
            break;
        case Opcode::h: out += "h " + std::to_string(inst.qubits[0]); break;
        case Opcode::x: out += "x " + std::to_string(inst.qubits[0]); break;
        case Opcode::y: out += "y " + std::to_string(inst.qubits[0]); break;
        case Opcode::z: out += "z " + std::to_string(inst.qubits[0]); break;
        case Opcode::phase:
            out += "phase " + std::to_string(inst.qubits[0]) + " " + angle_text(inst.angle);
            break;
        case Opcode::rot:
            out += "rot " + std::to_string(inst.qubits[0]) + " " + angle_text(inst.angle);
            break;
        case Opcode::rotbasis:
            out += "rotbasis " + std::to_string(inst.qubits[0]) + " " + angle_text(inst.angle);
            break;
        case Opcode::cx:
            out += "cx " + std::to_string(inst.qubits[0]) + " " + std::to_string(inst.qubits[1]);
            break;
        case Opcode::ccx:
            out += "ccx " + std::to_string(inst.qubits[0]) + " " +
                   std::to_string(inst.qubits[1]) + " " + std::to_string(inst.qubits[2]);
            break;
        case Opcode::measure:
            out += "measure";
            for (int q : inst.qubits) out += " " + std::to_string(q);
            break;
        case Opcode::measure_all: out += "measure_all"; break;
        }
        out += "\n";
    }
    return out;
}

// Semantic lint: diagnostics are data, an empty list means clean. Checks for
// qubits no instruction touches and for re-measuring a qubit with no gate in
// between (the second read is redundant by collapse idempotence).
inline std::vector<Diagnostic> validate(const Circuit& circuit) {
    std::vector<Diagnostic> out;
    std::vector<bool> used(static_cast<std::size_t>(circuit.n_qubits), false);
    std::vector<bool> pending_measure(static_cast<std::size_t>(circuit.n_qubits), false);

    auto note_measure = [&](int q, int line) {
        if (pending_measure[static_cast<std::size_t>(q)]) {
            out.push_back({Diagnostic::Severity::warning, line,
                           "qubit " + std::to_string(q) +
                               " re-measured with no intervening gate"});
        }
        pending_measure[static_cast<std::size_t>(q)] = true;
        used[static_cast<std::size_t>(q)] = true;
    };

    for (const auto& inst : circuit.instructions) {
        switch (inst.op) {
        case Opcode::init:
            break; // initialization touches the register, not a specific qubit
        case Opcode::measure:
            for (int q : inst.qubits) note_measure(q, inst.line);
            break;
        case Opcode::measure_all:
            for (int q = 0; q < circuit.n_qubits; ++q) note_measure(q, inst.line);
            break;
        case Opcode::rotbasis:
            // Changes how a later measure reads the qubit, not the state —
            // a following measure is a genuinely new reading, not redundant.
            used[static_cast<std::size_t>(inst.qubits[0])] = true;
            pending_measure[static_cast<std::size_t>(inst.qubits[0])] = false;
            break;
        default:
            for (int q : inst.qubits) {
                used[static_cast<std::size_t>(q)] = true;
                pending_measure[static_cast<std::size_t>(q)] = false;
            }
            break;
        }
    }

    for (int q = 0; q < circuit.n_qubits; ++q) {
        if (!used[static_cast<std::size_t>(q)]) {
            out.push_back({Diagnostic::Severity::warning, 1,
                           "qubit " + std::to_string(q) + " is never used"});
        }
    }
    return out;
}

} // namespace cycleq
