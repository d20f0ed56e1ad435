// Statistical certification machinery: histograms of measurement outcomes,
// total-variation distance against analytic laws, and chi-square
// goodness-of-fit / two-sample tests with a survival function built on the
// regularized incomplete gamma function (series + continued fraction), so no
// external statistics dependency is needed.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace cycleq {

// Verdict threshold for every statistical test in the project. Suites run
// under fixed seeds, so verdicts are deterministic despite being statistical.
inline constexpr double kAlpha = 0.001;

// Cells with expected count below this are pooled before a chi-square test.
inline constexpr double kMinExpected = 5.0;

struct Histogram {
    std::map<std::uint64_t, std::uint64_t> counts;
    std::uint64_t total = 0;

    void add(std::uint64_t pattern, std::uint64_t n = 1) {
        counts[pattern] += n;
        total += n;
    }

    double frequency(std::uint64_t pattern) const {
        if (total == 0) return 0.0;
        const auto it = counts.find(pattern);
        return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
    }
};

struct GofReport {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    double alpha = kAlpha;
    bool pass = true;
};

namespace detail {

// Lower regularized incomplete gamma P(a, x) by power series; converges
// quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma Q(a, x) by modified Lentz continued
// fraction; converges quickly for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace detail

// Upper regularized incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
inline double regularized_gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0 || !std::isfinite(a)) {
        throw std::invalid_argument("regularized_gamma_q requires a > 0 and x >= 0");
    }
    if (x == 0.0) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

// P(chi2_dof >= stat); the p-value source for every test here.
inline double chi_square_survival(double statistic, int dof) {
    if (dof < 1) throw std::invalid_argument("chi-square dof must be positive");
    if (statistic <= 0.0) return 1.0;
    return regularized_gamma_q(0.5 * dof, 0.5 * statistic);
}

// Total variation distance between an empirical histogram and an analytic
// law: (1/2) sum |freq(i) - p(i)| over the union of supports. In [0, 1].
inline double total_variation(const Histogram& h, const std::map<std::uint64_t, double>& p) {
    if (h.total == 0) throw std::invalid_argument("total variation of an empty histogram");
    std::map<std::uint64_t, double> diff;
    for (const auto& [pattern, count] : h.counts) {
        diff[pattern] += static_cast<double>(count) / static_cast<double>(h.total);
    }
    for (const auto& [pattern, prob] : p) diff[pattern] -= prob;
    double tv = 0.0;
    for (const auto& [pattern, d] : diff) tv += std::abs(d);
    return 0.5 * tv;
}

namespace detail {

struct Cell {
    double observed;
    double expected;
};

// Pools cells with expected < kMinExpected into one (merged into the
// smallest retained cell if the pool itself stays under threshold). Pooling
// moves counts around, never drops them.
inline std::vector<Cell> pool_cells(std::vector<Cell> cells) {
    std::vector<Cell> kept;
    Cell pool{0.0, 0.0};
    bool pooled = false;
    for (const auto& c : cells) {
        if (c.expected < kMinExpected) {
            pool.observed += c.observed;
            pool.expected += c.expected;
            pooled = true;
        } else {
            kept.push_back(c);
        }
    }
    if (pooled) {
        if (pool.expected >= kMinExpected || kept.empty()) {
            kept.push_back(pool);
        } else {
            std::size_t smallest = 0;
            for (std::size_t i = 1; i < kept.size(); ++i) {
                if (kept[i].expected < kept[smallest].expected) smallest = i;
            }
            kept[smallest].observed += pool.observed;
            kept[smallest].expected += pool.expected;
        }
    }
    return kept;
}

inline GofReport pearson_report(const std::vector<Cell>& cells, int dof, double alpha) {
    GofReport report;
    report.dof = dof;
    report.alpha = alpha;
    for (const auto& c : cells) {
        const double d = c.observed - c.expected;
        report.statistic += d * d / c.expected;
    }
    report.p_value = chi_square_survival(report.statistic, dof);
    report.pass = report.p_value > alpha;
    return report;
}

} // namespace detail

// Pearson goodness-of-fit of an empirical histogram against an analytic law.
// Small-expectation cells are pooled; dof = retained cells - 1. Observations
// on zero-probability patterns fail outright (statistic diverges).
inline GofReport chi_square_gof(const Histogram& h, const std::map<std::uint64_t, double>& p,
                                double alpha = kAlpha) {
    if (h.total == 0) throw std::invalid_argument("goodness of fit on an empty histogram");

    const double n = static_cast<double>(h.total);
    std::map<std::uint64_t, detail::Cell> table;
    for (const auto& [pattern, prob] : p) table[pattern] = {0.0, prob * n};
    for (const auto& [pattern, count] : h.counts) {
        table[pattern].observed = static_cast<double>(count);
    }

    std::vector<detail::Cell> cells;
    for (const auto& [pattern, cell] : table) {
        if (cell.expected <= 0.0) {
            if (cell.observed > 0.0) {
                // impossible pattern observed
                return GofReport{std::numeric_limits<double>::infinity(),
                                 std::max(1, static_cast<int>(table.size()) - 1), 0.0, alpha,
                                 false};
            }
            continue;
        }
        cells.push_back(cell);
    }
    cells = detail::pool_cells(std::move(cells));
    if (cells.size() < 2) {
        throw std::invalid_argument("chi-square needs at least 2 cells after pooling");
    }
    return detail::pearson_report(cells, static_cast<int>(cells.size()) - 1, alpha);
}

// 2xK contingency test of homogeneity between two histograms (the
// engine-vs-engine comparison). dof = K - 1 after pooling.
inline GofReport two_sample_chi_square(const Histogram& a, const Histogram& b,
                                       double alpha = kAlpha) {
    if (a.total == 0 || b.total == 0) {
        throw std::invalid_argument("two-sample test on an empty histogram");
    }
    const double na = static_cast<double>(a.total);
    const double nb = static_cast<double>(b.total);
    const double n = na + nb;

    struct Column {
        double obs_a = 0.0;
        double obs_b = 0.0;
    };
    std::map<std::uint64_t, Column> columns;
    for (const auto& [pattern, count] : a.counts) columns[pattern].obs_a = static_cast<double>(count);
    for (const auto& [pattern, count] : b.counts) columns[pattern].obs_b = static_cast<double>(count);

    // Fold each column into two Pearson cells sharing the column's pooled
    // fate: pool by the smaller of the two expected counts.
    struct Pair {
        detail::Cell ca, cb;
        double min_expected;
    };
    std::vector<Pair> pairs;
    for (const auto& [pattern, col] : columns) {
        const double total = col.obs_a + col.obs_b;
        if (total <= 0.0) continue;
        const double ea = na * total / n;
        const double eb = nb * total / n;
        pairs.push_back({{col.obs_a, ea}, {col.obs_b, eb}, std::min(ea, eb)});
    }

    std::vector<Pair> kept;
    Pair pool{{0, 0}, {0, 0}, 0};
    bool pooled = false;
    for (const auto& p : pairs) {
        if (p.min_expected < kMinExpected) {
            pool.ca.observed += p.ca.observed;
            pool.ca.expected += p.ca.expected;
            pool.cb.observed += p.cb.observed;
            pool.cb.expected += p.cb.expected;
            pooled = true;
        } else {
            kept.push_back(p);
        }
    }
    if (pooled) {
        pool.min_expected = std::min(pool.ca.expected, pool.cb.expected);
        if (pool.min_expected >= kMinExpected || kept.empty()) {
            kept.push_back(pool);
        } else {
            std::size_t smallest = 0;
            for (std::size_t i = 1; i < kept.size(); ++i) {
                if (kept[i].min_expected < kept[smallest].min_expected) smallest = i;
            }
            kept[smallest].ca.observed += pool.ca.observed;
            kept[smallest].ca.expected += pool.ca.expected;
            kept[smallest].cb.observed += pool.cb.observed;
            kept[smallest].cb.expected += pool.cb.expected;
        }
    }
    if (kept.size() < 2) {
        throw std::invalid_argument("chi-square needs at least 2 cells after pooling");
    }

    std::vector<detail::Cell> cells;
    for (const auto& p : kept) {
        cells.push_back(p.ca);
        cells.push_back(p.cb);
    }
    return detail::pearson_report(cells, static_cast<int>(kept.size()) - 1, alpha);
}

} // namespace cycleq
