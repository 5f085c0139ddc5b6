#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "latdiag/error.hpp"
#include "latdiag/special.hpp"

namespace latdiag::stats {

// Values of two conditions aligned by label (matched seeds).
struct PairedSample {
    std::vector<std::string> labels;
    std::vector<double> a;
    std::vector<double> b;
};

struct TestResult {
    double mean_diff = 0.0;
    double t_stat = 0.0;
    std::size_t df = 0;
    double p_two_sided = 1.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool infinite_t = false; // zero-variance differences with nonzero mean
};

// Mean and sample standard deviation (n-1 denominator).
inline std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.size() < 2) throw NumericError("mean_std: need at least 2 values");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

// One-sample t-test of `values` against zero. Zero-variance input yields a
// flagged infinite t (p = 0) for a nonzero mean, and t = 0, p = 1 otherwise.
inline TestResult one_sample_t(const std::vector<double>& values) {
    const auto [mean, sd] = mean_std(values);
    const double n = static_cast<double>(values.size());
    TestResult r;
    r.mean_diff = mean;
    r.df = values.size() - 1;
    if (sd == 0.0) {
        r.ci_lo = r.ci_hi = mean;
        if (mean == 0.0) {
            r.t_stat = 0.0;
            r.p_two_sided = 1.0;
        } else {
            r.t_stat = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
            r.p_two_sided = 0.0;
            r.infinite_t = true;
        }
        return r;
    }
    const double se = sd / std::sqrt(n);
    r.t_stat = mean / se;
    r.p_two_sided = special::student_t_two_sided_p(r.t_stat, static_cast<double>(r.df));
    const double tq = special::student_t_quantile(0.975, static_cast<double>(r.df));
    r.ci_lo = mean - tq * se;
    r.ci_hi = mean + tq * se;
    return r;
}

// Paired t-test on a - b.
inline TestResult paired_t(const PairedSample& sample) {
    if (sample.a.size() != sample.b.size() ||
        (!sample.labels.empty() && sample.labels.size() != sample.a.size())) {
        throw NumericError("paired_t: length mismatch");
    }
    if (sample.a.size() < 2) throw NumericError("paired_t: need at least 2 pairs");
    if (!sample.labels.empty()) {
        std::set<std::string> seen(sample.labels.begin(), sample.labels.end());
        if (seen.size() != sample.labels.size()) {
            throw DataError("paired_t: duplicate labels");
        }
    }
    std::vector<double> d(sample.a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = sample.a[i] - sample.b[i];
    return one_sample_t(d);
}

// Holm-Bonferroni step-down adjustment; output in input order.
inline std::vector<double> holm_bonferroni(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    for (double p : p_values) {
        if (!(p >= 0.0) || !(p <= 1.0)) {
            throw NumericError("holm_bonferroni: p-values must lie in [0, 1]");
        }
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (p_values[i] != p_values[j]) return p_values[i] < p_values[j];
        return i < j;
    });
    std::vector<double> adjusted(m, 0.0);
    double running = 0.0;
    for (std::size_t rank = 0; rank < m; ++rank) {
        const double candidate =
            static_cast<double>(m - rank) * p_values[order[rank]];
        running = std::max(running, candidate);
        adjusted[order[rank]] = std::min(1.0, running);
    }
    return adjusted;
}

// Per-seed reward for one cell of a 2x2 design.
struct FactorialCell {
    std::string seed;
    int level_a = 0;
    int level_b = 0;
    double value = 0.0;
};

struct FactorialTable {
    std::vector<FactorialCell> rows;
};

struct FactorialEffects {
    TestResult effect_a;
    TestResult effect_b;
    TestResult interaction;
};

// Main effects and interaction of a complete 2x2 within-seed design. The
// interaction contrast is the plain double difference v11 - v10 - v01 + v00.
inline FactorialEffects factorial_effects(const FactorialTable& table) {
    struct Cells {
        double v[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        bool seen[2][2] = {{false, false}, {false, false}};
    };
    std::map<std::string, Cells> by_seed;
    std::vector<std::string> seed_order;
    for (const auto& row : table.rows) {
        if ((row.level_a != 0 && row.level_a != 1) ||
            (row.level_b != 0 && row.level_b != 1)) {
            throw DataError("factorial: levels must be 0 or 1 (seed \"" + row.seed + "\")");
        }
        if (!std::isfinite(row.value)) {
            throw DataError("factorial: non-finite value (seed \"" + row.seed + "\")");
        }
        auto it = by_seed.find(row.seed);
        if (it == by_seed.end()) {
            it = by_seed.emplace(row.seed, Cells{}).first;
            seed_order.push_back(row.seed);
        }
        Cells& c = it->second;
        if (c.seen[row.level_a][row.level_b]) {
            throw DataError("factorial: duplicate cell (" + std::to_string(row.level_a) +
                            "," + std::to_string(row.level_b) + ") for seed \"" +
                            row.seed + "\"");
        }
        c.seen[row.level_a][row.level_b] = true;
        c.v[row.level_a][row.level_b] = row.value;
    }
    if (by_seed.size() < 2) throw DataError("factorial: need at least 2 seeds");
    std::vector<double> eff_a, eff_b, inter;
    for (const auto& seed : seed_order) {
        const Cells& c = by_seed.at(seed);
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                if (!c.seen[a][b]) {
                    throw DataError("factorial: seed \"" + seed + "\" missing cell (" +
                                    std::to_string(a) + "," + std::to_string(b) + ")");
                }
            }
        }
        eff_a.push_back(0.5 * (c.v[1][1] + c.v[1][0]) - 0.5 * (c.v[0][1] + c.v[0][0]));
        eff_b.push_back(0.5 * (c.v[1][1] + c.v[0][1]) - 0.5 * (c.v[1][0] + c.v[0][0]));
        inter.push_back(c.v[1][1] - c.v[1][0] - c.v[0][1] + c.v[0][0]);
    }
    return FactorialEffects{one_sample_t(eff_a), one_sample_t(eff_b),
                            one_sample_t(inter)};
}

// t-distribution 95% confidence interval for the mean.
inline std::pair<double, double> ci95(const std::vector<double>& values) {
    const auto [mean, sd] = mean_std(values);
    const double n = static_cast<double>(values.size());
    const double tq = special::student_t_quantile(
        0.975, static_cast<double>(values.size() - 1));
    const double half = tq * sd / std::sqrt(n);
    return {mean - half, mean + half};
}

} // namespace latdiag::stats
