#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latdiag/error.hpp"
#include "latdiag/io.hpp"

namespace latdiag::protocol {

struct SweepLevel {
    int severity = 0;
    double mean_reward = 0.0;
};

// Per-severity-level mean rewards for one model/seed. Rewards are
// penalty-based (typically <= 0); higher is better.
struct SweepCurve {
    std::string model;
    std::string seed; // optional id; empty when not given
    std::vector<SweepLevel> levels;
};

struct EpisodeTrace {
    std::vector<double> errors; // per-step tracking error, nonnegative
    std::size_t push_step = 0;  // index of the push within errors
    std::size_t window = 40;    // post-push step budget
};

struct InterventionRecord {
    std::string factor;
    std::string dr_level;
    std::string seed;
    double baseline_reward = 0.0;
    double clamped_reward = 0.0;
};

inline void check_curve(const SweepCurve& curve) {
    if (curve.levels.size() < 2) {
        throw DataError("sweep curve \"" + curve.model + "\": need at least 2 levels");
    }
    for (std::size_t i = 0; i < curve.levels.size(); ++i) {
        if (!std::isfinite(curve.levels[i].mean_reward)) {
            throw DataError("sweep curve \"" + curve.model + "\": non-finite reward");
        }
        if (i > 0 && curve.levels[i].severity <= curve.levels[i - 1].severity) {
            throw DataError("sweep curve \"" + curve.model +
                            "\": severity indices must be strictly ascending");
        }
    }
}

inline void check_trace(const EpisodeTrace& trace) {
    if (trace.errors.empty()) throw DataError("episode trace: empty error series");
    if (trace.push_step + 1 > trace.errors.size()) {
        throw DataError("episode trace: push step " + std::to_string(trace.push_step) +
                        " leaves no post-push samples in a trace of length " +
                        std::to_string(trace.errors.size()));
    }
    if (trace.window < 1) throw DataError("episode trace: window must be >= 1");
    for (double e : trace.errors) {
        if (!(e >= 0.0) || !std::isfinite(e)) {
            throw DataError("episode trace: tracking errors must be finite and nonnegative");
        }
    }
}

// max - min of mean reward over levels; 0 iff the curve is flat.
inline double sensitivity(const SweepCurve& curve) {
    check_curve(curve);
    double lo = curve.levels[0].mean_reward, hi = lo;
    for (const auto& l : curve.levels) {
        lo = std::min(lo, l.mean_reward);
        hi = std::max(hi, l.mean_reward);
    }
    return hi - lo;
}

// Mean reward over the two highest-severity levels.
inline double severe_mean(const SweepCurve& curve) {
    check_curve(curve);
    const std::size_t n = curve.levels.size();
    return 0.5 * (curve.levels[n - 1].mean_reward + curve.levels[n - 2].mean_reward);
}

// Most negative mean reward across the sweep.
inline double worst_case(const SweepCurve& curve) {
    check_curve(curve);
    double lo = curve.levels[0].mean_reward;
    for (const auto& l : curve.levels) lo = std::min(lo, l.mean_reward);
    return lo;
}

struct Degradation {
    double abs = 0.0;
    double pct = 0.0;      // percent of |id_reward|
    bool improved = false; // severe reward exceeded the ID reward
};

inline Degradation degradation(double id_reward, double severe) {
    if (!std::isfinite(id_reward) || !std::isfinite(severe)) {
        throw DataError("degradation: rewards must be finite");
    }
    if (id_reward == 0.0) {
        throw NumericError("degradation: ID reward of zero has no percentage baseline");
    }
    Degradation d;
    d.abs = std::fabs(severe - id_reward);
    d.pct = 100.0 * d.abs / std::fabs(id_reward);
    d.improved = severe > id_reward;
    return d;
}

// Smallest severity index at which curve a matches or exceeds curve b.
// Requires identical severity index sets.
inline std::optional<int> crossover(const SweepCurve& a, const SweepCurve& b) {
    check_curve(a);
    check_curve(b);
    if (a.levels.size() != b.levels.size()) {
        throw DataError("crossover: curves have different level counts");
    }
    for (std::size_t i = 0; i < a.levels.size(); ++i) {
        if (a.levels[i].severity != b.levels[i].severity) {
            throw DataError("crossover: severity index sets differ");
        }
    }
    for (std::size_t i = 0; i < a.levels.size(); ++i) {
        if (a.levels[i].mean_reward >= b.levels[i].mean_reward) {
            return a.levels[i].severity;
        }
    }
    return std::nullopt;
}

struct Recovery {
    std::size_t steps = 0;
    bool censored = false;
};

// Steps from push onset until tracking error first drops strictly below the
// threshold; by default the push step itself is excluded (the alternative
// off-by-one convention is selectable). Returns the window length with the
// censored flag when recovery does not occur within the window.
inline Recovery recovery_time(const EpisodeTrace& trace, double threshold = 1.5,
                              bool include_push_step = false) {
    check_trace(trace);
    const std::size_t last = std::min(trace.errors.size() - 1 - trace.push_step,
                                      trace.window);
    for (std::size_t n = include_push_step ? 0 : 1; n <= last; ++n) {
        if (trace.errors[trace.push_step + n] < threshold) {
            return Recovery{n, false};
        }
    }
    return Recovery{trace.window, true};
}

// Maximum tracking error over the post-push window (push step excluded).
inline double peak_error(const EpisodeTrace& trace) {
    check_trace(trace);
    const std::size_t last = std::min(trace.errors.size() - 1 - trace.push_step,
                                      trace.window);
    double peak = 0.0;
    for (std::size_t n = 1; n <= last; ++n) {
        peak = std::max(peak, trace.errors[trace.push_step + n]);
    }
    return peak;
}

// Per-factor mean absolute reward change over intervention records.
inline std::map<std::string, double> intervention_delta(
    const std::vector<InterventionRecord>& records) {
    if (records.empty()) throw DataError("intervention_delta: no records");
    std::map<std::string, double> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) {
        if (!std::isfinite(r.baseline_reward) || !std::isfinite(r.clamped_reward)) {
            throw DataError("intervention_delta: non-finite reward for factor \"" +
                            r.factor + "\"");
        }
        sums[r.factor] += std::fabs(r.clamped_reward - r.baseline_reward);
        counts[r.factor] += 1;
    }
    std::map<std::string, double> out;
    for (const auto& [factor, sum] : sums) {
        out[factor] = sum / static_cast<double>(counts[factor]);
    }
    return out;
}

// ---- CSV ingestion -------------------------------------------------------

namespace detail {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    t.header = io::detail::split_line(line);
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (io::detail::trim(line).empty()) continue;
        ++row_no;
        auto cells = io::detail::split_line(line);
        if (cells.size() != t.header.size()) {
            throw DataError(path + ": row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.rows.empty()) throw DataError(path + ": empty body");
    return t;
}

inline std::size_t column_index(const CsvTable& t, const std::string& name,
                                const std::string& path) {
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i] == name) return i;
    }
    throw DataError(path + ": missing column \"" + name + "\"");
}

inline std::optional<std::size_t> optional_column(const CsvTable& t,
                                                  const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i] == name) return i;
    }
    return std::nullopt;
}

inline long long parse_int(const std::string& cell, const std::string& context) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw DataError(context + ": non-integer value \"" + cell + "\"");
    }
}

} // namespace detail

// Sweep CSV: columns model,seed,level,mean_reward. One curve per (model,
// seed) pair, levels sorted by severity; duplicate levels are an error.
inline std::vector<SweepCurve> load_sweep_csv(const std::string& path) {
    const auto t = detail::read_csv_table(path);
    const std::size_t c_model = detail::column_index(t, "model", path);
    const std::size_t c_seed = detail::column_index(t, "seed", path);
    const std::size_t c_level = detail::column_index(t, "level", path);
    const std::size_t c_reward = detail::column_index(t, "mean_reward", path);

    std::vector<SweepCurve> curves;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::pair<std::string, std::string> key{row[c_model], row[c_seed]};
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, curves.size()).first;
            curves.push_back(SweepCurve{key.first, key.second, {}});
        }
        SweepLevel level;
        level.severity = static_cast<int>(
            detail::parse_int(row[c_level], path + ": row " + std::to_string(r + 1)));
        level.mean_reward = io::detail::parse_double(row[c_reward], r + 1, "mean_reward");
        curves[it->second].levels.push_back(level);
    }
    for (auto& curve : curves) {
        std::sort(curve.levels.begin(), curve.levels.end(),
                  [](const SweepLevel& a, const SweepLevel& b) {
                      return a.severity < b.severity;
                  });
        for (std::size_t i = 1; i < curve.levels.size(); ++i) {
            if (curve.levels[i].severity == curve.levels[i - 1].severity) {
                throw DataError(path + ": duplicate level " +
                                std::to_string(curve.levels[i].severity) +
                                " for model \"" + curve.model + "\" seed \"" +
                                curve.seed + "\"");
            }
        }
        check_curve(curve);
    }
    return curves;
}

// Trace CSV: columns episode_id,step,tracking_error with either an inline
// push_step column or a sidecar CSV (episode_id,push_step). Steps within an
// episode must be 0..L-1 in order.
inline std::vector<std::pair<std::string, EpisodeTrace>> load_traces_csv(
    const std::string& path, std::size_t window,
    const std::string& push_sidecar_path = "") {
    const auto t = detail::read_csv_table(path);
    const std::size_t c_ep = detail::column_index(t, "episode_id", path);
    const std::size_t c_step = detail::column_index(t, "step", path);
    const std::size_t c_err = detail::column_index(t, "tracking_error", path);
    const auto c_push = detail::optional_column(t, "push_step");

    std::map<std::string, long long> sidecar;
    if (!push_sidecar_path.empty()) {
        const auto s = detail::read_csv_table(push_sidecar_path);
        const std::size_t s_ep = detail::column_index(s, "episode_id", push_sidecar_path);
        const std::size_t s_push = detail::column_index(s, "push_step", push_sidecar_path);
        for (const auto& row : s.rows) {
            sidecar[row[s_ep]] = detail::parse_int(row[s_push], push_sidecar_path);
        }
    }
    if (!c_push.has_value() && push_sidecar_path.empty()) {
        throw DataError(path + ": no push_step column and no sidecar file given");
    }

    std::vector<std::pair<std::string, EpisodeTrace>> out;
    std::map<std::string, std::size_t> index;
    std::vector<long long> push_steps;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string& ep = row[c_ep];
        auto it = index.find(ep);
        if (it == index.end()) {
            it = index.emplace(ep, out.size()).first;
            out.emplace_back(ep, EpisodeTrace{{}, 0, window});
            push_steps.push_back(-1);
        }
        EpisodeTrace& trace = out[it->second].second;
        const long long step =
            detail::parse_int(row[c_step], path + ": row " + std::to_string(r + 1));
        if (step != static_cast<long long>(trace.errors.size())) {
            throw DataError(path + ": episode \"" + ep + "\" has non-contiguous step " +
                            std::to_string(step));
        }
        trace.errors.push_back(io::detail::parse_double(row[c_err], r + 1, "tracking_error"));
        if (c_push.has_value()) {
            const long long push = detail::parse_int(
                row[*c_push], path + ": row " + std::to_string(r + 1));
            if (push_steps[it->second] == -1) {
                push_steps[it->second] = push;
            } else if (push_steps[it->second] != push) {
                throw DataError(path + ": episode \"" + ep +
                                "\" has inconsistent push_step values");
            }
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        long long push = push_steps[i];
        if (!push_sidecar_path.empty()) {
            const auto it = sidecar.find(out[i].first);
            if (it == sidecar.end()) {
                throw DataError(push_sidecar_path + ": no push_step for episode \"" +
                                out[i].first + "\"");
            }
            push = it->second;
        }
        if (push < 0) {
            throw DataError(path + ": no push_step for episode \"" + out[i].first + "\"");
        }
        out[i].second.push_step = static_cast<std::size_t>(push);
        check_trace(out[i].second);
    }
    return out;
}

// Intervention CSV: columns factor,dr_level,seed,baseline_reward,clamped_reward.
inline std::vector<InterventionRecord> load_interventions_csv(const std::string& path) {
    const auto t = detail::read_csv_table(path);
    const std::size_t c_factor = detail::column_index(t, "factor", path);
    const std::size_t c_level = detail::column_index(t, "dr_level", path);
    const std::size_t c_seed = detail::column_index(t, "seed", path);
    const std::size_t c_base = detail::column_index(t, "baseline_reward", path);
    const std::size_t c_clamp = detail::column_index(t, "clamped_reward", path);

    std::vector<InterventionRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        InterventionRecord rec;
        rec.factor = row[c_factor];
        rec.dr_level = row[c_level];
        rec.seed = row[c_seed];
        rec.baseline_reward = io::detail::parse_double(row[c_base], r + 1, "baseline_reward");
        rec.clamped_reward = io::detail::parse_double(row[c_clamp], r + 1, "clamped_reward");
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace latdiag::protocol
