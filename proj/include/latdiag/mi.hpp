#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "latdiag/error.hpp"
#include "latdiag/kdtree.hpp"
#include "latdiag/matrix.hpp"
#include "latdiag/parallel.hpp"
#include "latdiag/rng.hpp"
#include "latdiag/special.hpp"

namespace latdiag::info {

inline constexpr std::uint64_t kDefaultJitterSeed = 0x1a7d1a6;

enum class MiMode { MaxDim, Joint };

struct MIReport {
    std::map<std::string, double> per_factor_mi; // nats
    double overall_mi = 0.0;                     // sum over factors
    std::size_t k = 0;
    std::vector<std::string> flags;
};

namespace detail {

// FNV-1a over the raw bytes of a column. Jitter streams are keyed by content
// rather than argument position so ksg_mi(x, y) == ksg_mi(y, x) exactly.
inline std::uint64_t column_hash(const std::vector<double>& v) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

// Adds tie-breaking jitter of amplitude 1e-10 * (max - min). Errors on a
// constant column: jitter cannot create variance that is not there.
inline std::vector<double> jittered(const std::vector<double>& v,
                                    std::uint64_t jitter_seed,
                                    const char* what) {
    const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
    const double scale = *mx_it - *mn_it;
    if (scale == 0.0) {
        throw NumericError(std::string(what) + ": zero-variance input after jitter");
    }
    Xoshiro256pp rng(substream(jitter_seed, column_hash(v)));
    std::vector<double> out(v.size());
    const double amp = 1e-10 * scale;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] + amp * rng.uniform_sym();
    }
    return out;
}

// Count of values v in the sorted array with |v - center| < eps, excluding
// one occurrence of the center itself. The predicate uses the subtraction
// form so boundary rounding agrees exactly with the Chebyshev distances the
// k-d tree computes; the binary-search bracket is corrected by a short walk.
inline std::size_t strict_count_sorted(const std::vector<double>& sorted,
                                       double center, double eps) {
    auto lo = std::upper_bound(sorted.begin(), sorted.end(), center - eps);
    auto hi = std::lower_bound(sorted.begin(), sorted.end(), center + eps);
    while (lo != sorted.begin() && std::fabs(*(lo - 1) - center) < eps) --lo;
    while (lo != hi && !(std::fabs(*lo - center) < eps)) ++lo;
    while (hi != sorted.end() && std::fabs(*hi - center) < eps) ++hi;
    while (hi != lo && !(std::fabs(*(hi - 1) - center) < eps)) --hi;
    const auto raw = static_cast<std::size_t>(hi - lo);
    return raw > 0 ? raw - 1 : 0;
}

inline double ksg_from_counts(std::size_t n, std::size_t k,
                              const std::vector<std::size_t>& nx,
                              const std::vector<std::size_t>& ny) {
    using latdiag::special::digamma;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += digamma(static_cast<double>(nx[i] + 1)) +
               digamma(static_cast<double>(ny[i] + 1));
    }
    return digamma(static_cast<double>(k)) + digamma(static_cast<double>(n)) -
           acc / static_cast<double>(n);
}

} // namespace detail

// Kraskov-Stoegbauer-Grassberger estimator, variant 1, for two scalar
// variables. Result in nats; small negative values are legitimate estimator
// noise. Deterministic given the jitter seed.
inline double ksg_mi(const std::vector<double>& x, const std::vector<double>& y,
                     std::size_t k, std::uint64_t jitter_seed = kDefaultJitterSeed) {
    const std::size_t n = x.size();
    if (n != y.size()) throw NumericError("ksg_mi: length mismatch");
    if (k < 1 || n <= k) throw NumericError("ksg_mi: need N > k >= 1");

    const std::vector<double> xj = detail::jittered(x, jitter_seed, "ksg_mi");
    const std::vector<double> yj = detail::jittered(y, jitter_seed, "ksg_mi");

    std::vector<double> joint(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        joint[2 * i] = xj[i];
        joint[2 * i + 1] = yj[i];
    }
    const ChebyshevKdTree tree(joint.data(), n, 2);

    std::vector<double> xs = xj, ys = yj;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());

    std::vector<std::size_t> nx(n), ny(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double eps = tree.kth_neighbor_distance(i, k);
        nx[i] = detail::strict_count_sorted(xs, xj[i], eps);
        ny[i] = detail::strict_count_sorted(ys, yj[i], eps);
    }
    return detail::ksg_from_counts(n, k, nx, ny);
}

// KSG variant 1 with a multidimensional X block (Chebyshev metric over all
// X coordinates) against a scalar y.
inline double ksg_mi_joint(const Matrix& x_block, const std::vector<double>& y,
                           std::size_t k,
                           std::uint64_t jitter_seed = kDefaultJitterSeed) {
    const std::size_t n = x_block.rows;
    const std::size_t p = x_block.cols;
    if (n != y.size()) throw NumericError("ksg_mi: length mismatch");
    if (k < 1 || n <= k) throw NumericError("ksg_mi: need N > k >= 1");

    std::vector<std::vector<double>> xcols(p);
    for (std::size_t c = 0; c < p; ++c) {
        xcols[c] = detail::jittered(x_block.column(c), jitter_seed, "ksg_mi");
    }
    const std::vector<double> yj = detail::jittered(y, jitter_seed, "ksg_mi");

    std::vector<double> joint(n * (p + 1));
    std::vector<double> xflat(n * p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < p; ++c) {
            joint[i * (p + 1) + c] = xcols[c][i];
            xflat[i * p + c] = xcols[c][i];
        }
        joint[i * (p + 1) + p] = yj[i];
    }
    const ChebyshevKdTree joint_tree(joint.data(), n, p + 1);
    const ChebyshevKdTree x_tree(xflat.data(), n, p);

    std::vector<double> ys = yj;
    std::sort(ys.begin(), ys.end());

    std::vector<std::size_t> nx(n), ny(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double eps = joint_tree.kth_neighbor_distance(i, k);
        nx[i] = x_tree.count_within(i, eps);
        ny[i] = detail::strict_count_sorted(ys, yj[i], eps);
    }
    return detail::ksg_from_counts(n, k, nx, ny);
}

// MI between the representation and each factor. MaxDim mode (default) takes
// the max over single-dimension estimates per factor; Joint mode uses the
// full representation block. Overall is the sum over factors.
inline MIReport mi_per_factor(const Dataset& dataset, std::size_t k,
                              MiMode mode = MiMode::MaxDim,
                              std::uint64_t jitter_seed = kDefaultJitterSeed,
                              unsigned threads = 1) {
    const std::size_t n_factors = dataset.factors.count();
    const std::size_t n_dims = dataset.repr.dims();
    MIReport report;
    report.k = k;

    std::vector<double> per_factor(n_factors, 0.0);
    if (mode == MiMode::MaxDim) {
        const std::size_t n_tasks = n_factors * n_dims;
        std::vector<double> grid(n_tasks, 0.0);
        parallel_for(n_tasks, threads, [&](std::size_t task) {
            const std::size_t f = task / n_dims;
            const std::size_t d = task % n_dims;
            grid[task] = ksg_mi(dataset.repr.matrix.column(d),
                                dataset.factors.matrix.column(f), k, jitter_seed);
        });
        for (std::size_t f = 0; f < n_factors; ++f) {
            per_factor[f] = *std::max_element(grid.begin() + static_cast<std::ptrdiff_t>(f * n_dims),
                                              grid.begin() + static_cast<std::ptrdiff_t>((f + 1) * n_dims));
        }
    } else {
        parallel_for(n_factors, threads, [&](std::size_t f) {
            per_factor[f] = ksg_mi_joint(dataset.repr.matrix,
                                         dataset.factors.matrix.column(f), k, jitter_seed);
        });
    }

    double overall = 0.0;
    for (std::size_t f = 0; f < n_factors; ++f) {
        const std::string& name = dataset.factors.factor_names[f];
        report.per_factor_mi[name] = per_factor[f];
        overall += per_factor[f];
        if (per_factor[f] < 0.0) {
            report.flags.push_back("negative MI estimate for factor \"" + name +
                                   "\" (reported as-is)");
        }
    }
    report.overall_mi = overall;
    return report;
}

// Plug-in MI of the joint histogram with uniform-width bins per variable.
inline double hist_mi(const std::vector<double>& x, const std::vector<double>& y,
                      std::size_t bins) {
    const std::size_t n = x.size();
    if (n != y.size()) throw NumericError("hist_mi: length mismatch");
    if (bins < 2 || n < bins) throw NumericError("hist_mi: need N >= bins >= 2");

    const auto bin_of = [bins](const std::vector<double>& v, double lo, double hi,
                               std::size_t i) {
        const double t = (v[i] - lo) / (hi - lo);
        const auto b = static_cast<std::size_t>(t * static_cast<double>(bins));
        return std::min(b, bins - 1);
    };
    const auto [xlo_it, xhi_it] = std::minmax_element(x.begin(), x.end());
    const auto [ylo_it, yhi_it] = std::minmax_element(y.begin(), y.end());
    if (*xlo_it == *xhi_it || *ylo_it == *yhi_it) {
        throw NumericError("hist_mi: zero range in input");
    }

    std::vector<std::size_t> joint(bins * bins, 0), mx(bins, 0), my(bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bx = bin_of(x, *xlo_it, *xhi_it, i);
        const std::size_t by = bin_of(y, *ylo_it, *yhi_it, i);
        ++joint[bx * bins + by];
        ++mx[bx];
        ++my[by];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double mi = 0.0;
    for (std::size_t bx = 0; bx < bins; ++bx) {
        for (std::size_t by = 0; by < bins; ++by) {
            const std::size_t c = joint[bx * bins + by];
            if (c == 0) continue;
            const double pxy = static_cast<double>(c) * inv_n;
            const double px = static_cast<double>(mx[bx]) * inv_n;
            const double py = static_cast<double>(my[by]) * inv_n;
            mi += pxy * std::log(pxy / (px * py));
        }
    }
    return mi;
}

// Entropy of the uniform-width histogram of v, in nats. Zero range yields
// zero entropy (single occupied bin).
inline double hist_entropy(const std::vector<double>& v, std::size_t bins) {
    const std::size_t n = v.size();
    if (bins < 2 || n < bins) throw NumericError("hist_entropy: need N >= bins >= 2");
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    if (*lo_it == *hi_it) return 0.0;
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (v[i] - *lo_it) / (*hi_it - *lo_it);
        const auto b = static_cast<std::size_t>(t * static_cast<double>(bins));
        ++counts[std::min(b, bins - 1)];
    }
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

} // namespace latdiag::info
