#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "latdiag/error.hpp"
#include "latdiag/linalg.hpp"
#include "latdiag/matrix.hpp"

namespace latdiag::geometry {

struct GeometryReport {
    double effective_rank = 0.0;
    double participation_ratio = 0.0;
    double condition_number = 0.0;
    std::vector<double> singular_values; // descending
};

// SVD-based geometry of a sample matrix. Effective rank is the exponential
// of the entropy of the normalized singular-value distribution over values
// above rel_tol * sigma_max; participation ratio uses squared singular
// values; condition number spans the retained spectrum only.
inline GeometryReport svd_geometry(const Matrix& samples, bool center = true,
                                   double rel_tol = 1e-10) {
    if (samples.rows < 2) throw NumericError("svd_geometry: need at least 2 rows");

    EigenRowMajor x = as_eigen(samples);
    if (center) {
        const Eigen::RowVectorXd mean = x.colwise().mean();
        x.rowwise() -= mean;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x);
    const Eigen::VectorXd sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
    if (sigma_max <= 0.0) throw NumericError("svd_geometry: all-zero matrix");

    GeometryReport report;
    report.singular_values.assign(sigma.data(), sigma.data() + sigma.size());

    const double cutoff = rel_tol * sigma_max;
    double sum_retained = 0.0, min_retained = sigma_max;
    std::size_t n_retained = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) {
            sum_retained += sigma(i);
            min_retained = sigma(i); // descending order: last retained is smallest
            ++n_retained;
        }
    }
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) {
            const double p = sigma(i) / sum_retained;
            entropy -= p * std::log(p);
        }
    }
    report.effective_rank = std::exp(entropy);
    report.condition_number = sigma_max / min_retained;

    double sum_l = 0.0, sum_l2 = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const double l = sigma(i) * sigma(i);
        sum_l += l;
        sum_l2 += l * l;
    }
    report.participation_ratio = sum_l * sum_l / sum_l2;
    return report;
}

inline GeometryReport svd_geometry(const RepresentationSet& repr, bool center = true,
                                   double rel_tol = 1e-10) {
    return svd_geometry(repr.matrix, center, rel_tol);
}

// Gradient vectors sampled at ascending training steps; one flattened
// parameter gradient per row.
struct GradientSeries {
    std::vector<long long> steps;
    Matrix grads;
};

inline GradientSeries make_gradient_series(std::vector<long long> steps, Matrix grads) {
    check_matrix(grads, "gradients");
    if (steps.size() != grads.rows) {
        throw DataError("gradient series: " + std::to_string(steps.size()) +
                        " steps for " + std::to_string(grads.rows) + " gradient rows");
    }
    for (std::size_t i = 1; i < steps.size(); ++i) {
        if (steps[i] <= steps[i - 1]) {
            throw DataError("gradient series: steps must be strictly ascending");
        }
    }
    return GradientSeries{std::move(steps), std::move(grads)};
}

struct CosineSummary {
    std::vector<double> per_step;
    double mean = 0.0;
    double stddev = 0.0; // population std
};

namespace detail {

inline void check_aligned(const GradientSeries& a, const GradientSeries& b) {
    if (a.steps != b.steps) throw DataError("gradient series: step lists differ");
    if (a.grads.cols != b.grads.cols) {
        throw DataError("gradient series: parameter dimension mismatch (" +
                        std::to_string(a.grads.cols) + " vs " +
                        std::to_string(b.grads.cols) + ")");
    }
}

inline double row_norm(const Matrix& m, std::size_t r) {
    double s = 0.0;
    const double* p = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) s += p[c] * p[c];
    return std::sqrt(s);
}

} // namespace detail

// Per-step cosine similarity between two gradient series, with mean and
// population standard deviation over steps.
inline CosineSummary cosine_series(const GradientSeries& a, const GradientSeries& b) {
    detail::check_aligned(a, b);
    const std::size_t n = a.steps.size();
    CosineSummary out;
    out.per_step.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double na = detail::row_norm(a.grads, i);
        const double nb = detail::row_norm(b.grads, i);
        if (na == 0.0 || nb == 0.0) {
            throw NumericError("cosine_series: zero-norm gradient at step " +
                               std::to_string(a.steps[i]));
        }
        double dot = 0.0;
        const double* pa = a.grads.row(i);
        const double* pb = b.grads.row(i);
        for (std::size_t c = 0; c < a.grads.cols; ++c) dot += pa[c] * pb[c];
        out.per_step[i] = dot / (na * nb);
    }
    double mean = 0.0;
    for (double v : out.per_step) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : out.per_step) var += (v - mean) * (v - mean);
    out.mean = mean;
    out.stddev = std::sqrt(var / static_cast<double>(n));
    return out;
}

// Per-step ||g_part|| / ||g_total||.
inline std::vector<double> norm_fraction(const GradientSeries& part,
                                         const GradientSeries& total) {
    detail::check_aligned(part, total);
    std::vector<double> out(part.steps.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double nt = detail::row_norm(total.grads, i);
        if (nt == 0.0) {
            throw NumericError("norm_fraction: zero total norm at step " +
                               std::to_string(total.steps[i]));
        }
        out[i] = detail::row_norm(part.grads, i) / nt;
    }
    return out;
}

} // namespace latdiag::geometry
