#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "latdiag/error.hpp"
#include "latdiag/linalg.hpp"
#include "latdiag/matrix.hpp"
#include "latdiag/rng.hpp"

namespace latdiag::synth {

struct SynthSpec {
    std::size_t n_samples = 0;
    std::size_t n_factors = 0;
    std::size_t n_dims = 0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

// Substream ids for the generator's independent random streams.
enum Stream : std::uint64_t {
    kFactors = 1,
    kNoise = 2,
    kExtraDims = 3,
    kRotation = 4,
};

inline void check_spec(const SynthSpec& spec, bool needs_dims_ge_factors) {
    if (spec.n_samples < 2) throw UsageError("synth: n_samples must be >= 2");
    if (spec.n_factors < 1) throw UsageError("synth: n_factors must be >= 1");
    if (spec.n_dims < 1) throw UsageError("synth: n_dims must be >= 1");
    if (needs_dims_ge_factors && spec.n_dims < spec.n_factors) {
        throw UsageError("synth: n_dims must be >= n_factors");
    }
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
        throw UsageError("synth: noise_sigma must be finite and >= 0");
    }
}

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Xoshiro256pp& rng) {
    Matrix m(rows, cols);
    for (auto& v : m.values) v = rng.normal();
    return m;
}

inline std::vector<std::string> dim_names(std::size_t d) {
    std::vector<std::string> names(d);
    for (std::size_t i = 0; i < d; ++i) names[i] = "z" + std::to_string(i);
    return names;
}

// Five factors get the locomotion-domain names so the default 24-d partition
// resolves against generated data; other counts get generic names.
inline std::vector<std::string> factor_names(std::size_t f) {
    if (f == 5) return {"friction", "mass", "motor", "contact", "delay"};
    std::vector<std::string> names(f);
    for (std::size_t i = 0; i < f; ++i) names[i] = "f" + std::to_string(i);
    return names;
}

// Seed-deterministic random orthogonal matrix: QR of a Gaussian matrix with
// the R diagonal sign fixed positive (Haar distributed, unique).
inline Eigen::MatrixXd random_orthogonal(std::size_t d, Xoshiro256pp& rng) {
    Eigen::MatrixXd g(d, d);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.normal();
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    }
    return q;
}

} // namespace detail

// Factors are independent standard Gaussians; repr dim j == factor j plus
// noise_sigma * eps for j < F; remaining dims are pure noise.
inline Dataset gen_axis_aligned(const SynthSpec& spec) {
    detail::check_spec(spec, true);
    Xoshiro256pp factor_rng(substream(spec.seed, detail::kFactors));
    Xoshiro256pp noise_rng(substream(spec.seed, detail::kNoise));
    Xoshiro256pp extra_rng(substream(spec.seed, detail::kExtraDims));

    Matrix factors = detail::gaussian_matrix(spec.n_samples, spec.n_factors, factor_rng);
    Matrix repr(spec.n_samples, spec.n_dims);
    for (std::size_t r = 0; r < spec.n_samples; ++r) {
        for (std::size_t c = 0; c < spec.n_factors; ++c) {
            repr.at(r, c) = factors.at(r, c) + spec.noise_sigma * noise_rng.normal();
        }
    }
    for (std::size_t r = 0; r < spec.n_samples; ++r) {
        for (std::size_t c = spec.n_factors; c < spec.n_dims; ++c) {
            repr.at(r, c) = extra_rng.normal();
        }
    }
    return Dataset{
        RepresentationSet{std::move(repr), detail::dim_names(spec.n_dims)},
        FactorSet{std::move(factors), detail::factor_names(spec.n_factors)}};
}

// Axis-aligned dataset with the representation multiplied by a random
// orthogonal matrix. Factor information content is preserved; per-dimension
// alignment is destroyed.
inline Dataset gen_rotated(const SynthSpec& spec) {
    Dataset axis = gen_axis_aligned(spec);
    Xoshiro256pp rot_rng(substream(spec.seed, detail::kRotation));
    const Eigen::MatrixXd q = detail::random_orthogonal(spec.n_dims, rot_rng);
    EigenRowMajor rotated = as_eigen(axis.repr.matrix) * q;
    axis.repr.matrix = from_eigen(rotated);
    return axis;
}

// Representation and factors are independent: every dependence metric has
// true value zero.
inline Dataset gen_null(const SynthSpec& spec) {
    detail::check_spec(spec, false);
    Xoshiro256pp factor_rng(substream(spec.seed, detail::kFactors));
    Xoshiro256pp repr_rng(substream(spec.seed, detail::kNoise));
    Matrix factors = detail::gaussian_matrix(spec.n_samples, spec.n_factors, factor_rng);
    Matrix repr = detail::gaussian_matrix(spec.n_samples, spec.n_dims, repr_rng);
    return Dataset{
        RepresentationSet{std::move(repr), detail::dim_names(spec.n_dims)},
        FactorSet{std::move(factors), detail::factor_names(spec.n_factors)}};
}

// Samples G*A with G Gaussian (n x rank) and A (rank x n_dims) having
// orthonormal rows: the population covariance has exactly `rank` equal
// nonzero eigenvalues.
inline RepresentationSet gen_lowrank(std::size_t n_samples, std::size_t n_dims,
                                     std::size_t rank, std::uint64_t seed) {
    if (rank < 1 || rank > n_dims) {
        throw UsageError("gen_lowrank: rank must lie in [1, n_dims]");
    }
    if (n_samples < 2) throw UsageError("gen_lowrank: n_samples must be >= 2");
    Xoshiro256pp g_rng(substream(seed, detail::kFactors));
    Xoshiro256pp basis_rng(substream(seed, detail::kRotation));

    Matrix g = detail::gaussian_matrix(n_samples, rank, g_rng);
    Eigen::MatrixXd b(n_dims, rank);
    for (std::size_t r = 0; r < n_dims; ++r) {
        for (std::size_t c = 0; c < rank; ++c) {
            b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                basis_rng.normal();
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
    Eigen::MatrixXd q = qr.householderQ() *
                        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_dims),
                                                  static_cast<Eigen::Index>(rank));
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    }
    EigenRowMajor samples = as_eigen(g) * q.transpose();
    return RepresentationSet{from_eigen(samples), detail::dim_names(n_dims)};
}

// Bivariate standard Gaussian pair with correlation rho.
inline std::pair<std::vector<double>, std::vector<double>> gen_gaussian_pair(
    std::size_t n_samples, double rho, std::uint64_t seed) {
    if (!(std::fabs(rho) < 1.0)) {
        throw UsageError("gen_gaussian_pair: |rho| must be < 1");
    }
    if (n_samples < 2) throw UsageError("gen_gaussian_pair: n_samples must be >= 2");
    Xoshiro256pp rng(substream(seed, detail::kFactors));
    std::vector<double> x(n_samples), y(n_samples);
    const double tail = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double g1 = rng.normal();
        const double g2 = rng.normal();
        x[i] = g1;
        y[i] = rho * g1 + tail * g2;
    }
    return {std::move(x), std::move(y)};
}

} // namespace latdiag::synth
