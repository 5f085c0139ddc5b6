#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "latdiag/mi.hpp"
#include "latdiag/rng.hpp"
#include "latdiag/special.hpp"
#include "latdiag/synth.hpp"
#include "oracles.hpp"

using namespace latdiag;
using namespace latdiag::info;

TEST_CASE("ksg_mi on gaussian pairs") {
    SECTION("independence") {
        const auto [x, y] = synth::gen_gaussian_pair(10000, 0.0, 1);
        CHECK(std::fabs(ksg_mi(x, y, 5)) <= 0.02);
    }
    SECTION("rho = 0.9") {
        const auto [x, y] = synth::gen_gaussian_pair(10000, 0.9, 1);
        CHECK_THAT(ksg_mi(x, y, 5),
                   Catch::Matchers::WithinAbs(oracles::gaussian_mi(0.9), 0.05));
    }
    SECTION("self MI is large") {
        const auto [x, y] = synth::gen_gaussian_pair(1000, 0.0, 2);
        CHECK(ksg_mi(x, x, 5) >= 2.0);
    }
}

TEST_CASE("ksg_mi error paths") {
    const std::vector<double> x{1, 2, 3, 4};
    SECTION("N <= k") {
        CHECK_THROWS_AS(ksg_mi(x, x, 4), NumericError);
        CHECK_THROWS_AS(ksg_mi(x, x, 0), NumericError);
    }
    SECTION("length mismatch") {
        CHECK_THROWS_AS(ksg_mi(x, {1, 2, 3}, 2), NumericError);
    }
    SECTION("zero-variance input") {
        const std::vector<double> c(10, 3.0);
        const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        CHECK_THROWS_WITH(ksg_mi(c, v, 3),
                          Catch::Matchers::ContainsSubstring("zero-variance"));
    }
}

TEST_CASE("ksg_mi is exactly symmetric") {
    const auto [x, y] = synth::gen_gaussian_pair(3000, 0.7, 2);
    CHECK(std::fabs(ksg_mi(x, y, 5) - ksg_mi(y, x, 5)) <= 1e-9);
    // Tie-heavy case: identical columns.
    std::vector<double> xx(x.begin(), x.begin() + 500);
    CHECK(std::fabs(ksg_mi(xx, xx, 3) - ksg_mi(xx, xx, 3)) <= 1e-9);
}

TEST_CASE("ksg_mi is invariant to monotone affine rescaling") {
    const auto [x, y] = synth::gen_gaussian_pair(10000, 0.6, 3);
    std::vector<double> y_scaled(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_scaled[i] = 3.0 * y[i] + 7.0;
    CHECK(std::fabs(ksg_mi(x, y, 5) - ksg_mi(x, y_scaled, 5)) <= 0.02);
}

TEST_CASE("kd-tree neighbor statistics match a brute-force oracle") {
    // Jitter-free comparison: feed already-generic (tie-free) data through
    // the same counting definitions and compare against direct O(N^2) scans.
    Xoshiro256pp rng(44);
    const std::size_t n = 500;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = 0.5 * x[i] + rng.normal();
    }
    const auto brute = oracles::brute_ksg_counts(x, y, 5);

    std::vector<double> joint(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        joint[2 * i] = x[i];
        joint[2 * i + 1] = y[i];
    }
    const ChebyshevKdTree tree(joint.data(), n, 2);
    std::vector<double> xs = x, ys = y;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    for (std::size_t i = 0; i < n; ++i) {
        const double eps = tree.kth_neighbor_distance(i, 5);
        CHECK(eps == brute.eps[i]);
        CHECK(detail::strict_count_sorted(xs, x[i], eps) == brute.nx[i]);
        CHECK(detail::strict_count_sorted(ys, y[i], eps) == brute.ny[i]);
    }
}

TEST_CASE("multidimensional tree counting matches brute force") {
    Xoshiro256pp rng(45);
    const std::size_t n = 300, d = 4;
    std::vector<double> pts(n * d);
    for (auto& v : pts) v = rng.normal();
    const ChebyshevKdTree tree(pts.data(), n, d);
    for (std::size_t i = 0; i < n; i += 17) {
        for (double radius : {0.3, 0.8, 2.0}) {
            std::size_t brute = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double dist = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    dist = std::max(dist, std::fabs(pts[j * d + c] - pts[i * d + c]));
                }
                if (dist < radius) ++brute;
            }
            CHECK(tree.count_within(i, radius) == brute);
        }
        for (std::size_t k : {1, 5, 20}) {
            std::vector<double> dists;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double dist = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    dist = std::max(dist, std::fabs(pts[j * d + c] - pts[i * d + c]));
                }
                dists.push_back(dist);
            }
            std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k - 1),
                             dists.end());
            CHECK(tree.kth_neighbor_distance(i, k) == dists[k - 1]);
        }
    }
}

TEST_CASE("mi_per_factor") {
    SECTION("independent data sums to near zero (D = F = 5)") {
        const Dataset ds = synth::gen_null({10000, 5, 5, 0.0, 42});
        const MIReport rep = mi_per_factor(ds, 5);
        CHECK(rep.overall_mi <= 0.05);
        double sum = 0.0;
        for (const auto& [name, v] : rep.per_factor_mi) sum += v;
        CHECK(rep.overall_mi == sum);
    }
    SECTION("noiseless axis-aligned dependence is strong") {
        const Dataset ds = synth::gen_axis_aligned({10000, 2, 4, 0.0, 7});
        const MIReport rep = mi_per_factor(ds, 5);
        for (const auto& [name, v] : rep.per_factor_mi) CHECK(v >= 1.5);
    }
    SECTION("negative estimates are flagged, not clipped") {
        const Dataset ds = synth::gen_null({800, 3, 1, 0.0, 19});
        const MIReport rep = mi_per_factor(ds, 5);
        std::size_t negatives = 0;
        for (const auto& [name, v] : rep.per_factor_mi) {
            if (v < 0.0) ++negatives;
        }
        CHECK(rep.flags.size() == negatives);
    }
    SECTION("thread-count independence") {
        const Dataset ds = synth::gen_null({600, 2, 3, 0.0, 5});
        const MIReport a = mi_per_factor(ds, 4, MiMode::MaxDim, kDefaultJitterSeed, 1);
        const MIReport b = mi_per_factor(ds, 4, MiMode::MaxDim, kDefaultJitterSeed, 3);
        CHECK(a.per_factor_mi == b.per_factor_mi);
        CHECK(a.overall_mi == b.overall_mi);
    }
    SECTION("joint mode near zero on independent data") {
        const Dataset ds = synth::gen_null({2000, 2, 4, 0.0, 3});
        const MIReport rep = mi_per_factor(ds, 5, MiMode::Joint);
        CHECK(std::fabs(rep.overall_mi) <= 0.05);
    }
}

TEST_CASE("hist_mi") {
    SECTION("identity dependence on uniforms approaches ln(bins)") {
        Xoshiro256pp rng(6);
        std::vector<double> x(100000);
        for (auto& v : x) v = rng.uniform();
        CHECK_THAT(hist_mi(x, x, 20), Catch::Matchers::WithinAbs(std::log(20.0), 0.05));
    }
    SECTION("independent uniforms are near zero") {
        Xoshiro256pp rng(7);
        std::vector<double> x(100000), y(100000);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = rng.uniform();
            y[i] = rng.uniform();
        }
        CHECK(hist_mi(x, y, 20) <= 0.01);
    }
    SECTION("negation invariance") {
        Xoshiro256pp rng(8);
        std::vector<double> x(5000), neg(5000);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = rng.normal();
            neg[i] = -x[i];
        }
        CHECK(hist_mi(x, x, 16) == hist_mi(x, neg, 16));
    }
    SECTION("errors") {
        const std::vector<double> flat(100, 1.0);
        std::vector<double> v(100);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
        CHECK_THROWS_AS(hist_mi(flat, v, 10), NumericError);
        CHECK_THROWS_AS(hist_mi(v, flat, 10), NumericError);
        CHECK_THROWS_AS(hist_mi({1, 2, 3}, {1, 2, 3}, 5), NumericError); // N < bins
    }
    SECTION("bounded by marginal entropies") {
        Xoshiro256pp rng(9);
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<double> x(400), y(400);
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = rng.normal();
                y[i] = 0.8 * x[i] + 0.3 * rng.normal();
            }
            const double mi = hist_mi(x, y, 12);
            CHECK(mi <= std::min(hist_entropy(x, 12), hist_entropy(y, 12)) + 1e-9);
            CHECK(mi >= 0.0);
        }
    }
}
