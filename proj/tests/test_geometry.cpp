#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latdiag/geometry.hpp"
#include "latdiag/rng.hpp"
#include "latdiag/synth.hpp"

using namespace latdiag;
using namespace latdiag::geometry;

namespace {

// 20x10 fixture with exactly ten equal singular values: rows of +c*I stacked
// on rows of -c*I. Column means are zero, so centering changes nothing.
Matrix uniform_spectrum_fixture(double c = 2.5) {
    Matrix m(20, 10, 0.0);
    for (std::size_t i = 0; i < 10; ++i) {
        m.at(i, i) = c;
        m.at(10 + i, i) = -c;
    }
    return m;
}

} // namespace

TEST_CASE("svd_geometry on the uniform spectrum fixture is exact") {
    const GeometryReport g = svd_geometry(uniform_spectrum_fixture());
    CHECK_THAT(g.effective_rank, Catch::Matchers::WithinAbs(10.0, 1e-9));
    CHECK_THAT(g.participation_ratio, Catch::Matchers::WithinAbs(10.0, 1e-9));
    CHECK_THAT(g.condition_number, Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE(g.singular_values.size() == 10);
    CHECK(std::is_sorted(g.singular_values.rbegin(), g.singular_values.rend()));
}

TEST_CASE("svd_geometry on low-rank data") {
    const auto r1 = synth::gen_lowrank(5000, 16, 1, 2);
    const GeometryReport g1 = svd_geometry(r1);
    CHECK(g1.effective_rank >= 1.0);
    CHECK(g1.effective_rank <= 1.1);
    CHECK(g1.participation_ratio <= 1.1);

    const auto r4 = synth::gen_lowrank(5000, 16, 4, 2);
    const GeometryReport g4 = svd_geometry(r4);
    CHECK_THAT(g4.effective_rank, Catch::Matchers::WithinAbs(4.0, 0.2));
}

TEST_CASE("svd_geometry invariances") {
    const auto repr = synth::gen_lowrank(800, 12, 7, 5);

    SECTION("row permutation") {
        Matrix permuted = repr.matrix;
        // Reverse row order.
        for (std::size_t r = 0; r < permuted.rows; ++r) {
            for (std::size_t c = 0; c < permuted.cols; ++c) {
                permuted.at(r, c) = repr.matrix.at(permuted.rows - 1 - r, c);
            }
        }
        const GeometryReport a = svd_geometry(repr.matrix);
        const GeometryReport b = svd_geometry(permuted);
        CHECK_THAT(b.effective_rank, Catch::Matchers::WithinAbs(a.effective_rank, 1e-9));
        CHECK_THAT(b.participation_ratio,
                   Catch::Matchers::WithinAbs(a.participation_ratio, 1e-9));
    }
    SECTION("global positive scaling") {
        Matrix scaled = repr.matrix;
        for (auto& v : scaled.values) v *= 37.5;
        const GeometryReport a = svd_geometry(repr.matrix);
        const GeometryReport b = svd_geometry(scaled);
        CHECK_THAT(b.effective_rank, Catch::Matchers::WithinAbs(a.effective_rank, 1e-9));
        CHECK_THAT(b.participation_ratio,
                   Catch::Matchers::WithinAbs(a.participation_ratio, 1e-9));
        CHECK_THAT(b.condition_number, Catch::Matchers::WithinAbs(a.condition_number, 1e-9));
    }
    SECTION("squared singular values reconstruct the Frobenius norm") {
        EigenRowMajor x = as_eigen(repr.matrix);
        x.rowwise() -= x.colwise().mean();
        const double fro2 = x.squaredNorm();
        const GeometryReport g = svd_geometry(repr.matrix);
        const double sum2 = std::accumulate(
            g.singular_values.begin(), g.singular_values.end(), 0.0,
            [](double acc, double s) { return acc + s * s; });
        CHECK_THAT(sum2, Catch::Matchers::WithinRel(fro2, 1e-8));
    }
    SECTION("centering flag changes results for offset data") {
        Matrix shifted = repr.matrix;
        for (std::size_t r = 0; r < shifted.rows; ++r) shifted.at(r, 0) += 100.0;
        const GeometryReport centered = svd_geometry(shifted, true);
        const GeometryReport raw = svd_geometry(shifted, false);
        CHECK(raw.singular_values[0] > centered.singular_values[0]);
    }
}

TEST_CASE("svd_geometry error paths") {
    CHECK_THROWS_AS(svd_geometry(Matrix(1, 4, 1.0)), NumericError);
    CHECK_THROWS_WITH(svd_geometry(Matrix(5, 3, 0.0)),
                      Catch::Matchers::ContainsSubstring("all-zero"));
}

namespace {

GradientSeries series_from(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows[0].size());
    std::vector<long long> steps;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        steps.push_back(static_cast<long long>(10 * (r + 1)));
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
    }
    return make_gradient_series(std::move(steps), std::move(m));
}

} // namespace

TEST_CASE("cosine_series") {
    SECTION("positive scaling gives cosine 1") {
        const GradientSeries a = series_from({{1, 2, 3}, {-1, 0, 2}});
        const GradientSeries b = series_from({{2, 4, 6}, {-2, 0, 4}});
        const CosineSummary s = cosine_series(a, b);
        for (double v : s.per_step) CHECK_THAT(v, Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK_THAT(s.mean, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
    SECTION("orthogonal series give zero mean and zero std") {
        const GradientSeries a = series_from({{1, 0}, {0, 2}});
        const GradientSeries b = series_from({{0, 3}, {5, 0}});
        const CosineSummary s = cosine_series(a, b);
        CHECK(s.mean == 0.0);
        CHECK(s.stddev == 0.0);
    }
    SECTION("values stay in [-1, 1] and are row-scale invariant") {
        Xoshiro256pp rng(3);
        Matrix ma(6, 10), mb(6, 10);
        for (auto& v : ma.values) v = rng.normal();
        for (auto& v : mb.values) v = rng.normal();
        std::vector<long long> steps{1, 2, 3, 4, 5, 6};
        const GradientSeries a = make_gradient_series(steps, ma);
        const GradientSeries b = make_gradient_series(steps, mb);
        const CosineSummary s = cosine_series(a, b);
        for (double v : s.per_step) {
            CHECK(v >= -1.0 - 1e-12);
            CHECK(v <= 1.0 + 1e-12);
        }
        Matrix mb_scaled = mb;
        for (std::size_t c = 0; c < 10; ++c) mb_scaled.at(2, c) *= 42.0;
        const CosineSummary s2 =
            cosine_series(a, make_gradient_series(steps, mb_scaled));
        for (std::size_t i = 0; i < s.per_step.size(); ++i) {
            CHECK_THAT(s2.per_step[i], Catch::Matchers::WithinAbs(s.per_step[i], 1e-12));
        }
    }
    SECTION("step mismatch and zero-norm errors") {
        const GradientSeries a = series_from({{1, 0}, {0, 2}});
        GradientSeries c = series_from({{1, 0}, {0, 2}});
        c.steps[1] = 999;
        CHECK_THROWS_AS(cosine_series(a, c), DataError);
        const GradientSeries z = series_from({{1, 0}, {0, 0}});
        CHECK_THROWS_WITH(cosine_series(a, z), Catch::Matchers::ContainsSubstring("step 20"));
    }
}

TEST_CASE("norm_fraction") {
    SECTION("identity and scaling") {
        const GradientSeries total = series_from({{3, 4}, {1, 0}});
        const std::vector<double> unit = norm_fraction(total, total);
        for (double v : unit) CHECK_THAT(v, Catch::Matchers::WithinAbs(1.0, 1e-12));

        GradientSeries part = total;
        for (auto& v : part.grads.values) v *= 0.3;
        const std::vector<double> frac = norm_fraction(part, total);
        for (double v : frac) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.3, 1e-12));
    }
    SECTION("orthogonal decomposition obeys Pythagoras") {
        // u = (3, 0), v = (0, 4), total = u + v with norm 5.
        const GradientSeries u = series_from({{3, 0}});
        const GradientSeries total = series_from({{3, 4}});
        const std::vector<double> frac = norm_fraction(u, total);
        CHECK_THAT(frac[0], Catch::Matchers::WithinAbs(0.6, 1e-12));
    }
    SECTION("zero total norm reports the step") {
        const GradientSeries part = series_from({{1, 1}});
        const GradientSeries total = series_from({{0, 0}});
        CHECK_THROWS_WITH(norm_fraction(part, total),
                          Catch::Matchers::ContainsSubstring("step 10"));
    }
}

TEST_CASE("gradient series validation") {
    Matrix m(2, 3, 1.0);
    CHECK_THROWS_AS(make_gradient_series({5}, m), DataError);       // row mismatch
    CHECK_THROWS_AS(make_gradient_series({5, 5}, m), DataError);    // not ascending
    Matrix bad(2, 3, 1.0);
    bad.at(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(make_gradient_series({1, 2}, bad), DataError);  // non-finite
    CHECK_NOTHROW(make_gradient_series({1, 2}, m));
}
