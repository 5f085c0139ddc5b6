#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "latdiag/protocol.hpp"
#include "latdiag/rng.hpp"

using namespace latdiag;
using namespace latdiag::protocol;

namespace {

SweepCurve curve_from(const std::string& model, const std::vector<double>& rewards,
                      const std::vector<int>* levels = nullptr) {
    SweepCurve c;
    c.model = model;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        c.levels.push_back({levels ? (*levels)[i] : static_cast<int>(i), rewards[i]});
    }
    return c;
}

// Push-magnitude sweep means for a factored-latent and a recurrent model.
const std::vector<double> kPushFactored{-4.37, -4.44, -4.50, -4.56, -4.63, -4.78};
const std::vector<double> kPushLstm{-3.58, -4.05, -4.23, -4.45, -4.70, -5.09};

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

} // namespace

TEST_CASE("sensitivity") {
    CHECK_THAT(sensitivity(curve_from("factored", kPushFactored)),
               Catch::Matchers::WithinAbs(0.41, 1e-9));
    CHECK_THAT(sensitivity(curve_from("lstm", kPushLstm)),
               Catch::Matchers::WithinAbs(1.51, 1e-9));
    CHECK(sensitivity(curve_from("flat", {-4.0, -4.0, -4.0})) == 0.0);
}

TEST_CASE("sensitivity is zero iff the curve is constant") {
    Xoshiro256pp rng(1);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> rewards(2 + rng.next() % 6);
        for (auto& r : rewards) r = -4.0 - rng.uniform();
        const SweepCurve c = curve_from("m", rewards);
        const double s = sensitivity(c);
        CHECK(s >= 0.0);
        bool constant = true;
        for (double r : rewards) constant = constant && r == rewards[0];
        CHECK((s == 0.0) == constant);
    }
}

TEST_CASE("severe_mean") {
    CHECK_THAT(severe_mean(curve_from("factored", kPushFactored)),
               Catch::Matchers::WithinAbs(-4.705, 1e-9));
    CHECK_THAT(severe_mean(curve_from("two", {-1.0, -3.0})),
               Catch::Matchers::WithinAbs(-2.0, 1e-12));
    CHECK(severe_mean(curve_from("const", {-2.5, -2.5, -2.5})) == -2.5);
}

TEST_CASE("worst_case") {
    CHECK(worst_case(curve_from("lstm", kPushLstm)) == -5.09);
    CHECK(worst_case(curve_from("const", {-2.5, -2.5})) == -2.5);
    CHECK(worst_case(curve_from("dip", {-1.0, -9.0, -2.0})) == -9.0);
}

TEST_CASE("severe_mean >= worst_case on random curves") {
    Xoshiro256pp rng(2);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> rewards(2 + rng.next() % 8);
        for (auto& r : rewards) r = -6.0 + 3.0 * rng.uniform();
        const SweepCurve c = curve_from("m", rewards);
        CHECK(severe_mean(c) >= worst_case(c));
    }
}

TEST_CASE("degradation") {
    SECTION("combined-shift table values") {
        const Degradation dm = degradation(-4.48, -4.58);
        CHECK_THAT(dm.abs, Catch::Matchers::WithinAbs(0.10, 1e-9));
        CHECK_THAT(dm.pct, Catch::Matchers::WithinAbs(2.2321, 0.001));
        CHECK_FALSE(dm.improved);

        const Degradation lstm = degradation(-4.18, -4.88);
        CHECK_THAT(lstm.abs, Catch::Matchers::WithinAbs(0.70, 1e-9));
        CHECK_THAT(lstm.pct, Catch::Matchers::WithinAbs(16.746, 0.001));
    }
    SECTION("no change") {
        const Degradation d = degradation(-4.0, -4.0);
        CHECK(d.abs == 0.0);
        CHECK(d.pct == 0.0);
    }
    SECTION("improvement is flagged, not negated") {
        const Degradation d = degradation(-4.0, -3.9);
        CHECK(d.improved);
        CHECK(d.pct > 0.0);
    }
    SECTION("scale invariance of the percentage") {
        const Degradation a = degradation(-4.48, -4.58);
        const Degradation b = degradation(-44.8, -45.8);
        CHECK_THAT(a.pct, Catch::Matchers::WithinAbs(b.pct, 1e-9));
    }
    SECTION("zero ID reward") {
        CHECK_THROWS_AS(degradation(0.0, -1.0), NumericError);
    }
}

TEST_CASE("crossover") {
    SECTION("combined-shift reference levels cross at L4") {
        const std::vector<int> levels{0, 1, 2, 4};
        const SweepCurve dynamite =
            curve_from("factored", {-4.38, -4.47, -4.50, -4.63}, &levels);
        const SweepCurve lstm = curve_from("lstm", {-3.56, -4.23, -4.40, -5.12}, &levels);
        const auto level = crossover(dynamite, lstm);
        REQUIRE(level.has_value());
        CHECK(*level == 4);
    }
    SECTION("never crossing") {
        const SweepCurve a = curve_from("a", {-5.0, -5.0, -5.0});
        const SweepCurve b = curve_from("b", {-4.0, -4.0, -4.0});
        CHECK_FALSE(crossover(a, b).has_value());
    }
    SECTION("matching at level 0 counts") {
        const SweepCurve a = curve_from("a", {-4.0, -5.0});
        const SweepCurve b = curve_from("b", {-4.0, -4.5});
        const auto level = crossover(a, b);
        REQUIRE(level.has_value());
        CHECK(*level == 0);
    }
    SECTION("crossover with itself is the first level") {
        const std::vector<int> levels{3, 5, 9};
        const SweepCurve a = curve_from("a", {-4.0, -4.5, -5.0}, &levels);
        CHECK(crossover(a, a).value() == 3);
    }
    SECTION("level-set mismatch") {
        const std::vector<int> l1{0, 1, 2};
        const std::vector<int> l2{0, 1, 3};
        const SweepCurve a = curve_from("a", {-1, -2, -3}, &l1);
        const SweepCurve b = curve_from("b", {-1, -2, -3}, &l2);
        CHECK_THROWS_AS(crossover(a, b), DataError);
    }
}

namespace {

EpisodeTrace trace_with_post_push(const std::vector<double>& post,
                                  std::size_t window = 40) {
    EpisodeTrace t;
    t.errors = {0.2, 0.3};     // pre-push steps
    t.errors.push_back(0.4);   // push step itself (index 2)
    t.errors.insert(t.errors.end(), post.begin(), post.end());
    t.push_step = 2;
    t.window = window;
    return t;
}

} // namespace

TEST_CASE("recovery_time") {
    SECTION("counts steps to the first error below threshold") {
        const Recovery r = recovery_time(trace_with_post_push({4.0, 3.0, 2.0, 1.4, 1.0}));
        CHECK(r.steps == 4);
        CHECK_FALSE(r.censored);
    }
    SECTION("immediate recovery") {
        const Recovery r = recovery_time(trace_with_post_push({1.2, 3.0}));
        CHECK(r.steps == 1);
        CHECK_FALSE(r.censored);
    }
    SECTION("censored at the window") {
        std::vector<double> post(60, 5.0);
        const Recovery r = recovery_time(trace_with_post_push(post, 40));
        CHECK(r.steps == 40);
        CHECK(r.censored);
    }
    SECTION("trace shorter than the window still censors at the window") {
        const Recovery r = recovery_time(trace_with_post_push({5.0, 5.0}, 40));
        CHECK(r.steps == 40);
        CHECK(r.censored);
    }
    SECTION("push step itself is excluded") {
        EpisodeTrace t;
        t.errors = {0.1, 9.0, 2.0, 1.0}; // push at index 1 has error 9.0
        t.push_step = 1;
        t.window = 10;
        const Recovery r = recovery_time(t, 1.5);
        CHECK(r.steps == 2);
    }
    SECTION("include_push_step counts from the push itself") {
        EpisodeTrace t;
        t.errors = {0.1, 1.0, 9.0, 1.2}; // push error already below threshold
        t.push_step = 1;
        t.window = 10;
        CHECK(recovery_time(t, 1.5, true).steps == 0);
        CHECK(recovery_time(t, 1.5, false).steps == 2);
    }
    SECTION("monotone in threshold") {
        Xoshiro256pp rng(5);
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> post(30);
            for (auto& e : post) e = 4.0 * rng.uniform();
            const EpisodeTrace t = trace_with_post_push(post, 30);
            const Recovery lo = recovery_time(t, 1.0);
            const Recovery hi = recovery_time(t, 2.5);
            CHECK(hi.steps <= lo.steps);
        }
    }
}

TEST_CASE("peak_error") {
    CHECK(peak_error(trace_with_post_push({4.0, 3.0, 2.0})) == 4.0);
    CHECK(peak_error(trace_with_post_push({1.0, 2.0, 7.5, 3.0, 0.5})) == 7.5);
    // The push step itself is excluded from the window.
    EpisodeTrace t;
    t.errors = {0.1, 9.0, 2.0, 1.0};
    t.push_step = 1;
    t.window = 10;
    CHECK(peak_error(t) == 2.0);
}

TEST_CASE("intervention_delta") {
    SECTION("no change gives zero") {
        std::vector<InterventionRecord> recs{{"friction", "0", "1", -4.5, -4.5},
                                             {"friction", "1", "1", -4.5, -4.5}};
        CHECK(intervention_delta(recs).at("friction") == 0.0);
    }
    SECTION("mean of absolute deltas") {
        std::vector<InterventionRecord> recs{{"mass", "0", "1", -4.5, -4.48},
                                             {"mass", "1", "1", -4.5, -4.54}};
        CHECK_THAT(intervention_delta(recs).at("mass"),
                   Catch::Matchers::WithinAbs(0.03, 1e-12));
    }
    SECTION("empty input") {
        CHECK_THROWS_AS(intervention_delta({}), DataError);
    }
}

TEST_CASE("sweep csv loader") {
    const std::string path = temp_path("latdiag_sweep.csv");
    SECTION("groups by model and seed, sorts by level") {
        write_text(path,
                   "model,seed,level,mean_reward\n"
                   "dynamite,42,1,-4.44\n"
                   "dynamite,42,0,-4.37\n"
                   "lstm,42,0,-3.58\n"
                   "lstm,42,1,-4.05\n");
        const auto curves = load_sweep_csv(path);
        REQUIRE(curves.size() == 2);
        CHECK(curves[0].model == "factored");
        CHECK(curves[0].levels[0].severity == 0);
        CHECK(curves[0].levels[0].mean_reward == -4.37);
        CHECK(curves[1].model == "lstm");
    }
    SECTION("duplicate level is an error") {
        write_text(path,
                   "model,seed,level,mean_reward\n"
                   "m,1,0,-4.0\n"
                   "m,1,0,-4.1\n");
        CHECK_THROWS_WITH(load_sweep_csv(path),
                          Catch::Matchers::ContainsSubstring("duplicate level"));
    }
    SECTION("missing column") {
        write_text(path, "model,seed,level\nm,1,0\n");
        CHECK_THROWS_WITH(load_sweep_csv(path),
                          Catch::Matchers::ContainsSubstring("mean_reward"));
    }
}

TEST_CASE("trace csv loader") {
    const std::string path = temp_path("latdiag_traces.csv");
    SECTION("inline push_step column") {
        write_text(path,
                   "episode_id,step,tracking_error,push_step\n"
                   "ep0,0,0.2,1\n"
                   "ep0,1,4.0,1\n"
                   "ep0,2,1.0,1\n"
                   "ep1,0,0.3,0\n"
                   "ep1,1,2.0,0\n");
        const auto traces = load_traces_csv(path, 40);
        REQUIRE(traces.size() == 2);
        CHECK(traces[0].first == "ep0");
        CHECK(traces[0].second.push_step == 1);
        CHECK(traces[0].second.errors.size() == 3);
        CHECK(traces[1].second.push_step == 0);
    }
    SECTION("sidecar push steps") {
        write_text(path,
                   "episode_id,step,tracking_error\n"
                   "ep0,0,0.2\n"
                   "ep0,1,4.0\n");
        const std::string sidecar = temp_path("latdiag_push.csv");
        write_text(sidecar, "episode_id,push_step\nep0,0\n");
        const auto traces = load_traces_csv(path, 40, sidecar);
        REQUIRE(traces.size() == 1);
        CHECK(traces[0].second.push_step == 0);
    }
    SECTION("missing push information") {
        write_text(path, "episode_id,step,tracking_error\nep0,0,0.2\n");
        CHECK_THROWS_AS(load_traces_csv(path, 40), DataError);
    }
    SECTION("non-contiguous steps") {
        write_text(path,
                   "episode_id,step,tracking_error,push_step\n"
                   "ep0,0,0.2,0\n"
                   "ep0,2,4.0,0\n");
        CHECK_THROWS_WITH(load_traces_csv(path, 40),
                          Catch::Matchers::ContainsSubstring("non-contiguous"));
    }
    SECTION("inconsistent inline push step") {
        write_text(path,
                   "episode_id,step,tracking_error,push_step\n"
                   "ep0,0,0.2,0\n"
                   "ep0,1,4.0,1\n");
        CHECK_THROWS_WITH(load_traces_csv(path, 40),
                          Catch::Matchers::ContainsSubstring("inconsistent"));
    }
}

TEST_CASE("intervention csv loader") {
    const std::string path = temp_path("latdiag_intervene.csv");
    write_text(path,
               "factor,dr_level,seed,baseline_reward,clamped_reward\n"
               "friction,0,42,-4.50,-4.493\n"
               "friction,1,42,-4.52,-4.527\n"
               "mass,0,42,-4.50,-4.512\n");
    const auto records = load_interventions_csv(path);
    REQUIRE(records.size() == 3);
    const auto deltas = intervention_delta(records);
    CHECK_THAT(deltas.at("friction"), Catch::Matchers::WithinAbs(0.007, 1e-12));
    CHECK_THAT(deltas.at("mass"), Catch::Matchers::WithinAbs(0.012, 1e-12));
}

TEST_CASE("curve validation") {
    SECTION("needs two levels") {
        SweepCurve c = curve_from("m", {-1.0});
        CHECK_THROWS_AS(check_curve(c), DataError);
    }
    SECTION("severity must ascend") {
        const std::vector<int> levels{3, 3};
        SweepCurve c = curve_from("m", {-1.0, -2.0}, &levels);
        CHECK_THROWS_AS(check_curve(c), DataError);
    }
}

TEST_CASE("trace validation") {
    EpisodeTrace t;
    t.errors = {1.0};
    t.push_step = 1; // out of bounds
    t.window = 40;
    CHECK_THROWS_AS(check_trace(t), DataError);
    t.push_step = 0;
    CHECK_NOTHROW(check_trace(t)); // push at the last index is permitted
    t.errors = {1.0, -0.5};
    CHECK_THROWS_AS(check_trace(t), DataError);
    t.errors = {1.0, 0.5};
    t.window = 0;
    CHECK_THROWS_AS(check_trace(t), DataError);
}
