#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "latdiag/linalg.hpp"
#include "latdiag/mlp.hpp"
#include "latdiag/probes.hpp"
#include "latdiag/rng.hpp"
#include "latdiag/synth.hpp"

using namespace latdiag;

TEST_CASE("mlp backprop matches central finite differences") {
    Xoshiro256pp rng(17);
    EigenRowMajor x(5, 3);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
        for (int c = 0; c < 3; ++c) x(i, c) = rng.normal();
        y(i) = rng.normal();
    }
    MlpConfig cfg;
    cfg.hidden = 4;
    cfg.seed = 2;
    MlpRegressor net(3, cfg);
    const Eigen::VectorXd p = net.parameters();
    const Eigen::VectorXd g = net.gradient_std(x, y);
    REQUIRE(g.size() == p.size());
    double max_rel = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::fabs(p(j)));
        Eigen::VectorXd pp = p;
        pp(j) += h;
        net.set_parameters(pp);
        const double lp = net.loss_std(x, y);
        pp(j) -= 2 * h;
        net.set_parameters(pp);
        const double lm = net.loss_std(x, y);
        net.set_parameters(p);
        const double fd = (lp - lm) / (2 * h);
        max_rel = std::max(max_rel, std::fabs(fd - g(j)) / std::max(1e-8, std::fabs(fd)));
    }
    CHECK(max_rel <= 1e-4);
}

TEST_CASE("relu backprop also matches finite differences") {
    Xoshiro256pp rng(19);
    EigenRowMajor x(5, 3);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
        for (int c = 0; c < 3; ++c) x(i, c) = rng.normal();
        y(i) = rng.normal();
    }
    MlpConfig cfg;
    cfg.hidden = 4;
    cfg.seed = 3;
    cfg.activation = Activation::Relu;
    MlpRegressor net(3, cfg);
    const Eigen::VectorXd p = net.parameters();
    const Eigen::VectorXd g = net.gradient_std(x, y);
    double max_rel = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::fabs(p(j)));
        Eigen::VectorXd pp = p;
        pp(j) += h;
        net.set_parameters(pp);
        const double lp = net.loss_std(x, y);
        pp(j) -= 2 * h;
        net.set_parameters(pp);
        const double lm = net.loss_std(x, y);
        net.set_parameters(p);
        const double fd = (lp - lm) / (2 * h);
        max_rel = std::max(max_rel, std::fabs(fd - g(j)) / std::max(1e-8, std::fabs(fd)));
    }
    CHECK(max_rel <= 1e-4);
}

TEST_CASE("relu network also learns the quadratic") {
    Xoshiro256pp rng(29);
    const std::size_t n = 4000, ntr = 3200;
    EigenRowMajor x(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        x(static_cast<Eigen::Index>(i), 0) = z;
        y[i] = z * z;
    }
    MlpConfig cfg;
    cfg.seed = 5;
    cfg.activation = Activation::Relu;
    MlpRegressor net(1, cfg);
    net.fit(x.topRows(ntr), std::vector<double>(y.begin(), y.begin() + ntr));
    const std::vector<double> pred = net.predict(x.bottomRows(n - ntr));
    CHECK(probes::r2_score(std::vector<double>(y.begin() + ntr, y.end()), pred) >= 0.8);
}

TEST_CASE("parameter vector round-trips") {
    MlpConfig cfg;
    cfg.hidden = 6;
    cfg.seed = 9;
    MlpRegressor net(4, cfg);
    const Eigen::VectorXd p = net.parameters();
    Eigen::VectorXd q = p;
    q.array() += 0.25;
    net.set_parameters(q);
    CHECK(net.parameters() == q);
    CHECK(net.parameter_count() == static_cast<std::size_t>(p.size()));
}

TEST_CASE("mlp learns a quadratic a linear probe cannot see") {
    Xoshiro256pp rng(9);
    const std::size_t n = 10000, ntr = 8000;
    EigenRowMajor x(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        x(static_cast<Eigen::Index>(i), 0) = z;
        y[i] = z * z;
    }
    const std::vector<double> y_train(y.begin(), y.begin() + ntr);
    const std::vector<double> y_test(y.begin() + ntr, y.end());

    MlpConfig cfg;
    cfg.seed = 5;
    MlpRegressor net(1, cfg);
    net.fit(x.topRows(ntr), y_train);
    const std::vector<double> pred = net.predict(x.bottomRows(n - ntr));
    CHECK(probes::r2_score(y_test, pred) >= 0.8);

    const Eigen::Map<const Eigen::VectorXd> yv(y_train.data(), ntr);
    const probes::RidgeFit fit = probes::ridge_fit(x.topRows(ntr), yv, 1.0);
    const Eigen::VectorXd lp = probes::ridge_predict(fit, x.bottomRows(n - ntr));
    const std::vector<double> lpv(lp.data(), lp.data() + lp.size());
    CHECK(probes::r2_score(y_test, lpv) <= 0.1);
}

TEST_CASE("mlp fits a noiseless linear map") {
    Xoshiro256pp rng(3);
    const std::size_t n = 3000;
    EigenRowMajor x(n, 4);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 4; ++c) x(static_cast<Eigen::Index>(i), c) = rng.normal();
        y[i] = 2.0 * x(static_cast<Eigen::Index>(i), 0) -
               x(static_cast<Eigen::Index>(i), 2) + 0.5;
    }
    MlpConfig cfg;
    cfg.seed = 5;
    MlpRegressor net(4, cfg);
    net.fit(x.topRows(2400), std::vector<double>(y.begin(), y.begin() + 2400));
    const std::vector<double> pred = net.predict(x.bottomRows(600));
    CHECK(probes::r2_score(std::vector<double>(y.begin() + 2400, y.end()), pred) >= 0.99);
}

TEST_CASE("mlp on independent data scores near zero") {
    const Dataset ds = synth::gen_null({4000, 1, 3, 0.0, 12});
    const auto x = as_eigen(ds.repr.matrix);
    const std::vector<double> y = ds.factors.matrix.column(0);
    MlpConfig cfg;
    cfg.seed = 4;
    MlpRegressor net(3, cfg);
    net.fit(x.topRows(3200), std::vector<double>(y.begin(), y.begin() + 3200));
    const std::vector<double> pred = net.predict(x.bottomRows(800));
    const double r2 = probes::r2_score(std::vector<double>(y.begin() + 3200, y.end()), pred);
    CHECK(r2 >= -0.1);
    CHECK(r2 <= 0.1);
}

TEST_CASE("mlp training is deterministic in the seed") {
    const Dataset ds = synth::gen_axis_aligned({600, 1, 2, 0.3, 8});
    const auto x = as_eigen(ds.repr.matrix);
    const std::vector<double> y = ds.factors.matrix.column(0);
    MlpConfig cfg;
    cfg.seed = 31;
    cfg.epochs = 30;
    MlpRegressor a(2, cfg), b(2, cfg);
    a.fit(x, y);
    b.fit(x, y);
    CHECK(a.parameters() == b.parameters());
}

TEST_CASE("diverging training reports the epoch") {
    const Dataset ds = synth::gen_axis_aligned({200, 1, 2, 0.0, 8});
    const auto x = as_eigen(ds.repr.matrix);
    const std::vector<double> y = ds.factors.matrix.column(0);
    MlpConfig cfg;
    cfg.seed = 1;
    cfg.learning_rate = 1e308; // drives parameters to overflow immediately
    MlpRegressor net(2, cfg);
    CHECK_THROWS_WITH(net.fit(x, y), Catch::Matchers::ContainsSubstring("epoch"));
}
