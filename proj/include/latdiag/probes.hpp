#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latdiag/error.hpp"
#include "latdiag/linalg.hpp"
#include "latdiag/matrix.hpp"
#include "latdiag/mlp.hpp"
#include "latdiag/parallel.hpp"
#include "latdiag/rng.hpp"

namespace latdiag::probes {

enum class ProbeKind { Linear, Mlp };

struct ProbeConfig {
    ProbeKind kind = ProbeKind::Linear;
    std::size_t folds = 5;
    double ridge_alpha = 1.0;
    std::size_t mlp_hidden = 64;
    std::size_t mlp_epochs = 200;
    double mlp_learning_rate = 1e-3;
    std::size_t mlp_patience = 20;
    Activation mlp_activation = Activation::Tanh;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct ProbeResult {
    std::map<std::string, double> per_factor_r2;
    double overall_r2 = 0.0;
    std::map<std::string, std::vector<double>> per_fold_r2;
};

struct RidgeFit {
    std::vector<double> weights; // original feature scale
    double intercept = 0.0;
    // Solver-space quantities: coefficients on standardized features, and the
    // standardization itself. std_weights are what DCI uses as importances.
    std::vector<double> std_weights;
    std::vector<double> feature_mean;
    std::vector<double> feature_scale; // population std; 0 for constant columns
    double target_mean = 0.0;
};

// Ridge regression with unpenalized intercept: features are standardized
// (zero mean, unit population variance), the penalty applies to the
// standardized coefficients, and coefficients are mapped back to the
// original scale. A zero-variance column is dropped (coefficient 0) when
// alpha > 0 and is an error when alpha == 0.
inline RidgeFit ridge_fit(const Eigen::Ref<const EigenRowMajor>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y,
                          double alpha) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (n != y.size()) throw NumericError("ridge_fit: row count does not match target length");
    if (n < 2) throw NumericError("ridge_fit: need at least 2 samples");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw NumericError("ridge_fit: alpha must be finite and >= 0");
    }

    const ColumnStats stats = column_stats(x);
    EigenRowMajor xs(n, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const double sd = stats.std(c);
        if (sd == 0.0) {
            if (alpha == 0.0) {
                throw NumericError("ridge_fit: zero-variance column " +
                                   std::to_string(c) + " with alpha=0 (singular system)");
            }
            xs.col(c).setZero();
        } else {
            xs.col(c) = (x.col(c).array() - stats.mean(c)) / sd;
        }
    }
    const double y_mean = y.mean();
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::VectorXd ws;
    if (alpha > 0.0) {
        Eigen::MatrixXd gram = xs.transpose() * xs;
        gram.diagonal().array() += alpha;
        ws = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(xs.transpose() * yc);
    } else {
        ws = xs.colPivHouseholderQr().solve(yc);
    }

    RidgeFit fit;
    fit.std_weights.assign(ws.data(), ws.data() + d);
    fit.feature_mean.assign(stats.mean.data(), stats.mean.data() + d);
    fit.feature_scale.assign(stats.std.data(), stats.std.data() + d);
    fit.target_mean = y_mean;
    fit.weights.resize(static_cast<std::size_t>(d));
    double offset = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
        const double sd = stats.std(c);
        const double w = sd == 0.0 ? 0.0 : ws(c) / sd;
        fit.weights[static_cast<std::size_t>(c)] = w;
        offset += w * stats.mean(c);
    }
    fit.intercept = y_mean - offset;
    return fit;
}

inline Eigen::VectorXd ridge_predict(const RidgeFit& fit,
                                     const Eigen::Ref<const EigenRowMajor>& x) {
    const Eigen::Map<const Eigen::VectorXd> w(fit.weights.data(),
                                              static_cast<Eigen::Index>(fit.weights.size()));
    return (x * w).array() + fit.intercept;
}

// Coefficient of determination, 1 - SS_res / SS_tot. May be negative.
inline double r2_score(const std::vector<double>& y_true,
                       const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw NumericError("r2_score: length mismatch");
    }
    if (y_true.size() < 2) throw NumericError("r2_score: need at least 2 samples");
    const double mean =
        std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    }
    if (ss_tot == 0.0) throw NumericError("r2_score: zero-variance target");
    return 1.0 - ss_res / ss_tot;
}

namespace detail {

// Contiguous blocks over a seed-shuffled index permutation; the first
// (n mod folds) folds take one extra sample.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n,
                                                        std::size_t folds,
                                                        std::uint64_t seed) {
    if (folds < 2) throw UsageError("cross-validation: folds must be >= 2");
    if (n < folds) {
        throw NumericError("cross-validation: fewer rows (" + std::to_string(n) +
                           ") than folds (" + std::to_string(folds) + ")");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Xoshiro256pp rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::vector<std::size_t>> out(folds);
    const std::size_t base = n / folds;
    const std::size_t extra = n % folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        out[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                      idx.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return out;
}

inline EigenRowMajor gather_rows(const Eigen::Ref<const EigenRowMajor>& x,
                                 const std::vector<std::size_t>& rows) {
    EigenRowMajor out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

inline std::vector<double> gather(const std::vector<double>& v,
                                  const std::vector<std::size_t>& rows) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
    return out;
}

} // namespace detail

// K-fold cross-validated probe. Per-factor score is the mean of out-of-fold
// R2 values; overall is the unweighted mean over factors. Fold assignment
// and all training randomness derive from config.seed, so the result is
// independent of thread count.
inline ProbeResult cv_probe(const Dataset& dataset, const ProbeConfig& config) {
    const std::size_t n = dataset.rows();
    const std::size_t n_factors = dataset.factors.count();
    const auto folds = detail::make_folds(n, config.folds, substream(config.seed, 0));

    const auto x = as_eigen(dataset.repr.matrix);
    std::vector<std::vector<std::size_t>> train_sets(config.folds);
    std::vector<EigenRowMajor> x_train(config.folds), x_test(config.folds);
    for (std::size_t f = 0; f < config.folds; ++f) {
        for (std::size_t g = 0; g < config.folds; ++g) {
            if (g == f) continue;
            train_sets[f].insert(train_sets[f].end(), folds[g].begin(), folds[g].end());
        }
        x_train[f] = detail::gather_rows(x, train_sets[f]);
        x_test[f] = detail::gather_rows(x, folds[f]);
    }

    const std::size_t n_tasks = n_factors * config.folds;
    std::vector<double> scores(n_tasks, 0.0);
    parallel_for(n_tasks, config.threads, [&](std::size_t task) {
        const std::size_t factor = task / config.folds;
        const std::size_t fold = task % config.folds;
        const std::vector<double> y_col = dataset.factors.matrix.column(factor);
        const std::vector<double> y_train = detail::gather(y_col, train_sets[fold]);
        const std::vector<double> y_test = detail::gather(y_col, folds[fold]);
        std::vector<double> pred(y_test.size());
        if (config.kind == ProbeKind::Linear) {
            const Eigen::Map<const Eigen::VectorXd> yt(y_train.data(),
                                                       static_cast<Eigen::Index>(y_train.size()));
            const RidgeFit fit = ridge_fit(x_train[fold], yt, config.ridge_alpha);
            const Eigen::VectorXd p = ridge_predict(fit, x_test[fold]);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                pred[i] = p(static_cast<Eigen::Index>(i));
            }
        } else {
            MlpConfig mcfg;
            mcfg.hidden = config.mlp_hidden;
            mcfg.epochs = config.mlp_epochs;
            mcfg.learning_rate = config.mlp_learning_rate;
            mcfg.patience = config.mlp_patience;
            mcfg.activation = config.mlp_activation;
            mcfg.seed = substream(config.seed, 100 + task);
            MlpRegressor net(static_cast<std::size_t>(x.cols()), mcfg);
            net.fit(x_train[fold], y_train);
            pred = net.predict(x_test[fold]);
        }
        scores[task] = r2_score(y_test, pred);
    });

    ProbeResult result;
    double overall = 0.0;
    for (std::size_t factor = 0; factor < n_factors; ++factor) {
        const std::string& name = dataset.factors.factor_names[factor];
        std::vector<double> fold_scores(scores.begin() + static_cast<std::ptrdiff_t>(factor * config.folds),
                                        scores.begin() + static_cast<std::ptrdiff_t>((factor + 1) * config.folds));
        const double mean =
            std::accumulate(fold_scores.begin(), fold_scores.end(), 0.0) /
            static_cast<double>(fold_scores.size());
        result.per_factor_r2[name] = mean;
        result.per_fold_r2[name] = std::move(fold_scores);
        overall += mean;
    }
    result.overall_r2 = overall / static_cast<double>(n_factors);
    return result;
}

} // namespace latdiag::probes
