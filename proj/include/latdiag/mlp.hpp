#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latdiag/error.hpp"
#include "latdiag/linalg.hpp"
#include "latdiag/rng.hpp"

namespace latdiag {

enum class Activation { Tanh, Relu };

struct MlpConfig {
    std::size_t hidden = 64;
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    std::size_t patience = 20;
    std::size_t batch_size = 128;
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;
};

// Single-hidden-layer tanh regressor trained with Adam on mini-batch MSE.
// Inputs and target are standardized internally. 10% of the training data is
// held out for early stopping; the best validation parameters are restored.
// Fully deterministic given the config seed.
class MlpRegressor {
public:
    MlpRegressor(std::size_t in_dim, MlpConfig config)
        : config_(config), in_dim_(in_dim) {
        if (in_dim < 1) throw NumericError("mlp: need at least one input dimension");
        if (config.hidden < 1) throw NumericError("mlp: need at least one hidden unit");
        Xoshiro256pp init_rng(substream(config.seed, 1));
        const double bound1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
        w1_.resize(static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(config.hidden));
        for (Eigen::Index r = 0; r < w1_.rows(); ++r) {
            for (Eigen::Index c = 0; c < w1_.cols(); ++c) {
                w1_(r, c) = bound1 * init_rng.uniform_sym();
            }
        }
        b1_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.hidden));
        const double bound2 = 1.0 / std::sqrt(static_cast<double>(config.hidden));
        w2_.resize(static_cast<Eigen::Index>(config.hidden));
        for (Eigen::Index r = 0; r < w2_.size(); ++r) {
            w2_(r) = bound2 * init_rng.uniform_sym();
        }
        b2_ = 0.0;
        x_mean_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(in_dim));
        x_scale_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(in_dim));
    }

    std::size_t parameter_count() const {
        return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size()) + 1;
    }

    Eigen::VectorXd parameters() const {
        Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
        Eigen::Index pos = 0;
        for (Eigen::Index c = 0; c < w1_.cols(); ++c) {
            p.segment(pos, w1_.rows()) = w1_.col(c);
            pos += w1_.rows();
        }
        p.segment(pos, b1_.size()) = b1_;
        pos += b1_.size();
        p.segment(pos, w2_.size()) = w2_;
        pos += w2_.size();
        p(pos) = b2_;
        return p;
    }

    void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& p) {
        Eigen::Index pos = 0;
        for (Eigen::Index c = 0; c < w1_.cols(); ++c) {
            w1_.col(c) = p.segment(pos, w1_.rows());
            pos += w1_.rows();
        }
        b1_ = p.segment(pos, b1_.size());
        pos += b1_.size();
        w2_ = p.segment(pos, w2_.size());
        pos += w2_.size();
        b2_ = p(pos);
    }

    // Mean squared error of the network on pre-standardized inputs/targets.
    double loss_std(const Eigen::Ref<const EigenRowMajor>& xs,
                    const Eigen::Ref<const Eigen::VectorXd>& ys) const {
        const Eigen::MatrixXd h = activate((xs * w1_).rowwise() + b1_.transpose());
        const Eigen::VectorXd pred = (h * w2_).array() + b2_;
        return (pred - ys).squaredNorm() / static_cast<double>(xs.rows());
    }

    // Gradient of loss_std with respect to the flattened parameter vector,
    // laid out as in parameters().
    Eigen::VectorXd gradient_std(const Eigen::Ref<const EigenRowMajor>& xs,
                                 const Eigen::Ref<const Eigen::VectorXd>& ys) const {
        const double inv_n = 1.0 / static_cast<double>(xs.rows());
        const Eigen::MatrixXd a = (xs * w1_).rowwise() + b1_.transpose();
        const Eigen::MatrixXd h = activate(a);
        const Eigen::VectorXd pred = (h * w2_).array() + b2_;
        const Eigen::VectorXd resid = 2.0 * inv_n * (pred - ys);

        const Eigen::VectorXd g_w2 = h.transpose() * resid;
        const double g_b2 = resid.sum();
        const Eigen::MatrixXd dh =
            (resid * w2_.transpose()).array() * activation_grad(a, h).array();
        const Eigen::MatrixXd g_w1 = xs.transpose() * dh;
        const Eigen::VectorXd g_b1 = dh.colwise().sum();

        Eigen::VectorXd g(static_cast<Eigen::Index>(parameter_count()));
        Eigen::Index pos = 0;
        for (Eigen::Index c = 0; c < g_w1.cols(); ++c) {
            g.segment(pos, g_w1.rows()) = g_w1.col(c);
            pos += g_w1.rows();
        }
        g.segment(pos, g_b1.size()) = g_b1;
        pos += g_b1.size();
        g.segment(pos, g_w2.size()) = g_w2;
        pos += g_w2.size();
        g(pos) = g_b2;
        return g;
    }

    void fit(const Eigen::Ref<const EigenRowMajor>& x, const std::vector<double>& y) {
        const std::size_t n = static_cast<std::size_t>(x.rows());
        if (n != y.size()) throw NumericError("mlp: row count does not match target length");
        if (n < 2) throw NumericError("mlp: need at least 2 samples");

        // Standardize inputs and target on the provided data.
        const ColumnStats stats = column_stats(x);
        x_mean_ = stats.mean;
        x_scale_ = stats.std;
        for (Eigen::Index c = 0; c < x_scale_.size(); ++c) {
            if (x_scale_(c) == 0.0) x_scale_(c) = 1.0;
        }
        EigenRowMajor xs(x.rows(), x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            xs.col(c) = (x.col(c).array() - x_mean_(c)) / x_scale_(c);
        }
        y_mean_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
        double var = 0.0;
        for (double v : y) var += (v - y_mean_) * (v - y_mean_);
        var /= static_cast<double>(n);
        y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
        Eigen::VectorXd ys(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            ys(static_cast<Eigen::Index>(i)) = (y[i] - y_mean_) / y_scale_;
        }

        // Early-stopping split: last 10% of a seed-shuffled permutation.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        Xoshiro256pp split_rng(substream(config_.seed, 0));
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(split_rng.next() % (i + 1));
            std::swap(idx[i], idx[j]);
        }
        const std::size_t n_val = std::max<std::size_t>(1, n / 10);
        const std::size_t n_train = n - n_val;
        if (n_train == 0) throw NumericError("mlp: not enough samples to train");
        std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        std::vector<std::size_t> val_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());

        EigenRowMajor x_val(static_cast<Eigen::Index>(n_val), x.cols());
        Eigen::VectorXd y_val(static_cast<Eigen::Index>(n_val));
        for (std::size_t i = 0; i < n_val; ++i) {
            x_val.row(static_cast<Eigen::Index>(i)) = xs.row(static_cast<Eigen::Index>(val_idx[i]));
            y_val(static_cast<Eigen::Index>(i)) = ys(static_cast<Eigen::Index>(val_idx[i]));
        }

        // Adam state.
        Eigen::VectorXd params = parameters();
        Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
        Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
        constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
        std::size_t step = 0;

        Xoshiro256pp batch_rng(substream(config_.seed, 2));
        const std::size_t batch = std::min(config_.batch_size, n_train);
        double best_val = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_params = params;
        std::size_t since_best = 0;

        EigenRowMajor xb(static_cast<Eigen::Index>(batch), x.cols());
        Eigen::VectorXd yb(static_cast<Eigen::Index>(batch));
        for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
            for (std::size_t i = n_train - 1; i > 0; --i) {
                const std::size_t j = static_cast<std::size_t>(batch_rng.next() % (i + 1));
                std::swap(train_idx[i], train_idx[j]);
            }
            for (std::size_t start = 0; start < n_train; start += batch) {
                const std::size_t len = std::min(batch, n_train - start);
                for (std::size_t i = 0; i < len; ++i) {
                    xb.row(static_cast<Eigen::Index>(i)) =
                        xs.row(static_cast<Eigen::Index>(train_idx[start + i]));
                    yb(static_cast<Eigen::Index>(i)) =
                        ys(static_cast<Eigen::Index>(train_idx[start + i]));
                }
                const auto xbv = xb.topRows(static_cast<Eigen::Index>(len));
                const auto ybv = yb.head(static_cast<Eigen::Index>(len));
                const Eigen::VectorXd g = gradient_std(xbv, ybv);
                ++step;
                m = kBeta1 * m + (1.0 - kBeta1) * g;
                v = kBeta2 * v.array().matrix() + (1.0 - kBeta2) * g.array().square().matrix();
                const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
                params.array() -= config_.learning_rate * (m.array() / bc1) /
                                  ((v.array() / bc2).sqrt() + kEps);
                set_parameters(params);
            }
            const double val_mse = loss_std(x_val, y_val);
            if (!std::isfinite(val_mse)) {
                throw NumericError("mlp: non-finite loss at epoch " + std::to_string(epoch));
            }
            if (val_mse < best_val) {
                best_val = val_mse;
                best_params = params;
                since_best = 0;
            } else if (++since_best > config_.patience) {
                break;
            }
        }
        set_parameters(best_params);
    }

    std::vector<double> predict(const Eigen::Ref<const EigenRowMajor>& x) const {
        EigenRowMajor xs(x.rows(), x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            xs.col(c) = (x.col(c).array() - x_mean_(c)) / x_scale_(c);
        }
        const Eigen::MatrixXd h = activate((xs * w1_).rowwise() + b1_.transpose());
        const Eigen::VectorXd pred = (h * w2_).array() + b2_;
        std::vector<double> out(static_cast<std::size_t>(x.rows()));
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = pred(static_cast<Eigen::Index>(i)) * y_scale_ + y_mean_;
        }
        return out;
    }

private:
    Eigen::MatrixXd activate(const Eigen::MatrixXd& a) const {
        if (config_.activation == Activation::Relu) return a.array().max(0.0).matrix();
        return a.array().tanh().matrix();
    }

    // Elementwise derivative of the activation at pre-activation a, given
    // the activation output h.
    Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& h) const {
        if (config_.activation == Activation::Relu) {
            return (a.array() > 0.0).cast<double>().matrix();
        }
        return (1.0 - h.array().square()).matrix();
    }

    MlpConfig config_;
    std::size_t in_dim_;
    Eigen::MatrixXd w1_;
    Eigen::VectorXd b1_;
    Eigen::VectorXd w2_;
    double b2_ = 0.0;
    Eigen::VectorXd x_mean_, x_scale_;
    double y_mean_ = 0.0, y_scale_ = 1.0;
};

} // namespace latdiag
