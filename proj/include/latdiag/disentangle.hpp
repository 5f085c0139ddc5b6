#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "latdiag/error.hpp"
#include "latdiag/linalg.hpp"
#include "latdiag/matrix.hpp"
#include "latdiag/mi.hpp"
#include "latdiag/probes.hpp"

namespace latdiag::info {

struct MigResult {
    double score = 0.0;                       // mean over non-degenerate factors
    std::map<std::string, double> per_factor; // normalized top-two MI gap
    std::vector<std::string> skipped;         // factors with zero histogram entropy
    std::size_t bins = 0;
};

struct DciResult {
    double disentanglement = 0.0; // [0, 1]
    double completeness = 0.0;    // [0, 1]
    double informativeness = 0.0; // normalized prediction error, lower better
    Matrix importance;            // D x F, columns normalized
};

struct SapResult {
    double score = 0.0;
    std::map<std::string, double> per_factor;
};

struct AlignmentReport {
    double score = 0.0;                 // mean ratio over partition-covered dims
    std::vector<double> per_dim_ratio;  // length D; 0 for uncovered dims
    double chance_level = 0.0;          // 1 / F
    std::vector<std::size_t> flagged_dims; // covered dims with zero denominator
};

namespace detail {

inline double entropy_of(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

// Pearson correlation; 0 when either variable has zero variance.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

inline double top_two_gap(std::vector<double> values) {
    std::sort(values.begin(), values.end(), std::greater<double>());
    const double top = values.empty() ? 0.0 : values[0];
    const double second = values.size() > 1 ? values[1] : 0.0;
    return top - second;
}

} // namespace detail

// Mutual Information Gap over uniform-width histograms: per factor, the gap
// between the two largest per-dimension MIs, normalized by the factor's
// histogram entropy. Degenerate factors (zero range) are skipped and listed.
inline MigResult mig(const Dataset& dataset, std::size_t bins = 20) {
    const std::size_t n_dims = dataset.repr.dims();
    const std::size_t n_factors = dataset.factors.count();
    MigResult result;
    result.bins = bins;

    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < n_factors; ++f) {
        const std::string& name = dataset.factors.factor_names[f];
        const std::vector<double> fv = dataset.factors.matrix.column(f);
        const double h = hist_entropy(fv, bins);
        if (h <= 0.0) {
            result.skipped.push_back(name);
            continue;
        }
        std::vector<double> mis(n_dims);
        for (std::size_t d = 0; d < n_dims; ++d) {
            mis[d] = hist_mi(dataset.repr.matrix.column(d), fv, bins);
        }
        const double gap = detail::top_two_gap(std::move(mis)) / h;
        const double clamped = std::clamp(gap, 0.0, 1.0);
        result.per_factor[name] = clamped;
        total += clamped;
        ++used;
    }
    if (used == 0) throw NumericError("mig: all factors degenerate");
    result.score = total / static_cast<double>(used);
    return result;
}

// DCI from a ridge importance matrix: importance[d, f] is the absolute
// standardized ridge coefficient of dimension d when predicting factor f on
// the full data. Disentanglement and completeness are entropy-based scores
// over rows/columns; informativeness is the out-of-fold MSE normalized by
// factor variance (so a constant predictor scores ~1).
inline DciResult dci(const Dataset& dataset, std::size_t folds = 5,
                     double alpha = 1.0, std::uint64_t seed = 0) {
    const std::size_t n = dataset.rows();
    const std::size_t n_dims = dataset.repr.dims();
    const std::size_t n_factors = dataset.factors.count();
    const auto x = as_eigen(dataset.repr.matrix);

    DciResult result;
    result.importance = Matrix(n_dims, n_factors);
    for (std::size_t f = 0; f < n_factors; ++f) {
        const std::vector<double> y = dataset.factors.matrix.column(f);
        const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
        const probes::RidgeFit fit = probes::ridge_fit(x, yv, alpha);
        for (std::size_t d = 0; d < n_dims; ++d) {
            result.importance.at(d, f) = std::fabs(fit.std_weights[d]);
        }
    }
    for (std::size_t f = 0; f < n_factors; ++f) {
        double col_sum = 0.0;
        for (std::size_t d = 0; d < n_dims; ++d) col_sum += result.importance.at(d, f);
        if (col_sum > 0.0) {
            for (std::size_t d = 0; d < n_dims; ++d) result.importance.at(d, f) /= col_sum;
        }
    }

    // Disentanglement: row-entropy-based, weighted by row mass.
    const double ln_f = n_factors > 1 ? std::log(static_cast<double>(n_factors)) : 1.0;
    double total_mass = 0.0;
    std::vector<double> row_mass(n_dims, 0.0);
    for (std::size_t d = 0; d < n_dims; ++d) {
        for (std::size_t f = 0; f < n_factors; ++f) row_mass[d] += result.importance.at(d, f);
        total_mass += row_mass[d];
    }
    double disent = 0.0;
    if (total_mass > 0.0) {
        for (std::size_t d = 0; d < n_dims; ++d) {
            if (row_mass[d] == 0.0) continue;
            std::vector<double> p(n_factors);
            for (std::size_t f = 0; f < n_factors; ++f) {
                p[f] = result.importance.at(d, f) / row_mass[d];
            }
            const double score = n_factors > 1 ? 1.0 - detail::entropy_of(p) / ln_f : 1.0;
            disent += (row_mass[d] / total_mass) * score;
        }
    }
    result.disentanglement = std::clamp(disent, 0.0, 1.0);

    // Completeness: column-entropy-based, plain mean over factors.
    const double ln_d = n_dims > 1 ? std::log(static_cast<double>(n_dims)) : 1.0;
    double complete = 0.0;
    for (std::size_t f = 0; f < n_factors; ++f) {
        std::vector<double> p(n_dims);
        double col_sum = 0.0;
        for (std::size_t d = 0; d < n_dims; ++d) {
            p[d] = result.importance.at(d, f);
            col_sum += p[d];
        }
        if (col_sum == 0.0) continue;
        complete += n_dims > 1 ? 1.0 - detail::entropy_of(p) / ln_d : 1.0;
    }
    result.completeness = std::clamp(complete / static_cast<double>(n_factors), 0.0, 1.0);

    // Informativeness: pooled out-of-fold normalized MSE, averaged over factors.
    const auto fold_sets = probes::detail::make_folds(n, folds, substream(seed, 0));
    double info = 0.0;
    for (std::size_t f = 0; f < n_factors; ++f) {
        const std::vector<double> y = dataset.factors.matrix.column(f);
        double y_mean = 0.0;
        for (double v : y) y_mean += v;
        y_mean /= static_cast<double>(n);
        double y_var = 0.0;
        for (double v : y) y_var += (v - y_mean) * (v - y_mean);
        y_var /= static_cast<double>(n);
        if (y_var == 0.0) {
            throw NumericError("dci: degenerate factor variance for \"" +
                               dataset.factors.factor_names[f] + "\"");
        }
        double sse = 0.0;
        for (std::size_t fold = 0; fold < folds; ++fold) {
            std::vector<std::size_t> train;
            for (std::size_t g = 0; g < folds; ++g) {
                if (g == fold) continue;
                train.insert(train.end(), fold_sets[g].begin(), fold_sets[g].end());
            }
            const EigenRowMajor x_train = probes::detail::gather_rows(x, train);
            const std::vector<double> y_train = probes::detail::gather(y, train);
            const Eigen::Map<const Eigen::VectorXd> yt(
                y_train.data(), static_cast<Eigen::Index>(y_train.size()));
            const probes::RidgeFit fit = probes::ridge_fit(x_train, yt, alpha);
            const EigenRowMajor x_test = probes::detail::gather_rows(x, fold_sets[fold]);
            const Eigen::VectorXd pred = probes::ridge_predict(fit, x_test);
            for (std::size_t i = 0; i < fold_sets[fold].size(); ++i) {
                const double e = pred(static_cast<Eigen::Index>(i)) - y[fold_sets[fold][i]];
                sse += e * e;
            }
        }
        info += (sse / static_cast<double>(n)) / y_var;
    }
    result.informativeness = info / static_cast<double>(n_factors);
    return result;
}

// Separated Attribute Predictability: per factor, the gap between the two
// best single-dimension OLS R2 scores (equal to squared Pearson correlation).
inline SapResult sap(const Dataset& dataset) {
    const std::size_t n_dims = dataset.repr.dims();
    const std::size_t n_factors = dataset.factors.count();
    SapResult result;
    double total = 0.0;
    for (std::size_t f = 0; f < n_factors; ++f) {
        const std::vector<double> fv = dataset.factors.matrix.column(f);
        double fv_mean = 0.0;
        for (double v : fv) fv_mean += v;
        fv_mean /= static_cast<double>(fv.size());
        double fv_var = 0.0;
        for (double v : fv) fv_var += (v - fv_mean) * (v - fv_mean);
        if (fv_var == 0.0) {
            throw NumericError("sap: degenerate factor \"" +
                               dataset.factors.factor_names[f] + "\"");
        }
        std::vector<double> scores(n_dims);
        for (std::size_t d = 0; d < n_dims; ++d) {
            const double r = detail::pearson(dataset.repr.matrix.column(d), fv);
            scores[d] = std::max(0.0, r * r);
        }
        const double gap = std::clamp(detail::top_two_gap(std::move(scores)), 0.0, 1.0);
        result.per_factor[dataset.factors.factor_names[f]] = gap;
        total += gap;
    }
    result.score = total / static_cast<double>(n_factors);
    return result;
}

// Within-factor Pearson correlation ratio: for each latent dimension assigned
// to factor f by the partition, |corr with f| divided by the summed |corr|
// against all factors. Dims with zero denominator contribute 0 and are
// flagged. Chance level for uninformative-but-correlated dims is 1/F.
inline AlignmentReport factor_alignment(const Dataset& dataset,
                                        const FactorPartition& partition) {
    const std::size_t n_dims = dataset.repr.dims();
    const std::size_t n_factors = dataset.factors.count();
    if (n_factors < 2) throw NumericError("factor_alignment: need at least 2 factors");
    check_partition(partition, n_dims);
    for (const auto& e : partition.entries) {
        bool found = false;
        for (const auto& name : dataset.factors.factor_names) {
            if (name == e.factor_name) {
                found = true;
                break;
            }
        }
        if (!found) {
            throw DataError("factor_alignment: partition factor \"" + e.factor_name +
                            "\" not present in factor set");
        }
    }

    std::vector<std::vector<double>> factor_cols(n_factors);
    for (std::size_t f = 0; f < n_factors; ++f) {
        factor_cols[f] = dataset.factors.matrix.column(f);
    }

    AlignmentReport report;
    report.per_dim_ratio.assign(n_dims, 0.0);
    report.chance_level = 1.0 / static_cast<double>(n_factors);

    double total = 0.0;
    std::size_t covered = 0;
    for (const auto& entry : partition.entries) {
        std::size_t assigned = 0;
        for (std::size_t f = 0; f < n_factors; ++f) {
            if (dataset.factors.factor_names[f] == entry.factor_name) {
                assigned = f;
                break;
            }
        }
        for (std::size_t d = entry.dim_start; d < entry.dim_end; ++d) {
            const std::vector<double> zd = dataset.repr.matrix.column(d);
            double denom = 0.0, own = 0.0;
            for (std::size_t f = 0; f < n_factors; ++f) {
                const double c = std::fabs(detail::pearson(zd, factor_cols[f]));
                denom += c;
                if (f == assigned) own = c;
            }
            double ratio = 0.0;
            if (denom > 0.0) {
                ratio = own / denom;
            } else {
                report.flagged_dims.push_back(d);
            }
            report.per_dim_ratio[d] = ratio;
            total += ratio;
            ++covered;
        }
    }
    report.score = total / static_cast<double>(covered);
    return report;
}

} // namespace latdiag::info
