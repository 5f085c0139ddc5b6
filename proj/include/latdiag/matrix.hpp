#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "latdiag/error.hpp"

namespace latdiag {

// Dense row-major matrix of 64-bit floats. Rows are samples, columns are
// dimensions (latent dims or factors).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    const double* row(std::size_t r) const { return values.data() + r * cols; }
    double* row(std::size_t r) { return values.data() + r * cols; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
        return out;
    }

    bool operator==(const Matrix& other) const {
        return rows == other.rows && cols == other.cols && values == other.values;
    }
};

// Throws if the matrix violates its invariants (empty, or non-finite cells).
// `what` names the matrix in error messages.
inline void check_matrix(const Matrix& m, const std::string& what) {
    if (m.rows < 1 || m.cols < 1) {
        throw DataError(what + ": matrix must have at least one row and one column");
    }
    if (m.values.size() != m.rows * m.cols) {
        throw DataError(what + ": value buffer size does not match declared shape");
    }
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            if (!std::isfinite(m.at(r, c))) {
                throw DataError(what + ": non-finite value at row " + std::to_string(r) +
                                ", column " + std::to_string(c));
            }
        }
    }
}

inline void check_unique_names(const std::vector<std::string>& names,
                               const std::string& what) {
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) {
            throw DataError(what + ": duplicate name \"" + n + "\"");
        }
    }
}

// A matrix of representation samples plus per-dimension names.
struct RepresentationSet {
    Matrix matrix;
    std::vector<std::string> dim_names;

    std::size_t rows() const { return matrix.rows; }
    std::size_t dims() const { return matrix.cols; }
};

// A matrix of ground-truth factor values plus per-factor names.
struct FactorSet {
    Matrix matrix;
    std::vector<std::string> factor_names;

    std::size_t rows() const { return matrix.rows; }
    std::size_t count() const { return matrix.cols; }
};

// Row-aligned pair of representations and factors.
struct Dataset {
    RepresentationSet repr;
    FactorSet factors;

    std::size_t rows() const { return repr.rows(); }
};

// Validates the pair and assembles a Dataset. Rejects row-count mismatches
// and non-finite values so downstream estimators can assume clean input.
inline Dataset validate_dataset(RepresentationSet repr, FactorSet factors) {
    check_matrix(repr.matrix, "representations");
    check_matrix(factors.matrix, "factors");
    if (repr.dim_names.size() != repr.matrix.cols) {
        throw DataError("representations: " + std::to_string(repr.dim_names.size()) +
                        " dimension names for " + std::to_string(repr.matrix.cols) +
                        " columns");
    }
    if (factors.factor_names.size() != factors.matrix.cols) {
        throw DataError("factors: " + std::to_string(factors.factor_names.size()) +
                        " factor names for " + std::to_string(factors.matrix.cols) +
                        " columns");
    }
    check_unique_names(repr.dim_names, "representations");
    check_unique_names(factors.factor_names, "factors");
    if (repr.matrix.rows != factors.matrix.rows) {
        throw DataError("row count mismatch: representations have " +
                        std::to_string(repr.matrix.rows) + " rows, factors have " +
                        std::to_string(factors.matrix.rows));
    }
    return Dataset{std::move(repr), std::move(factors)};
}

// Assignment of contiguous latent dimension ranges to named factors.
struct PartitionEntry {
    std::string factor_name;
    std::size_t dim_start = 0;
    std::size_t dim_end = 0; // exclusive
};

struct FactorPartition {
    std::vector<PartitionEntry> entries;

    const PartitionEntry* find(const std::string& factor_name) const {
        for (const auto& e : entries) {
            if (e.factor_name == factor_name) return &e;
        }
        return nullptr;
    }

    std::size_t max_dim() const {
        std::size_t m = 0;
        for (const auto& e : entries) m = std::max(m, e.dim_end);
        return m;
    }
};

// Checks range validity, name uniqueness and non-overlap. `n_dims` of 0 skips
// the upper-bound check (used when the target dimensionality is unknown yet).
inline void check_partition(const FactorPartition& p, std::size_t n_dims = 0) {
    if (p.entries.empty()) throw DataError("partition: no entries");
    std::set<std::string> names;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (const auto& e : p.entries) {
        if (!names.insert(e.factor_name).second) {
            throw DataError("partition: duplicate factor \"" + e.factor_name + "\"");
        }
        if (e.dim_start >= e.dim_end) {
            throw DataError("partition: empty range for \"" + e.factor_name + "\"");
        }
        if (n_dims > 0 && e.dim_end > n_dims) {
            throw DataError("partition: \"" + e.factor_name + "\" ends at " +
                            std::to_string(e.dim_end) + " but representation has " +
                            std::to_string(n_dims) + " dimensions");
        }
        ranges.emplace_back(e.dim_start, e.dim_end);
    }
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i) {
        if (ranges[i].first < ranges[i - 1].second) {
            throw DataError("partition: overlapping dimension ranges");
        }
    }
}

// The five-factor layout of the 24-d latent: friction [0,4), mass [4,10),
// motor [10,16), contact [16,20), delay [20,24).
inline FactorPartition default_partition() {
    return FactorPartition{{
        {"friction", 0, 4},
        {"mass", 4, 10},
        {"motor", 10, 16},
        {"contact", 16, 20},
        {"delay", 20, 24},
    }};
}

// Returns a copy with every column in the factor's range set to `value`;
// all other columns are bit-identical.
inline RepresentationSet clamp_subspace(const RepresentationSet& repr,
                                        const FactorPartition& partition,
                                        const std::string& factor, double value) {
    if (!std::isfinite(value)) throw DataError("clamp_subspace: value must be finite");
    const PartitionEntry* entry = partition.find(factor);
    if (entry == nullptr) {
        throw DataError("clamp_subspace: unknown factor \"" + factor + "\"");
    }
    check_partition(partition, repr.dims());
    RepresentationSet out = repr;
    for (std::size_t r = 0; r < out.matrix.rows; ++r) {
        for (std::size_t c = entry->dim_start; c < entry->dim_end; ++c) {
            out.matrix.at(r, c) = value;
        }
    }
    return out;
}

} // namespace latdiag
