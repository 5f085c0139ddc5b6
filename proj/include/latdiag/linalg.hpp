#pragma once

#include <Eigen/Dense>

#include "latdiag/matrix.hpp"

namespace latdiag {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const EigenRowMajor> as_eigen(const Matrix& m) {
    return Eigen::Map<const EigenRowMajor>(
        m.values.data(), static_cast<Eigen::Index>(m.rows),
        static_cast<Eigen::Index>(m.cols));
}

inline Eigen::Map<EigenRowMajor> as_eigen(Matrix& m) {
    return Eigen::Map<EigenRowMajor>(m.values.data(),
                                     static_cast<Eigen::Index>(m.rows),
                                     static_cast<Eigen::Index>(m.cols));
}

inline Matrix from_eigen(const Eigen::Ref<const EigenRowMajor>& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    Eigen::Map<EigenRowMajor>(m.values.data(), e.rows(), e.cols()) = e;
    return m;
}

// Per-column mean and population standard deviation (1/N).
struct ColumnStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std; // zero-variance columns keep std 0
};

inline ColumnStats column_stats(const Eigen::Ref<const EigenRowMajor>& x) {
    ColumnStats s;
    s.mean = x.colwise().mean();
    Eigen::ArrayXd var =
        (x.rowwise() - s.mean.transpose()).array().square().colwise().mean();
    s.std = var.max(0.0).sqrt().matrix();
    return s;
}

} // namespace latdiag
