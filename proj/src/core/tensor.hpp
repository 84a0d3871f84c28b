// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace xjac {

// Row-major storage so that a representation's data() is already flattened
// with index i = s * D + d.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline Eigen::Map<const Vec> flatten(const Mat& m) { return {m.data(), m.size()}; }

inline Mat unflatten(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    Eigen::Map<Vec>(m.data(), m.size()) = v;
    return m;
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace xjac
