// Copyright 2026 The gencon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

#include "gencon/errors.hpp"

namespace gencon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Default relative threshold below which singular values count as zero.
inline constexpr double kRankTolerance = 1e-9;

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline void require_finite(const Matrix& a, const char* what)
{
    if (!a.allFinite())
        throw InputError(std::string(what) + ": non-finite entries");
}

inline void require_dim(const Vector& q, Eigen::Index dim, const char* what)
{
    if (q.size() != dim)
        throw InputError(std::string(what) + ": expected dimension " + std::to_string(dim) +
                         ", got " + std::to_string(q.size()));
}

inline Eigen::VectorXd singular_values(const Matrix& a)
{
    if (a.rows() == 0 || a.cols() == 0)
        return Vector(0);
    return Eigen::JacobiSVD<Matrix>(a).singularValues();
}

/// Number of singular values above tol * sigma_max (0 for a zero or empty matrix).
/// Rows are scaled to unit length first, so the count does not depend on how
/// each row happens to be normalized; exactly-zero rows are ignored.
inline int numeric_rank(const Matrix& a, double tol = kRankTolerance)
{
    require_finite(a, "numeric_rank");
    if (!(tol > 0.0 && tol < 1.0))
        throw InputError("numeric_rank: tolerance must lie in (0,1)");
    Matrix unit = a;
    for (Eigen::Index i = 0; i < unit.rows(); ++i) {
        const double n = unit.row(i).norm();
        if (n > 0.0)
            unit.row(i) /= n;
    }
    const Vector s = singular_values(unit);
    if (s.size() == 0 || s(0) == 0.0)
        return 0;
    const double cut = tol * s(0);
    return static_cast<int>((s.array() > cut).count());
}

/// Greedy scan for rows that do not increase the rank of the rows before them.
inline std::vector<int> dependent_rows(const Matrix& a, double tol = kRankTolerance)
{
    std::vector<int> dependent;
    Matrix kept(0, a.cols());
    int rank = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Matrix trial(kept.rows() + 1, a.cols());
        trial << kept, a.row(i);
        const int r = numeric_rank(trial, tol);
        if (r > rank) {
            kept = std::move(trial);
            rank = r;
        } else {
            dependent.push_back(static_cast<int>(i));
        }
    }
    return dependent;
}

/// Indices of a maximal independent subset of rows, scanned in order.
inline std::vector<int> independent_rows(const Matrix& a, double tol = kRankTolerance)
{
    const std::vector<int> dep = dependent_rows(a, tol);
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(a.rows()); ++i)
        if (std::find(dep.begin(), dep.end(), i) == dep.end())
            out.push_back(i);
    return out;
}

inline Matrix select_rows(const Matrix& a, const std::vector<int>& rows)
{
    Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (std::size_t k = 0; k < rows.size(); ++k)
        out.row(static_cast<Eigen::Index>(k)) = a.row(rows[k]);
    return out;
}

inline Matrix stack_rows(const Matrix& top, const Matrix& bottom)
{
    Matrix out(top.rows() + bottom.rows(), std::max(top.cols(), bottom.cols()));
    if (top.rows() > 0)
        out.topRows(top.rows()) = top;
    if (bottom.rows() > 0)
        out.bottomRows(bottom.rows()) = bottom;
    return out;
}

} // namespace gencon
