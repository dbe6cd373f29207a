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

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's own algebra.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Rank by Gaussian elimination with partial pivoting and an absolute pivot threshold.
inline int elimination_rank(Mat a, double tol = 1e-9)
{
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    int rank = 0;
    for (Eigen::Index col = 0; col < a.cols() && rank < a.rows(); ++col) {
        Eigen::Index pivot = rank;
        for (Eigen::Index r = rank; r < a.rows(); ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col)))
                pivot = r;
        if (std::abs(a(pivot, col)) <= tol * scale)
            continue;
        a.row(pivot).swap(a.row(rank));
        for (Eigen::Index r = rank + 1; r < a.rows(); ++r)
            a.row(r) -= a(r, col) / a(rank, col) * a.row(rank);
        ++rank;
    }
    return rank;
}

/// Argmin of (alpha - p) g^{-1} (alpha - p)^T subject to omega g^{-1} p = 0:
/// parametrize the admissible covectors p = g n, with n in ker(omega), by an
/// SVD null-space basis and solve the reduced normal equations.
inline Vec constrained_least_squares(const Mat& g, const Mat& omega, const Vec& alpha)
{
    const Eigen::Index n = g.rows();
    if (omega.rows() == 0)
        return alpha;
    Eigen::JacobiSVD<Mat> svd(omega, Eigen::ComputeFullV);
    const Eigen::Index r = (svd.singularValues().array() > 1e-12 * svd.singularValues()(0)).count();
    const Mat null = svd.matrixV().rightCols(n - r);
    // p = g N c; objective (alpha - g N c)^T g^{-1} (alpha - g N c).
    const Mat a = null.transpose() * g * null;
    const Vec b = null.transpose() * alpha;
    const Vec c = a.ldlt().solve(b);
    return g * null * c;
}

/// Random symmetric positive-definite matrix with eigenvalues in [lo, hi].
inline Mat random_spd(std::mt19937_64& rng, int n, double lo = 0.3, double hi = 3.0)
{
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(lo, hi);
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = normal(rng);
    const Eigen::HouseholderQR<Mat> qr(a);
    const Mat q = qr.householderQ();
    Vec d(n);
    for (int i = 0; i < n; ++i)
        d(i) = uni(rng);
    Mat g = q * d.asDiagonal() * q.transpose();
    return 0.5 * (g + g.transpose());
}

inline Mat random_matrix(std::mt19937_64& rng, int rows, int cols)
{
    std::normal_distribution<double> normal;
    Mat a(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            a(i, j) = normal(rng);
    return a;
}

inline Vec random_vector(std::mt19937_64& rng, int n) { return random_matrix(rng, n, 1); }

/// Closed-form multiplier of the central-force particle for the reaction
/// written as lambda * Z with Z = -omega . d/dqdot (unit mass).
inline double central_force_closed_form(const Vec& q, const Vec& v)
{
    const double x = q(0), y = q(1), z = q(2);
    const double xd = v(0), yd = v(1), zd = v(2);
    const double num = -2 * x * xd * xd + y * yd * xd - 2 * y * yd * yd - x * yd * yd + yd * zd + x * x * x +
                       y * y * y - y * z + x;
    const double a = y * y - x * x - z, b = z - y * y - x * y;
    return num / (a * a + b * b + x * x);
}

/// The sphere's projector written out entry by entry for radius r and k^2.
inline Mat sphere_projector_entries(double r, double k2)
{
    const double d = r * r + k2;
    Mat p = Mat::Zero(5, 5);
    p(0, 0) = r * r / d;
    p(0, 3) = r / d;
    p(1, 1) = r * r / d;
    p(1, 2) = -r / d;
    p(2, 1) = -r * k2 / d;
    p(2, 2) = k2 / d;
    p(3, 0) = r * k2 / d;
    p(3, 3) = k2 / d;
    p(4, 4) = 1.0;
    return p;
}

/// Post-contact sphere velocities (xdot, ydot, omega_x, omega_y, omega_z), written out by hand.
inline Vec sphere_contact_velocities(double r, double k2, const Vec& v0)
{
    const double d = r * r + k2;
    Vec out(5);
    out << (r * r * v0(0) + r * k2 * v0(3)) / d, (r * r * v0(1) - r * k2 * v0(2)) / d,
        (-r * v0(1) + k2 * v0(2)) / d, (r * v0(0) + k2 * v0(3)) / d, v0(4);
    return out;
}

} // namespace oracle
