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

// Metric and codistribution algebra.
//
// Covectors (momenta, constraint forms) are stored as component vectors in
// the chart coframe. A family of forms is a matrix whose row i holds the
// components of omega_i. Projectors act on column component vectors from the
// left, so a projected momentum is `P * p`.

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gencon/linalg.hpp"

namespace gencon {

/// Riemannian metric g(q) on a chart of dimension dim.
class Metric {
public:
    using Field = std::function<Matrix(const Vector&)>;
    /// Returns d[C](A,B) = dg_AB / dq^C.
    using DerivativeField = std::function<std::vector<Matrix>(const Vector&)>;

    Metric() = default;

    Metric(int dim, Field g, DerivativeField dg = {})
        : dim_(dim), g_(std::move(g)), dg_(std::move(dg))
    {
        if (dim <= 0)
            throw InputError("Metric: dimension must be positive");
    }

    static Metric constant(const Matrix& g)
    {
        Metric m(static_cast<int>(g.rows()), [g](const Vector&) { return g; },
                 [g](const Vector&) {
                     return std::vector<Matrix>(static_cast<std::size_t>(g.rows()),
                                                Matrix::Zero(g.rows(), g.cols()));
                 });
        m.constant_ = true;
        m.check(g);
        m.const_chol_ = Eigen::LLT<Matrix>(g);
        if (m.const_chol_.info() != Eigen::Success)
            throw InputError("Metric: matrix is not positive definite");
        return m;
    }

    static Metric identity(int dim) { return constant(Matrix::Identity(dim, dim)); }

    int dim() const noexcept { return dim_; }
    bool is_constant() const noexcept { return constant_; }
    bool has_analytic_derivative() const noexcept { return static_cast<bool>(dg_); }

    /// g(q), validated symmetric positive definite.
    Matrix at(const Vector& q) const
    {
        require_dim(q, dim_, "Metric::at");
        Matrix g = g_(q);
        check(g);
        return g;
    }

    Matrix inverse_at(const Vector& q) const
    {
        return cholesky(q).solve(Matrix::Identity(dim_, dim_));
    }

    /// Velocity components g^{-1} p.
    Vector raise(const Vector& q, const Vector& p) const
    {
        require_dim(p, dim_, "Metric::raise");
        return cholesky(q).solve(p);
    }

    /// Momentum components g v.
    Vector lower(const Vector& q, const Vector& v) const
    {
        require_dim(v, dim_, "Metric::lower");
        return at(q) * v;
    }

    /// Cometric inner product a g^{-1} b^T.
    double inner(const Vector& q, const Vector& a, const Vector& b) const
    {
        return a.dot(raise(q, b));
    }

    double norm(const Vector& q, const Vector& a) const { return std::sqrt(std::max(0.0, inner(q, a, a))); }

    double kinetic_energy(const Vector& q, const Vector& p) const { return 0.5 * inner(q, p, p); }

    /// Rows expressed in a frame where the cometric is Euclidean:
    /// whiten(a) * whiten(b)^T == a g^{-1} b^T.
    Matrix whiten(const Vector& q, const Matrix& rows) const
    {
        if (rows.rows() == 0)
            return Matrix(0, dim_);
        const Eigen::LLT<Matrix> llt = cholesky(q);
        return llt.matrixL().solve(rows.transpose()).transpose();
    }

    /// Inverse of whiten.
    Matrix unwhiten(const Vector& q, const Matrix& rows) const
    {
        if (rows.rows() == 0)
            return Matrix(0, dim_);
        const Eigen::LLT<Matrix> llt = cholesky(q);
        return (llt.matrixL() * rows.transpose()).transpose();
    }

    /// dg/dq^C for C = 0..dim-1; central differences when no analytic form was given.
    std::vector<Matrix> derivative_at(const Vector& q) const
    {
        require_dim(q, dim_, "Metric::derivative_at");
        if (dg_)
            return dg_(q);
        return finite_difference_derivative(q);
    }

    std::vector<Matrix> finite_difference_derivative(const Vector& q) const
    {
        const double h = 1e-6 * std::max(1.0, q.norm());
        std::vector<Matrix> d;
        d.reserve(static_cast<std::size_t>(dim_));
        for (int c = 0; c < dim_; ++c) {
            Vector qp = q, qm = q;
            qp(c) += h;
            qm(c) -= h;
            d.push_back((g_(qp) - g_(qm)) / (2.0 * h));
        }
        return d;
    }

    /// sum_C dg/dq^C v^C.
    Matrix rate(const Vector& q, const Vector& v) const
    {
        if (constant_)
            return Matrix::Zero(dim_, dim_);
        const std::vector<Matrix> d = derivative_at(q);
        Matrix out = Matrix::Zero(dim_, dim_);
        for (int c = 0; c < dim_; ++c)
            out += v(c) * d[static_cast<std::size_t>(c)];
        return out;
    }

    /// Covector (1/2) v^T (dg/dq^A) v, the velocity-dependent part of dL/dq.
    Vector quadratic_force(const Vector& q, const Vector& v) const
    {
        Vector f = Vector::Zero(dim_);
        if (constant_)
            return f;
        const std::vector<Matrix> d = derivative_at(q);
        for (int a = 0; a < dim_; ++a)
            f(a) = 0.5 * v.dot(d[static_cast<std::size_t>(a)] * v);
        return f;
    }

private:
    void check(const Matrix& g) const
    {
        if (g.rows() != dim_ || g.cols() != dim_)
            throw InputError("Metric: matrix has wrong shape");
        require_finite(g, "Metric");
        const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
        if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw InputError("Metric: matrix is not symmetric");
    }

    Eigen::LLT<Matrix> cholesky(const Vector& q) const
    {
        if (constant_) {
            require_dim(q, dim_, "Metric");
            return const_chol_;
        }
        Eigen::LLT<Matrix> llt(at(q));
        if (llt.info() != Eigen::Success)
            throw InputError("Metric: matrix is not positive definite");
        return llt;
    }

    int dim_ = 0;
    Field g_;
    DerivativeField dg_;
    bool constant_ = false;
    Eigen::LLT<Matrix> const_chol_;
};

/// Region of a piecewise-declared codistribution and the generating rows active there.
struct Stratum {
    int id = 0;
    std::string name;
    std::function<bool(const Vector&)> contains;
    std::vector<int> rows;
};

enum class IndicatorKind {
    /// Changes sign across the singular set.
    Signed,
    /// Nonnegative, vanishing exactly on the singular set.
    NonNegative,
};

/// Finitely generated, possibly variable-rank family of constraint 1-forms.
///
/// Each generator may carry a log-envelope: the literal form is
/// exp(envelope_i(q)) * row_i(q), and the row vanishes where the envelope is
/// -infinity. All rank and limit computations use the envelope-free rows,
/// which span the same subspace wherever the envelope is finite. This keeps
/// factors such as exp(-1/x^2) from underflowing to an exact zero near the
/// singular set.
class Codistribution {
public:
    using FormsField = std::function<Matrix(const Vector&)>;
    using EnvelopeField = std::function<Vector(const Vector&)>;
    /// (q, v) -> sum_C d(rows)/dq^C v^C.
    using RateField = std::function<Matrix(const Vector&, const Vector&)>;
    using ScalarField = std::function<double(const Vector&)>;

    Codistribution() = default;

    Codistribution(int dim, int generators, FormsField forms)
        : dim_(dim), m_(generators), forms_(std::move(forms))
    {
        if (dim <= 0 || generators < 0)
            throw InputError("Codistribution: bad dimensions");
    }

    static Codistribution empty(int dim)
    {
        return Codistribution(dim, 0, [dim](const Vector&) { return Matrix(0, dim); });
    }

    Codistribution& with_envelope(EnvelopeField log_envelope)
    {
        envelope_ = std::move(log_envelope);
        return *this;
    }

    Codistribution& with_rate(RateField rate)
    {
        rate_ = std::move(rate);
        return *this;
    }

    Codistribution& with_strata(std::vector<Stratum> strata)
    {
        for (const Stratum& s : strata)
            for (int r : s.rows)
                if (r < 0 || r >= m_)
                    throw InputError("Codistribution: stratum '" + s.name + "' names row " +
                                     std::to_string(r) + " out of range");
        strata_ = std::move(strata);
        return *this;
    }

    Codistribution& with_singular_indicator(ScalarField indicator, IndicatorKind kind)
    {
        indicator_ = std::move(indicator);
        indicator_kind_ = kind;
        return *this;
    }

    int dim() const noexcept { return dim_; }
    int size() const noexcept { return m_; }

    /// Envelope-free generator rows. Without declared strata, rows whose
    /// envelope is -inf are zero; with strata, the strata decide which rows act.
    Matrix forms_at(const Vector& q) const
    {
        require_dim(q, dim_, "Codistribution::forms_at");
        Matrix w = forms_(q);
        if (w.rows() != m_ || w.cols() != dim_)
            throw InputError("Codistribution: forms have wrong shape");
        require_finite(w, "Codistribution::forms_at");
        if (envelope_ && strata_.empty()) {
            const Vector e = envelope_(q);
            for (int i = 0; i < m_; ++i)
                if (std::isinf(e(i)) && e(i) < 0)
                    w.row(i).setZero();
        }
        return w;
    }

    /// Literal generators exp(envelope) * rows (may underflow).
    Matrix scaled_forms_at(const Vector& q) const
    {
        Matrix w = forms_(q);
        if (envelope_) {
            const Vector e = envelope_(q);
            for (int i = 0; i < m_; ++i)
                w.row(i) *= std::exp(e(i));
        }
        return w;
    }

    /// Directional derivative of forms_at along v.
    Matrix forms_rate(const Vector& q, const Vector& v) const
    {
        if (rate_)
            return rate_(q, v);
        const double vn = v.norm();
        if (vn == 0.0 || m_ == 0)
            return Matrix::Zero(m_, dim_);
        const double h = 1e-6 * std::max(1.0, q.norm());
        const Vector dir = v / vn;
        return (forms_at(q + h * dir) - forms_at(q - h * dir)) * (vn / (2.0 * h));
    }

    bool has_strata() const noexcept { return !strata_.empty(); }
    const std::vector<Stratum>& strata() const noexcept { return strata_; }

    const Stratum* stratum_at(const Vector& q) const
    {
        for (const Stratum& s : strata_)
            if (s.contains(q))
                return &s;
        return nullptr;
    }

    const Stratum* stratum_by_id(int id) const
    {
        for (const Stratum& s : strata_)
            if (s.id == id)
                return &s;
        return nullptr;
    }

    /// Generators spanning D_q: the stratum's rows when strata are declared, else all rows.
    std::vector<int> active_rows_at(const Vector& q) const
    {
        if (has_strata()) {
            const Stratum* s = stratum_at(q);
            if (s == nullptr)
                throw InputError("Codistribution: point lies in no declared stratum");
            return s->rows;
        }
        std::vector<int> all(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i)
            all[static_cast<std::size_t>(i)] = i;
        return all;
    }

    Matrix active_forms_at(const Vector& q) const { return select_rows(forms_at(q), active_rows_at(q)); }

    Matrix stratum_forms_at(const Vector& q, const Stratum& s) const { return select_rows(forms_at(q), s.rows); }

    /// Pointwise rank of D at q.
    int rank_at(const Vector& q, double tol = kRankTolerance) const
    {
        return numeric_rank(active_forms_at(q), tol);
    }

    bool has_indicator() const noexcept { return static_cast<bool>(indicator_); }
    IndicatorKind indicator_kind() const noexcept { return indicator_kind_; }

    double indicator(const Vector& q) const
    {
        if (!indicator_)
            throw InputError("Codistribution: no singular indicator declared");
        return indicator_(q);
    }

    /// Same codistribution with every generator multiplied by factor(q).
    Codistribution rescaled(ScalarField factor) const
    {
        Codistribution out = *this;
        FormsField base = forms_;
        out.forms_ = [base, factor](const Vector& q) { return Matrix(factor(q) * base(q)); };
        out.rate_ = {};
        return out;
    }

private:
    int dim_ = 0;
    int m_ = 0;
    FormsField forms_;
    EnvelopeField envelope_;
    RateField rate_;
    std::vector<Stratum> strata_;
    ScalarField indicator_;
    IndicatorKind indicator_kind_ = IndicatorKind::Signed;
};

/// Gram matrix C = omega g^{-1} omega^T.
inline Matrix gram_matrix(const Metric& metric, const Vector& q, const Matrix& omega)
{
    if (omega.cols() != metric.dim() && omega.rows() > 0)
        throw InputError("gram_matrix: form components do not match metric dimension");
    if (omega.rows() == 0)
        return Matrix(0, 0);
    require_finite(omega, "gram_matrix");
    const Matrix w = metric.whiten(q, omega);
    return w * w.transpose();
}

/// Metric-orthogonal projector onto the constraint-satisfying covectors,
/// P = Id - omega^T C^{-1} omega g^{-1}.
///
/// Rows of omega must be independent; dependent rows raise DegeneracyError.
inline Matrix constraint_projector(const Metric& metric, const Vector& q, const Matrix& omega,
                                   double tol = kRankTolerance)
{
    const int n = metric.dim();
    if (omega.rows() == 0)
        return Matrix::Identity(n, n);
    if (omega.cols() != n)
        throw InputError("constraint_projector: form components do not match metric dimension");
    require_finite(omega, "constraint_projector");
    const Matrix w = metric.whiten(q, omega);
    if (numeric_rank(w, tol) < w.rows()) {
        const std::vector<int> dep = dependent_rows(w, tol);
        std::string names;
        for (int r : dep)
            names += (names.empty() ? "" : ",") + std::to_string(r);
        throw DegeneracyError("constraint_projector: dependent constraint rows {" + names + "}", dep);
    }
    const Matrix c = w * w.transpose();
    const Matrix x = c.ldlt().solve(omega);
    return Matrix::Identity(n, n) - omega.transpose() * x * metric.inverse_at(q);
}

/// Q = Id - P, mapping covectors into span(omega).
inline Matrix complementary_projector(const Metric& metric, const Vector& q, const Matrix& omega)
{
    const int n = metric.dim();
    return Matrix::Identity(n, n) - constraint_projector(metric, q, omega);
}

/// Orthonormal basis (in the cometric) of a subspace of the cotangent space at q.
struct SubspaceBasis {
    Vector q;
    Matrix rows;

    int rank() const noexcept { return static_cast<int>(rows.rows()); }
    int dim() const noexcept { return static_cast<int>(rows.cols()); }
};

/// g^{-1}-orthonormal basis of the row span, dropping directions below tol * sigma_max.
inline SubspaceBasis orthonormalize_subspace(const Metric& metric, const Vector& q, const Matrix& rows,
                                             double tol = kRankTolerance)
{
    require_dim(q, metric.dim(), "orthonormalize_subspace");
    SubspaceBasis out{q, Matrix(0, metric.dim())};
    if (rows.rows() == 0)
        return out;
    if (rows.cols() != metric.dim())
        throw InputError("orthonormalize_subspace: row length does not match metric dimension");
    require_finite(rows, "orthonormalize_subspace");

    const Matrix w = metric.whiten(q, rows);
    Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinV);
    const Vector s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0)
        return out;
    const int r = static_cast<int>((s.array() > tol * s(0)).count());
    Matrix basis_w = svd.matrixV().leftCols(r).transpose();
    // Fix the sign so the leading significant component is positive.
    for (int i = 0; i < r; ++i) {
        const double cut = 1e-12 * basis_w.row(i).cwiseAbs().maxCoeff();
        for (Eigen::Index j = 0; j < basis_w.cols(); ++j) {
            if (std::abs(basis_w(i, j)) > cut) {
                if (basis_w(i, j) < 0)
                    basis_w.row(i) *= -1.0;
                break;
            }
        }
    }
    out.rows = metric.unwhiten(q, basis_w);
    return out;
}

inline void require_same_point(const Vector& a, const Vector& b, const char* what)
{
    if (a.size() != b.size())
        throw InputError(std::string(what) + ": bases live in different dimensions");
    const double scale = std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
    if ((a - b).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw InputError(std::string(what) + ": bases attached to different points");
}

/// True iff span(a) is contained in span(b).
inline bool subspace_contained(const SubspaceBasis& a, const SubspaceBasis& b, double tol = kRankTolerance)
{
    require_same_point(a.q, b.q, "subspace_contained");
    if (a.rank() == 0)
        return true;
    if (b.rank() == 0)
        return false;
    return numeric_rank(stack_rows(b.rows, a.rows), tol) == b.rank();
}

/// Largest principal angle between two subspaces in the cometric; pi/2 when the ranks differ.
inline double largest_principal_angle(const Metric& metric, const SubspaceBasis& a, const SubspaceBasis& b)
{
    require_same_point(a.q, b.q, "largest_principal_angle");
    if (a.rank() != b.rank())
        return std::acos(0.0);
    if (a.rank() == 0)
        return 0.0;
    const Matrix wa = metric.whiten(a.q, a.rows);
    const Matrix wb = metric.whiten(a.q, b.rows);
    // Residual of b after projection onto span(a); its top singular value is sin(theta_max).
    const Matrix residual = wb - (wb * wa.transpose()) * wa;
    const Vector s = singular_values(residual);
    const double sine = s.size() > 0 ? std::min(1.0, s(0)) : 0.0;
    return std::asin(sine);
}

struct PointClass {
    bool regular = true;
    int rank = 0;

    friend bool operator==(const PointClass&, const PointClass&) = default;
};

/// Sampling test for "q is a local maximum of the rank": probes +-e_i and
/// seeded pseudo-random directions on the sphere of the given radius. A
/// heuristic, not a proof: a missed higher-rank neighbor reports Regular.
inline PointClass classify_point(const Codistribution& codist, const Vector& q, double radius,
                                 int samples = 0, double tol = kRankTolerance)
{
    const int n = codist.dim();
    require_dim(q, n, "classify_point");
    if (samples == 0)
        samples = 4 * n;
    if (!(radius > 0.0))
        throw InputError("classify_point: radius must be positive");
    if (samples < 2 * n)
        throw InputError("classify_point: need at least 2*dim samples");

    PointClass out{true, codist.rank_at(q, tol)};
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> normal;
    for (int k = 0; k < samples; ++k) {
        Vector dir = Vector::Zero(n);
        if (k < 2 * n) {
            dir(k / 2) = (k % 2 == 0) ? 1.0 : -1.0;
        } else {
            for (int i = 0; i < n; ++i)
                dir(i) = normal(rng);
            const double len = dir.norm();
            if (len == 0.0)
                continue;
            dir /= len;
        }
        if (codist.rank_at(q + radius * dir, tol) > out.rank) {
            out.regular = false;
            break;
        }
    }
    return out;
}

} // namespace gencon
