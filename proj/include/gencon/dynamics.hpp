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

// Equations of motion on a regular stratum.
//
// Reaction forces enter as p_dot = F + omega^T lambda, with F the free
// generalized force (-grad U plus the velocity-quadratic metric term) and
// lambda chosen so that d/dt (omega g^{-1} p) = 0.

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gencon/geometry.hpp"

namespace gencon {

/// Natural mechanical system L = (1/2) g(v,v) - U(q) with constraints D.
struct MechanicalSystem {
    std::string name;
    Metric metric;
    std::function<double(const Vector&)> potential;
    /// Optional; central differences of `potential` otherwise.
    std::function<Vector(const Vector&)> potential_gradient;
    Codistribution codist;
    std::vector<std::string> coordinates;

    int dim() const { return metric.dim(); }

    double potential_at(const Vector& q) const { return potential ? potential(q) : 0.0; }

    Vector potential_gradient_at(const Vector& q) const
    {
        if (potential_gradient)
            return potential_gradient(q);
        return finite_difference_gradient(q);
    }

    Vector finite_difference_gradient(const Vector& q) const
    {
        Vector grad = Vector::Zero(dim());
        if (!potential)
            return grad;
        const double h = 1e-6 * std::max(1.0, q.norm());
        for (int a = 0; a < dim(); ++a) {
            Vector qp = q, qm = q;
            qp(a) += h;
            qm(a) -= h;
            grad(a) = (potential(qp) - potential(qm)) / (2.0 * h);
        }
        return grad;
    }

    double kinetic_energy(const Vector& q, const Vector& p) const { return metric.kinetic_energy(q, p); }

    double energy(const Vector& q, const Vector& p) const { return kinetic_energy(q, p) + potential_at(q); }

    std::string coordinate_name(int i) const
    {
        if (i < static_cast<int>(coordinates.size()))
            return coordinates[static_cast<std::size_t>(i)];
        return "q" + std::to_string(i + 1);
    }
};

struct PhaseState {
    double t = 0.0;
    Vector q;
    Vector p;
};

inline Vector velocity(const MechanicalSystem& sys, const PhaseState& s) { return sys.metric.raise(s.q, s.p); }

/// Active generator rows at q with vanishing rows removed; `kept` receives their positions in `active`.
inline Matrix nonvanishing_active_forms(const MechanicalSystem& sys, const Vector& q, const std::vector<int>& active,
                                        std::vector<int>* kept = nullptr)
{
    const Matrix all = sys.codist.size() > 0 ? sys.codist.forms_at(q) : Matrix(0, sys.dim());
    std::vector<int> rows;
    std::vector<int> pos;
    for (std::size_t k = 0; k < active.size(); ++k) {
        if (all.row(active[k]).cwiseAbs().maxCoeff() > 0.0) {
            rows.push_back(active[k]);
            pos.push_back(static_cast<int>(k));
        }
    }
    if (kept != nullptr)
        *kept = pos;
    return select_rows(all, rows);
}

/// Reaction multipliers for the given active rows (one entry per row of `active`).
inline Vector multipliers(const MechanicalSystem& sys, const PhaseState& state, const std::vector<int>& active)
{
    Vector lambda = Vector::Zero(static_cast<Eigen::Index>(active.size()));
    if (active.empty())
        return lambda;
    std::vector<int> kept;
    const Matrix omega = nonvanishing_active_forms(sys, state.q, active, &kept);
    if (omega.rows() == 0)
        return lambda;

    const Vector& q = state.q;
    const Vector v = sys.metric.raise(q, state.p);
    const Vector force = sys.metric.quadratic_force(q, v) - sys.potential_gradient_at(q);
    const Matrix omega_rate = select_rows(sys.codist.forms_rate(q, v), [&] {
        std::vector<int> r;
        for (int k : kept)
            r.push_back(active[static_cast<std::size_t>(k)]);
        return r;
    }());

    // d/dt(omega g^{-1} p) = omega_rate v - omega g^{-1} g_rate v + omega g^{-1} (F + omega^T lambda) = 0
    const Vector rhs = -omega * sys.metric.raise(q, force) - omega_rate * v +
                       omega * sys.metric.raise(q, sys.metric.rate(q, v) * v);
    const Matrix c = gram_matrix(sys.metric, q, omega);
    if (numeric_rank(sys.metric.whiten(q, omega)) < omega.rows())
        throw DegeneracyError("multipliers: active constraint rows are dependent at q",
                              dependent_rows(sys.metric.whiten(q, omega)));
    const Vector sol = c.ldlt().solve(rhs);
    for (std::size_t k = 0; k < kept.size(); ++k)
        lambda(kept[k]) = sol(static_cast<Eigen::Index>(k));
    return lambda;
}

struct PhaseRate {
    Vector qdot;
    Vector pdot;
};

inline PhaseRate eom_rhs(const MechanicalSystem& sys, const PhaseState& state, const std::vector<int>& active)
{
    const Vector v = sys.metric.raise(state.q, state.p);
    Vector pdot = sys.metric.quadratic_force(state.q, v) - sys.potential_gradient_at(state.q);
    if (!active.empty()) {
        const Vector lambda = multipliers(sys, state, active);
        const Matrix forms = select_rows(sys.codist.forms_at(state.q), active);
        pdot += forms.transpose() * lambda;
    }
    return {v, pdot};
}

/// Largest violation |omega_hat g^{-1} p| over the active rows, each row normalized in the cometric.
inline double constraint_drift(const MechanicalSystem& sys, const Vector& q, const Vector& p,
                               const std::vector<int>& active)
{
    const Matrix omega = nonvanishing_active_forms(sys, q, active);
    if (omega.rows() == 0)
        return 0.0;
    const Vector v = sys.metric.raise(q, p);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < omega.rows(); ++i) {
        const double n = sys.metric.norm(q, omega.row(i).transpose());
        worst = std::max(worst, std::abs(omega.row(i).dot(v)) / n);
    }
    return worst;
}

/// Metric projection of p onto the covectors satisfying the active constraints at q.
inline Vector project_momentum(const MechanicalSystem& sys, const Vector& q, const Vector& p,
                               const std::vector<int>& active)
{
    const Matrix omega = nonvanishing_active_forms(sys, q, active);
    if (omega.rows() == 0)
        return p;
    return constraint_projector(sys.metric, q, omega) * p;
}

/// Key identifying the regular stratum of q: stratum id, indicator sign, or rank.
inline int side_key(const MechanicalSystem& sys, const Vector& q)
{
    const Codistribution& d = sys.codist;
    if (d.has_strata()) {
        const Stratum* s = d.stratum_at(q);
        return s != nullptr ? s->id : -1000000;
    }
    if (d.has_indicator() && d.indicator_kind() == IndicatorKind::Signed)
        return d.indicator(q) > 0.0 ? 1 : -1;
    return d.rank_at(q);
}

/// Whether crossings are tracked through side_key changes (otherwise through indicator minima).
inline bool tracks_side(const MechanicalSystem& sys)
{
    const Codistribution& d = sys.codist;
    return d.has_strata() || !d.has_indicator() || d.indicator_kind() == IndicatorKind::Signed;
}

/// Active generator rows on the stratum containing q.
inline std::vector<int> default_active_rows(const MechanicalSystem& sys, const Vector& q)
{
    const Codistribution& d = sys.codist;
    if (d.size() == 0)
        return {};
    if (d.has_strata())
        return d.active_rows_at(q);
    return independent_rows(sys.metric.whiten(q, d.forms_at(q)));
}

} // namespace gencon
