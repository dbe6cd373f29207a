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

// Singular crossings: one-sided limit subspaces, the jump decision, the
// projection jump itself, external impulses and the kinetic-energy audit.

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gencon/integrate.hpp"

namespace gencon {

enum class Side { Minus, Plus };

/// One-sided curve approaching q(t0): at(s) = q(t0 - s) on the minus side and q(t0 + s) on the plus side, s > 0.
struct ApproachPath {
    Vector q0;
    Side side = Side::Plus;
    std::function<Vector(double)> at;
};

inline ApproachPath straight_path(const Vector& q0, const Vector& direction, Side side)
{
    return {q0, side, [q0, direction](double s) { return Vector(q0 + s * direction); }};
}

/// q0_i + coeff_i * s^exponent_i, for curves with prescribed approach rates.
inline ApproachPath power_path(const Vector& q0, const Vector& coeff, const Vector& exponent, Side side)
{
    if (coeff.size() != q0.size() || exponent.size() != q0.size())
        throw InputError("power_path: coefficient and exponent lengths must match the point");
    for (Eigen::Index i = 0; i < exponent.size(); ++i)
        if (!(exponent(i) > 0.0))
            throw InputError("power_path: exponents must be positive");
    return {q0, side, [q0, coeff, exponent](double s) {
                Vector q = q0;
                for (Eigen::Index i = 0; i < q.size(); ++i)
                    q(i) += coeff(i) * std::pow(s, exponent(i));
                return q;
            }};
}

/// Minus-side path read from the dense record of the segment ending at the crossing.
inline ApproachPath path_from_segment(const MechanicalSystem& sys, const TrajectorySegment& seg)
{
    const PhaseState end = seg.back();
    if (seg.states.size() < 2) {
        const Vector v = sys.metric.raise(end.q, end.p);
        return straight_path(end.q, -v, Side::Minus);
    }
    const double t0 = end.t;
    return {end.q, Side::Minus, [&sys, seg, t0](double s) { return interpolate_configuration(sys, seg, t0 - s); }};
}

/// Plus-side path obtained by integrating from (q0, p) with every constraint switched off.
inline ApproachPath ballistic_path(const MechanicalSystem& sys, const Vector& q0, const Vector& p, double length,
                                   int substeps = 64)
{
    TrajectorySegment free;
    PhaseState s{0.0, q0, p};
    free.states.push_back(s);
    auto rate = [&sys](const Vector& q, const Vector& mom) {
        const Vector v = sys.metric.raise(q, mom);
        return std::make_pair(v, Vector(sys.metric.quadratic_force(q, v) - sys.potential_gradient_at(q)));
    };
    const double h = length / substeps;
    for (int k = 0; k < substeps; ++k) {
        const auto [k1q, k1p] = rate(s.q, s.p);
        const auto [k2q, k2p] = rate(s.q + 0.5 * h * k1q, s.p + 0.5 * h * k1p);
        const auto [k3q, k3p] = rate(s.q + 0.5 * h * k2q, s.p + 0.5 * h * k2p);
        const auto [k4q, k4p] = rate(s.q + h * k3q, s.p + h * k3p);
        s.q += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
        s.p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        s.t += h;
        free.states.push_back(s);
    }
    return {q0, Side::Plus, [&sys, free](double t) { return interpolate_configuration(sys, free, t); }};
}

struct LimitOptions {
    double eps0 = 1e-3;
    int levels = 20;
    double angle_tol = 1e-7;
    double rank_tol = kRankTolerance;
};

/// Raised when the sampled subspaces along a path do not settle.
class LimitIndeterminateError : public Error {
public:
    LimitIndeterminateError(const std::string& what, SubspaceBasis previous, SubspaceBasis last)
        : Error(what), previous_(std::move(previous)), last_(std::move(last)) {}

    const SubspaceBasis& previous() const noexcept { return previous_; }
    const SubspaceBasis& last() const noexcept { return last_; }

private:
    SubspaceBasis previous_;
    SubspaceBasis last_;
};

struct OneSidedLimit {
    SubspaceBasis basis;
    /// Rank of D at the regular points of the path.
    int sample_rank = 0;
    /// Side key (see side_key) of the regular points of the path.
    int side = 0;
    /// Nearest sampled point on the path.
    Vector nearest;
    bool exact = false;
};

inline Matrix normalize_rows(const Metric& metric, const Vector& q, const Matrix& rows)
{
    Matrix out(0, rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double n = metric.norm(q, rows.row(i).transpose());
        if (n > 0.0)
            out = stack_rows(out, rows.row(i) / n);
    }
    return out;
}

inline OneSidedLimit one_sided_limit(const MechanicalSystem& sys, const ApproachPath& path,
                                     const LimitOptions& opts = {})
{
    const Codistribution& codist = sys.codist;
    const Metric& metric = sys.metric;
    const Vector& q0 = path.q0;
    OneSidedLimit out;
    out.nearest = path.at(opts.eps0 * std::ldexp(1.0, -opts.levels));
    out.side = side_key(sys, out.nearest);

    if (codist.has_strata()) {
        const Stratum* s = codist.stratum_at(out.nearest);
        if (s == nullptr)
            throw InputError("limit_subspace: path leaves every declared stratum");
        out.basis = orthonormalize_subspace(metric, q0, codist.stratum_forms_at(q0, *s), opts.rank_tol);
        out.sample_rank = out.basis.rank();
        out.exact = true;
        return out;
    }

    std::optional<SubspaceBasis> previous;
    for (int k = 0; k <= opts.levels; ++k) {
        const Vector q = path.at(opts.eps0 * std::ldexp(1.0, -k));
        const Matrix rows = normalize_rows(metric, q0, codist.forms_at(q));
        SubspaceBasis current = orthonormalize_subspace(metric, q0, rows, opts.rank_tol);
        if (previous && previous->rank() == current.rank() &&
            largest_principal_angle(metric, *previous, current) <= opts.angle_tol) {
            out.basis = std::move(current);
            out.sample_rank = out.basis.rank();
            return out;
        }
        previous = std::move(current);
    }
    const Vector q_last = path.at(opts.eps0 * std::ldexp(1.0, -opts.levels));
    const Vector q_prev = path.at(opts.eps0 * std::ldexp(1.0, -(opts.levels - 1)));
    throw LimitIndeterminateError(
        "limit_subspace: sampled subspaces did not converge",
        orthonormalize_subspace(metric, q0, normalize_rows(metric, q0, codist.forms_at(q_prev)), opts.rank_tol),
        orthonormalize_subspace(metric, q0, normalize_rows(metric, q0, codist.forms_at(q_last)), opts.rank_tol));
}

/// D^- or D^+ at q0 along the given path.
inline SubspaceBasis limit_subspace(const MechanicalSystem& sys, const ApproachPath& path,
                                    const LimitOptions& opts = {})
{
    return one_sided_limit(sys, path, opts).basis;
}

enum class Decision {
    NoJumpContained,
    NoJumpCompatible,
    Jump,
    /// D^+ is path dependent and no hypothesis was supplied.
    Withheld,
    /// Boundary created by a scheduled external impulse.
    Impulse,
};

inline const char* to_string(Decision d)
{
    switch (d) {
    case Decision::NoJumpContained: return "no_jump_contained";
    case Decision::NoJumpCompatible: return "no_jump_compatible";
    case Decision::Jump: return "jump";
    case Decision::Withheld: return "withheld";
    case Decision::Impulse: return "impulse";
    }
    return "?";
}

inline std::optional<Decision> decision_from_string(const std::string& s)
{
    for (Decision d : {Decision::NoJumpContained, Decision::NoJumpCompatible, Decision::Jump, Decision::Withheld,
                       Decision::Impulse})
        if (s == to_string(d))
            return d;
    return std::nullopt;
}

/// No jump when D^+ is inside D^-; otherwise a jump iff p^- violates a D^+ constraint.
/// `containment_tol` is the rank threshold of the D^+ in D^- test; numerically
/// computed limits are only accurate to their angle tolerance.
inline Decision jump_decision(const Metric& metric, const SubspaceBasis& minus, const SubspaceBasis& plus,
                              const Vector& p_minus, double tol = 1e-9, double containment_tol = kRankTolerance)
{
    if (subspace_contained(plus, minus, containment_tol))
        return Decision::NoJumpContained;
    const Vector& q = plus.q;
    const Vector v = metric.raise(q, p_minus);
    const double scale = metric.norm(q, p_minus);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < plus.rows.rows(); ++i)
        worst = std::max(worst, std::abs(plus.rows.row(i).dot(v)));
    return worst > tol * scale ? Decision::Jump : Decision::NoJumpCompatible;
}

/// p^+ = P p^- with P the projector annihilated by the D^+ basis.
inline Vector apply_jump(const Metric& metric, const Vector& q, const SubspaceBasis& plus, const Vector& p_minus)
{
    return constraint_projector(metric, q, plus.rows) * p_minus;
}

/// p^+ = P (p^- + impulse); without active constraints simply p^- + impulse.
inline Vector apply_external_impulse(const Metric& metric, const Vector& q, const SubspaceBasis& active,
                                     const Vector& p_minus, const Vector& impulse)
{
    require_dim(impulse, metric.dim(), "apply_external_impulse");
    return constraint_projector(metric, q, active.rows) * (p_minus + impulse);
}

/// Kinetic energy lost, T(p^-) - T(p^+). Projection jumps must not gain energy.
inline double carnot_audit(const Metric& metric, const Vector& q, const Vector& p_minus, const Vector& p_plus,
                           bool projection_jump = true)
{
    const double before = metric.kinetic_energy(q, p_minus);
    const double loss = before - metric.kinetic_energy(q, p_plus);
    if (projection_jump && loss < -1e-12 * std::max(1.0, before))
        throw ConsistencyError("carnot_audit: projection jump increased kinetic energy by " + std::to_string(-loss));
    return loss;
}

/// Norm of the part of `a` outside span(basis), in the cometric.
inline double distance_to_span(const Metric& metric, const SubspaceBasis& basis, const Vector& a)
{
    Vector r = a;
    for (Eigen::Index i = 0; i < basis.rows.rows(); ++i) {
        const Vector b = basis.rows.row(i).transpose();
        r -= metric.inner(basis.q, b, a) * b;
    }
    return metric.norm(basis.q, r);
}

inline double constraint_violation(const Metric& metric, const SubspaceBasis& basis, const Vector& p)
{
    const Vector v = metric.raise(basis.q, p);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < basis.rows.rows(); ++i)
        worst = std::max(worst, std::abs(basis.rows.row(i).dot(v)));
    return worst;
}

struct JumpReport {
    double t0 = 0.0;
    Vector q0;
    int rho_minus = 0;
    int rho_0 = 0;
    int rho_plus = 0;
    /// 1, 2 or 3 for the rank patterns of a singular crossing; 0 when the rank does not change.
    int case_id = 0;
    Decision decision = Decision::NoJumpContained;
    SubspaceBasis basis_minus;
    SubspaceBasis basis_plus;
    /// Competing D^+ limits when the decision is withheld.
    std::vector<SubspaceBasis> candidates;
    Vector p_minus;
    Vector p_plus;
    double delta_T = 0.0;
    std::optional<Vector> impulse;
    double jump_residual = 0.0;
    double constraint_residual = 0.0;
    std::string note;
};

inline int classify_case(int rho_minus, int rho_0, int rho_plus)
{
    if (rho_0 == rho_minus && rho_plus > rho_minus)
        return 1;
    if (rho_0 < rho_minus && rho_plus == rho_0)
        return 2;
    if (rho_0 < rho_minus && rho_plus > rho_0)
        return 3;
    return 0;
}

/// Rank at a crossing point, treating rows shorter than `floor` in the cometric as zero.
inline int rank_with_floor(const MechanicalSystem& sys, const Vector& q, double floor, double tol = kRankTolerance)
{
    const Matrix rows = sys.codist.size() > 0 ? sys.codist.active_forms_at(q) : Matrix(0, sys.dim());
    Matrix kept(0, sys.dim());
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        if (sys.metric.norm(q, rows.row(i).transpose()) > floor)
            kept = stack_rows(kept, rows.row(i));
    return numeric_rank(sys.metric.whiten(q, kept), tol);
}

/// Fills the residual fields and enforces the jump equations.
inline void check_jump_equations(const Metric& metric, JumpReport& r, double tol = 1e-9)
{
    const Vector impulse = r.impulse ? *r.impulse : Vector::Zero(r.p_minus.size());
    r.jump_residual = distance_to_span(metric, r.basis_plus, r.p_plus - r.p_minus - impulse);
    r.constraint_residual = constraint_violation(metric, r.basis_plus, r.p_plus);
    const double scale = std::max(1.0, metric.norm(r.q0, r.p_minus) + metric.norm(r.q0, impulse));
    if (r.jump_residual > tol * scale || r.constraint_residual > tol * scale)
        throw ConsistencyError("jump equations violated: residuals " + std::to_string(r.jump_residual) + ", " +
                               std::to_string(r.constraint_residual));
}

enum class PlusHypothesis {
    None,
    /// Same approach balance on both sides: D^+ = D^-.
    SameAsMinus,
};

struct TransitionOptions {
    LimitOptions limit;
    double decision_tol = 1e-9;
    /// Rank threshold for D^+ in D^-; must exceed the angular accuracy of numerical limits.
    double containment_tol = 1e-6;
    /// Rows shorter than this at the crossing point count as vanished when computing rho_0.
    double crossing_rank_floor = 1e-8;
    PlusHypothesis hypothesis = PlusHypothesis::None;
    /// Compare D^+ along perturbed straight continuations for codistributions without strata.
    bool check_path_sensitivity = true;
    double probe_spread = 0.25;
    double probe_angle_tol = 1e-4;
    /// After crossings of smooth codistributions, time spent under the frozen
    /// D^+ before regular integration resumes (the forms are ill-conditioned on S).
    double bridge_time = 1e-6;
    int bridge_substeps = 16;
};

struct CrossingResolution {
    JumpReport report;
    /// Absent when the decision is withheld.
    std::optional<PhaseState> restart;
    /// States after `restart` integrated under the frozen D^+; empty for exact strata.
    std::vector<PhaseState> bridge;
    int next_side = 0;
    std::vector<int> next_active;
};

/// Constrained flow with the constant covector rows `frozen` in place of D,
/// classical RK4 with re-projection after every substep.
inline std::vector<PhaseState> frozen_constraint_flow(const MechanicalSystem& sys, const PhaseState& start,
                                                      const Matrix& frozen, double duration, int substeps)
{
    const Metric& g = sys.metric;
    auto rate = [&](const Vector& q, const Vector& p) {
        const Vector v = g.raise(q, p);
        Vector f = g.quadratic_force(q, v) - sys.potential_gradient_at(q);
        if (frozen.rows() > 0) {
            const Vector rhs = -frozen * g.raise(q, f) + frozen * g.raise(q, g.rate(q, v) * v);
            f += frozen.transpose() * gram_matrix(g, q, frozen).ldlt().solve(rhs);
        }
        return std::make_pair(v, f);
    };
    std::vector<PhaseState> out;
    PhaseState s = start;
    const double h = duration / substeps;
    for (int k = 0; k < substeps; ++k) {
        const auto [k1q, k1p] = rate(s.q, s.p);
        const auto [k2q, k2p] = rate(s.q + 0.5 * h * k1q, s.p + 0.5 * h * k1p);
        const auto [k3q, k3p] = rate(s.q + 0.5 * h * k2q, s.p + 0.5 * h * k2p);
        const auto [k4q, k4p] = rate(s.q + h * k3q, s.p + h * k3p);
        s.q += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
        s.p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        s.p = constraint_projector(g, s.q, frozen) * s.p;
        s.t = start.t + (k + 1) * h;
        out.push_back(s);
    }
    return out;
}

namespace detail {

inline std::vector<int> active_rows_near(const MechanicalSystem& sys, const Vector& q)
{
    return default_active_rows(sys, q);
}

/// D^+ along straight continuations whose direction is perturbed around `velocity`.
inline std::vector<SubspaceBasis> probe_plus_limits(const MechanicalSystem& sys, const Vector& q0,
                                                    const Vector& velocity, int side, const TransitionOptions& opts)
{
    std::vector<SubspaceBasis> out;
    const int n = sys.dim();
    const double speed = velocity.norm();
    if (speed == 0.0)
        return out;
    for (int j = 0; j < n; ++j) {
        for (double sign : {1.0, -1.0}) {
            Vector dir = velocity;
            dir(j) += sign * opts.probe_spread * speed;
            const ApproachPath probe = straight_path(q0, dir, Side::Plus);
            try {
                const OneSidedLimit lim = one_sided_limit(sys, probe, opts.limit);
                if (lim.side == side)
                    out.push_back(lim.basis);
            } catch (const LimitIndeterminateError& e) {
                // No settled limit along this approach; its finest sample still
                // shows where the subspaces are heading.
                if (side_key(sys, probe.at(opts.limit.eps0 * std::ldexp(1.0, -opts.limit.levels))) == side)
                    out.push_back(e.last());
            }
        }
    }
    return out;
}

} // namespace detail

/// Builds the jump report for a pair of one-sided limits and an incoming momentum.
inline JumpReport assemble_report(const MechanicalSystem& sys, double t0, const Vector& q0, const Vector& p_minus,
                                  const OneSidedLimit& minus, const OneSidedLimit& plus,
                                  std::vector<SubspaceBasis> competing, const TransitionOptions& opts)
{
    JumpReport r;
    r.t0 = t0;
    r.q0 = q0;
    r.p_minus = p_minus;
    r.basis_minus = minus.basis;
    r.basis_plus = plus.basis;
    r.rho_minus = minus.sample_rank;
    r.rho_plus = plus.sample_rank;
    r.rho_0 = std::min({r.rho_minus, r.rho_plus, rank_with_floor(sys, q0, opts.crossing_rank_floor)});
    r.case_id = classify_case(r.rho_minus, r.rho_0, r.rho_plus);

    if (!competing.empty() && opts.hypothesis == PlusHypothesis::None) {
        r.decision = Decision::Withheld;
        r.candidates.push_back(plus.basis);
        for (SubspaceBasis& b : competing)
            r.candidates.push_back(std::move(b));
        r.p_plus = p_minus;
        r.note = "D+ depends on the approach path; supply a hypothesis to continue";
        return r;
    }
    if (opts.hypothesis == PlusHypothesis::SameAsMinus) {
        r.basis_plus = minus.basis;
        r.note = "D+ taken equal to D- by hypothesis";
    }

    const double containment = minus.exact && plus.exact ? kRankTolerance : opts.containment_tol;
    r.decision = jump_decision(sys.metric, r.basis_minus, r.basis_plus, p_minus, opts.decision_tol, containment);
    r.p_plus = r.decision == Decision::Jump ? apply_jump(sys.metric, q0, r.basis_plus, p_minus) : p_minus;
    r.delta_T = carnot_audit(sys.metric, q0, p_minus, r.p_plus);
    if (r.decision == Decision::Jump)
        check_jump_equations(sys.metric, r);
    else
        r.constraint_residual = constraint_violation(sys.metric, r.basis_plus, r.p_plus);
    return r;
}

/// Resolves the crossing that ends `incoming`: D^- from its record, D^+ from
/// a ballistic continuation, then the decision and the post-crossing state.
/// The jump is placed at q(t0).
inline CrossingResolution resolve_crossing(const MechanicalSystem& sys, const TrajectorySegment& incoming,
                                           const TransitionOptions& opts = {})
{
    if (incoming.exit != ExitCause::SingularCrossing)
        throw InputError("resolve_crossing: segment does not end at a singular crossing");
    const PhaseState end = incoming.back();
    const Vector& q0 = end.q;

    CrossingResolution out;
    const OneSidedLimit minus = one_sided_limit(sys, path_from_segment(sys, incoming), opts.limit);
    const ApproachPath forward = ballistic_path(sys, q0, end.p, opts.limit.eps0);

    std::vector<SubspaceBasis> competing;
    OneSidedLimit plus;
    try {
        plus = one_sided_limit(sys, forward, opts.limit);
    } catch (const LimitIndeterminateError& e) {
        plus.basis = e.last();
        plus.sample_rank = e.last().rank();
        plus.nearest = forward.at(opts.limit.eps0 * std::ldexp(1.0, -opts.limit.levels));
        plus.side = side_key(sys, plus.nearest);
        competing.push_back(e.previous());
    }
    if (competing.empty() && !plus.exact && opts.check_path_sensitivity) {
        const Vector v = sys.metric.raise(q0, end.p);
        for (SubspaceBasis& b : detail::probe_plus_limits(sys, q0, v, plus.side, opts))
            if (b.rank() != plus.basis.rank() ||
                largest_principal_angle(sys.metric, b, plus.basis) > opts.probe_angle_tol)
                competing.push_back(std::move(b));
    }

    out.report = assemble_report(sys, end.t, q0, end.p, minus, plus, std::move(competing), opts);
    if (out.report.decision == Decision::Withheld)
        return out;
    out.restart = PhaseState{end.t, q0, out.report.p_plus};
    out.next_side = plus.side;
    out.next_active = detail::active_rows_near(sys, plus.nearest);
    if (!plus.exact && opts.bridge_time > 0.0)
        out.bridge = frozen_constraint_flow(sys, *out.restart, out.report.basis_plus.rows, opts.bridge_time,
                                            opts.bridge_substeps);
    return out;
}

} // namespace gencon
