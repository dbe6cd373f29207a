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

// Ready-made systems: the particle in the plane with a one-sided constraint,
// the sphere passing from a smooth to a rough half-plane, and the particle in
// a central field with a constraint that degenerates on a curve.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gencon/dynamics.hpp"

namespace gencon {

enum class FormRepresentation {
    /// Declared strata {x <= 0: no rows, x > 0: row 0}.
    Strata,
    /// Only the smooth generator exp(-1/x^2)(dx - dy); limits are taken numerically.
    Smooth,
};

/// Planar particle, g = m Id, U = 0, D = span{phi(x)(dx - dy)} with phi(x) = exp(-1/x^2) for x > 0.
inline MechanicalSystem plane_particle(double mass = 1.0, FormRepresentation form = FormRepresentation::Strata)
{
    if (!(mass > 0.0))
        throw InputError("plane_particle: mass must be positive");
    Codistribution d(2, 1, [](const Vector&) {
        Matrix w(1, 2);
        w << 1.0, -1.0;
        return w;
    });
    d.with_envelope([](const Vector& q) {
         Vector e(1);
         e(0) = q(0) > 0.0 ? -1.0 / (q(0) * q(0)) : -std::numeric_limits<double>::infinity();
         return e;
     })
        .with_rate([](const Vector&, const Vector&) { return Matrix(Matrix::Zero(1, 2)); })
        .with_singular_indicator([](const Vector& q) { return q(0); }, IndicatorKind::Signed);
    if (form == FormRepresentation::Strata) {
        d.with_strata({
            {0, "x<=0", [](const Vector& q) { return q(0) <= 0.0; }, {}},
            {1, "x>0", [](const Vector& q) { return q(0) > 0.0; }, {0}},
        });
    }
    MechanicalSystem sys;
    sys.name = "plane_particle";
    sys.metric = Metric::constant(mass * Matrix::Identity(2, 2));
    sys.potential = [](const Vector&) { return 0.0; };
    sys.potential_gradient = [](const Vector&) { return Vector(Vector::Zero(2)); };
    sys.codist = std::move(d);
    sys.coordinates = {"x", "y"};
    return sys;
}

struct SphereParams {
    double r = 1.0;
    double k = std::sqrt(0.4);
    double m = 1.0;

    void validate() const
    {
        if (!(std::isfinite(r) && std::isfinite(k) && std::isfinite(m) && r > 0 && k > 0 && m > 0))
            throw InputError("SphereParams: r, k, m must be finite and positive");
    }
};

/// Constraint rows dx - r dq2 and dy + r dq1 of rolling without sliding.
inline Matrix sphere_rolling_forms(double r)
{
    Matrix w(2, 5);
    w << 1, 0, 0, -r, 0,
         0, 1, r, 0, 0;
    return w;
}

/// Sphere on a plane that is smooth for x <= 0 and rough for x > 0, in the
/// quasi-velocity coframe (x, y, q1, q2, q3) with dq_i/dt = omega_i.
inline MechanicalSystem rolling_sphere(const SphereParams& params = {})
{
    params.validate();
    const Matrix w = sphere_rolling_forms(params.r);
    Codistribution d(5, 2, [w](const Vector&) { return w; });
    d.with_rate([](const Vector&, const Vector&) { return Matrix(Matrix::Zero(2, 5)); })
        .with_strata({
            {0, "smooth x<=0", [](const Vector& q) { return q(0) <= 0.0; }, {}},
            {1, "rough x>0", [](const Vector& q) { return q(0) > 0.0; }, {0, 1}},
        })
        .with_singular_indicator([](const Vector& q) { return q(0); }, IndicatorKind::Signed);

    Vector diag(5);
    const double k2 = params.k * params.k;
    diag << 1, 1, k2, k2, k2;
    MechanicalSystem sys;
    sys.name = "rolling_sphere";
    sys.metric = Metric::constant(params.m * Matrix(diag.asDiagonal()));
    sys.potential = [](const Vector&) { return 0.0; };
    sys.potential_gradient = [](const Vector&) { return Vector(Vector::Zero(5)); };
    sys.codist = std::move(d);
    sys.coordinates = {"x", "y", "q1", "q2", "q3"};
    return sys;
}

/// Velocities (xdot, ydot, omega_x, omega_y, omega_z) to momenta.
inline Vector sphere_momenta(const SphereParams& p, const Vector& vel)
{
    const double k2 = p.k * p.k;
    Vector out(5);
    out << vel(0), vel(1), k2 * vel(2), k2 * vel(3), k2 * vel(4);
    return p.m * out;
}

/// Velocities right after rolling sets in, for pre-crossing velocities `vel`.
inline Vector sphere_post_jump_velocities(const SphereParams& p, const Vector& vel)
{
    const double r = p.r, k2 = p.k * p.k, den = r * r + k2;
    Vector out(5);
    out << (r * r * vel(0) + r * k2 * vel(3)) / den,
           (r * r * vel(1) - r * k2 * vel(2)) / den,
           (-r * vel(1) + k2 * vel(2)) / den,
           (r * vel(0) + k2 * vel(3)) / den,
           vel(4);
    return out;
}

struct ReferenceSolution {
    std::function<PhaseState(double)> at;
    double t_begin = 0.0;
    double t_end = 0.0;
    int stratum = 0;
};

/// Uniform straight-line motion with constant momentum under a constant metric and U = 0.
inline ReferenceSolution uniform_motion(const MechanicalSystem& sys, const PhaseState& start, double t_end, int stratum)
{
    const Vector v = sys.metric.raise(start.q, start.p);
    const PhaseState s0 = start;
    return {[s0, v](double t) { return PhaseState{t, Vector(s0.q + (t - s0.t) * v), s0.p}; }, start.t, t_end,
            stratum};
}

/// Sphere started at (x0, y0) on the smooth side: motion until and after reaching x = 0.
struct SphereScenarioReference {
    double crossing_time = 0.0;
    ReferenceSolution before;
    ReferenceSolution after;
};

inline SphereScenarioReference sphere_reference(const SphereParams& p, double x0, double y0, const Vector& vel0,
                                                double t_end)
{
    if (!(x0 < 0.0 && vel0(0) > 0.0))
        throw InputError("sphere_reference: needs x0 < 0 and xdot0 > 0");
    const MechanicalSystem sys = rolling_sphere(p);
    SphereScenarioReference out;
    out.crossing_time = -x0 / vel0(0);
    Vector q0 = Vector::Zero(5);
    q0(0) = x0;
    q0(1) = y0;
    const PhaseState start{0.0, q0, sphere_momenta(p, vel0)};
    out.before = uniform_motion(sys, start, out.crossing_time, 0);

    const Vector vel_plus = sphere_post_jump_velocities(p, vel0);
    const double tb = out.crossing_time;
    Vector q_cross = q0 + tb * vel0;
    q_cross(0) = 0.0;
    const PhaseState restart{tb, q_cross, sphere_momenta(p, vel_plus)};
    out.after = uniform_motion(sys, restart, t_end, 1);
    return out;
}

/// Residual of the integral surface z - x^2 - y^2 + xy = 0 of the central-force constraint.
inline double central_surface_residual(const Vector& q)
{
    return q(2) - q(0) * q(0) - q(1) * q(1) + q(0) * q(1);
}

inline Matrix central_force_form(const Vector& q)
{
    const double x = q(0), y = q(1), z = q(2);
    Matrix w(1, 3);
    w << y * y - x * x - z, z - y * y - x * y, x;
    return w;
}

/// Unit-mass particle in the field -x dx - y dy + (1 - z) dz, constrained by
/// (y^2 - x^2 - z) dx + (z - y^2 - xy) dy + x dz, singular on x = 0, z = y^2.
inline MechanicalSystem central_force_particle()
{
    Codistribution d(3, 1, central_force_form);
    d.with_rate([](const Vector& q, const Vector& v) {
         const double x = q(0), y = q(1);
         Matrix w(1, 3);
         w << 2 * y * v(1) - 2 * x * v(0) - v(2), v(2) - 2 * y * v(1) - y * v(0) - x * v(1), v(0);
         return w;
     })
        .with_singular_indicator(
            [](const Vector& q) {
                const double a = q(2) - q(1) * q(1);
                return q(0) * q(0) + a * a;
            },
            IndicatorKind::NonNegative);

    MechanicalSystem sys;
    sys.name = "central_force_particle";
    sys.metric = Metric::identity(3);
    sys.potential = [](const Vector& q) { return 0.5 * (q.squaredNorm() - 2.0 * q(2)); };
    sys.potential_gradient = [](const Vector& q) {
        Vector g = q;
        g(2) -= 1.0;
        return g;
    };
    sys.codist = std::move(d);
    sys.coordinates = {"x", "y", "z"};
    return sys;
}

/// Point of the integral surface above (x, y) with a tangent velocity (xdot, ydot, zdot).
inline PhaseState central_surface_state(double x, double y, double xdot, double ydot)
{
    Vector q(3), v(3);
    q << x, y, x * x + y * y - x * y;
    v << xdot, ydot, (2 * x - y) * xdot + (2 * y - x) * ydot;
    return {0.0, q, v};
}

/// Initial states on the integral surface heading toward the singular curve.
/// Starting points for searches; none is known to reach it.
inline std::vector<PhaseState> central_force_search_presets()
{
    return {
        central_surface_state(0.5, 1.0, -1.0, 0.0),
        central_surface_state(0.2, 0.5, -1.0, 0.3),
        central_surface_state(-0.4, 1.2, 1.5, -0.2),
    };
}

} // namespace gencon
