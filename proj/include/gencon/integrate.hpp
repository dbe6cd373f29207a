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

// Adaptive integration of one regular-stratum segment with crossing detection.

#pragma once

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gencon/dynamics.hpp"

namespace gencon {

enum class ExitCause {
    Horizon,
    SingularCrossing,
    IntegrationFailure,
};

inline const char* to_string(ExitCause c)
{
    switch (c) {
    case ExitCause::Horizon: return "horizon";
    case ExitCause::SingularCrossing: return "singular_crossing";
    case ExitCause::IntegrationFailure: return "integration_failure";
    }
    return "?";
}

struct TrajectorySegment {
    std::vector<PhaseState> states;
    /// Side key of the stratum the segment lives on (see side_key).
    int stratum_id = 0;
    std::vector<int> active_rows;
    ExitCause exit = ExitCause::Horizon;
    std::string message;
    /// Smallest singular-indicator value seen, when an indicator is declared.
    double min_indicator = std::numeric_limits<double>::infinity();
    /// Leading states that belong to the transit through the singular set
    /// (restart point and frozen-constraint bridge) rather than to the stratum.
    std::size_t transit_states = 0;

    const PhaseState& front() const { return states.front(); }
    const PhaseState& back() const { return states.back(); }
};

struct IntegrationOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 0.1;
    double initial_step = 1e-3;
    /// Extra interpolated samples every sample_dt (0: accepted steps only).
    double sample_dt = 0.0;
    /// Relative width to which crossing times are refined.
    double event_time_tol = 1e-12;
    /// A NonNegative indicator at or below this value counts as reaching the singular set.
    double indicator_threshold = 1e-18;
    /// Side key the segment must live on; defaults to the key at the start point.
    std::optional<int> side;
    /// Active generator rows; defaults to default_active_rows at the start point.
    std::optional<std::vector<int>> active_rows;
    /// Project the start momentum onto the constraints. Off for restarts on the singular set.
    bool project_start = true;
};

namespace detail {

using OdeState = std::vector<double>;

inline OdeState pack(const Vector& q, const Vector& p)
{
    OdeState x(static_cast<std::size_t>(q.size() + p.size()));
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        x[static_cast<std::size_t>(i)] = q(i);
        x[static_cast<std::size_t>(q.size() + i)] = p(i);
    }
    return x;
}

inline PhaseState unpack(double t, const OdeState& x, int n)
{
    PhaseState s{t, Vector(n), Vector(n)};
    for (int i = 0; i < n; ++i) {
        s.q(i) = x[static_cast<std::size_t>(i)];
        s.p(i) = x[static_cast<std::size_t>(n + i)];
    }
    return s;
}

inline bool finite_state(const OdeState& x)
{
    for (double v : x)
        if (!std::isfinite(v))
            return false;
    return true;
}

} // namespace detail

/// Integrates the constrained flow from `start` until `horizon`, the first
/// change of stratum, or a failure. Momenta are re-projected onto the
/// constraint set after every accepted step.
inline TrajectorySegment integrate_segment(const MechanicalSystem& sys, const PhaseState& start, double horizon,
                                           const IntegrationOptions& opts = {})
{
    namespace odeint = boost::numeric::odeint;
    const int n = sys.dim();
    require_dim(start.q, n, "integrate_segment");
    require_dim(start.p, n, "integrate_segment");

    TrajectorySegment seg;
    if (opts.active_rows) {
        seg.active_rows = *opts.active_rows;
    } else if (opts.side && sys.codist.has_strata() && sys.codist.stratum_by_id(*opts.side) != nullptr) {
        seg.active_rows = sys.codist.stratum_by_id(*opts.side)->rows;
    } else {
        seg.active_rows = default_active_rows(sys, start.q);
    }
    const bool by_side = tracks_side(sys);
    const bool by_minimum = sys.codist.has_indicator() && !by_side;
    int ref = opts.side ? *opts.side : side_key(sys, start.q);
    seg.stratum_id = ref;
    bool entered = !by_side || side_key(sys, start.q) == ref;

    const auto& active = seg.active_rows;
    auto project = [&](PhaseState s) {
        s.p = project_momentum(sys, s.q, s.p, active);
        return s;
    };
    auto note_indicator = [&](const Vector& q) {
        if (sys.codist.has_indicator())
            seg.min_indicator = std::min(seg.min_indicator, sys.codist.indicator(q));
    };

    PhaseState first = start;
    try {
        if (opts.project_start)
            first = project(start);
    } catch (const Error& e) {
        seg.states.push_back(start);
        seg.exit = ExitCause::IntegrationFailure;
        seg.message = std::string("cannot project start state: ") + e.what();
        return seg;
    }
    seg.states.push_back(first);
    note_indicator(first.q);
    if (horizon <= start.t) {
        seg.exit = ExitCause::Horizon;
        return seg;
    }

    auto rhs = [&](const detail::OdeState& x, detail::OdeState& dx, double t) {
        const PhaseState s = detail::unpack(t, x, n);
        const PhaseRate r = eom_rhs(sys, s, active);
        dx = detail::pack(r.qdot, r.pdot);
    };

    auto stepper = odeint::make_dense_output(opts.abs_tol, opts.rel_tol, opts.max_step,
                                             odeint::runge_kutta_dopri5<detail::OdeState>());
    double dt = std::min(opts.initial_step, horizon - start.t);
    stepper.initialize(detail::pack(first.q, first.p), start.t, dt);

    auto state_at = [&](double t) {
        detail::OdeState x(static_cast<std::size_t>(2 * n));
        stepper.calc_state(t, x);
        return detail::unpack(t, x, n);
    };
    double next_sample = opts.sample_dt > 0 ? start.t + opts.sample_dt : std::numeric_limits<double>::infinity();

    try {
        for (;;) {
            const auto [ta, tb] = stepper.do_step(rhs);
            if (!detail::finite_state(stepper.current_state()))
                throw IntegrationError("non-finite state");
            if (stepper.current_time_step() < 1e-14 * std::max(1.0, std::abs(tb)))
                throw IntegrationError("step size underflow at t=" + std::to_string(tb));
            const double tend = std::min(tb, horizon);
            PhaseState end = state_at(tend);

            std::optional<double> crossing;
            if (by_side) {
                const int key = side_key(sys, end.q);
                if (!entered) {
                    // Restarts sit on the singular set; adopt the side reached after one step.
                    entered = true;
                    if (key != ref)
                        ref = seg.stratum_id = key;
                } else if (key != ref) {
                    double lo = ta, hi = tend;
                    while (hi - lo > opts.event_time_tol * std::max(1.0, std::abs(hi))) {
                        const double mid = 0.5 * (lo + hi);
                        if (side_key(sys, state_at(mid).q) == ref)
                            lo = mid;
                        else
                            hi = mid;
                    }
                    crossing = lo;
                }
            } else if (by_minimum) {
                const double a = ta;
                if (tend > a) {
                    constexpr int kProbe = 8;
                    auto s_of = [&](double t) { return sys.codist.indicator(state_at(t).q); };
                    int best = 0;
                    double best_val = std::numeric_limits<double>::infinity();
                    for (int k = 0; k <= kProbe; ++k) {
                        const double v = s_of(a + (tend - a) * k / kProbe);
                        if (v < best_val) {
                            best_val = v;
                            best = k;
                        }
                    }
                    double t_min = a + (tend - a) * best / kProbe;
                    if (best > 0 && best < kProbe) {
                        const auto r = boost::math::tools::brent_find_minima(
                            s_of, a + (tend - a) * (best - 1) / kProbe, a + (tend - a) * (best + 1) / kProbe,
                            std::numeric_limits<double>::digits);
                        t_min = r.first;
                        best_val = r.second;
                    }
                    seg.min_indicator = std::min(seg.min_indicator, best_val);
                    // A minimum at the left end was already examined with the previous step.
                    if (best > 0 && best_val <= opts.indicator_threshold)
                        crossing = t_min;
                }
            }

            // Interpolated samples strictly inside the accepted part of the step.
            const double stop = crossing ? *crossing : tend;
            while (next_sample < stop) {
                seg.states.push_back(project(state_at(next_sample)));
                next_sample += opts.sample_dt;
            }

            if (crossing) {
                // Indicator minima lie on the singular set, where the forms carry no direction.
                seg.states.push_back(by_side ? project(state_at(*crossing)) : state_at(*crossing));
                note_indicator(seg.states.back().q);
                seg.exit = ExitCause::SingularCrossing;
                return seg;
            }
            end = project(end);
            seg.states.push_back(end);
            note_indicator(end.q);
            if (tend >= horizon) {
                seg.exit = ExitCause::Horizon;
                return seg;
            }
            stepper.initialize(detail::pack(end.q, end.p), tb, stepper.current_time_step());
        }
    } catch (const odeint::odeint_error& e) {
        seg.exit = ExitCause::IntegrationFailure;
        seg.message = e.what();
    } catch (const Error& e) {
        seg.exit = ExitCause::IntegrationFailure;
        seg.message = e.what();
    }
    return seg;
}

/// Cubic Hermite interpolation of a stored segment, using q and qdot = g^{-1} p.
inline Vector interpolate_configuration(const MechanicalSystem& sys, const TrajectorySegment& seg, double t)
{
    const auto& s = seg.states;
    if (s.empty())
        throw InputError("interpolate_configuration: empty segment");
    if (t <= s.front().t)
        return s.front().q;
    if (t >= s.back().t)
        return s.back().q;
    std::size_t hi = 1;
    while (s[hi].t < t)
        ++hi;
    const PhaseState& a = s[hi - 1];
    const PhaseState& b = s[hi];
    const double h = b.t - a.t;
    if (h <= 0.0)
        return b.q;
    const double u = (t - a.t) / h;
    const Vector va = sys.metric.raise(a.q, a.p);
    const Vector vb = sys.metric.raise(b.q, b.p);
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    const double h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u);
    const double h11 = u * u * (u - 1);
    return h00 * a.q + h10 * h * va + h01 * b.q + h11 * h * vb;
}

} // namespace gencon
