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

// Scenario driver: alternates regular-stratum integration with crossing
// resolution and scheduled impulses; standalone classification and jump
// probing.

#pragma once

#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gencon/scenario.hpp"

namespace gencon {

enum class RunStatus {
    Completed,
    Indeterminate,
    IntegrationFailure,
};

/// Process exit codes of the command-line runner.
enum ExitCode : int {
    kExitOk = 0,
    kExitScenarioInvalid = 2,
    kExitIndeterminate = 3,
    kExitIntegrationFailure = 4,
};

inline int exit_code(RunStatus s)
{
    switch (s) {
    case RunStatus::Completed: return kExitOk;
    case RunStatus::Indeterminate: return kExitIndeterminate;
    case RunStatus::IntegrationFailure: return kExitIntegrationFailure;
    }
    return kExitIntegrationFailure;
}

struct RunSummary {
    /// (t, T + U) at every stored state.
    std::vector<std::pair<double, double>> energy;
    /// max |E(t) - E(start)| / max(1, |E(start)|) / max(1, t - start) over segments.
    double energy_drift_rate = 0.0;
    /// max of constraint_drift / |p| over stored states inside regular strata
    /// (crossing points and transit states excluded).
    double constraint_drift = 0.0;
    std::map<int, int> case_counts;
    int jump_count = 0;
    double min_indicator = std::numeric_limits<double>::infinity();
};

struct RunResult {
    std::vector<TrajectorySegment> segments;
    std::vector<JumpReport> jumps;
    RunSummary summary;
    RunStatus status = RunStatus::Completed;
    std::string message;
};

inline void summarize(const MechanicalSystem& sys, RunResult& r)
{
    RunSummary& s = r.summary;
    s = RunSummary{};
    for (const TrajectorySegment& seg : r.segments) {
        if (seg.states.empty())
            continue;
        const PhaseState& a = seg.front();
        const double e0 = sys.energy(a.q, a.p);
        for (std::size_t i = 0; i < seg.states.size(); ++i) {
            const PhaseState& st = seg.states[i];
            const double e = sys.energy(st.q, st.p);
            s.energy.emplace_back(st.t, e);
            s.energy_drift_rate = std::max(
                s.energy_drift_rate, std::abs(e - e0) / std::max(1.0, std::abs(e0)) / std::max(1.0, st.t - a.t));
            const double pn = sys.metric.norm(st.q, st.p);
            const bool at_crossing = seg.exit == ExitCause::SingularCrossing && i + 1 == seg.states.size();
            if (pn > 0.0 && i >= seg.transit_states && !at_crossing)
                s.constraint_drift = std::max(s.constraint_drift, constraint_drift(sys, st.q, st.p, seg.active_rows) / pn);
        }
        s.min_indicator = std::min(s.min_indicator, seg.min_indicator);
    }
    for (const JumpReport& j : r.jumps) {
        if (j.decision == Decision::Impulse)
            continue;
        ++s.case_counts[j.case_id];
        if (j.decision == Decision::Jump)
            ++s.jump_count;
    }
}

/// Active constraint span at a regular point, for impulses.
inline SubspaceBasis active_basis(const MechanicalSystem& sys, const Vector& q, const std::vector<int>& rows)
{
    return orthonormalize_subspace(sys.metric, q, normalize_rows(sys.metric, q, nonvanishing_active_forms(sys, q, rows)));
}

inline RunResult run(const Scenario& sc)
{
    const MechanicalSystem& sys = sc.system;
    RunResult result;
    PhaseState state = sc.initial;
    IntegrationOptions iopts = sc.integration;
    std::size_t next_impulse = 0;
    while (next_impulse < sc.impulses.size() && sc.impulses[next_impulse].t < state.t)
        ++next_impulse;
    int crossings = 0;
    // States from a crossing to the start of the next integrated segment.
    std::vector<PhaseState> bridge_prefix;

    for (;;) {
        const double stop =
            next_impulse < sc.impulses.size() ? std::min(sc.horizon, sc.impulses[next_impulse].t) : sc.horizon;
        result.segments.push_back(integrate_segment(sys, state, stop, iopts));
        TrajectorySegment& seg = result.segments.back();
        if (!bridge_prefix.empty()) {
            seg.states.insert(seg.states.begin(), bridge_prefix.begin(), bridge_prefix.end());
            seg.transit_states = bridge_prefix.size() + 1;
            bridge_prefix.clear();
        }

        if (seg.exit == ExitCause::IntegrationFailure) {
            result.status = RunStatus::IntegrationFailure;
            result.message = "integration failed at t=" + std::to_string(seg.back().t) + ": " + seg.message;
            break;
        }
        if (seg.exit == ExitCause::SingularCrossing) {
            if (++crossings > sc.max_crossings) {
                result.status = RunStatus::IntegrationFailure;
                result.message = "more than " + std::to_string(sc.max_crossings) + " crossings";
                break;
            }
            CrossingResolution res;
            try {
                res = resolve_crossing(sys, seg, sc.transition);
            } catch (const LimitIndeterminateError& e) {
                result.status = RunStatus::Indeterminate;
                result.message = e.what();
                break;
            }
            result.jumps.push_back(res.report);
            if (!res.bridge.empty())
                bridge_prefix = {*res.restart};
            if (!res.restart) {
                result.status = RunStatus::Indeterminate;
                result.message = "indeterminate crossing at t=" + std::to_string(res.report.t0) + ": " +
                                 res.report.note;
                break;
            }
            state = res.bridge.empty() ? *res.restart : res.bridge.back();
            if (!res.bridge.empty())
                bridge_prefix.insert(bridge_prefix.end(), res.bridge.begin(), res.bridge.end() - 1);
            iopts.side = res.next_side;
            iopts.active_rows = res.next_active;
            iopts.project_start = !res.bridge.empty();
            continue;
        }

        const PhaseState end = seg.back();
        if (end.t >= sc.horizon)
            break;

        // Scheduled impulses at this instant.
        JumpReport r;
        r.t0 = end.t;
        r.q0 = end.q;
        r.decision = Decision::Impulse;
        r.p_minus = end.p;
        Vector total = Vector::Zero(sys.dim());
        while (next_impulse < sc.impulses.size() && sc.impulses[next_impulse].t <= end.t)
            total += sc.impulses[next_impulse++].impulse;
        r.basis_minus = r.basis_plus = active_basis(sys, end.q, seg.active_rows);
        r.rho_minus = r.rho_0 = r.rho_plus = r.basis_plus.rank();
        r.impulse = total;
        r.p_plus = apply_external_impulse(sys.metric, end.q, r.basis_plus, end.p, total);
        r.delta_T = carnot_audit(sys.metric, end.q, r.p_minus, r.p_plus, false);
        check_jump_equations(sys.metric, r);
        result.jumps.push_back(r);

        state = PhaseState{end.t, end.q, r.p_plus};
        iopts.side = seg.stratum_id;
        iopts.active_rows = seg.active_rows;
        iopts.project_start = true;
    }
    summarize(sys, result);
    return result;
}

struct GridAxis {
    int coordinate = 0;
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;
};

/// Parses "x=-1:1:21,y=0:0:1": coordinate=lo:hi:count; coordinates may also be given as 1-based indices.
inline std::vector<GridAxis> parse_grid(const std::string& spec, const MechanicalSystem& sys)
{
    std::vector<GridAxis> axes;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ScenarioError("grid: expected name=lo:hi:count, got '" + item + "'");
        const std::string name = item.substr(0, eq);
        GridAxis ax;
        ax.coordinate = -1;
        for (int i = 0; i < sys.dim(); ++i)
            if (sys.coordinate_name(i) == name || "q" + std::to_string(i + 1) == name)
                ax.coordinate = i;
        if (ax.coordinate < 0)
            throw ScenarioError("grid: unknown coordinate '" + name + "'");
        std::stringstream rs(item.substr(eq + 1));
        std::string a, b, c;
        if (!std::getline(rs, a, ':') || !std::getline(rs, b, ':') || !std::getline(rs, c, ':'))
            throw ScenarioError("grid: expected lo:hi:count in '" + item + "'");
        try {
            ax.lo = std::stod(a);
            ax.hi = std::stod(b);
            ax.count = std::stoi(c);
        } catch (const std::exception&) {
            throw ScenarioError("grid: malformed range in '" + item + "'");
        }
        if (ax.count < 1 || ax.hi < ax.lo)
            throw ScenarioError("grid: need lo <= hi and count >= 1 in '" + item + "'");
        axes.push_back(ax);
    }
    return axes;
}

struct ClassifiedPoint {
    Vector q;
    PointClass cls;
};

/// Rank and regular/singular label at every grid point; unlisted coordinates stay at `base`.
inline std::vector<ClassifiedPoint> classify(const MechanicalSystem& sys, const std::vector<GridAxis>& axes,
                                             const Vector& base, double radius, int samples = 0)
{
    std::vector<ClassifiedPoint> out;
    std::vector<int> idx(axes.size(), 0);
    for (;;) {
        Vector q = base;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const GridAxis& ax = axes[a];
            q(ax.coordinate) = ax.count == 1 ? ax.lo : ax.lo + idx[a] * (ax.hi - ax.lo) / (ax.count - 1);
        }
        out.push_back({q, classify_point(sys.codist, q, radius, samples)});
        std::size_t a = 0;
        while (a < axes.size() && ++idx[a] == axes[a].count)
            idx[a++] = 0;
        if (a == axes.size())
            break;
    }
    return out;
}

/// Plus-side approach curve q0_i + coeff_i s^exponent_i.
struct PathSpec {
    Vector coeff;
    Vector exponent;
};

/// Parses "c1,...,cn" or "c1,...,cn;e1,...,en" (exponents default to 1).
inline PathSpec parse_path_spec(const std::string& text, int n)
{
    auto numbers = [&](const std::string& part) {
        std::vector<double> v;
        std::stringstream ss(part);
        for (std::string tok; std::getline(ss, tok, ',');) {
            try {
                v.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ScenarioError("path: malformed number '" + tok + "'");
            }
        }
        if (static_cast<int>(v.size()) != n)
            throw ScenarioError("path: expected " + std::to_string(n) + " entries in '" + part + "'");
        return Vector(Eigen::Map<Vector>(v.data(), n));
    };
    const auto semi = text.find(';');
    PathSpec p;
    p.coeff = numbers(text.substr(0, semi));
    p.exponent = semi == std::string::npos ? Vector::Ones(n) : numbers(text.substr(semi + 1));
    return p;
}

/// Standalone D-/D+/decision/p+ at a point: the minus side is the straight
/// backward continuation of the incoming velocity; the plus side follows the
/// given curves (ballistic continuation when none). Disagreeing plus-side
/// limits yield a withheld decision listing every candidate.
inline JumpReport jump_probe(const MechanicalSystem& sys, const Vector& q0, const Vector& p_minus,
                             const std::vector<PathSpec>& plus_paths, const TransitionOptions& opts = {},
                             double t0 = 0.0)
{
    require_dim(q0, sys.dim(), "jump_probe");
    require_dim(p_minus, sys.dim(), "jump_probe");
    const Vector v = sys.metric.raise(q0, p_minus);
    const OneSidedLimit minus = one_sided_limit(sys, straight_path(q0, -v, Side::Minus), opts.limit);

    std::vector<OneSidedLimit> plus;
    if (plus_paths.empty()) {
        plus.push_back(one_sided_limit(sys, ballistic_path(sys, q0, p_minus, opts.limit.eps0), opts.limit));
    } else {
        for (const PathSpec& ps : plus_paths)
            plus.push_back(one_sided_limit(sys, power_path(q0, ps.coeff, ps.exponent, Side::Plus), opts.limit));
    }
    std::vector<SubspaceBasis> competing;
    for (std::size_t i = 1; i < plus.size(); ++i)
        if (plus[i].basis.rank() != plus[0].basis.rank() ||
            largest_principal_angle(sys.metric, plus[i].basis, plus[0].basis) > opts.probe_angle_tol)
            competing.push_back(plus[i].basis);
    if (plus_paths.empty() && !plus[0].exact && opts.check_path_sensitivity) {
        for (SubspaceBasis& b : detail::probe_plus_limits(sys, q0, v, plus[0].side, opts))
            if (b.rank() != plus[0].basis.rank() ||
                largest_principal_angle(sys.metric, b, plus[0].basis) > opts.probe_angle_tol)
                competing.push_back(std::move(b));
    }
    return assemble_report(sys, t0, q0, p_minus, minus, plus[0], std::move(competing), opts);
}

} // namespace gencon
