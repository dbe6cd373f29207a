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

// Scenario files: YAML documents selecting a system, an initial state and
// the integration / transition settings of a run.
//
//   system:
//     builtin: plane_particle        # or rolling_sphere, central_force_particle
//     mass: 1
//   initial: {t: 0, q: [-1, 1], qdot: [1, 0]}
//   horizon: 2
//
// Inline systems give expressions in the coordinate names:
//
//   system:
//     inline:
//       coordinates: [x, y]
//       metric: [["1", "0"], ["0", "1"]]
//       potential: "0"
//       forms: [["1", "-1"]]
//       strata:
//         - {id: 0, where: "x <= 0", rows: []}
//         - {id: 1, where: "x > 0", rows: [0]}
//       singular_indicator: "x"

#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gencon/expression.hpp"
#include "gencon/systems.hpp"
#include "gencon/transitions.hpp"

namespace gencon {

/// Invalid scenario document.
class ScenarioError : public InputError {
public:
    using InputError::InputError;
};

struct ScheduledImpulse {
    double t = 0.0;
    Vector impulse;
};

struct Scenario {
    std::string name;
    MechanicalSystem system;
    PhaseState initial;
    double horizon = 1.0;
    IntegrationOptions integration;
    TransitionOptions transition;
    std::vector<ScheduledImpulse> impulses;
    std::string trajectory_path;
    std::string jumps_path;
    int max_crossings = 64;
    double classify_radius = 1e-6;
    int classify_samples = 0;
    /// Drift above which the initial momentum is rejected.
    double initial_drift_tol = 1e-8;
};

namespace detail {

inline std::string where(const YAML::Node& n)
{
    const YAML::Mark m = n.Mark();
    if (m.line < 0)
        return "";
    return " (line " + std::to_string(m.line + 1) + ")";
}

template <class T>
T get(const YAML::Node& node, const std::string& key, const T& fallback)
{
    const YAML::Node v = node[key];
    if (!v)
        return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ScenarioError("scenario: field '" + key + "' has the wrong type" + where(v));
    }
}

inline Vector get_vector(const YAML::Node& node, const std::string& what)
{
    if (!node.IsSequence())
        throw ScenarioError("scenario: '" + what + "' must be a list of numbers" + where(node));
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
        try {
            v(static_cast<Eigen::Index>(i)) = node[i].as<double>();
        } catch (const YAML::Exception&) {
            throw ScenarioError("scenario: '" + what + "' entry " + std::to_string(i) + " is not a number" +
                                where(node[i]));
        }
    }
    if (!v.allFinite())
        throw ScenarioError("scenario: '" + what + "' has non-finite entries");
    return v;
}

inline std::string expr_text(const YAML::Node& n)
{
    try {
        return n.as<std::string>();
    } catch (const YAML::Exception&) {
        throw ScenarioError("scenario: expected an expression" + where(n));
    }
}

inline Expression compile(const YAML::Node& n, const std::vector<std::string>& vars)
{
    try {
        return Expression::parse(expr_text(n), vars);
    } catch (const InputError& e) {
        throw ScenarioError(std::string(e.what()) + where(n));
    }
}

inline MechanicalSystem inline_system(const YAML::Node& def)
{
    if (!def["coordinates"] || !def["coordinates"].IsSequence())
        throw ScenarioError("scenario: inline system needs a 'coordinates' list" + where(def));
    const auto coords = def["coordinates"].as<std::vector<std::string>>();
    const int n = static_cast<int>(coords.size());
    if (n == 0)
        throw ScenarioError("scenario: inline system has no coordinates");

    MechanicalSystem sys;
    sys.name = get<std::string>(def, "name", "inline");
    sys.coordinates = coords;

    const YAML::Node g = def["metric"];
    if (!g || !g.IsSequence() || static_cast<int>(g.size()) != n)
        throw ScenarioError("scenario: inline metric must be a " + std::to_string(n) + "x" + std::to_string(n) +
                            " list of expression rows" + where(def));
    std::vector<Expression> entries;
    bool varies = false;
    for (const YAML::Node& row : g) {
        if (!row.IsSequence() || static_cast<int>(row.size()) != n)
            throw ScenarioError("scenario: inline metric row has wrong length" + where(row));
        for (const YAML::Node& e : row) {
            entries.push_back(compile(e, coords));
            varies = varies || entries.back().uses_variables();
        }
    }
    auto g_at = [entries, n](const Vector& q) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m(i, j) = entries[static_cast<std::size_t>(i * n + j)](q);
        return m;
    };
    try {
        sys.metric = varies ? Metric(n, g_at) : Metric::constant(g_at(Vector::Zero(n)));
    } catch (const InputError& e) {
        throw ScenarioError(std::string("scenario: inline metric: ") + e.what());
    }

    if (def["potential"]) {
        const Expression u = compile(def["potential"], coords);
        sys.potential = [u](const Vector& q) { return u(q); };
    } else {
        sys.potential = [](const Vector&) { return 0.0; };
    }

    std::vector<std::vector<Expression>> rows;
    if (const YAML::Node forms = def["forms"]) {
        if (!forms.IsSequence())
            throw ScenarioError("scenario: 'forms' must be a list of rows" + where(forms));
        for (const YAML::Node& row : forms) {
            if (!row.IsSequence() || static_cast<int>(row.size()) != n)
                throw ScenarioError("scenario: each form needs " + std::to_string(n) + " components" + where(row));
            std::vector<Expression> r;
            for (const YAML::Node& e : row)
                r.push_back(compile(e, coords));
            rows.push_back(std::move(r));
        }
    }
    const int m = static_cast<int>(rows.size());
    Codistribution d(n, m, [rows, n, m](const Vector& q) {
        Matrix w(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                w(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](q);
        return w;
    });

    if (const YAML::Node strata = def["strata"]) {
        std::vector<Stratum> list;
        for (const YAML::Node& s : strata) {
            Stratum st;
            st.id = get<int>(s, "id", static_cast<int>(list.size()));
            if (!s["where"])
                throw ScenarioError("scenario: stratum needs a 'where' condition" + where(s));
            const Expression cond = compile(s["where"], coords);
            st.name = cond.text();
            st.contains = [cond](const Vector& q) { return cond(q) != 0.0; };
            st.rows = get<std::vector<int>>(s, "rows", {});
            list.push_back(std::move(st));
        }
        try {
            d.with_strata(std::move(list));
        } catch (const InputError& e) {
            throw ScenarioError(e.what());
        }
    }
    if (def["singular_indicator"]) {
        const Expression s = compile(def["singular_indicator"], coords);
        const std::string kind = get<std::string>(def, "indicator_kind", "signed");
        if (kind != "signed" && kind != "nonnegative")
            throw ScenarioError("scenario: indicator_kind must be 'signed' or 'nonnegative'");
        d.with_singular_indicator([s](const Vector& q) { return s(q); },
                                  kind == "signed" ? IndicatorKind::Signed : IndicatorKind::NonNegative);
    }
    sys.codist = std::move(d);
    return sys;
}

inline MechanicalSystem builtin_system(const YAML::Node& def)
{
    const std::string name = get<std::string>(def, "builtin", "");
    if (name == "plane_particle") {
        const std::string rep = get<std::string>(def, "representation", "strata");
        if (rep != "strata" && rep != "smooth")
            throw ScenarioError("scenario: representation must be 'strata' or 'smooth'");
        return plane_particle(get<double>(def, "mass", 1.0),
                              rep == "strata" ? FormRepresentation::Strata : FormRepresentation::Smooth);
    }
    if (name == "rolling_sphere") {
        SphereParams p;
        p.r = get<double>(def, "r", p.r);
        if (def["k2"])
            p.k = std::sqrt(get<double>(def, "k2", 0.4));
        p.k = get<double>(def, "k", p.k);
        p.m = get<double>(def, "m", p.m);
        return rolling_sphere(p);
    }
    if (name == "central_force_particle")
        return central_force_particle();
    throw ScenarioError("scenario: unknown builtin system '" + name + "'" + where(def));
}

} // namespace detail

inline MechanicalSystem system_from_yaml(const YAML::Node& def)
{
    if (!def || !def.IsMap())
        throw ScenarioError("scenario: missing 'system' section");
    try {
        if (def["inline"])
            return detail::inline_system(def["inline"]);
        return detail::builtin_system(def);
    } catch (const ScenarioError&) {
        throw;
    } catch (const InputError& e) {
        throw ScenarioError(std::string("scenario: ") + e.what());
    }
}

inline Scenario scenario_from_yaml(const YAML::Node& doc)
{
    using detail::get;
    if (!doc || !doc.IsMap())
        throw ScenarioError("scenario: document must be a mapping");
    Scenario sc;
    sc.name = get<std::string>(doc, "name", "scenario");
    sc.system = system_from_yaml(doc["system"]);
    const int n = sc.system.dim();

    const YAML::Node init = doc["initial"];
    if (init) {
        if (!init["q"])
            throw ScenarioError("scenario: 'initial' needs q" + detail::where(init));
        sc.initial.t = get<double>(init, "t", 0.0);
        sc.initial.q = detail::get_vector(init["q"], "initial.q");
        if (sc.initial.q.size() != n)
            throw ScenarioError("scenario: initial.q has " + std::to_string(sc.initial.q.size()) +
                                " entries, system dimension is " + std::to_string(n));
        const bool has_v = static_cast<bool>(init["qdot"]);
        const bool has_p = static_cast<bool>(init["p"]);
        if (has_v == has_p)
            throw ScenarioError("scenario: 'initial' needs exactly one of qdot or p");
        const Vector given = detail::get_vector(has_v ? init["qdot"] : init["p"], has_v ? "initial.qdot" : "initial.p");
        if (given.size() != n)
            throw ScenarioError("scenario: initial velocity/momentum has wrong dimension");
        sc.initial.p = has_v ? sc.system.metric.lower(sc.initial.q, given) : given;
    } else {
        sc.initial.q = Vector::Zero(n);
        sc.initial.p = Vector::Zero(n);
    }
    sc.horizon = get<double>(doc, "horizon", sc.initial.t + 1.0);
    if (!(sc.horizon >= sc.initial.t))
        throw ScenarioError("scenario: horizon lies before the initial time");
    sc.max_crossings = get<int>(doc, "max_crossings", sc.max_crossings);

    if (const YAML::Node in = doc["integrator"]) {
        IntegrationOptions& o = sc.integration;
        o.rel_tol = get<double>(in, "rel_tol", o.rel_tol);
        o.abs_tol = get<double>(in, "abs_tol", o.abs_tol);
        o.max_step = get<double>(in, "max_step", o.max_step);
        o.initial_step = get<double>(in, "initial_step", o.initial_step);
        o.sample_dt = get<double>(in, "sample_dt", o.sample_dt);
        if (!(o.rel_tol > 0 && o.abs_tol > 0 && o.max_step > 0 && o.initial_step > 0 && o.sample_dt >= 0))
            throw ScenarioError("scenario: integrator tolerances and steps must be positive");
    }
    if (const YAML::Node tr = doc["transition"]) {
        TransitionOptions& o = sc.transition;
        o.limit.eps0 = get<double>(tr, "eps0", o.limit.eps0);
        o.limit.levels = get<int>(tr, "levels", o.limit.levels);
        o.limit.angle_tol = get<double>(tr, "angle_tol", o.limit.angle_tol);
        o.decision_tol = get<double>(tr, "decision_tol", o.decision_tol);
        o.crossing_rank_floor = get<double>(tr, "crossing_rank_floor", o.crossing_rank_floor);
        o.check_path_sensitivity = get<bool>(tr, "check_path_sensitivity", o.check_path_sensitivity);
        const std::string h = get<std::string>(tr, "hypothesis", "none");
        if (h == "none")
            o.hypothesis = PlusHypothesis::None;
        else if (h == "same_as_minus")
            o.hypothesis = PlusHypothesis::SameAsMinus;
        else
            throw ScenarioError("scenario: hypothesis must be 'none' or 'same_as_minus'");
        if (!(o.limit.eps0 > 0 && o.limit.levels >= 1 && o.limit.angle_tol > 0))
            throw ScenarioError("scenario: transition limits must be positive");
    }
    if (const YAML::Node imp = doc["impulses"]) {
        for (const YAML::Node& i : imp) {
            ScheduledImpulse s;
            s.t = get<double>(i, "t", 0.0);
            if (!i["P"])
                throw ScenarioError("scenario: impulse needs P" + detail::where(i));
            s.impulse = detail::get_vector(i["P"], "impulse P");
            if (s.impulse.size() != n)
                throw ScenarioError("scenario: impulse has wrong dimension");
            sc.impulses.push_back(s);
        }
        std::sort(sc.impulses.begin(), sc.impulses.end(),
                  [](const ScheduledImpulse& a, const ScheduledImpulse& b) { return a.t < b.t; });
    }
    if (const YAML::Node out = doc["output"]) {
        sc.trajectory_path = get<std::string>(out, "trajectory", "");
        sc.jumps_path = get<std::string>(out, "jumps", "");
    }
    if (const YAML::Node cl = doc["classify"]) {
        sc.classify_radius = get<double>(cl, "radius", sc.classify_radius);
        sc.classify_samples = get<int>(cl, "samples", sc.classify_samples);
    }
    return sc;
}

/// Rejects initial momenta that violate the active constraints, suggesting the projected one.
inline void validate_initial_state(const Scenario& sc)
{
    const MechanicalSystem& sys = sc.system;
    std::vector<int> active;
    try {
        active = default_active_rows(sys, sc.initial.q);
    } catch (const InputError& e) {
        throw ScenarioError(std::string("scenario: initial point: ") + e.what());
    }
    const double drift = constraint_drift(sys, sc.initial.q, sc.initial.p, active);
    const double scale = std::max(1.0, sys.metric.norm(sc.initial.q, sc.initial.p));
    if (drift > sc.initial_drift_tol * scale) {
        const Vector p = project_momentum(sys, sc.initial.q, sc.initial.p, active);
        const Vector v = sys.metric.raise(sc.initial.q, p);
        std::ostringstream msg;
        msg.precision(17);
        msg << "scenario: initial velocity violates the active constraints (residual " << drift
            << "); nearest admissible qdot = [";
        for (Eigen::Index i = 0; i < v.size(); ++i)
            msg << (i ? ", " : "") << v(i);
        msg << "]";
        throw ScenarioError(msg.str());
    }
}

inline Scenario load_scenario(const std::string& path)
{
    YAML::Node doc;
    try {
        doc = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ScenarioError("scenario: cannot open '" + path + "'");
    } catch (const YAML::Exception& e) {
        throw ScenarioError("scenario: " + std::string(e.what()));
    }
    return scenario_from_yaml(doc);
}

/// Sets a scalar at a dotted path (map keys and list indices), e.g. "initial.qdot.0".
inline void set_by_path(YAML::Node root, const std::string& dotted, double value)
{
    std::vector<std::string> parts;
    std::stringstream ss(dotted);
    for (std::string part; std::getline(ss, part, '.');)
        parts.push_back(part);
    if (parts.empty())
        throw ScenarioError("sweep: empty parameter path");
    auto index_of = [&](const YAML::Node& seq, const std::string& key) {
        std::size_t idx = 0;
        try {
            idx = std::stoul(key);
        } catch (const std::exception&) {
            throw ScenarioError("sweep: '" + key + "' is not a list index in '" + dotted + "'");
        }
        if (idx >= seq.size())
            throw ScenarioError("sweep: index " + key + " out of range in '" + dotted + "'");
        return idx;
    };
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        YAML::Node cur = chain.back();
        if (cur.IsSequence())
            chain.push_back(cur[index_of(cur, parts[i])]);
        else
            chain.push_back(cur[parts[i]]);
    }
    YAML::Node last = chain.back();
    if (last.IsSequence())
        last[index_of(last, parts.back())] = value;
    else
        last[parts.back()] = value;
}

} // namespace gencon
