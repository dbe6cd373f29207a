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

// CSV export and import of trajectories and jump reports. Numbers are written
// with 17 significant digits so that reading a file back reproduces every
// stored double exactly.

#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gencon/run.hpp"

namespace gencon {

inline std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trajectory_header(int n)
{
    std::string h = "t";
    for (const char* prefix : {"q_", "p_", "qdot_"})
        for (int i = 1; i <= n; ++i)
            h += std::string(",") + prefix + std::to_string(i);
    return h + ",stratum_id,energy,drift";
}

inline std::string jumps_header(int n)
{
    std::string h = "t0";
    for (int i = 1; i <= n; ++i)
        h += ",q_" + std::to_string(i);
    h += ",rho_minus,rho_0,rho_plus,case_id,decision";
    for (const char* prefix : {"p_minus_", "p_plus_"})
        for (int i = 1; i <= n; ++i)
            h += std::string(",") + prefix + std::to_string(i);
    return h + ",deltaT";
}

inline void write_trajectory_csv(std::ostream& out, const MechanicalSystem& sys,
                                 const std::vector<TrajectorySegment>& segments)
{
    out << trajectory_header(sys.dim()) << '\n';
    for (const TrajectorySegment& seg : segments) {
        for (const PhaseState& s : seg.states) {
            const Vector v = sys.metric.raise(s.q, s.p);
            out << format_number(s.t);
            for (const Vector* x : {&s.q, &s.p, &v})
                for (Eigen::Index i = 0; i < x->size(); ++i)
                    out << ',' << format_number((*x)(i));
            out << ',' << seg.stratum_id << ',' << format_number(sys.energy(s.q, s.p)) << ','
                << format_number(constraint_drift(sys, s.q, s.p, seg.active_rows)) << '\n';
        }
    }
}

inline void write_jumps_csv(std::ostream& out, int n, const std::vector<JumpReport>& jumps)
{
    out << jumps_header(n) << '\n';
    for (const JumpReport& j : jumps) {
        out << format_number(j.t0);
        for (Eigen::Index i = 0; i < j.q0.size(); ++i)
            out << ',' << format_number(j.q0(i));
        out << ',' << j.rho_minus << ',' << j.rho_0 << ',' << j.rho_plus << ',' << j.case_id << ','
            << to_string(j.decision);
        for (const Vector* x : {&j.p_minus, &j.p_plus})
            for (Eigen::Index i = 0; i < x->size(); ++i)
                out << ',' << format_number((*x)(i));
        out << ',' << format_number(j.delta_T) << '\n';
    }
}

/// One row of a trajectory file.
struct TrajectoryRow {
    PhaseState state;
    Vector qdot;
    int stratum_id = 0;
    double energy = 0.0;
    double drift = 0.0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');)
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

inline double parse_cell(const std::string& cell, std::size_t line)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size())
            throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw InputError("csv: malformed number '" + cell + "' on line " + std::to_string(line));
    }
}

/// Dimension implied by a header whose columns are counted by `per_dim` and `fixed`.
inline int header_dim(const std::vector<std::string>& header, int per_dim, int fixed, const char* what)
{
    const int extra = static_cast<int>(header.size()) - fixed;
    if (extra <= 0 || extra % per_dim != 0)
        throw InputError(std::string("csv: unexpected ") + what + " header");
    return extra / per_dim;
}

} // namespace detail

/// Reads a trajectory file back; a new segment starts wherever time does not increase.
inline std::vector<std::vector<TrajectoryRow>> read_trajectory_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw InputError("csv: empty trajectory file");
    const int n = detail::header_dim(detail::split_csv_line(line), 3, 4, "trajectory");
    if (line != trajectory_header(n))
        throw InputError("csv: unexpected trajectory header");

    std::vector<std::vector<TrajectoryRow>> segments;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        if (static_cast<int>(cells.size()) != 3 * n + 4)
            throw InputError("csv: wrong column count on line " + std::to_string(lineno));
        TrajectoryRow r;
        r.state.t = detail::parse_cell(cells[0], lineno);
        r.state.q.resize(n);
        r.state.p.resize(n);
        r.qdot.resize(n);
        for (int i = 0; i < n; ++i) {
            r.state.q(i) = detail::parse_cell(cells[static_cast<std::size_t>(1 + i)], lineno);
            r.state.p(i) = detail::parse_cell(cells[static_cast<std::size_t>(1 + n + i)], lineno);
            r.qdot(i) = detail::parse_cell(cells[static_cast<std::size_t>(1 + 2 * n + i)], lineno);
        }
        r.stratum_id = static_cast<int>(detail::parse_cell(cells[static_cast<std::size_t>(1 + 3 * n)], lineno));
        r.energy = detail::parse_cell(cells[static_cast<std::size_t>(2 + 3 * n)], lineno);
        r.drift = detail::parse_cell(cells[static_cast<std::size_t>(3 + 3 * n)], lineno);
        if (segments.empty() || !(r.state.t > segments.back().back().state.t))
            segments.emplace_back();
        segments.back().push_back(std::move(r));
    }
    return segments;
}

/// Reads the table written by write_jumps_csv (bases and residuals are not stored).
inline std::vector<JumpReport> read_jumps_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw InputError("csv: empty jump file");
    const int n = detail::header_dim(detail::split_csv_line(line), 3, 7, "jump");
    if (line != jumps_header(n))
        throw InputError("csv: unexpected jump header");

    std::vector<JumpReport> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        if (static_cast<int>(cells.size()) != 3 * n + 7)
            throw InputError("csv: wrong column count on line " + std::to_string(lineno));
        auto num = [&](int k) { return detail::parse_cell(cells[static_cast<std::size_t>(k)], lineno); };
        JumpReport j;
        j.t0 = num(0);
        j.q0.resize(n);
        j.p_minus.resize(n);
        j.p_plus.resize(n);
        for (int i = 0; i < n; ++i)
            j.q0(i) = num(1 + i);
        j.rho_minus = static_cast<int>(num(1 + n));
        j.rho_0 = static_cast<int>(num(2 + n));
        j.rho_plus = static_cast<int>(num(3 + n));
        j.case_id = static_cast<int>(num(4 + n));
        const auto d = decision_from_string(cells[static_cast<std::size_t>(5 + n)]);
        if (!d)
            throw InputError("csv: unknown decision on line " + std::to_string(lineno));
        j.decision = *d;
        for (int i = 0; i < n; ++i) {
            j.p_minus(i) = num(6 + n + i);
            j.p_plus(i) = num(6 + 2 * n + i);
        }
        j.delta_T = num(6 + 3 * n);
        out.push_back(std::move(j));
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot write '" + path + "'");
    f << text;
    if (!f)
        throw InputError("write to '" + path + "' failed");
}

} // namespace gencon
