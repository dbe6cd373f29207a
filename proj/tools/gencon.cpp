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

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gencon.hpp"

namespace {

using gencon::Vector;
using nlohmann::json;

Vector parse_list(const std::string& text, const char* what)
{
    std::vector<double> v;
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (used != tok.size())
                throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw gencon::ScenarioError(std::string(what) + ": malformed number '" + tok + "'");
        }
    }
    return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Sweep {
    std::string key;
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;

    double value(int i) const { return count == 1 ? lo : lo + i * (hi - lo) / (count - 1); }
};

Sweep parse_sweep(const std::string& text)
{
    const auto eq = text.find('=');
    Sweep s;
    if (eq == std::string::npos)
        throw gencon::ScenarioError("sweep: expected key=lo:hi:count, got '" + text + "'");
    s.key = text.substr(0, eq);
    const Vector r = parse_list([&] {
        std::string v = text.substr(eq + 1);
        std::replace(v.begin(), v.end(), ':', ',');
        return v;
    }(), "sweep");
    if (r.size() != 3 || r(2) < 1 || r(2) != std::floor(r(2)) || r(1) < r(0))
        throw gencon::ScenarioError("sweep: expected key=lo:hi:count with lo <= hi, count >= 1");
    s.lo = r(0);
    s.hi = r(1);
    s.count = static_cast<int>(r(2));
    return s;
}

std::string join_path(const std::string& dir, const std::string& file)
{
    return (std::filesystem::path(dir) / file).string();
}

struct RunJob {
    YAML::Node doc;
    std::string label;
    std::string output_dir;
};

struct RunOutcome {
    std::string label;
    std::string report;
    int code = 0;
};

std::string describe(const gencon::Scenario& sc, const gencon::RunResult& r)
{
    std::ostringstream out;
    out << sc.name << ": " << (r.status == gencon::RunStatus::Completed       ? "completed"
                               : r.status == gencon::RunStatus::Indeterminate ? "indeterminate"
                                                                               : "integration failure");
    if (!r.message.empty())
        out << " (" << r.message << ")";
    out << "\n  segments " << r.segments.size() << ", crossings/impulses " << r.jumps.size() << ", jumps "
        << r.summary.jump_count << "\n";
    out << "  energy drift per unit time " << gencon::format_number(r.summary.energy_drift_rate)
        << ", max constraint residual " << gencon::format_number(r.summary.constraint_drift) << "\n";
    for (const gencon::JumpReport& j : r.jumps) {
        out << "  t0=" << gencon::format_number(j.t0) << " " << gencon::to_string(j.decision);
        if (j.decision != gencon::Decision::Impulse)
            out << " case " << j.case_id << " ranks " << j.rho_minus << "/" << j.rho_0 << "/" << j.rho_plus;
        out << " p+=[";
        for (Eigen::Index i = 0; i < j.p_plus.size(); ++i)
            out << (i ? ", " : "") << gencon::format_number(j.p_plus(i));
        out << "] dT=" << gencon::format_number(j.delta_T) << "\n";
    }
    return out.str();
}

RunOutcome run_job(const RunJob& job)
{
    RunOutcome o{job.label, "", gencon::kExitOk};
    try {
        const gencon::Scenario sc = gencon::scenario_from_yaml(job.doc);
        gencon::validate_initial_state(sc);
        const gencon::RunResult r = gencon::run(sc);
        std::string traj = sc.trajectory_path, jumps = sc.jumps_path;
        if (!job.output_dir.empty()) {
            traj = join_path(job.output_dir, sc.name + job.label + "_trajectory.csv");
            jumps = join_path(job.output_dir, sc.name + job.label + "_jumps.csv");
        } else if (!job.label.empty()) {
            auto suffixed = [&](const std::string& p) {
                if (p.empty())
                    return p;
                const std::filesystem::path path(p);
                return (path.parent_path() / (path.stem().string() + job.label + path.extension().string()))
                    .string();
            };
            traj = suffixed(traj);
            jumps = suffixed(jumps);
        }
        if (!traj.empty()) {
            std::ostringstream s;
            gencon::write_trajectory_csv(s, sc.system, r.segments);
            gencon::write_text_file(traj, s.str());
        }
        if (!jumps.empty()) {
            std::ostringstream s;
            gencon::write_jumps_csv(s, sc.system.dim(), r.jumps);
            gencon::write_text_file(jumps, s.str());
        }
        o.report = describe(sc, r);
        o.code = gencon::exit_code(r.status);
    } catch (const gencon::ScenarioError& e) {
        o.report = std::string("error: ") + e.what() + "\n";
        o.code = gencon::kExitScenarioInvalid;
    } catch (const gencon::InputError& e) {
        o.report = std::string("error: ") + e.what() + "\n";
        o.code = gencon::kExitScenarioInvalid;
    } catch (const gencon::Error& e) {
        o.report = std::string("error: ") + e.what() + "\n";
        o.code = gencon::kExitIntegrationFailure;
    }
    return o;
}

YAML::Node load_document(const std::string& path)
{
    try {
        return YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw gencon::ScenarioError("cannot open scenario '" + path + "'");
    } catch (const YAML::Exception& e) {
        throw gencon::ScenarioError(std::string("scenario: ") + e.what());
    }
}

int command_run(const std::string& path, const std::vector<std::string>& sweeps, const std::string& output_dir,
                int jobs)
{
    const YAML::Node doc = load_document(path);
    if (!output_dir.empty())
        std::filesystem::create_directories(output_dir);

    std::vector<RunJob> work{{YAML::Clone(doc), "", output_dir}};
    for (const std::string& text : sweeps) {
        const Sweep sw = parse_sweep(text);
        std::vector<RunJob> next;
        for (const RunJob& base : work) {
            for (int i = 0; i < sw.count; ++i) {
                RunJob j{YAML::Clone(base.doc), base.label + "_" + sw.key + "_" + std::to_string(i), output_dir};
                gencon::set_by_path(j.doc, sw.key, sw.value(i));
                next.push_back(std::move(j));
            }
        }
        work = std::move(next);
    }

    std::vector<RunOutcome> outcomes(work.size());
    const std::size_t workers =
        std::max<std::size_t>(1, jobs > 0 ? static_cast<std::size_t>(jobs) : std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < work.size(); start += workers) {
        std::vector<std::future<RunOutcome>> batch;
        for (std::size_t i = start; i < std::min(work.size(), start + workers); ++i)
            batch.push_back(std::async(std::launch::async, run_job, std::cref(work[i])));
        for (std::size_t i = 0; i < batch.size(); ++i)
            outcomes[start + i] = batch[i].get();
    }

    int code = gencon::kExitOk;
    for (const RunOutcome& o : outcomes) {
        if (!o.label.empty())
            std::cout << "[" << o.label.substr(1) << "] ";
        std::cout << o.report;
        code = std::max(code, o.code);
    }
    return code;
}

int command_classify(const std::string& path, const std::string& grid, double radius, int samples)
{
    const gencon::Scenario sc = gencon::load_scenario(path);
    const auto axes = gencon::parse_grid(grid, sc.system);
    const auto table = gencon::classify(sc.system, axes, sc.initial.q, radius > 0 ? radius : sc.classify_radius,
                                        samples > 0 ? samples : sc.classify_samples);
    for (int i = 0; i < sc.system.dim(); ++i)
        std::cout << sc.system.coordinate_name(i) << ",";
    std::cout << "rank,class\n";
    for (const auto& row : table) {
        for (Eigen::Index i = 0; i < row.q.size(); ++i)
            std::cout << gencon::format_number(row.q(i)) << ",";
        std::cout << row.cls.rank << "," << (row.cls.regular ? "regular" : "singular") << "\n";
    }
    return gencon::kExitOk;
}

json to_json(const Vector& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

json to_json(const gencon::SubspaceBasis& b)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < b.rows.rows(); ++i)
        rows.push_back(to_json(Vector(b.rows.row(i).transpose())));
    return rows;
}

int command_jump_probe(const std::string& path, const std::string& at, const std::string& p,
                       const std::vector<std::string>& path_specs, const std::string& hypothesis)
{
    gencon::Scenario sc = gencon::load_scenario(path);
    const int n = sc.system.dim();
    const Vector q0 = parse_list(at, "--at");
    const Vector pm = parse_list(p, "--p");
    if (q0.size() != n || pm.size() != n)
        throw gencon::ScenarioError("jump-probe: --at and --p need " + std::to_string(n) + " entries");
    std::vector<gencon::PathSpec> specs;
    for (const std::string& s : path_specs)
        specs.push_back(gencon::parse_path_spec(s, n));
    if (hypothesis == "same_as_minus")
        sc.transition.hypothesis = gencon::PlusHypothesis::SameAsMinus;
    else if (hypothesis != "none" && !hypothesis.empty())
        throw gencon::ScenarioError("jump-probe: hypothesis must be 'none' or 'same_as_minus'");

    const gencon::JumpReport r = gencon::jump_probe(sc.system, q0, pm, specs, sc.transition);
    json out;
    out["q0"] = to_json(r.q0);
    out["rho_minus"] = r.rho_minus;
    out["rho_0"] = r.rho_0;
    out["rho_plus"] = r.rho_plus;
    out["case_id"] = r.case_id;
    out["decision"] = gencon::to_string(r.decision);
    out["basis_minus"] = to_json(r.basis_minus);
    out["basis_plus"] = to_json(r.basis_plus);
    out["p_minus"] = to_json(r.p_minus);
    out["p_plus"] = to_json(r.p_plus);
    out["deltaT"] = r.delta_T;
    if (!r.candidates.empty()) {
        out["candidates"] = json::array();
        for (const auto& c : r.candidates)
            out["candidates"].push_back(to_json(c));
        double worst = 0.0;
        for (std::size_t i = 1; i < r.candidates.size(); ++i)
            worst = std::max(worst, gencon::largest_principal_angle(sc.system.metric, r.candidates[0],
                                                                     r.candidates[i]));
        out["max_principal_angle"] = worst;
    }
    if (!r.note.empty())
        out["note"] = r.note;
    std::cout << out.dump(2) << "\n";
    return r.decision == gencon::Decision::Withheld ? gencon::kExitIndeterminate : gencon::kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulate mechanical systems with variable-rank nonholonomic constraints"};
    app.require_subcommand(1);

    std::string scenario;
    std::vector<std::string> sweeps;
    std::string output_dir;
    int jobs = 0;
    auto* run = app.add_subcommand("run", "Integrate a scenario across strata and crossings");
    run->add_option("scenario", scenario, "Scenario file")->required();
    run->add_option("--sweep", sweeps, "Vary a scenario value: key=lo:hi:count (e.g. initial.qdot.1=0:1:5)");
    run->add_option("--output-dir", output_dir, "Write <name>[_sweep]_trajectory.csv / _jumps.csv here");
    run->add_option("--jobs", jobs, "Parallel runs for sweeps (default: hardware threads)");

    std::string grid;
    double radius = 0.0;
    int samples = 0;
    auto* classify = app.add_subcommand("classify", "Rank and regular/singular label on a grid");
    classify->add_option("scenario", scenario, "Scenario file")->required();
    classify->add_option("--grid", grid, "name=lo:hi:count[,...]; other coordinates from initial.q")->required();
    classify->add_option("--radius", radius, "Neighborhood radius of the sampling test");
    classify->add_option("--samples", samples, "Neighbor samples per point (>= 2*dim)");

    std::string at, p, hypothesis = "none";
    std::vector<std::string> paths;
    auto* probe = app.add_subcommand("jump-probe", "D-, D+, decision and p+ at a single point");
    probe->add_option("scenario", scenario, "Scenario file")->required();
    probe->add_option("--at", at, "Point q(t0), comma separated")->required();
    probe->add_option("--p", p, "Incoming momentum p-, comma separated")->required();
    probe->add_option("--path", paths,
                      "Plus-side curve q0 + c*s^e as 'c1,..,cn[;e1,..,en]'; repeat to compare approaches");
    probe->add_option("--hypothesis", hypothesis, "none | same_as_minus");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : gencon::kExitScenarioInvalid;
    }

    try {
        if (*run)
            return command_run(scenario, sweeps, output_dir, jobs);
        if (*classify)
            return command_classify(scenario, grid, radius, samples);
        return command_jump_probe(scenario, at, p, paths, hypothesis);
    } catch (const gencon::LimitIndeterminateError& e) {
        std::cerr << "indeterminate: " << e.what() << "\n";
        return gencon::kExitIndeterminate;
    } catch (const gencon::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return gencon::kExitScenarioInvalid;
    } catch (const gencon::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return gencon::kExitIntegrationFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return gencon::kExitScenarioInvalid;
    }
}
