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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gencon.hpp"

#ifndef GENCON_SCENARIO_DIR
#error "GENCON_SCENARIO_DIR must point at the bundled scenarios"
#endif
#ifndef GENCON_CLI
#error "GENCON_CLI must point at the command-line tool"
#endif

namespace {

using namespace gencon;
namespace fs = std::filesystem;

std::string scenario_path(const std::string& name) { return std::string(GENCON_SCENARIO_DIR) + "/" + name + ".yaml"; }

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out(i++) = x;
    return out;
}

Scenario parse(const std::string& text) { return scenario_from_yaml(YAML::Load(text)); }

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() /
               ("gencon_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Shell {
    int code = -1;
    std::string out;
};

Shell shell(const std::string& args)
{
    Shell r;
    const std::string cmd = std::string(GENCON_CLI) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr)
        return r;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe))
        r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---- expressions -----------------------------------------------------------

TEST(Expression, ArithmeticAndPrecedence)
{
    const std::vector<std::string> vars{"x", "y"};
    const Vector q = vec({2, 3});
    EXPECT_DOUBLE_EQ(Expression::parse("1 + 2 * 3", vars)(q), 7);
    EXPECT_DOUBLE_EQ(Expression::parse("(1 + 2) * 3", vars)(q), 9);
    EXPECT_DOUBLE_EQ(Expression::parse("2 ^ 3 ^ 2", vars)(q), 512);
    EXPECT_DOUBLE_EQ(Expression::parse("-x^2", vars)(q), -4);
    EXPECT_DOUBLE_EQ(Expression::parse("x*y - y/x", vars)(q), 6 - 1.5);
    EXPECT_DOUBLE_EQ(Expression::parse("1e-3 * 2.5E2", vars)(q), 0.25);
}

TEST(Expression, FunctionsConstantsAndComparisons)
{
    const std::vector<std::string> vars{"x", "y"};
    const Vector q = vec({0.5, -2});
    EXPECT_NEAR(Expression::parse("sin(pi/2) + cos(0) + exp(1) - e", vars)(q), 2.0, 1e-15);
    EXPECT_NEAR(Expression::parse("atan2(1, 1)", vars)(q), M_PI / 4, 1e-15);
    EXPECT_DOUBLE_EQ(Expression::parse("max(x, y) + min(x, y) + abs(y) + sqrt(4)", vars)(q), 0.5 - 2 + 2 + 2);
    EXPECT_DOUBLE_EQ(Expression::parse("x > 0", vars)(q), 1);
    EXPECT_DOUBLE_EQ(Expression::parse("y >= 0", vars)(q), 0);
    EXPECT_DOUBLE_EQ(Expression::parse("x <= 0.5", vars)(q), 1);
    EXPECT_DOUBLE_EQ(Expression::parse("exp(-1/x^2) * (x > 0)", vars)(q), std::exp(-4.0));
    EXPECT_FALSE(Expression::parse("2*pi", vars).uses_variables());
    EXPECT_TRUE(Expression::parse("2*x", vars).uses_variables());
}

TEST(Expression, VariablesShadowConstants)
{
    EXPECT_DOUBLE_EQ(Expression::parse("e + 1", {"e"})(vec({5})), 6);
}

TEST(Expression, ErrorsNameTheProblem)
{
    const std::vector<std::string> vars{"x"};
    for (const char* bad : {"", "1 +", "(x", "x)", "foo(1)", "z", "sin(1, 2)", "atan2(1)", "1 $ 2", "3 x"})
        EXPECT_THROW(Expression::parse(bad, vars), InputError) << bad;
}

// ---- scenarios -------------------------------------------------------------

TEST(Scenario, BuiltinPlaneParticle)
{
    const Scenario sc = parse(R"(
name: t
system: {builtin: plane_particle, mass: 2}
initial: {t: 0.5, q: [-1, 1], qdot: [1, 0]}
horizon: 3
integrator: {rel_tol: 1.0e-10, max_step: 0.05}
transition: {eps0: 1.0e-4, hypothesis: same_as_minus}
impulses: [{t: 2, P: [0, 1]}, {t: 1, P: [1, 0]}]
output: {trajectory: a.csv, jumps: b.csv}
)");
    EXPECT_EQ(sc.name, "t");
    EXPECT_EQ(sc.system.dim(), 2);
    EXPECT_EQ(sc.initial.p, vec({2, 0}));
    EXPECT_DOUBLE_EQ(sc.initial.t, 0.5);
    EXPECT_DOUBLE_EQ(sc.horizon, 3);
    EXPECT_DOUBLE_EQ(sc.integration.rel_tol, 1e-10);
    EXPECT_DOUBLE_EQ(sc.integration.max_step, 0.05);
    EXPECT_DOUBLE_EQ(sc.transition.limit.eps0, 1e-4);
    EXPECT_EQ(sc.transition.hypothesis, PlusHypothesis::SameAsMinus);
    ASSERT_EQ(sc.impulses.size(), 2u);
    EXPECT_DOUBLE_EQ(sc.impulses[0].t, 1);
    EXPECT_EQ(sc.trajectory_path, "a.csv");
    EXPECT_EQ(sc.jumps_path, "b.csv");
}

TEST(Scenario, BuiltinSphereAcceptsGyrationSquared)
{
    const Scenario sc = parse(R"(
system: {builtin: rolling_sphere, r: 2, k2: 0.25}
initial: {q: [-1, 0, 0, 0, 0], p: [1, 0, 0, 0, 0]}
)");
    EXPECT_NEAR(sc.system.metric.at(Vector::Zero(5))(2, 2), 0.25, 1e-15);
    EXPECT_EQ(sc.system.codist.active_forms_at(vec({1, 0, 0, 0, 0}))(0, 3), -2);
}

TEST(Scenario, InlineSystemMatchesBuiltin)
{
    const Scenario sc = parse(R"(
system:
  inline:
    coordinates: [x, y]
    metric: [["1", "0"], ["0", "1"]]
    forms: [["1", "-1"]]
    strata:
      - {id: 0, where: "x <= 0", rows: []}
      - {id: 1, where: "x > 0", rows: [0]}
    singular_indicator: "x"
initial: {q: [-1, 1], qdot: [1, 0]}
horizon: 2
)");
    const RunResult r = run(sc);
    ASSERT_EQ(r.status, RunStatus::Completed);
    ASSERT_EQ(r.jumps.size(), 1u);
    EXPECT_EQ(r.jumps[0].decision, Decision::Jump);
    EXPECT_LE((r.jumps[0].p_plus - vec({0.5, 0.5})).norm(), 1e-12);
}

TEST(Scenario, InlineVaryingMetricAndPotential)
{
    const Scenario sc = parse(R"(
system:
  inline:
    coordinates: [r, th]
    metric: [["1", "0"], ["0", "r^2"]]
    potential: "0.5 * r^2"
initial: {q: [1, 0], qdot: [0, 1]}
horizon: 1
)");
    EXPECT_FALSE(sc.system.metric.is_constant());
    const RunResult r = run(sc);
    ASSERT_EQ(r.status, RunStatus::Completed);
    // Isotropic oscillator started on its circular orbit stays at r = 1.
    EXPECT_NEAR(r.segments.back().back().q(0), 1.0, 1e-7);
    EXPECT_NEAR(r.segments.back().back().q(1), 1.0, 1e-7);
}

TEST(Scenario, InvalidDocumentsAreRejected)
{
    const char* bad[] = {
        "[1, 2]",
        "system: {builtin: nope}",
        "initial: {q: [0]}",
        "system: {builtin: plane_particle}\ninitial: {q: [0, 0, 0], qdot: [1, 0, 0]}",
        "system: {builtin: plane_particle}\ninitial: {q: [0, 0], qdot: [1, 0], p: [1, 0]}",
        "system: {builtin: plane_particle}\ninitial: {q: [0, 0]}",
        "system: {builtin: plane_particle}\ninitial: {q: [0, x], qdot: [1, 0]}",
        "system: {builtin: plane_particle}\ninitial: {t: 2, q: [0, 0], qdot: [1, 0]}\nhorizon: 1",
        "system: {builtin: plane_particle}\nintegrator: {rel_tol: -1}",
        "system: {builtin: plane_particle}\ntransition: {hypothesis: maybe}",
        "system: {builtin: plane_particle, representation: fuzzy}",
        "system: {builtin: plane_particle, mass: -1}",
        "system: {builtin: rolling_sphere, r: 0}",
        "system: {builtin: plane_particle}\nimpulses: [{t: 1}]",
        "system: {builtin: plane_particle}\nimpulses: [{t: 1, P: [1]}]",
        "system: {inline: {coordinates: [x], metric: [[\"1\", \"0\"]]}}",
        "system: {inline: {coordinates: [x], metric: [[\"1 +\"]]}}",
        "system: {inline: {coordinates: [x], metric: [[\"-1\"]]}}",
        "system: {inline: {coordinates: [x], metric: [[\"1\"]], forms: [[\"1\", \"2\"]]}}",
        "system: {inline: {coordinates: [x], metric: [[\"1\"]], forms: [[\"1\"]], strata: [{where: \"x>0\", rows: [3]}]}}",
        "system: {inline: {coordinates: [x], metric: [[\"1\"]], singular_indicator: x, indicator_kind: odd}}",
    };
    for (const char* text : bad)
        EXPECT_THROW(parse(text), ScenarioError) << text;
}

TEST(Scenario, InadmissibleInitialVelocityGetsSuggestion)
{
    const Scenario sc = parse("system: {builtin: plane_particle}\ninitial: {q: [1, 0], qdot: [1, 0]}");
    try {
        validate_initial_state(sc);
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_NE(std::string(e.what()).find("[0.5, 0.5]"), std::string::npos) << e.what();
    }
    EXPECT_NO_THROW(validate_initial_state(parse("system: {builtin: plane_particle}\ninitial: {q: [1, 0], qdot: [1, 1]}")));
}

TEST(Scenario, MissingFileIsReported)
{
    EXPECT_THROW(load_scenario("/nonexistent/scenario.yaml"), ScenarioError);
}

TEST(Scenario, SetByPathEditsMapsAndLists)
{
    YAML::Node doc = YAML::Load("initial: {q: [-1, 1], qdot: [1, 0]}\nsystem: {builtin: plane_particle}");
    set_by_path(doc, "initial.qdot.1", 0.25);
    set_by_path(doc, "system.mass", 3);
    set_by_path(doc, "horizon", 4);
    const Scenario sc = scenario_from_yaml(doc);
    EXPECT_EQ(sc.initial.p, vec({3, 0.75}));
    EXPECT_DOUBLE_EQ(sc.horizon, 4);
    EXPECT_THROW(set_by_path(doc, "initial.qdot.7", 1), ScenarioError);
    EXPECT_THROW(set_by_path(doc, "initial.qdot.x", 1), ScenarioError);
}

// ---- runs ------------------------------------------------------------------

TEST(Run, PlaneScenarios)
{
    const RunResult in = run(load_scenario(scenario_path("plane_left_to_right")));
    ASSERT_EQ(in.status, RunStatus::Completed);
    ASSERT_EQ(in.jumps.size(), 1u);
    EXPECT_EQ(in.summary.jump_count, 1);
    EXPECT_EQ(in.summary.case_counts.at(1), 1);
    EXPECT_NEAR(in.jumps[0].t0, 1.0, 1e-9);

    const RunResult out = run(load_scenario(scenario_path("plane_right_to_left")));
    EXPECT_EQ(out.summary.jump_count, 0);
    EXPECT_EQ(out.summary.case_counts.at(2), 1);

    const RunResult compat = run(load_scenario(scenario_path("plane_compatible")));
    ASSERT_EQ(compat.jumps.size(), 1u);
    EXPECT_EQ(compat.jumps[0].decision, Decision::NoJumpCompatible);
    EXPECT_EQ(compat.jumps[0].p_plus, compat.jumps[0].p_minus);
}

TEST(Run, SegmentsAreContiguousWithOneReportPerBoundary)
{
    for (const char* name : {"plane_left_to_right", "sphere_smooth_to_rough", "inline_wall", "central_force_same_balance"}) {
        const RunResult r = run(load_scenario(scenario_path(name)));
        ASSERT_EQ(r.status, RunStatus::Completed) << name << ": " << r.message;
        ASSERT_EQ(r.jumps.size() + 1, r.segments.size()) << name;
        for (std::size_t i = 0; i + 1 < r.segments.size(); ++i) {
            const PhaseState& a = r.segments[i].back();
            const PhaseState& b = r.segments[i + 1].front();
            const JumpReport& j = r.jumps[i];
            EXPECT_EQ(a.t, b.t) << name;
            EXPECT_EQ(a.t, j.t0) << name;
            EXPECT_EQ(a.q, b.q) << name;
            // Arriving at the boundary never changes p; the jump is applied on leaving.
            EXPECT_EQ(a.p, j.p_minus) << name;
            EXPECT_EQ(b.p, j.p_plus) << name;
            if (j.decision != Decision::Impulse && j.decision != Decision::Jump) {
                EXPECT_EQ(j.p_plus, j.p_minus) << name;
            }
        }
    }
}

TEST(Run, EveryReportPassesTheAudits)
{
    for (const auto& entry : fs::directory_iterator(GENCON_SCENARIO_DIR)) {
        const Scenario sc = load_scenario(entry.path().string());
        const RunResult r = run(sc);
        for (JumpReport j : r.jumps) {
            if (j.decision == Decision::Withheld)
                continue;
            EXPECT_NO_THROW(carnot_audit(sc.system.metric, j.q0, j.p_minus, j.p_plus, j.decision != Decision::Impulse))
                << entry.path();
            if (j.decision == Decision::Jump || j.decision == Decision::Impulse) {
                EXPECT_NO_THROW(check_jump_equations(sc.system.metric, j)) << entry.path();
            }
        }
    }
}

TEST(Run, IndeterminateCrossingHaltsWithPartialResult)
{
    const RunResult r = run(load_scenario(scenario_path("central_force_on_surface")));
    EXPECT_EQ(r.status, RunStatus::Indeterminate);
    EXPECT_EQ(exit_code(r.status), 3);
    ASSERT_EQ(r.jumps.size(), 1u);
    EXPECT_EQ(r.jumps[0].decision, Decision::Withheld);
    EXPECT_GE(r.jumps[0].candidates.size(), 2u);
    EXPECT_EQ(r.segments.size(), 1u);
    EXPECT_LT(r.segments[0].back().t, 1.0);
}

TEST(Run, ExternalImpulseOnConstrainedSide)
{
    const Scenario sc = parse(R"(
system: {builtin: plane_particle}
initial: {q: [1, 0], qdot: [1, 1]}
horizon: 1
impulses: [{t: 0.5, P: [1, 0]}]
)");
    const RunResult r = run(sc);
    ASSERT_EQ(r.status, RunStatus::Completed);
    ASSERT_EQ(r.jumps.size(), 1u);
    EXPECT_EQ(r.jumps[0].decision, Decision::Impulse);
    EXPECT_LE((r.jumps[0].p_plus - vec({1.5, 1.5})).norm(), 1e-12);
    EXPECT_LE((r.segments.back().back().q - vec({1.5 + 0.75, 0.5 + 0.75})).norm(), 1e-9);
}

TEST(Run, CrossingBudgetIsEnforced)
{
    Scenario sc = parse(R"(
system: {builtin: plane_particle}
initial: {q: [-1, 1], qdot: [1, 0]}
horizon: 2
max_crossings: 0
)");
    const RunResult r = run(sc);
    EXPECT_EQ(r.status, RunStatus::IntegrationFailure);
}

TEST(Run, ClassifyGrid)
{
    const Scenario sc = load_scenario(scenario_path("plane_left_to_right"));
    const auto table = classify(sc.system, parse_grid("x=-1:1:5", sc.system), sc.initial.q, 1e-6);
    ASSERT_EQ(table.size(), 5u);
    EXPECT_EQ(table[0].cls, (PointClass{true, 0}));
    EXPECT_EQ(table[2].cls, (PointClass{false, 0}));
    EXPECT_EQ(table[4].cls, (PointClass{true, 1}));
    EXPECT_THROW(parse_grid("w=0:1:2", sc.system), ScenarioError);
    EXPECT_THROW(parse_grid("x=1:0:2", sc.system), ScenarioError);
    EXPECT_THROW(parse_grid("x=0:1", sc.system), ScenarioError);
}

TEST(Run, ClassifyAroundSingularCurve)
{
    const MechanicalSystem s = central_force_particle();
    const auto axes = parse_grid("x=-1:1:5,z=0:2:5", s);
    const auto table = classify(s, axes, vec({0, 1, 0}), 1e-3);
    ASSERT_EQ(table.size(), 25u);
    for (const auto& row : table) {
        const bool on_curve = row.q(0) == 0.0 && row.q(2) == 1.0;
        EXPECT_EQ(row.cls.regular, !on_curve) << row.q.transpose();
    }
}

TEST(Run, JumpProbeExamples)
{
    const Scenario plane = load_scenario(scenario_path("plane_left_to_right"));
    const JumpReport a = jump_probe(plane.system, vec({0, 0}), vec({1, 0}), {});
    EXPECT_EQ(a.decision, Decision::Jump);
    EXPECT_LE((a.p_plus - vec({0.5, 0.5})).norm(), 1e-12);
    EXPECT_NEAR(a.delta_T, 0.25, 1e-12);

    const MechanicalSystem sphere = rolling_sphere();
    const SphereParams sp;
    const Vector v0 = vec({1, 0.5, 0.3, -0.2, 0.7});
    const JumpReport b = jump_probe(sphere, vec({0, 2, 0, 0, 0}), sphere_momenta(sp, v0), {});
    EXPECT_LE((sphere.metric.raise(b.q0, b.p_plus) - sphere_post_jump_velocities(sp, v0)).norm(), 1e-12);

    const MechanicalSystem cf = central_force_particle();
    const std::vector<PathSpec> two{parse_path_spec("1,0,1;2,1,1", 3), parse_path_spec("1,0,1;1,1,2", 3)};
    const JumpReport c = jump_probe(cf, vec({0, 1, 1}), vec({-1, 0, 0}), two);
    EXPECT_EQ(c.decision, Decision::Withheld);
    ASSERT_EQ(c.candidates.size(), 2u);
    EXPECT_NEAR(largest_principal_angle(cf.metric, c.candidates[0], c.candidates[1]), M_PI / 3, 1e-6);

    TransitionOptions same;
    same.hypothesis = PlusHypothesis::SameAsMinus;
    EXPECT_NE(jump_probe(cf, vec({0, 1, 1}), vec({-1, 0, 0}), two, same).decision, Decision::Withheld);
    EXPECT_THROW(parse_path_spec("1,2", 3), ScenarioError);
    EXPECT_THROW(parse_path_spec("1,2,3;1,1", 3), ScenarioError);
}

// ---- csv -------------------------------------------------------------------

TEST(Csv, Headers)
{
    EXPECT_EQ(trajectory_header(2), "t,q_1,q_2,p_1,p_2,qdot_1,qdot_2,stratum_id,energy,drift");
    EXPECT_EQ(jumps_header(1), "t0,q_1,rho_minus,rho_0,rho_plus,case_id,decision,p_minus_1,p_plus_1,deltaT");
}

TEST(Csv, RoundTripReproducesStoredStates)
{
    const Scenario sc = load_scenario(scenario_path("sphere_smooth_to_rough"));
    const RunResult r = run(sc);
    std::stringstream traj, jumps;
    write_trajectory_csv(traj, sc.system, r.segments);
    write_jumps_csv(jumps, sc.system.dim(), r.jumps);

    const auto segments = read_trajectory_csv(traj);
    ASSERT_EQ(segments.size(), r.segments.size());
    for (std::size_t s = 0; s < segments.size(); ++s) {
        ASSERT_EQ(segments[s].size(), r.segments[s].states.size());
        for (std::size_t i = 0; i < segments[s].size(); ++i) {
            const PhaseState& a = segments[s][i].state;
            const PhaseState& b = r.segments[s].states[i];
            EXPECT_EQ(a.t, b.t);
            EXPECT_EQ(a.q, b.q);
            EXPECT_EQ(a.p, b.p);
            EXPECT_EQ(segments[s][i].stratum_id, r.segments[s].stratum_id);
        }
    }
    const auto back = read_jumps_csv(jumps);
    ASSERT_EQ(back.size(), r.jumps.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].t0, r.jumps[i].t0);
        EXPECT_EQ(back[i].q0, r.jumps[i].q0);
        EXPECT_EQ(back[i].p_minus, r.jumps[i].p_minus);
        EXPECT_EQ(back[i].p_plus, r.jumps[i].p_plus);
        EXPECT_EQ(back[i].delta_T, r.jumps[i].delta_T);
        EXPECT_EQ(back[i].decision, r.jumps[i].decision);
        EXPECT_EQ(back[i].case_id, r.jumps[i].case_id);
    }
}

TEST(Csv, MalformedInputIsRejected)
{
    std::stringstream empty;
    EXPECT_THROW(read_trajectory_csv(empty), InputError);
    std::stringstream header("t,x\n");
    EXPECT_THROW(read_trajectory_csv(header), InputError);
    std::stringstream cells(trajectory_header(1) + "\n0,1,2,3,0,oops,0\n");
    EXPECT_THROW(read_trajectory_csv(cells), InputError);
    std::stringstream decision(jumps_header(1) + "\n0,0,0,0,1,1,bounce,1,1,0\n");
    EXPECT_THROW(read_jumps_csv(decision), InputError);
}

TEST(Csv, NumbersUseRoundTripPrecision)
{
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(format_number(M_PI)), M_PI);
}

// ---- command line ----------------------------------------------------------

TEST(Cli, RunWritesIdenticalFilesOnRepeat)
{
    TempDir a, b;
    const std::string sc = scenario_path("sphere_smooth_to_rough");
    ASSERT_EQ(shell("run " + sc + " --output-dir " + a.path.string()).code, 0);
    ASSERT_EQ(shell("run " + sc + " --output-dir " + b.path.string()).code, 0);
    for (const char* f : {"sphere_smooth_to_rough_trajectory.csv", "sphere_smooth_to_rough_jumps.csv"}) {
        const std::string x = slurp(a.path / f);
        EXPECT_FALSE(x.empty()) << f;
        EXPECT_EQ(x, slurp(b.path / f)) << f;
    }
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(shell("run " + scenario_path("plane_left_to_right")).code, 0);
    EXPECT_EQ(shell("run " + scenario_path("central_force_on_surface")).code, 3);
    EXPECT_EQ(shell("run /nonexistent.yaml").code, 2);
    EXPECT_EQ(shell("run").code, 2);
    EXPECT_EQ(shell("frobnicate x").code, 2);

    TempDir d;
    const fs::path bad = d.path / "bad.yaml";
    std::ofstream(bad) << "system: {builtin: plane_particle}\ninitial: {q: [1, 0], qdot: [1, 0]}\n";
    const Shell r = shell("run " + bad.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("nearest admissible"), std::string::npos) << r.out;

    const fs::path blowup = d.path / "blowup.yaml";
    std::ofstream(blowup) << "system:\n  inline:\n    coordinates: [x]\n    metric: [[\"1\"]]\n"
                             "    potential: \"-1/abs(x)\"\ninitial: {q: [1], qdot: [0]}\nhorizon: 5\n";
    EXPECT_EQ(shell("run " + blowup.string()).code, 4);
}

TEST(Cli, SweepRunsEveryValue)
{
    TempDir d;
    const Shell r = shell("run " + scenario_path("plane_left_to_right") +
                          " --sweep initial.qdot.1=0:1:3 --jobs 2 --output-dir " + d.path.string());
    ASSERT_EQ(r.code, 0) << r.out;
    for (int i = 0; i < 3; ++i) {
        const fs::path f = d.path / ("plane_left_to_right_initial.qdot.1_" + std::to_string(i) + "_jumps.csv");
        ASSERT_TRUE(fs::exists(f)) << f;
        std::stringstream ss(slurp(f));
        const auto jumps = read_jumps_csv(ss);
        ASSERT_EQ(jumps.size(), 1u);
        // Incoming (1, v): the jump lands on ((1+v)/2, (1+v)/2).
        const double v = 0.5 * i;
        EXPECT_NEAR(jumps[0].p_plus(0), 0.5 * (1 + v), 1e-12);
    }
    EXPECT_EQ(shell("run " + scenario_path("plane_left_to_right") + " --sweep initial.qdot.1=0:1").code, 2);
}

TEST(Cli, ClassifyPrintsTable)
{
    const Shell r = shell("classify " + scenario_path("plane_left_to_right") + " --grid x=-1:1:3");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out, "x,y,rank,class\n-1,1,0,regular\n0,1,0,singular\n1,1,1,regular\n");
}

TEST(Cli, JumpProbeReportsJson)
{
    const Shell a = shell("jump-probe " + scenario_path("plane_left_to_right") + " --at 0,0 --p 1,0");
    ASSERT_EQ(a.code, 0) << a.out;
    const auto j = nlohmann::json::parse(a.out);
    EXPECT_EQ(j["decision"], "jump");
    EXPECT_NEAR(j["p_plus"][0].get<double>(), 0.5, 1e-12);
    EXPECT_NEAR(j["deltaT"].get<double>(), 0.25, 1e-12);

    const Shell b = shell("jump-probe " + scenario_path("central_force_on_surface") +
                          " --at 0,1,1 --p=-1,0,0 --path '1,0,1;2,1,1' --path '1,0,1;1,1,2'");
    EXPECT_EQ(b.code, 3) << b.out;
    const auto k = nlohmann::json::parse(b.out);
    EXPECT_EQ(k["decision"], "withheld");
    EXPECT_EQ(k["candidates"].size(), 2u);
    EXPECT_GT(k["max_principal_angle"].get<double>(), 0.1);

    EXPECT_EQ(shell("jump-probe " + scenario_path("plane_left_to_right") + " --at 0 --p 1,0").code, 2);
}

} // namespace
