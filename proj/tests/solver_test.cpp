#include "bsim/primitives.hpp"
#include "bsim/solver.hpp"
#include "test_meshes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

namespace bsim {
namespace {

constexpr double pi = std::numbers::pi;

Obstacle floor_at(double z) { return Obstacle{Plane(Point3(0, 0, z), Vec3::UnitZ()), "table"}; }

TEST(EnforceObstacles, ProjectsFreeVerticesOntoPlane) {
    TriMesh m = unit_tetrahedron();
    translate(m, Vec3(0, 0, -0.25));
    const auto [out, contacts] = enforce_obstacles(m, {floor_at(0.0)});
    for (const Point3& p : out.vertices) EXPECT_GE(p.z(), -contact_tolerance);
    // Three vertices started at z = -0.25 and now rest on the plane.
    EXPECT_EQ(contacts.size(), 3u);
    for (const Contact& c : contacts) EXPECT_NEAR(out.vertices[c.vertex].z(), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(out.vertices[3].z(), 0.75);
}

TEST(EnforceObstacles, NoObstacleLeavesMeshUntouched) {
    const TriMesh m = icosphere(1);
    const auto [out, contacts] = enforce_obstacles(m, {floor_at(-5.0)});
    EXPECT_TRUE(contacts.empty());
    EXPECT_EQ(out.vertices, m.vertices);
}

TEST(EnforceObstacles, FixedVertexOnWrongSideIsInfeasible) {
    TriMesh m = unit_tetrahedron();
    m.vertex_role[0] = VertexRole::fixed;
    translate(m, Vec3(0, 0, -1.0));
    try {
        enforce_obstacles(m, {floor_at(0.0)});
        FAIL() << "expected infeasible fixed geometry";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
        EXPECT_NE(std::string(e.what()).find("infeasible fixed geometry"), std::string::npos);
    }
}

TEST(ProjectVolume, AtTargetIsNoOp) {
    const TriMesh m = icosphere(2);
    const TriMesh out = project_volume(m, enclosed_volume(m));
    EXPECT_EQ(out.vertices, m.vertices);
}

TEST(ProjectVolume, DoublingVolumeScalesRadius) {
    // Unit icosphere vertices are equivalent under its symmetry group at
    // level 0, so a common normal offset is a uniform radial scaling.
    const TriMesh m = icosphere(0);
    const double v0 = enclosed_volume(m);
    const TriMesh out = project_volume(m, 2 * v0, 1e-12);
    EXPECT_NEAR(enclosed_volume(out) / v0, 2.0, 1e-11);
    for (const Point3& p : out.vertices) EXPECT_NEAR(p.norm(), std::cbrt(2.0), 1e-6 * std::cbrt(2.0));
}

TEST(ProjectVolume, DoublingVolumeOnFinerSphere) {
    const TriMesh m = icosphere(3);
    const TriMesh out = project_volume(m, 2 * enclosed_volume(m), 1e-12);
    double mean = 0;
    for (const Point3& p : out.vertices) mean += p.norm() / out.num_vertices();
    EXPECT_NEAR(mean, std::cbrt(2.0), 1e-3);
    EXPECT_NEAR(enclosed_volume(out), 2 * enclosed_volume(m), 1e-11 * enclosed_volume(m));
}

TEST(Step, ZeroGradientLeavesMeshUnchanged) {
    const TriMesh m = testing::boxed_flat_patch(4);
    EnergySpec s;
    s.sigma = 1.0;
    s.support = 0.0;
    const StepResult r = step(m, s, {}, SolverParams{});
    EXPECT_EQ(r.step_len, 0.0);
    EXPECT_EQ(r.mesh.vertices, m.vertices);
    EXPECT_EQ(r.energy, total_energy(m, s));
}

TEST(Step, TensionWithHardVolumeDecreasesEnergy) {
    const TriMesh m = testing::radially_perturbed(icosphere(2), 0.1, 3);
    EnergySpec s;
    s.sigma = 1.0;
    s.support = 0.0;
    s.V0 = enclosed_volume(m);
    SolverParams p;
    p.hard_volume = true;
    const StepResult r = step(m, s, {}, p);
    EXPECT_GT(r.step_len, 0.0);
    EXPECT_LT(r.energy, total_energy(m, s));
    EXPECT_NEAR(enclosed_volume(r.mesh), s.V0, p.volume_tol * s.V0);
}

TEST(Step, GravityAgainstTableStaysFeasible) {
    TriMesh m = icosphere(2);
    translate(m, Vec3(0, 0, 1.0 + 1e-3));
    EnergySpec s;
    s.K = 1e4;
    s.V0 = enclosed_volume(m);
    const std::vector<Obstacle> table{floor_at(0.0)};
    SolverParams p;
    p.step0 = 0.5;
    for (int i = 0; i < 5; ++i) {
        const StepResult r = step(m, s, table, p);
        for (const Point3& x : r.mesh.vertices) EXPECT_GE(x.z(), -contact_tolerance);
        EXPECT_LE(r.energy, total_energy(m, s));
        m = r.mesh;
    }
}

TEST(Minimize, IsoperimetricSphere) {
    const TriMesh m = testing::radially_perturbed(icosphere(3), 0.1, 7);
    EnergySpec s;
    s.sigma = 1.0;
    s.support = 0.0;
    s.V0 = 4 * pi / 3;
    SolverParams p;
    p.hard_volume = true;
    p.max_iters = 20000;
    p.step0 = 0.05;
    const auto out = minimize(m, s, {}, p);
    EXPECT_TRUE(out.report.converged);
    const double area = total_area(out.mesh);
    // (36 pi V^2)^(1/3) = 4 pi for V = 4 pi / 3.
    EXPECT_NEAR(area, 4 * pi, 0.005 * 4 * pi);
    EXPECT_NEAR(enclosed_volume(out.mesh), s.V0, p.volume_tol * s.V0);
}

TEST(Minimize, StartAtMinimumConvergesQuickly) {
    const TriMesh m = testing::boxed_flat_patch(6);
    EnergySpec s;
    s.sigma = 1.0;
    s.w_b = 1.0;
    s.support = 0.0;
    const auto out = minimize(m, s, {}, SolverParams{});
    EXPECT_TRUE(out.report.converged);
    EXPECT_LE(out.report.iters, 10);
    for (int v = 0; v < m.num_vertices(); ++v) EXPECT_LE((out.mesh.vertices[v] - m.vertices[v]).norm(), 1e-12);
}

struct BallRun {
    MinimizeResult result;
    std::vector<double> energies;
    double worst_gap = 0;
};

BallRun ball_on_table() {
    TriMesh m = icosphere(2);
    translate(m, Vec3(0, 0, 1.05));
    EnergySpec s;
    s.sigma = 50.0;
    s.K = 1e4;
    s.V0 = enclosed_volume(m);
    SolverParams p;
    p.max_iters = 400;
    p.maintenance_interval = 25;
    const std::vector<Obstacle> table{floor_at(0.0)};
    BallRun run;
    run.result = minimize(m, s, table, p, [&](const IterationLog& log) {
        run.energies.push_back(log.energy);
        for (const Point3& x : log.mesh.vertices) run.worst_gap = std::min(run.worst_gap, table[0].gap(x));
    });
    return run;
}

TEST(Minimize, BallOnTableIsMonotoneAndFeasible) {
    const BallRun run = ball_on_table();
    ASSERT_GT(run.energies.size(), 10u);
    for (std::size_t i = 1; i < run.energies.size(); ++i) EXPECT_LE(run.energies[i], run.energies[i - 1]) << i;
    EXPECT_GE(run.worst_gap, -contact_tolerance);
    const auto contacts = enforce_obstacles(run.result.mesh, {floor_at(0.0)}).second;
    ASSERT_FALSE(contacts.empty());
    for (const Contact& c : contacts) EXPECT_LE(std::abs(run.result.mesh.vertices[c.vertex].z()), contact_tolerance);
}

TEST(Minimize, Deterministic) {
    const BallRun a = ball_on_table();
    const BallRun b = ball_on_table();
    ASSERT_EQ(a.result.mesh.vertices.size(), b.result.mesh.vertices.size());
    EXPECT_EQ(std::memcmp(a.result.mesh.vertices.data(), b.result.mesh.vertices.data(),
                          a.result.mesh.vertices.size() * sizeof(Point3)),
              0);
    EXPECT_EQ(a.result.mesh.facets, b.result.mesh.facets);
    EXPECT_EQ(a.energies, b.energies);
}

TEST(Minimize, HardVolumeHeldEveryIteration) {
    const TriMesh m = testing::radially_perturbed(icosphere(2), 0.1, 11);
    EnergySpec s;
    s.sigma = 1.0;
    s.w_b = 0.1;
    s.support = 0.0;
    s.V0 = 4.0;
    SolverParams p;
    p.hard_volume = true;
    p.max_iters = 200;
    double worst = 0;
    minimize(m, s, {}, p, [&](const IterationLog& log) {
        worst = std::max(worst, std::abs(enclosed_volume(log.mesh) - s.V0) / s.V0);
    });
    EXPECT_LE(worst, p.volume_tol);
}

TEST(SolverParams, Check) {
    SolverParams p;
    EXPECT_NO_THROW(p.check());
    p.shrink = 1.0;
    EXPECT_THROW(p.check(), Error);
    p = SolverParams{};
    p.step0 = 0;
    EXPECT_THROW(p.check(), Error);
}

} // namespace
} // namespace bsim
