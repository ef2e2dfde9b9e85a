#include "bsim/pipeline.hpp"
#include "test_configs.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace bsim {
namespace {

class CoarseVolunteer : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        input_ = testing::coarse_volunteer();
        input_.markers = {{"nodule", Point3(1.5, 2.0, input_.anthro.thorax_b + 3.0)}};
        result_ = run_pipeline(input_);
    }
    static PipelineInput input_;
    static PipelineResult result_;
};
PipelineInput CoarseVolunteer::input_;
PipelineResult CoarseVolunteer::result_;

TEST_F(CoarseVolunteer, RunsEveryStageInOrder) {
    ASSERT_EQ(result_.stages.size(), 3u);
    EXPECT_EQ(result_.stages[0].config.id, StageId::SRG);
    EXPECT_EQ(result_.stages[1].config.id, StageId::STU);
    EXPECT_EQ(result_.stages[2].config.id, StageId::LAT);
    for (const StageResult& s : result_.stages) {
        EXPECT_TRUE(s.solve.converged) << to_string(s.config.id);
        EXPECT_TRUE(validate(s.mesh).empty());
    }
}

TEST_F(CoarseVolunteer, VolumeDecreasesAcrossStages) {
    const auto& s = result_.stages;
    EXPECT_GT(s[0].report.volume, s[1].report.volume);
    EXPECT_GT(s[1].report.volume, s[2].report.volume);
}

TEST_F(CoarseVolunteer, MassIdenticalAndDensityExact) {
    for (const StageResult& s : result_.stages) {
        EXPECT_EQ(s.report.mass, input_.anthro.breast_mass);
        EXPECT_EQ(s.report.density, s.report.mass / s.report.volume);
    }
}

TEST_F(CoarseVolunteer, MarkersConserved) {
    for (const StageResult& s : result_.stages) {
        ASSERT_EQ(s.mesh.markers.size(), 2u);
        EXPECT_TRUE(s.mesh.find_marker("nipple").has_value());
        EXPECT_TRUE(s.mesh.find_marker("nodule").has_value());
        for (const Marker& m : s.mesh.markers) EXPECT_TRUE(valid_bary(m.bary));
    }
}

TEST_F(CoarseVolunteer, LateralStageRespectsTable) {
    const StageResult& lat = result_.stages[2];
    const Obstacle& table = lat.config.obstacles[*lat.config.table];
    for (const Point3& p : lat.mesh.vertices) EXPECT_GE(table.gap(p), -1e-9);
    ASSERT_TRUE(lat.report.contact.has_value());
    EXPECT_GT(lat.report.contact->vertices, 0);
    EXPECT_FALSE(result_.stages[1].report.contact.has_value());
}

TEST_F(CoarseVolunteer, StandingEquilibriumMirrorSymmetric) {
    const TriMesh& m = result_.stages[1].mesh;
    const double cx = result_.thorax.base_center.x();
    double worst = 0;
    for (const Point3& p : m.vertices) {
        const Point3 q(2 * cx - p.x(), p.y(), p.z());
        double best = 1e300;
        for (const Point3& r : m.vertices) best = std::min(best, (r - q).norm());
        worst = std::max(worst, best);
    }
    EXPECT_LE(worst, 1e-3);
}

TEST_F(CoarseVolunteer, StageIsFixedPointOfItsEquilibrium) {
    const StageResult& srg = result_.stages[0];
    const StageResult again = run_stage(srg.mesh, srg.config, input_.energy, input_.solver,
                                        input_.anthro.breast_mass, result_.thorax);
    EXPECT_NEAR(again.report.volume, srg.report.volume, 1e-6 * srg.report.volume);
}

TEST(Pipeline, ZeroGravityKeepsVolume) {
    PipelineInput in = testing::coarse_volunteer();
    in.energy.w_b = 0.0;
    in.energy.sigma = 0.0;
    in.stage_options.support_srg = 0.0;
    in.stage_options.overrides[StageId::STU].support = 0.0;
    in.stage_options.overrides[StageId::LAT].support = 0.0;
    const PipelineResult r = run_pipeline(in);
    ASSERT_EQ(r.stages.size(), 3u);
    const double v0 = r.stages[0].report.volume;
    EXPECT_NEAR(v0, in.anthro.rest_volume, 1e-6 * in.anthro.rest_volume);
    for (const StageResult& s : r.stages) EXPECT_NEAR(s.report.volume, v0, 1e-6 * v0);
}

TEST(Pipeline, SubsetOfStages) {
    PipelineInput in = testing::coarse_volunteer();
    in.energy.sigma = 0.0;
    in.energy.w_b = 0.0;
    in.stage_options.overrides[StageId::LAT].support = 0.0;
    in.stages = {StageId::LAT};
    const PipelineResult r = run_pipeline(in);
    ASSERT_EQ(r.stages.size(), 1u);
    EXPECT_EQ(r.stages[0].report.stage, StageId::LAT);
}

TEST(Pipeline, RejectsBadStageOrder) {
    EXPECT_THROW(check_stage_order({}), Error);
    EXPECT_THROW(check_stage_order({StageId::STU, StageId::SRG}), Error);
    EXPECT_THROW(check_stage_order({StageId::SRG, StageId::SRG}), Error);
    EXPECT_NO_THROW(check_stage_order({StageId::SRG, StageId::LAT}));
}

TEST(Pipeline, RejectsReservedAndDuplicateMarkers) {
    PipelineInput in = testing::coarse_volunteer();
    in.stages = {StageId::SRG};
    in.markers = {{"nipple", Point3(0, 0, in.anthro.thorax_b + 3.0)}};
    EXPECT_THROW(run_pipeline(in), Error);
    in.markers = {{"a", Point3(0, 0, in.anthro.thorax_b + 3.0)}, {"a", Point3(1, 0, in.anthro.thorax_b + 3.0)}};
    EXPECT_THROW(run_pipeline(in), Error);
}

TriMesh marked_mesh() {
    const Anthropometry an = testing::volunteer();
    const Thorax th = build_thorax(an);
    TriMesh m = build_initial_breast(an, th, 3.0).mesh;
    m.markers.push_back(attach_marker(m, Point3(1.0, 1.0, an.thorax_b + 5.0), "nodule"));
    return m;
}

TEST(ApplyTrajectory, EmptyTrajectoryReportsAdvectedOnly) {
    const TriMesh m = marked_mesh();
    const auto out = apply_trajectory(m, {}, StageId::SRG);
    ASSERT_EQ(out.size(), 2u);
    for (const MarkerReport& r : out) EXPECT_FALSE(r.predefined.has_value());
    EXPECT_EQ(out[1].label, "nodule");
    EXPECT_EQ(out[1].advected, marker_position(m, m.markers[1]));
}

TEST(ApplyTrajectory, KeyframeAtAdvectedPositionHasNoDiscrepancy) {
    const TriMesh m = marked_mesh();
    const Point3 p = marker_position(m, m.markers[1]);
    const auto out = apply_trajectory(m, {{"nodule", {{StageId::SRG, p}}}}, StageId::SRG);
    ASSERT_TRUE(out[1].predefined.has_value());
    EXPECT_EQ((*out[1].predefined - out[1].advected).norm(), 0.0);
}

TEST(ApplyTrajectory, KeyframesPassThroughVerbatim) {
    const TriMesh m = marked_mesh();
    const Trajectory t{{"nodule",
                        {{StageId::SRG, Point3(1, 2, 3)}, {StageId::STU, Point3(4, 5, 6)}, {StageId::LAT, Point3(7, 8, 9)}}},
                       {"absent", {{StageId::SRG, Point3(0, 0, 0)}}}};
    EXPECT_EQ(*apply_trajectory(m, t, StageId::SRG)[1].predefined, Point3(1, 2, 3));
    EXPECT_EQ(*apply_trajectory(m, t, StageId::STU)[1].predefined, Point3(4, 5, 6));
    EXPECT_EQ(*apply_trajectory(m, t, StageId::LAT)[1].predefined, Point3(7, 8, 9));
    EXPECT_EQ(apply_trajectory(m, t, StageId::LAT).size(), 2u);
}

TEST(ApplyTrajectory, HoldsLatestEarlierKeyframe) {
    const TriMesh m = marked_mesh();
    const Trajectory t{{"nodule", {{StageId::STU, Point3(4, 5, 6)}}}};
    EXPECT_FALSE(apply_trajectory(m, t, StageId::SRG)[1].predefined.has_value());
    EXPECT_EQ(*apply_trajectory(m, t, StageId::LAT)[1].predefined, Point3(4, 5, 6));
}

} // namespace
} // namespace bsim
