#include "bsim/calibration.hpp"
#include "test_configs.hpp"

#include <gtest/gtest.h>

namespace bsim {
namespace {

CalibrationProblem volume_problem() {
    CalibrationProblem p;
    p.free = {{"sigma", 2e4, 8e4}, {"K", 2e5, 1.2e6}};
    p.targets[StageId::SRG]["volume"] = 680;
    p.targets[StageId::STU]["volume"] = 675;
    p.tolerance = 1e-6;
    p.max_evaluations = 6;
    return p;
}

TEST(Residual, WeightedRelativeSquares) {
    MeasurementReport srg, stu;
    srg.stage = StageId::SRG;
    srg.volume = 690;
    stu.stage = StageId::STU;
    stu.volume = 700;
    stu.area = 300;
    CalibrationProblem p;
    p.targets[StageId::SRG]["volume"] = 700;
    p.targets[StageId::STU]["area"] = 200;
    p.weights["STU.area"] = 0.5;
    const double expected = (10.0 / 700) * (10.0 / 700) + 0.5 * 0.25;
    EXPECT_NEAR(residual({srg, stu}, p), expected, 1e-15);
}

TEST(Residual, MissingQuantityIsPenalized) {
    MeasurementReport srg;
    srg.stage = StageId::SRG;
    CalibrationProblem p;
    p.targets[StageId::SRG]["h_left"] = 10;
    p.targets[StageId::LAT]["volume"] = 600;
    EXPECT_EQ(residual({srg}, p), 2 * missing_target_penalty);
}

TEST(CalibrationProblem, Check) {
    CalibrationProblem p = volume_problem();
    EXPECT_NO_THROW(p.check());
    p.free.push_back({"rho", 0.5, 2});
    EXPECT_THROW(p.check(), Error);
    p = volume_problem();
    p.free.push_back({"sigma", 1, 2});
    EXPECT_THROW(p.check(), Error);
    p = volume_problem();
    p.free[0].upper = p.free[0].lower;
    EXPECT_THROW(p.check(), Error);
    p = volume_problem();
    p.targets.clear();
    EXPECT_THROW(p.check(), Error);
    p = volume_problem();
    p.targets[StageId::LAT]["pressure"] = 1;
    EXPECT_THROW(p.check(), Error);
    p = volume_problem();
    p.max_evaluations = 0;
    EXPECT_THROW(p.check(), Error);
}

TEST(Calibrate, NoFreeParametersEvaluatesOnce) {
    const PipelineInput in = testing::coarse_volunteer();
    CalibrationProblem p = volume_problem();
    p.free.clear();
    const CalibrationResult r = calibrate(in, p);
    EXPECT_EQ(r.evaluations, 1);
    EXPECT_EQ(r.input.energy.sigma, in.energy.sigma);
    EXPECT_EQ(r.input.energy.K, in.energy.K);
    EXPECT_EQ(r.reports.size(), 3u);
    EXPECT_EQ(r.residual, residual(r.reports, p));
}

TEST(Calibrate, UnreachableTargetNotConverged) {
    const PipelineInput in = testing::coarse_volunteer();
    CalibrationProblem p = volume_problem();
    p.targets.clear();
    p.targets[StageId::LAT]["volume"] = 2 * in.anthro.rest_volume;
    const CalibrationResult r = calibrate(in, p);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.evaluations, p.max_evaluations);
    EXPECT_LT(r.residual, failed_run_residual);
    EXPECT_GE(r.values.at("sigma"), 2e4);
    EXPECT_LE(r.values.at("sigma"), 8e4);
}

TEST(Calibrate, DeterministicAndBestApplied) {
    const PipelineInput in = testing::coarse_volunteer();
    const CalibrationProblem p = volume_problem();
    std::vector<double> seen_a, seen_b;
    const CalibrationResult a = calibrate(in, p, [&](int, const auto&, double r) { seen_a.push_back(r); });
    const CalibrationResult b = calibrate(in, p, [&](int, const auto&, double r) { seen_b.push_back(r); });
    EXPECT_EQ(seen_a, seen_b);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.residual, b.residual);
    EXPECT_EQ(a.residual, *std::min_element(seen_a.begin(), seen_a.end()));
    EXPECT_EQ(a.input.energy.sigma, a.values.at("sigma"));
    EXPECT_EQ(a.input.energy.K, a.values.at("K"));
}

TEST(Calibrate, InitialSimplexAroundMidpoint) {
    const PipelineInput in = testing::coarse_volunteer();
    CalibrationProblem p = volume_problem();
    p.max_evaluations = 3;
    std::vector<std::map<std::string, double>> points;
    calibrate(in, p, [&](int, const auto& v, double) { points.push_back(v); });
    ASSERT_EQ(points.size(), 3u);
    EXPECT_DOUBLE_EQ(points[0].at("sigma"), 5e4);
    EXPECT_DOUBLE_EQ(points[0].at("K"), 7e5);
    EXPECT_DOUBLE_EQ(points[1].at("sigma"), 5.6e4);
    EXPECT_DOUBLE_EQ(points[1].at("K"), 7e5);
    EXPECT_DOUBLE_EQ(points[2].at("sigma"), 5e4);
    EXPECT_DOUBLE_EQ(points[2].at("K"), 8e5);
}

TEST(SetParameter, RoutesEveryName) {
    PipelineInput in;
    set_parameter(in, "sigma", 1);
    set_parameter(in, "w_b", 2);
    set_parameter(in, "K", 3);
    set_parameter(in, "V0", 4);
    set_parameter(in, "support_srg", 0.5);
    set_parameter(in, "d_table", 6);
    EXPECT_EQ(in.energy.sigma, 1);
    EXPECT_EQ(in.energy.w_b, 2);
    EXPECT_EQ(in.energy.K, 3);
    EXPECT_EQ(in.energy.V0, 4);
    EXPECT_EQ(in.stage_options.support_srg, 0.5);
    EXPECT_EQ(in.stage_options.d_table, 6);
    EXPECT_THROW(set_parameter(in, "g", 1), Error);
}

} // namespace
} // namespace bsim
