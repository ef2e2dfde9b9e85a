#pragma once

// Stage sequence SRG -> STU -> LAT, marker advection and predefined
// trajectories.

#include "bsim/tmr.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bsim {

struct MarkerSpec {
    std::string label;
    Point3 position = Point3::Zero();
};

struct PipelineInput {
    Anthropometry anthro;
    EnergySpec energy; // g_dir, support and datum are set per stage
    StageOptions stage_options;
    SolverParams solver;
    double edge_target = 1.5;
    std::vector<StageId> stages{StageId::SRG, StageId::STU, StageId::LAT};
    std::vector<MarkerSpec> markers;
};

struct StageResult {
    StageConfig config;
    TriMesh mesh;
    MeasurementReport report;
    MinimizeReport solve;
};

struct PipelineResult {
    Thorax thorax;
    InitialBreast initial;
    std::vector<StageResult> stages;
};

inline void check_stage_order(const std::vector<StageId>& stages) {
    if (stages.empty()) fail_usage("at least one stage is required");
    for (std::size_t i = 1; i < stages.size(); ++i)
        if (static_cast<int>(stages[i]) <= static_cast<int>(stages[i - 1]))
            fail_usage("stages must follow the order SRG, STU, LAT without repeats");
}

// Energy spec for a stage: its gravity direction and support, with heights
// measured from the lowest vertex along gravity at the start of the stage.
inline EnergySpec stage_energy(const TriMesh& mesh, const StageConfig& stage, EnergySpec spec) {
    spec.g_dir = stage.g_dir;
    spec.support = stage.support;
    int lowest = 0;
    for (int v = 1; v < mesh.num_vertices(); ++v)
        if (stage.g_dir.dot(mesh.vertices[v]) > stage.g_dir.dot(mesh.vertices[lowest])) lowest = v;
    spec.datum = mesh.vertices[lowest];
    return spec;
}

inline StageResult run_stage(const TriMesh& mesh, const StageConfig& stage, const EnergySpec& spec,
                             const SolverParams& params, double mass, const Thorax& thorax,
                             const IterationObserver& observer = {}) {
    StageResult out;
    out.config = stage;
    auto solved = minimize(mesh, stage_energy(mesh, stage, spec), stage.obstacles, params, observer);
    out.mesh = std::move(solved.mesh);
    out.solve = solved.report;
    out.report = report(out.mesh, stage, mass, thorax);
    if (!out.solve.converged) out.report.warnings.push_back("solver reached max_iters before converging");
    return out;
}

inline PipelineResult run_pipeline(const PipelineInput& in, const IterationObserver& observer = {}) {
    check_stage_order(in.stages);
    in.solver.check();
    PipelineResult out;
    out.thorax = build_thorax(in.anthro);
    out.initial = build_initial_breast(in.anthro, out.thorax, in.edge_target);
    for (const MarkerSpec& m : in.markers) {
        if (m.label == "nipple") fail_usage("marker label \"nipple\" is reserved");
        if (out.initial.mesh.find_marker(m.label)) fail_usage("duplicate marker label " + m.label);
        out.initial.mesh.markers.push_back(attach_marker(out.initial.mesh, m.position, m.label));
    }
    const TriMesh* current = &out.initial.mesh;
    for (StageId id : in.stages) {
        const StageConfig cfg = stage_config(id, in.anthro, out.thorax, out.initial, in.stage_options);
        out.stages.push_back(run_stage(*current, cfg, in.energy, in.solver, in.anthro.breast_mass, out.thorax, observer));
        current = &out.stages.back().mesh;
    }
    return out;
}

struct Keyframe {
    StageId stage;
    Point3 position;
};

using Trajectory = std::map<std::string, std::vector<Keyframe>>;

struct MarkerReport {
    std::string label;
    Point3 advected = Point3::Zero();
    std::optional<Point3> predefined;
};

// Advected position of every marker, with the most recent keyframe at or
// before `stage` for labels that have a trajectory.
inline std::vector<MarkerReport> apply_trajectory(const TriMesh& mesh, const Trajectory& trajectory, StageId stage) {
    std::vector<MarkerReport> out;
    for (const Marker& m : mesh.markers) {
        MarkerReport r{m.label, marker_position(mesh, m), std::nullopt};
        if (auto it = trajectory.find(m.label); it != trajectory.end())
            for (const Keyframe& k : it->second)
                if (static_cast<int>(k.stage) <= static_cast<int>(stage)) r.predefined = k.position;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace bsim
