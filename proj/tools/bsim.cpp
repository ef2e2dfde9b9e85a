#include "bsim/bsim.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

using namespace bsim;

std::vector<StageId> parse_stage_list(const std::string& text) {
    std::vector<StageId> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto id = parse_stage(token);
        if (!id) fail_usage("stage out of scope or unknown: " + token);
        out.push_back(*id);
    }
    check_stage_order(out);
    return out;
}

void print_warnings(const MeasurementReport& r) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << to_string(r.stage) << ": " << w << "\n";
}

int cmd_init(const std::string& config_path, const std::string& out_path) {
    const RunConfig cfg = load_config(config_path);
    const Thorax thorax = build_thorax(cfg.input.anthro);
    InitialBreast breast = build_initial_breast(cfg.input.anthro, thorax, cfg.input.edge_target);
    for (const MarkerSpec& m : cfg.input.markers)
        breast.mesh.markers.push_back(attach_marker(breast.mesh, m.position, m.label));
    export_mesh(breast.mesh, out_path);
    std::cout << "vertices " << breast.mesh.num_vertices() << ", facets " << breast.mesh.num_facets() << "\n"
              << "volume " << format_double("%.6f", enclosed_volume(breast.mesh)) << " cm3, base perimeter "
              << format_double("%.6f", base_perimeter(breast.mesh)) << " cm\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& stages, const std::string& trajectory_path,
            const std::string& report_path, std::string export_dir) {
    RunConfig cfg = load_config(config_path);
    if (!stages.empty()) cfg.input.stages = parse_stage_list(stages);
    const Trajectory trajectory = trajectory_path.empty() ? Trajectory{} : load_trajectory(trajectory_path);
    if (export_dir.empty()) export_dir = cfg.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(export_dir, ec);
    if (ec) fail_io("cannot create " + export_dir);

    const PipelineResult result = run_pipeline(cfg.input);
    std::vector<MeasurementReport> reports;
    std::vector<std::pair<StageId, std::vector<MarkerReport>>> markers;
    bool converged = true;
    for (const StageResult& s : result.stages) {
        reports.push_back(s.report);
        markers.emplace_back(s.config.id, apply_trajectory(s.mesh, trajectory, s.config.id));
        export_off(s.mesh, (std::filesystem::path(export_dir) / (to_string(s.config.id) + ".off")).string());
        print_warnings(s.report);
        converged &= s.solve.converged;
        std::cout << to_string(s.config.id) << ": volume " << format_double("%.3f", s.report.volume) << " cm3, "
                  << s.solve.iters << " iterations\n";
    }
    write_report(reports, report_path);
    write_file_atomic((std::filesystem::path(export_dir) / "markers.csv").string(), format_markers(markers));
    if (!converged) {
        std::cerr << "error: at least one stage did not converge within max_iters\n";
        return 2;
    }
    return 0;
}

int cmd_calibrate(const std::string& config_path, const std::string& out_path) {
    RunConfig cfg = load_config(config_path);
    if (!cfg.calibration) fail_usage("config has no calibration block");
    const CalibrationResult result = calibrate(cfg.input, *cfg.calibration, [](int n, const auto& values, double r) {
        std::cout << "evaluation " << n;
        for (const auto& [k, v] : values) std::cout << " " << k << "=" << format_double("%.9g", v);
        std::cout << " residual " << format_double("%.6g", r) << "\n";
    });
    if (result.residual >= failed_run_residual) fail_numerical("every calibration run failed");
    RunConfig out = cfg;
    out.input = result.input;
    write_file_atomic(out_path, serialize_config(out));
    std::cout << "best residual " << format_double("%.6g", result.residual) << " after " << result.evaluations
              << " evaluations\n";
    if (!result.converged) {
        std::cerr << "error: calibration did not reach tolerance^2 = "
                  << format_double("%.6g", cfg.calibration->tolerance * cfg.calibration->tolerance) << "\n";
        return 2;
    }
    return 0;
}

int cmd_measure(const std::string& mesh_path, const std::string& config_path, const std::string& stage,
                const std::string& report_path) {
    const RunConfig cfg = load_config(config_path);
    const auto id = parse_stage(stage);
    if (!id) fail_usage("stage out of scope or unknown: " + stage);
    const Thorax thorax = build_thorax(cfg.input.anthro);
    const InitialBreast breast = build_initial_breast(cfg.input.anthro, thorax, cfg.input.edge_target);
    TriMesh mesh = import_mesh(mesh_path);
    infer_roles(mesh, thorax);
    const auto problems = validate(mesh);
    if (!problems.empty()) fail_numerical("invalid mesh: " + problems.front().message);
    const StageConfig sc = stage_config(*id, cfg.input.anthro, thorax, breast, cfg.input.stage_options);
    const MeasurementReport r = report(mesh, sc, cfg.input.anthro.breast_mass, thorax);
    print_warnings(r);
    if (report_path.empty()) std::cout << format_report({r});
    else write_report({r}, report_path);
    return 0;
}

int cmd_check(const std::string& mesh_path, const std::string& config_path, double step) {
    TriMesh mesh = import_mesh(mesh_path);
    EnergySpec spec;
    if (!config_path.empty()) {
        const RunConfig cfg = load_config(config_path);
        infer_roles(mesh, build_thorax(cfg.input.anthro));
        spec = cfg.input.energy;
    }
    const auto problems = validate(mesh);
    std::cout << "vertices " << mesh.num_vertices() << " (" << mesh.num_free() << " free), facets " << mesh.num_facets()
              << "\n";
    for (const auto& p : problems) std::cout << "violation: " << p.message << "\n";
    if (!problems.empty()) return 2;
    const double volume = enclosed_volume(mesh);
    std::cout << "area " << format_double("%.6f", total_area(mesh)) << " cm2, volume " << format_double("%.6f", volume)
              << " cm3\n";
    if (config_path.empty()) {
        spec.sigma = 1.0;
        spec.w_b = 1.0;
        spec.K = 1.0;
        spec.V0 = std::abs(volume) > 0 ? std::abs(volume) : 1.0;
    }
    const double err = fd_check(mesh, spec, step);
    std::cout << "fd_check max relative error " << format_double("%.3e", err) << " at step " << step << " cm\n";
    return err <= 1e-5 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bsim: breast surface simulator"};
    app.require_subcommand(1);

    std::string config, output, mesh, stages, trajectory, report_path, export_dir, stage = "SRG";
    double step = 1e-5;

    auto* init = app.add_subcommand("init", "Build the SRG mesh and export it");
    init->add_option("-c,--config", config, "Run configuration (JSON)")->required();
    init->add_option("-o,--output", output, "Output mesh (.off or .obj)")->required();

    auto* run = app.add_subcommand("run", "Run the stage pipeline");
    run->add_option("-c,--config", config, "Run configuration (JSON)")->required();
    run->add_option("--stages", stages, "Comma-separated stages, e.g. SRG,STU,LAT");
    run->add_option("--trajectory", trajectory, "Predefined marker trajectories (CSV)");
    run->add_option("--report", report_path, "Report CSV")->required();
    run->add_option("--export-dir", export_dir, "Directory for stage meshes (default: output_dir)");

    auto* cal = app.add_subcommand("calibrate", "Calibrate free parameters against stage targets");
    cal->add_option("-c,--config", config, "Run configuration (JSON)")->required();
    cal->add_option("-o,--output", output, "Calibrated configuration (JSON)")->required();

    auto* measure = app.add_subcommand("measure", "Tape-measure report for an existing mesh");
    measure->add_option("-m,--mesh", mesh, "Mesh (.off or .obj)")->required();
    measure->add_option("-c,--config", config, "Run configuration (JSON)")->required();
    measure->add_option("--stage", stage, "Stage whose obstacles apply (SRG, STU or LAT)");
    measure->add_option("--report", report_path, "Report CSV (default: stdout)");

    auto* check = app.add_subcommand("check", "Validate a mesh and compare gradients with finite differences");
    check->add_option("-m,--mesh", mesh, "Mesh (.off or .obj)")->required();
    check->add_option("-c,--config", config, "Energy coefficients and thorax for vertex roles");
    check->add_option("--step", step, "Finite-difference step (cm)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*init) return cmd_init(config, output);
        if (*run) return cmd_run(config, stages, trajectory, report_path, export_dir);
        if (*cal) return cmd_calibrate(config, output);
        if (*measure) return cmd_measure(mesh, config, stage, report_path);
        if (*check) return cmd_check(mesh, config, step);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::numerical ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
