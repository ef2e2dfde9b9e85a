#pragma once

// Run configuration (JSON), mesh files (OFF/OBJ), report and trajectory CSV.

#include "bsim/calibration.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace bsim {

struct RunConfig {
    PipelineInput input;
    std::optional<CalibrationProblem> calibration; // targets come from anthropometry.stage_targets
    std::string output_dir = "out";
};

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open " + (path.empty() ? std::string("<empty path>") : path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes through a temporary file in the same directory, then renames.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    if (path.empty()) fail_io("empty output path");
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail_io("cannot write " + path);
        out << content;
        out.flush();
        if (!out) fail_io("cannot write " + path);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail_io("cannot write " + path);
    }
}

inline std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Meshes

inline std::string format_off(const TriMesh& mesh) {
    std::string s = "OFF\n" + std::to_string(mesh.num_vertices()) + " " + std::to_string(mesh.num_facets()) + " 0\n";
    for (const Point3& p : mesh.vertices)
        s += format_double("%.17g", p.x()) + " " + format_double("%.17g", p.y()) + " " + format_double("%.17g", p.z()) + "\n";
    for (const Facet& t : mesh.facets)
        s += "3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n";
    return s;
}

inline std::string format_obj(const TriMesh& mesh) {
    std::string s;
    for (const Point3& p : mesh.vertices)
        s += "v " + format_double("%.17g", p.x()) + " " + format_double("%.17g", p.y()) + " " + format_double("%.17g", p.z()) + "\n";
    for (const Facet& t : mesh.facets)
        s += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
    return s;
}

inline void export_off(const TriMesh& mesh, const std::string& path) { write_file_atomic(path, format_off(mesh)); }
inline void export_obj(const TriMesh& mesh, const std::string& path) { write_file_atomic(path, format_obj(mesh)); }

inline void export_mesh(const TriMesh& mesh, const std::string& path) {
    if (std::filesystem::path(path).extension() == ".obj") export_obj(mesh, path);
    else export_off(mesh, path);
}

namespace detail {

// Splits text into lines with '#' comments and blank lines removed.
inline std::vector<std::pair<int, std::string>> content_lines(const std::string& text) {
    std::vector<std::pair<int, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.emplace_back(n, line);
    }
    return out;
}

} // namespace detail

// Reads an OFF mesh; every vertex is free and every facet a breast facet.
inline TriMesh parse_off(const std::string& text, const std::string& name = "OFF") {
    const auto lines = detail::content_lines(text);
    auto bad = [&](int line, const std::string& what) { fail_io(name + ":" + std::to_string(line) + ": " + what); };
    if (lines.empty()) bad(1, "empty file");
    std::size_t k = 0;
    std::string head = lines[0].second;
    head.erase(0, head.find_first_not_of(" \t"));
    if (head.rfind("OFF", 0) != 0) bad(lines[0].first, "missing OFF header");
    std::istringstream counts(head.substr(3));
    long nv = -1, nf = -1, ne = 0;
    if (!(counts >> nv)) {
        if (++k >= lines.size()) bad(lines[0].first, "missing counts");
        counts = std::istringstream(lines[k].second);
        counts >> nv;
    }
    if (!(counts >> nf >> ne) || nv < 0 || nf < 0) bad(lines[k].first, "malformed counts line");
    TriMesh mesh;
    for (long i = 0; i < nv; ++i) {
        if (++k >= lines.size()) bad(lines.back().first, "unexpected end of file");
        std::istringstream ls(lines[k].second);
        double x, y, z;
        if (!(ls >> x >> y >> z)) bad(lines[k].first, "malformed vertex");
        mesh.add_vertex(Point3(x, y, z));
    }
    for (long i = 0; i < nf; ++i) {
        if (++k >= lines.size()) bad(lines.back().first, "unexpected end of file");
        std::istringstream ls(lines[k].second);
        int n, a, b, c;
        if (!(ls >> n >> a >> b >> c) || n != 3) bad(lines[k].first, "only triangles are supported");
        if (a < 0 || b < 0 || c < 0 || a >= nv || b >= nv || c >= nv) bad(lines[k].first, "vertex index out of range");
        mesh.add_facet(a, b, c);
    }
    return mesh;
}

inline TriMesh parse_obj(const std::string& text, const std::string& name = "OBJ") {
    TriMesh mesh;
    std::vector<std::array<long, 4>> faces; // index plus line number
    for (const auto& [n, line] : detail::content_lines(text)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) fail_io(name + ":" + std::to_string(n) + ": malformed vertex");
            mesh.add_vertex(Point3(x, y, z));
        } else if (tag == "f") {
            std::array<long, 4> f{0, 0, 0, n};
            std::string tok;
            int count = 0;
            while (ls >> tok) {
                if (count == 3) fail_io(name + ":" + std::to_string(n) + ": only triangles are supported");
                const std::string idx = tok.substr(0, tok.find('/'));
                long value = 0;
                const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), value);
                if (ec != std::errc() || ptr != idx.data() + idx.size())
                    fail_io(name + ":" + std::to_string(n) + ": malformed facet index");
                f[count++] = value;
            }
            if (count != 3) fail_io(name + ":" + std::to_string(n) + ": only triangles are supported");
            faces.push_back(f);
        }
    }
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k)
            if (f[k] < 1 || f[k] > mesh.num_vertices())
                fail_io(name + ":" + std::to_string(f[3]) + ": vertex index out of range");
        mesh.add_facet(static_cast<int>(f[0] - 1), static_cast<int>(f[1] - 1), static_cast<int>(f[2] - 1));
    }
    return mesh;
}

inline TriMesh import_mesh(const std::string& path) {
    const std::string text = read_file(path);
    if (std::filesystem::path(path).extension() == ".obj") return parse_obj(text, path);
    return parse_off(text, path);
}

// Marks vertices on the thorax surface as fixed and facets with all three
// corners fixed as base cap, recovering the roles an exported mesh lost.
inline void infer_roles(TriMesh& mesh, const Thorax& thorax, double tol = 1e-6) {
    for (int v = 0; v < mesh.num_vertices(); ++v)
        mesh.vertex_role[v] = std::abs(thorax.signed_distance(mesh.vertices[v])) <= tol ? VertexRole::fixed : VertexRole::free;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Facet& t = mesh.facets[f];
        const bool cap = mesh.is_fixed(t[0]) && mesh.is_fixed(t[1]) && mesh.is_fixed(t[2]);
        mesh.facet_role[f] = cap ? FacetRole::base_cap : FacetRole::breast;
    }
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr const char* report_header =
    "stage,area_cm2,volume_cm3,density_g_cm3,base_perim_cm,h_left_cm,h_right_cm,v_bottom_cm,v_top_cm,"
    "nipple_x,nipple_y,nipple_z,contact_w_cm,contact_h_cm";

inline std::string format_report(const std::vector<MeasurementReport>& reports) {
    if (reports.empty()) fail_usage("no reports to write");
    auto cell = [](double v) { return format_double("%.6f", v); };
    std::string s = std::string(report_header) + "\n";
    for (const MeasurementReport& r : reports) {
        s += to_string(r.stage) + "," + cell(r.area) + "," + cell(r.volume) + "," + cell(r.density) + "," +
             cell(r.base_perimeter) + ",";
        if (r.arcs) s += cell(r.arcs->h_left) + "," + cell(r.arcs->h_right) + "," + cell(r.arcs->v_bottom) + "," + cell(r.arcs->v_top) + ",";
        else s += ",,,,";
        s += cell(r.nipple.x()) + "," + cell(r.nipple.y()) + "," + cell(r.nipple.z()) + ",";
        if (r.contact) s += cell(r.contact->width) + "," + cell(r.contact->height);
        else s += ",";
        s += "\n";
    }
    return s;
}

inline void write_report(const std::vector<MeasurementReport>& reports, const std::string& path) {
    write_file_atomic(path, format_report(reports));
}

inline constexpr const char* marker_header = "label,stage,advected_x,advected_y,advected_z,predefined_x,predefined_y,predefined_z";

inline std::string format_markers(const std::vector<std::pair<StageId, std::vector<MarkerReport>>>& rows) {
    auto cell = [](double v) { return format_double("%.6f", v); };
    std::string s = std::string(marker_header) + "\n";
    for (const auto& [stage, markers] : rows)
        for (const MarkerReport& m : markers) {
            s += m.label + "," + to_string(stage) + "," + cell(m.advected.x()) + "," + cell(m.advected.y()) + "," +
                 cell(m.advected.z()) + ",";
            if (m.predefined) s += cell(m.predefined->x()) + "," + cell(m.predefined->y()) + "," + cell(m.predefined->z());
            else s += ",,";
            s += "\n";
        }
    return s;
}

// ---------------------------------------------------------------------------
// Trajectories

inline Trajectory parse_trajectory(const std::string& text, const std::string& name = "trajectory") {
    std::istringstream in(text);
    std::string line;
    int n = 0;
    auto bad = [&](const std::string& what) { fail_usage(name + ":" + std::to_string(n) + ": " + what); };
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        return s;
    };
    if (!std::getline(in, line)) {
        n = 1;
        bad("missing header");
    }
    n = 1;
    if (strip(line) != "label,stage,x_cm,y_cm,z_cm") bad("header must be label,stage,x_cm,y_cm,z_cm");
    Trajectory traj;
    while (std::getline(in, line)) {
        ++n;
        line = strip(line);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 5) bad("expected 5 columns");
        if (cells[0].empty()) bad("empty label");
        const auto stage = parse_stage(cells[1]);
        if (!stage) {
            static const std::set<std::string> later{"CRC", "LET", "MLO"};
            if (later.count(cells[1])) bad("stage out of scope: " + cells[1]);
            bad("unknown stage: " + cells[1]);
        }
        Point3 p;
        for (int k = 0; k < 3; ++k) {
            const std::string& c = cells[2 + k];
            double v = 0;
            const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (c.empty() || ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v))
                bad("malformed number: " + c);
            p[k] = v;
        }
        auto& keys = traj[cells[0]];
        if (!keys.empty() && static_cast<int>(keys.back().stage) >= static_cast<int>(*stage))
            bad("out-of-order stages for " + cells[0]);
        keys.push_back({*stage, p});
    }
    return traj;
}

inline Trajectory load_trajectory(const std::string& path) { return parse_trajectory(read_file(path), path); }

// ---------------------------------------------------------------------------
// Configuration

namespace detail {

using json = nlohmann::json;

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& what) const { fail_usage("config " + path_ + ": " + what); }

    void allow(std::initializer_list<const char*> keys) const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool known = false;
            for (const char* k : keys) known |= it.key() == k;
            if (!known) fail_usage("config " + path_ + "." + it.key() + ": unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    std::string at(const char* key) const { return path_ + "." + key; }
    const json& raw(const char* key) const { return j_.at(key); }

    double number(const char* key) const {
        if (!j_.contains(key)) fail_usage("config " + at(key) + ": missing");
        const json& v = j_.at(key);
        if (!v.is_number()) fail_usage("config " + at(key) + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail_usage("config " + at(key) + ": must be finite");
        return d;
    }

    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    int integer(const char* key, int fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail_usage("config " + at(key) + ": expected an integer");
        return v.get<int>();
    }

    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail_usage("config " + at(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string string(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) fail_usage("config " + at(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* key, std::size_t n) const {
        if (!j_.contains(key)) fail_usage("config " + at(key) + ": missing");
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != n) fail_usage("config " + at(key) + ": expected " + std::to_string(n) + " numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < n; ++i) {
            if (!v[i].is_number()) fail_usage("config " + at(key) + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

private:
    const json& j_;
    std::string path_;
};

inline Point3 point_of(const std::vector<double>& v) { return Point3(v[0], v[1], v[2]); }

inline StageId stage_token(const std::string& token, const std::string& where) {
    auto id = parse_stage(token);
    if (!id) fail_usage("config " + where + ": stage out of scope or unknown: " + token);
    return *id;
}

} // namespace detail

inline RunConfig parse_config(const std::string& text) {
    using detail::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail_usage(std::string("config: invalid JSON: ") + e.what());
    }
    const detail::Reader top(root, "$");
    top.allow({"anthropometry", "energy", "solver", "stages", "calibration", "markers", "output_dir"});
    if (!root.contains("anthropometry")) top.fail("missing anthropometry");

    RunConfig cfg;
    PipelineInput& in = cfg.input;

    const detail::Reader an(root.at("anthropometry"), "$.anthropometry");
    an.allow({"thorax_perimeter", "thorax_semi_axes", "base_perimeter_supported", "base_perimeter_unsupported",
              "breast_mass", "rest_volume", "base_center", "stage_targets"});
    Anthropometry& a = in.anthro;
    a.thorax_perimeter = an.number("thorax_perimeter");
    const auto axes = an.numbers("thorax_semi_axes", 2);
    a.thorax_a = axes[0];
    a.thorax_b = axes[1];
    a.base_perimeter_supported = an.number("base_perimeter_supported");
    a.base_perimeter_unsupported = an.number("base_perimeter_unsupported");
    a.breast_mass = an.number("breast_mass");
    a.rest_volume = an.number("rest_volume");
    a.base_center = an.has("base_center") ? detail::point_of(an.numbers("base_center", 3)) : Point3(0, 0, a.thorax_b);
    if (an.has("stage_targets")) {
        const auto& st = an.raw("stage_targets");
        const detail::Reader str(st, an.at("stage_targets"));
        for (auto it = st.begin(); it != st.end(); ++it) {
            const std::string where = an.at("stage_targets") + "." + it.key();
            const StageId id = detail::stage_token(it.key(), where);
            const detail::Reader tr(it.value(), where);
            for (auto q = it.value().begin(); q != it.value().end(); ++q) {
                const auto& names = target_quantities();
                if (std::find(names.begin(), names.end(), q.key()) == names.end())
                    fail_usage("config " + where + "." + q.key() + ": unknown key");
                a.stage_targets[id][q.key()] = tr.number(q.key().c_str());
            }
        }
    }
    check(a);

    EnergySpec& e = in.energy;
    e.V0 = a.rest_volume;
    e.rho = a.breast_mass / a.rest_volume;
    if (root.contains("energy")) {
        const detail::Reader en(root.at("energy"), "$.energy");
        en.allow({"sigma", "rho", "g", "w_b", "K", "V0", "support_srg", "d_table"});
        e.sigma = en.number("sigma", e.sigma);
        e.rho = en.number("rho", e.rho);
        e.g = en.number("g", e.g);
        e.w_b = en.number("w_b", e.w_b);
        e.K = en.number("K", e.K);
        e.V0 = en.number("V0", e.V0);
        in.stage_options.support_srg = en.number("support_srg", in.stage_options.support_srg);
        if (en.has("d_table")) in.stage_options.d_table = en.number("d_table");
    }
    e.check();
    if (!(in.stage_options.support_srg >= 0 && in.stage_options.support_srg <= 1))
        fail_usage("config $.energy.support_srg: must lie in [0, 1]");
    if (in.stage_options.d_table && !(*in.stage_options.d_table > 0)) fail_usage("config $.energy.d_table: must be > 0");

    if (root.contains("solver")) {
        const detail::Reader so(root.at("solver"), "$.solver");
        so.allow({"max_iters", "step0", "shrink", "grad_tol", "energy_tol", "hard_volume", "volume_tol",
                  "maintenance_interval", "normal_motion", "edge_target"});
        SolverParams& p = in.solver;
        p.max_iters = so.integer("max_iters", p.max_iters);
        p.step0 = so.number("step0", p.step0);
        p.shrink = so.number("shrink", p.shrink);
        p.grad_tol = so.number("grad_tol", p.grad_tol);
        p.energy_tol = so.number("energy_tol", p.energy_tol);
        p.hard_volume = so.boolean("hard_volume", p.hard_volume);
        p.volume_tol = so.number("volume_tol", p.volume_tol);
        p.maintenance_interval = so.integer("maintenance_interval", p.maintenance_interval);
        p.normal_motion = so.boolean("normal_motion", p.normal_motion);
        in.edge_target = so.number("edge_target", in.edge_target);
    }
    in.solver.check();
    if (!(in.edge_target > 0)) fail_usage("config $.solver.edge_target: must be > 0");

    if (root.contains("stages")) {
        const json& st = root.at("stages");
        if (!st.is_array()) fail_usage("config $.stages: expected an array of stages");
        in.stages.clear();
        for (std::size_t i = 0; i < st.size(); ++i) {
            const std::string where = "$.stages[" + std::to_string(i) + "]";
            if (st[i].is_string()) {
                in.stages.push_back(detail::stage_token(st[i].get<std::string>(), where));
                continue;
            }
            const detail::Reader sr(st[i], where);
            sr.allow({"id", "g_dir", "support"});
            if (!sr.has("id")) sr.fail("missing id");
            const StageId id = detail::stage_token(sr.string("id", ""), sr.at("id"));
            in.stages.push_back(id);
            StageOverride ov;
            if (sr.has("g_dir")) {
                const Vec3 g = detail::point_of(sr.numbers("g_dir", 3));
                if (!(g.norm() > 0)) fail_usage("config " + sr.at("g_dir") + ": must be nonzero");
                ov.g_dir = std::abs(g.norm() - 1.0) > 1e-12 ? Vec3(g.normalized()) : g;
            }
            if (sr.has("support")) {
                ov.support = sr.number("support");
                if (!(*ov.support >= 0 && *ov.support <= 1)) fail_usage("config " + sr.at("support") + ": must lie in [0, 1]");
            }
            if (ov.g_dir || ov.support) in.stage_options.overrides[id] = ov;
        }
        check_stage_order(in.stages);
    }

    if (root.contains("markers")) {
        const json& ms = root.at("markers");
        if (!ms.is_array()) fail_usage("config $.markers: expected an array");
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const detail::Reader mr(ms[i], "$.markers[" + std::to_string(i) + "]");
            mr.allow({"label", "position"});
            MarkerSpec m{mr.string("label", ""), detail::point_of(mr.numbers("position", 3))};
            if (m.label.empty() || m.label.find_first_of(",\n\r") != std::string::npos)
                mr.fail("label must be non-empty and free of commas");
            if (m.label == "nipple") mr.fail("label \"nipple\" is reserved");
            for (const MarkerSpec& other : in.markers)
                if (other.label == m.label) mr.fail("duplicate label " + m.label);
            in.markers.push_back(m);
        }
    }

    if (root.contains("calibration")) {
        const detail::Reader ca(root.at("calibration"), "$.calibration");
        ca.allow({"free", "weights", "tolerance", "max_evaluations"});
        CalibrationProblem prob;
        prob.targets = a.stage_targets;
        prob.tolerance = ca.number("tolerance", prob.tolerance);
        prob.max_evaluations = ca.integer("max_evaluations", prob.max_evaluations);
        if (ca.has("free")) {
            const json& fr = ca.raw("free");
            const detail::Reader frr(fr, ca.at("free"));
            for (auto it = fr.begin(); it != fr.end(); ++it) {
                const auto& names = calibratable_parameters();
                if (std::find(names.begin(), names.end(), it.key()) == names.end())
                    fail_usage("config " + ca.at("free") + "." + it.key() + ": unknown key");
                const auto b = frr.numbers(it.key().c_str(), 2);
                prob.free.push_back({it.key(), b[0], b[1]});
            }
            // Fixed order so the simplex does not depend on key order in the file.
            std::stable_sort(prob.free.begin(), prob.free.end(), [](const FreeParameter& x, const FreeParameter& y) {
                const auto& names = calibratable_parameters();
                return std::find(names.begin(), names.end(), x.name) < std::find(names.begin(), names.end(), y.name);
            });
        }
        if (ca.has("weights")) {
            const json& w = ca.raw("weights");
            const detail::Reader wr(w, ca.at("weights"));
            for (auto it = w.begin(); it != w.end(); ++it) {
                const auto dot = it.key().find('.');
                const auto stage = dot == std::string::npos ? std::nullopt : parse_stage(it.key().substr(0, dot));
                const auto& names = target_quantities();
                if (!stage || std::find(names.begin(), names.end(), it.key().substr(dot + 1)) == names.end())
                    fail_usage("config " + ca.at("weights") + "." + it.key() + ": unknown key");
                prob.weights[it.key()] = wr.number(it.key().c_str());
            }
        }
        prob.check();
        cfg.calibration = prob;
    }

    if (root.contains("output_dir")) {
        if (!root.at("output_dir").is_string()) fail_usage("config $.output_dir: expected a string");
        cfg.output_dir = root.at("output_dir").get<std::string>();
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

inline std::string serialize_config(const RunConfig& cfg) {
    using json = nlohmann::ordered_json;
    const PipelineInput& in = cfg.input;
    const Anthropometry& a = in.anthro;
    json root;
    json an;
    an["thorax_perimeter"] = a.thorax_perimeter;
    an["thorax_semi_axes"] = {a.thorax_a, a.thorax_b};
    an["base_perimeter_supported"] = a.base_perimeter_supported;
    an["base_perimeter_unsupported"] = a.base_perimeter_unsupported;
    an["breast_mass"] = a.breast_mass;
    an["rest_volume"] = a.rest_volume;
    an["base_center"] = {a.base_center.x(), a.base_center.y(), a.base_center.z()};
    json targets = json::object();
    for (const auto& [stage, values] : a.stage_targets) {
        json t = json::object();
        for (const auto& [name, v] : values) t[name] = v;
        targets[to_string(stage)] = t;
    }
    an["stage_targets"] = targets;
    root["anthropometry"] = an;

    json en;
    en["sigma"] = in.energy.sigma;
    en["rho"] = in.energy.rho;
    en["g"] = in.energy.g;
    en["w_b"] = in.energy.w_b;
    en["K"] = in.energy.K;
    en["V0"] = in.energy.V0;
    en["support_srg"] = in.stage_options.support_srg;
    en["d_table"] = in.stage_options.d_table ? json(*in.stage_options.d_table) : json(nullptr);
    root["energy"] = en;

    json so;
    so["max_iters"] = in.solver.max_iters;
    so["step0"] = in.solver.step0;
    so["shrink"] = in.solver.shrink;
    so["grad_tol"] = in.solver.grad_tol;
    so["energy_tol"] = in.solver.energy_tol;
    so["hard_volume"] = in.solver.hard_volume;
    so["volume_tol"] = in.solver.volume_tol;
    so["maintenance_interval"] = in.solver.maintenance_interval;
    so["normal_motion"] = in.solver.normal_motion;
    so["edge_target"] = in.edge_target;
    root["solver"] = so;

    json stages = json::array();
    for (StageId id : in.stages) {
        auto it = in.stage_options.overrides.find(id);
        if (it == in.stage_options.overrides.end()) {
            stages.push_back(to_string(id));
            continue;
        }
        json st;
        st["id"] = to_string(id);
        if (const auto& g = it->second.g_dir) st["g_dir"] = {g->x(), g->y(), g->z()};
        if (const auto& s = it->second.support) st["support"] = *s;
        stages.push_back(st);
    }
    root["stages"] = stages;

    if (cfg.calibration) {
        json ca;
        json fr = json::object();
        for (const FreeParameter& p : cfg.calibration->free) fr[p.name] = {p.lower, p.upper};
        ca["free"] = fr;
        json w = json::object();
        for (const auto& [k, v] : cfg.calibration->weights) w[k] = v;
        ca["weights"] = w;
        ca["tolerance"] = cfg.calibration->tolerance;
        ca["max_evaluations"] = cfg.calibration->max_evaluations;
        root["calibration"] = ca;
    }

    json ms = json::array();
    for (const MarkerSpec& m : in.markers)
        ms.push_back({{"label", m.label}, {"position", {m.position.x(), m.position.y(), m.position.z()}}});
    root["markers"] = ms;
    root["output_dir"] = cfg.output_dir;
    return root.dump(2) + "\n";
}

} // namespace bsim
