#pragma once

// Virtual tape measure: section perimeters, the four semi-arcs meeting at
// the nipple, and per-stage measurement reports.

#include "bsim/anatomy.hpp"
#include "bsim/section.hpp"

#include <limits>
#include <optional>

namespace bsim {

struct SemiArcs {
    double h_left = 0, h_right = 0, v_bottom = 0, v_top = 0;
    double horizontal = 0; // full horizontal arc
    double vertical = 0;   // full vertical arc
};

struct ContactPatch {
    double width = 0;  // extent along Ox
    double height = 0; // extent along Oy
    int vertices = 0;
    bool exceeds_table = false;
};

struct MeasurementReport {
    StageId stage = StageId::SRG;
    double mass = 0;
    double area = 0;
    double volume = 0;
    double density = 0;
    double base_perimeter = 0;
    std::optional<SemiArcs> arcs;
    Point3 nipple = Point3::Zero();
    std::optional<Point3> nipple_marker; // advected material nipple
    std::optional<ContactPatch> contact;
    std::vector<std::string> warnings;

    std::optional<double> quantity(const std::string& name) const {
        if (name == "area") return area;
        if (name == "volume") return volume;
        if (name == "base_perim") return base_perimeter;
        if (!arcs) return std::nullopt;
        if (name == "h_left") return arcs->h_left;
        if (name == "h_right") return arcs->h_right;
        if (name == "v_bottom") return arcs->v_bottom;
        if (name == "v_top") return arcs->v_top;
        return std::nullopt;
    }
};

// Free vertex farthest outside the thorax; ties go to the smallest index.
inline Marker locate_nipple(const TriMesh& mesh, const Thorax& thorax) {
    int best = -1;
    double best_d = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_free(v)) continue;
        const double d = thorax.signed_distance(mesh.vertices[v]);
        if (d > best_d) {
            best_d = d;
            best = v;
        }
    }
    if (best < 0) fail_usage("mesh has no free vertex");
    for (int f = 0; f < mesh.num_facets(); ++f)
        for (int k = 0; k < 3; ++k)
            if (mesh.facets[f][k] == best) {
                Marker m{f, {0.0, 0.0, 0.0}, "nipple"};
                m.bary[k] = 1.0;
                return m;
            }
    fail_usage("nipple vertex has no facet");
}

inline double base_perimeter(const TriMesh& mesh) { return base_boundary_length(mesh); }

// Longest closed breast-surface section, or the base curve length when
// every base vertex lies on the plane.
inline double section_perimeter(const TriMesh& mesh, const Plane& plane) {
    bool has_base = false, base_on_plane = true;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (mesh.facet_role[f] != FacetRole::base_cap) continue;
        has_base = true;
        for (int k = 0; k < 3; ++k)
            if (std::abs(plane.signed_distance(mesh.corner(f, k))) > 1e-9) base_on_plane = false;
    }
    if (has_base && base_on_plane) return base_boundary_length(mesh);
    double best = -1;
    for (const Polyline& line : plane_section(mesh, plane, RoleFilter::breast))
        if (line.closed) best = std::max(best, line.length());
    if (best < 0) fail_numerical("no section");
    return best;
}

namespace detail {

struct Split {
    double before = 0; // from the first point to the split
    double after = 0;  // from the split to the last point
};

inline Split split_at_closest(const Polyline& line, const Point3& p) {
    int seg = 0;
    double best = std::numeric_limits<double>::infinity(), best_t = 0;
    for (int i = 0; i + 1 < static_cast<int>(line.points.size()); ++i) {
        const Vec3 d = line.points[i + 1] - line.points[i];
        const double len2 = d.squaredNorm();
        const double t = len2 > 0 ? std::clamp((p - line.points[i]).dot(d) / len2, 0.0, 1.0) : 0.0;
        const double dist = (line.points[i] + t * d - p).norm();
        if (dist < best) {
            best = dist;
            seg = i;
            best_t = t;
        }
    }
    const Point3 q = line.points[seg] + best_t * (line.points[seg + 1] - line.points[seg]);
    Split s;
    for (int i = 0; i < seg; ++i) s.before += (line.points[i + 1] - line.points[i]).norm();
    s.before += (q - line.points[seg]).norm();
    s.after += (line.points[seg + 1] - q).norm();
    for (int i = seg + 1; i + 1 < static_cast<int>(line.points.size()); ++i)
        s.after += (line.points[i + 1] - line.points[i]).norm();
    return s;
}

inline double distance_to(const Polyline& line, const Point3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < line.points.size(); ++i) {
        const Vec3 d = line.points[i + 1] - line.points[i];
        const double len2 = d.squaredNorm();
        const double t = len2 > 0 ? std::clamp((p - line.points[i]).dot(d) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (line.points[i] + t * d - p).norm());
    }
    return best;
}

// Open breast-surface arc through p in the plane with the given normal,
// returned as (length on the -axis side, length on the +axis side).
inline std::pair<double, double> anchored_arc(const TriMesh& mesh, const Point3& p, const Vec3& normal,
                                              const Vec3& axis) {
    const auto lines = plane_section(mesh, Plane(p, normal), RoleFilter::breast);
    const Polyline* arc = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const Polyline& line : lines) {
        const double d = distance_to(line, p);
        if (d < best) {
            best = d;
            arc = &line;
        }
    }
    if (!arc || arc->closed || arc->points.size() < 2) fail_numerical("arc not anchored");
    auto anchored = [&](std::uint64_t key) {
        const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
        return mesh.is_fixed(a) && mesh.is_fixed(b);
    };
    if (!anchored(arc->edges.front()) || !anchored(arc->edges.back())) fail_numerical("arc not anchored");
    const Split s = split_at_closest(*arc, p);
    const bool first_negative = axis.dot(arc->points.front()) <= axis.dot(arc->points.back());
    return first_negative ? std::pair{s.before, s.after} : std::pair{s.after, s.before};
}

} // namespace detail

// Horizontal arc: plane with normal `cranial` through the nipple, split into
// the -lateral (left) and +lateral (right) parts. Vertical arc: plane with
// normal `lateral`, split into the -cranial (bottom) and +cranial (top) parts.
inline SemiArcs semi_arcs(const TriMesh& mesh, const Marker& nipple, const Vec3& lateral = Vec3::UnitX(),
                          const Vec3& cranial = Vec3::UnitY()) {
    const Point3 p = marker_position(mesh, nipple);
    SemiArcs arcs;
    std::tie(arcs.h_left, arcs.h_right) = detail::anchored_arc(mesh, p, cranial, lateral);
    std::tie(arcs.v_bottom, arcs.v_top) = detail::anchored_arc(mesh, p, lateral, cranial);
    arcs.horizontal = arcs.h_left + arcs.h_right;
    arcs.vertical = arcs.v_bottom + arcs.v_top;
    return arcs;
}

inline ContactPatch contact_patch(const TriMesh& mesh, const Obstacle& table, const Vec3& lateral,
                                  const std::array<double, 2>& dims) {
    ContactPatch patch;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const Point3& p : mesh.vertices) {
        if (std::abs(table.gap(p)) > 1e-6) continue;
        ++patch.vertices;
        x0 = std::min(x0, lateral.dot(p));
        x1 = std::max(x1, lateral.dot(p));
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
    }
    if (patch.vertices > 0) {
        patch.width = x1 - x0;
        patch.height = y1 - y0;
    }
    const bool fits = (patch.width <= dims[0] && patch.height <= dims[1]) ||
                      (patch.width <= dims[1] && patch.height <= dims[0]);
    patch.exceeds_table = !fits;
    return patch;
}

inline MeasurementReport report(const TriMesh& mesh, const StageConfig& stage, double mass, const Thorax& thorax) {
    MeasurementReport r;
    r.stage = stage.id;
    r.mass = mass;
    r.area = total_area(mesh, RoleFilter::breast);
    r.volume = enclosed_volume(mesh);
    r.density = mass / r.volume;
    r.base_perimeter = base_perimeter(mesh);
    const Marker nipple = locate_nipple(mesh, thorax);
    r.nipple = marker_position(mesh, nipple);
    if (auto m = mesh.find_marker("nipple")) r.nipple_marker = marker_position(mesh, mesh.markers[*m]);
    try {
        r.arcs = semi_arcs(mesh, nipple);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::numerical) throw;
        r.warnings.push_back(std::string("semi-arcs unavailable: ") + e.what());
    }
    if (stage.table) {
        r.contact = contact_patch(mesh, stage.obstacles[*stage.table], Vec3::UnitX(),
                                  stage.table_dims.value_or(table_dims));
        if (r.contact->exceeds_table) r.warnings.push_back("contact patch exceeds the 18 x 24 cm table");
    }
    return r;
}

} // namespace bsim
