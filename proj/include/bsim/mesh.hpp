#pragma once

// Closed oriented triangle surface with a free/fixed vertex partition.
//
// The breast is modelled as the free "breast" facets plus a fixed base cap
// lying on the thorax, so that the enclosed volume is well defined. Markers
// are material points carried by the surface as (facet, barycentric) pairs;
// the maintenance operations in maintenance.hpp remap them exactly.

#include "bsim/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace bsim {

enum class VertexRole : std::uint8_t { free, fixed };
enum class FacetRole : std::uint8_t { breast, base_cap };
enum class RoleFilter { all, breast, base_cap };

using Facet = std::array<int, 3>;

struct Marker {
    int facet = 0;
    std::array<double, 3> bary{1.0, 0.0, 0.0};
    std::string label;
};

struct TriMesh {
    std::vector<Point3> vertices;
    std::vector<Facet> facets;
    std::vector<VertexRole> vertex_role;
    std::vector<FacetRole> facet_role;
    std::vector<Marker> markers;

    int add_vertex(const Point3& p, VertexRole role = VertexRole::free) {
        vertices.push_back(p);
        vertex_role.push_back(role);
        return static_cast<int>(vertices.size()) - 1;
    }

    int add_facet(int a, int b, int c, FacetRole role = FacetRole::breast) {
        facets.push_back({a, b, c});
        facet_role.push_back(role);
        return static_cast<int>(facets.size()) - 1;
    }

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_facets() const { return static_cast<int>(facets.size()); }
    bool is_free(int v) const { return vertex_role[v] == VertexRole::free; }
    bool is_fixed(int v) const { return vertex_role[v] == VertexRole::fixed; }

    int num_free() const {
        return static_cast<int>(std::count(vertex_role.begin(), vertex_role.end(), VertexRole::free));
    }

    const Point3& corner(int f, int k) const { return vertices[facets[f][k]]; }

    std::optional<int> find_marker(const std::string& label) const {
        for (std::size_t i = 0; i < markers.size(); ++i)
            if (markers[i].label == label) return static_cast<int>(i);
        return std::nullopt;
    }
};

inline bool selected(FacetRole role, RoleFilter filter) {
    switch (filter) {
    case RoleFilter::all: return true;
    case RoleFilter::breast: return role == FacetRole::breast;
    case RoleFilter::base_cap: return role == FacetRole::base_cap;
    }
    return false;
}

// Directed edge (a -> b) packed into one key.
inline std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

inline std::uint64_t undirected_key(int a, int b) { return a < b ? edge_key(a, b) : edge_key(b, a); }

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind { non_finite_vertex, bad_index, repeated_index, degenerate_facet, boundary_edge,
                           non_manifold_edge, orientation, role_mismatch, size_mismatch };

struct Violation {
    ViolationKind kind;
    std::string message;
};

inline std::vector<Violation> validate(const TriMesh& mesh) {
    std::vector<Violation> out;
    const int nv = mesh.num_vertices();
    if (static_cast<int>(mesh.vertex_role.size()) != nv || mesh.facet_role.size() != mesh.facets.size()) {
        out.push_back({ViolationKind::size_mismatch, "role arrays do not match vertex/facet counts"});
        return out;
    }
    for (int v = 0; v < nv; ++v)
        if (!is_finite(mesh.vertices[v]))
            out.push_back({ViolationKind::non_finite_vertex, "vertex " + std::to_string(v) + " is not finite"});

    // Count undirected incidences and directed occurrences per edge.
    std::map<std::uint64_t, std::pair<int, int>> edges; // undirected -> (forward count, backward count)
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Facet& t = mesh.facets[f];
        bool indices_ok = true;
        for (int k = 0; k < 3; ++k) {
            if (t[k] < 0 || t[k] >= nv) {
                out.push_back({ViolationKind::bad_index, "facet " + std::to_string(f) + " has out-of-range vertex index"});
                indices_ok = false;
            }
        }
        if (!indices_ok) continue;
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
            out.push_back({ViolationKind::repeated_index, "facet " + std::to_string(f) + " repeats a vertex"});
            continue;
        }
        if (triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) <= 1e-12)
            out.push_back({ViolationKind::degenerate_facet, "facet " + std::to_string(f) + " is degenerate"});
        if (mesh.facet_role[f] == FacetRole::base_cap)
            for (int k = 0; k < 3; ++k)
                if (mesh.is_free(t[k]))
                    out.push_back({ViolationKind::role_mismatch,
                                   "base-cap facet " + std::to_string(f) + " has free vertex " + std::to_string(t[k])});
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            auto& counts = edges[undirected_key(a, b)];
            (a < b ? counts.first : counts.second) += 1;
        }
    }
    for (const auto& [key, counts] : edges) {
        const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
        const std::string name = "edge (" + std::to_string(a) + "," + std::to_string(b) + ")";
        const int total = counts.first + counts.second;
        if (total == 1)
            out.push_back({ViolationKind::boundary_edge, name + " has a single incident facet"});
        else if (total > 2)
            out.push_back({ViolationKind::non_manifold_edge, name + " has " + std::to_string(total) + " incident facets"});
        else if (counts.first != 1 || counts.second != 1)
            out.push_back({ViolationKind::orientation, name + " is traversed twice in the same direction"});
    }
    return out;
}

inline bool is_valid(const TriMesh& mesh) { return validate(mesh).empty(); }

// ---------------------------------------------------------------------------
// Integral quantities. Sums run in facet index order so results are reproducible.

inline double facet_area(const TriMesh& mesh, int f) {
    return triangle_area(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
}

inline double total_area(const TriMesh& mesh, RoleFilter filter = RoleFilter::all) {
    CompensatedSum<> sum;
    for (int f = 0; f < mesh.num_facets(); ++f)
        if (selected(mesh.facet_role[f], filter)) sum += facet_area(mesh, f);
    return sum.value();
}

// Signed volume, positive for outward winding. Coordinates are taken
// relative to the first vertex so meshes far from the origin keep precision.
inline double enclosed_volume(const TriMesh& mesh) {
    if (mesh.vertices.empty()) return 0.0;
    const Point3 r = mesh.vertices.front();
    CompensatedSum<> sum;
    for (int f = 0; f < mesh.num_facets(); ++f)
        sum += (mesh.corner(f, 0) - r).dot((mesh.corner(f, 1) - r).cross(mesh.corner(f, 2) - r));
    return sum.value() / 6.0;
}

// Gradient of the enclosed volume with respect to every vertex.
inline std::vector<Vec3> volume_gradient(const TriMesh& mesh) {
    std::vector<Vec3> grad(mesh.vertices.size(), Vec3::Zero());
    if (mesh.vertices.empty()) return grad;
    const Point3 r = mesh.vertices.front();
    for (const Facet& t : mesh.facets) {
        const Vec3 a = mesh.vertices[t[0]] - r, b = mesh.vertices[t[1]] - r, c = mesh.vertices[t[2]] - r;
        grad[t[0]] += b.cross(c) / 6.0;
        grad[t[1]] += c.cross(a) / 6.0;
        grad[t[2]] += a.cross(b) / 6.0;
    }
    return grad;
}

// One third of the incident facet areas.
inline std::vector<double> barycentric_vertex_areas(const TriMesh& mesh) {
    std::vector<double> area(mesh.vertices.size(), 0.0);
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const double a = facet_area(mesh, f) / 3.0;
        for (int v : mesh.facets[f]) area[v] += a;
    }
    return area;
}

// Unit area-weighted vertex normals (zero for isolated vertices).
inline std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
    std::vector<Vec3> n(mesh.vertices.size(), Vec3::Zero());
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Vec3 an = area_vector2(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
        for (int v : mesh.facets[f]) n[v] += an;
    }
    for (Vec3& x : n) {
        const double len = x.norm();
        if (len > 0) x /= len;
    }
    return n;
}

// Facets incident to each vertex, in increasing facet order.
inline std::vector<std::vector<int>> vertex_facets(const TriMesh& mesh) {
    std::vector<std::vector<int>> star(mesh.vertices.size());
    for (int f = 0; f < mesh.num_facets(); ++f)
        for (int v : mesh.facets[f]) star[v].push_back(f);
    return star;
}

// Directed edge -> facet owning it.
inline std::unordered_map<std::uint64_t, int> halfedge_map(const TriMesh& mesh) {
    std::unordered_map<std::uint64_t, int> map;
    map.reserve(mesh.facets.size() * 3);
    for (int f = 0; f < mesh.num_facets(); ++f)
        for (int k = 0; k < 3; ++k) map[edge_key(mesh.facets[f][k], mesh.facets[f][(k + 1) % 3])] = f;
    return map;
}

// Undirected edges in first-seen order.
inline std::vector<std::array<int, 2>> unique_edges(const TriMesh& mesh) {
    std::vector<std::array<int, 2>> edges;
    std::unordered_map<std::uint64_t, int> seen;
    for (const Facet& t : mesh.facets)
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            if (seen.emplace(undirected_key(a, b), 0).second) edges.push_back({std::min(a, b), std::max(a, b)});
        }
    return edges;
}

inline double max_edge_length(const TriMesh& mesh) {
    double m = 0.0;
    for (const auto& e : unique_edges(mesh)) m = std::max(m, (mesh.vertices[e[0]] - mesh.vertices[e[1]]).norm());
    return m;
}

// Length of the closed curve separating breast facets from base-cap facets.
inline double base_boundary_length(const TriMesh& mesh) {
    std::unordered_map<std::uint64_t, FacetRole> role_of;
    for (int f = 0; f < mesh.num_facets(); ++f)
        for (int k = 0; k < 3; ++k)
            role_of[edge_key(mesh.facets[f][k], mesh.facets[f][(k + 1) % 3])] = mesh.facet_role[f];
    double length = 0.0;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (mesh.facet_role[f] != FacetRole::breast) continue;
        for (int k = 0; k < 3; ++k) {
            const int a = mesh.facets[f][k], b = mesh.facets[f][(k + 1) % 3];
            auto it = role_of.find(edge_key(b, a));
            if (it != role_of.end() && it->second == FacetRole::base_cap)
                length += (mesh.vertices[a] - mesh.vertices[b]).norm();
        }
    }
    return length;
}

// ---------------------------------------------------------------------------
// Markers

inline Point3 marker_position(const TriMesh& mesh, const Marker& marker) {
    if (marker.facet < 0 || marker.facet >= mesh.num_facets()) fail_usage("marker facet index out of range");
    const Facet& t = mesh.facets[marker.facet];
    return marker.bary[0] * mesh.vertices[t[0]] + marker.bary[1] * mesh.vertices[t[1]] +
           marker.bary[2] * mesh.vertices[t[2]];
}

inline bool valid_bary(const std::array<double, 3>& b, double tol = 1e-12) {
    return b[0] >= -tol && b[1] >= -tol && b[2] >= -tol && std::abs(b[0] + b[1] + b[2] - 1.0) <= tol;
}

// Attach a marker at the surface point nearest to `p`, searching facets passing `filter`.
inline Marker attach_marker(const TriMesh& mesh, const Point3& p, std::string label,
                            RoleFilter filter = RoleFilter::breast) {
    Marker best;
    best.label = std::move(label);
    double best_d = std::numeric_limits<double>::infinity();
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (!selected(mesh.facet_role[f], filter)) continue;
        const auto b = closest_barycentric(p, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
        const Point3 q = b[0] * mesh.corner(f, 0) + b[1] * mesh.corner(f, 1) + b[2] * mesh.corner(f, 2);
        const double d = (q - p).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best.facet = f;
            best.bary = b;
        }
    }
    return best;
}

inline void translate(TriMesh& mesh, const Vec3& t) {
    for (Point3& p : mesh.vertices) p += t;
}

} // namespace bsim
