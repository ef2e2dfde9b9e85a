#pragma once

// Reference closed meshes used by tests, oracles and the `check` tool.

#include "bsim/maintenance.hpp"
#include "bsim/mesh.hpp"

#include <cmath>
#include <unordered_map>

namespace bsim {

// Vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1); outward winding.
inline TriMesh unit_tetrahedron() {
    TriMesh m;
    m.add_vertex({0, 0, 0});
    m.add_vertex({1, 0, 0});
    m.add_vertex({0, 1, 0});
    m.add_vertex({0, 0, 1});
    m.add_facet(0, 2, 1);
    m.add_facet(0, 1, 3);
    m.add_facet(0, 3, 2);
    m.add_facet(1, 2, 3);
    return m;
}

// [0,1]^3, vertex index = x + 2y + 4z.
inline TriMesh unit_cube() {
    TriMesh m;
    for (int i = 0; i < 8; ++i) m.add_vertex({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
    const int faces[12][3] = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                              {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
    for (const auto& f : faces) m.add_facet(f[0], f[1], f[2]);
    return m;
}

// Subdivided icosahedron with vertices projected onto the sphere of `radius` about `center`.
inline TriMesh icosphere(int level, double radius = 1.0, const Point3& center = Point3::Zero()) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Point3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Point3& p : v) p.normalize();
    std::vector<Facet> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                            {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4}, {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                            {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::unordered_map<std::uint64_t, int> mid;
        auto midpoint = [&](int a, int b) {
            auto [it, inserted] = mid.emplace(undirected_key(a, b), static_cast<int>(v.size()));
            if (inserted) v.push_back((v[a] + v[b]).normalized());
            return it->second;
        };
        std::vector<Facet> next;
        next.reserve(f.size() * 4);
        for (const Facet& tri : f) {
            const int ab = midpoint(tri[0], tri[1]), bc = midpoint(tri[1], tri[2]), ca = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    TriMesh m;
    for (const Point3& p : v) m.add_vertex(center + radius * p);
    for (const Facet& tri : f) m.add_facet(tri[0], tri[1], tri[2]);
    return m;
}

// Icosphere relaxed towards equal facet sizes: repeated vertex averaging
// with reprojection onto the sphere.
inline TriMesh uniform_icosphere(int level, double radius = 1.0, int sweeps = 50) {
    TriMesh m = icosphere(level);
    for (int i = 0; i < sweeps; ++i) {
        m = vertex_average(std::move(m));
        for (Point3& p : m.vertices) p.normalize();
    }
    for (Point3& p : m.vertices) p *= radius;
    return m;
}

} // namespace bsim
