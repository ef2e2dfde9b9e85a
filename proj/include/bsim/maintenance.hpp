#pragma once

// Mesh upkeep: midpoint refinement, equiangulation (edge flips) and
// volume-preserving vertex averaging. Markers ride along with every change.

#include "bsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bsim {

// Moves free vertices along their unit area-weighted normals by a common
// offset until the enclosed volume equals `target` to `rel_tol`. Returns the offset.
inline double restore_volume(TriMesh& mesh, double target, double rel_tol = 1e-9, int max_iters = 50) {
    if (!(target > 0)) fail_usage("volume target must be positive");
    if (std::abs(enclosed_volume(mesh) - target) <= rel_tol * target) return 0.0;
    const auto normals = vertex_normals(mesh);
    const std::vector<Point3> start = mesh.vertices;
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        for (int v = 0; v < mesh.num_vertices(); ++v)
            if (mesh.is_free(v)) mesh.vertices[v] = start[v] + lambda * normals[v];
        const double vol = enclosed_volume(mesh);
        if (std::abs(vol - target) <= rel_tol * target) return lambda;
        const auto grad = volume_gradient(mesh);
        double slope = 0.0;
        for (int v = 0; v < mesh.num_vertices(); ++v)
            if (mesh.is_free(v)) slope += grad[v].dot(normals[v]);
        if (!(std::abs(slope) > 0)) break;
        lambda -= (vol - target) / slope;
    }
    mesh.vertices = start;
    fail_numerical("volume projection stall");
}

namespace detail {

inline int rotation_of(const Facet& t, int a, int b) {
    for (int k = 0; k < 3; ++k)
        if (t[k] == a && t[(k + 1) % 3] == b) return k;
    return -1;
}

inline void rotate_marker(Marker& marker, int k) {
    const auto b = marker.bary;
    marker.bary = {b[k], b[(k + 1) % 3], b[(k + 2) % 3]};
}

} // namespace detail

// Bisects every edge longer than `max_edge` until none remain. Midpoint
// splits leave the piecewise-linear surface unchanged. Long edges are split
// longest first; a midpoint is fixed only when both edge ends are fixed.
inline TriMesh refine(TriMesh mesh, double max_edge) {
    if (!(max_edge > 0)) fail_usage("max_edge must be positive");
    auto hm = halfedge_map(mesh);

    // Splits facet f = (a, b, c), stored in any rotation, into (a, m, c) in place and (m, b, c) appended.
    auto split_facet = [&](int f, int a, int b, int m) {
        const int k = detail::rotation_of(mesh.facets[f], a, b);
        const int c = mesh.facets[f][(k + 2) % 3];
        for (Marker& mk : mesh.markers)
            if (mk.facet == f) detail::rotate_marker(mk, k);
        mesh.facets[f] = {a, m, c};
        const int g = mesh.add_facet(m, b, c, mesh.facet_role[f]);
        for (Marker& mk : mesh.markers) {
            if (mk.facet != f) continue;
            const auto [ba, bb, bc] = mk.bary;
            if (ba >= bb) {
                mk.bary = {ba - bb, 2 * bb, bc};
            } else {
                mk.facet = g;
                mk.bary = {2 * ba, bb - ba, bc};
            }
        }
        hm.erase(edge_key(a, b));
        hm[edge_key(a, m)] = f;
        hm[edge_key(m, c)] = f;
        hm[edge_key(c, a)] = f;
        hm[edge_key(m, b)] = g;
        hm[edge_key(b, c)] = g;
        hm[edge_key(c, m)] = g;
    };

    for (;;) {
        std::vector<std::pair<double, std::array<int, 2>>> longs;
        for (const auto& e : unique_edges(mesh)) {
            const double len = (mesh.vertices[e[0]] - mesh.vertices[e[1]]).norm();
            if (len > max_edge) longs.push_back({len, e});
        }
        if (longs.empty()) break;
        std::stable_sort(longs.begin(), longs.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
        for (const auto& [len, e] : longs) {
            const int a = e[0], b = e[1];
            const auto fab = hm.find(edge_key(a, b));
            const auto fba = hm.find(edge_key(b, a));
            const int f1 = fab == hm.end() ? -1 : fab->second;
            const int f2 = fba == hm.end() ? -1 : fba->second;
            const VertexRole role =
                (mesh.is_fixed(a) && mesh.is_fixed(b)) ? VertexRole::fixed : VertexRole::free;
            const int m = mesh.add_vertex(0.5 * (mesh.vertices[a] + mesh.vertices[b]), role);
            if (f1 >= 0) split_facet(f1, a, b, m);
            if (f2 >= 0) split_facet(f2, b, a, m);
        }
    }
    return mesh;
}

// Flips interior free-free edges between breast facets whose opposite
// angles sum to more than pi, until no such edge remains.
inline TriMesh equiangulate(TriMesh mesh) {
    constexpr double pi = std::numbers::pi;
    auto hm = halfedge_map(mesh);
    const auto edges0 = unique_edges(mesh);
    const long long guard = 50LL * static_cast<long long>(std::max<std::size_t>(edges0.size(), 1));
    long long flips = 0;

    auto third = [&](int f, int a, int b) {
        const int k = detail::rotation_of(mesh.facets[f], a, b);
        return mesh.facets[f][(k + 2) % 3];
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& e : unique_edges(mesh)) {
            const int a = e[0], b = e[1];
            if (!mesh.is_free(a) || !mesh.is_free(b)) continue;
            const auto fab = hm.find(edge_key(a, b));
            const auto fba = hm.find(edge_key(b, a));
            if (fab == hm.end() || fba == hm.end()) continue;
            const int f1 = fab->second, f2 = fba->second;
            if (mesh.facet_role[f1] != FacetRole::breast || mesh.facet_role[f2] != FacetRole::breast) continue;
            const int c = third(f1, a, b), d = third(f2, b, a);
            if (c == d || hm.count(edge_key(c, d)) || hm.count(edge_key(d, c))) continue;
            const Point3 &pa = mesh.vertices[a], &pb = mesh.vertices[b], &pc = mesh.vertices[c],
                         &pd = mesh.vertices[d];
            if (angle_at(pc, pa, pb) + angle_at(pd, pb, pa) <= pi + 1e-9) continue;
            if (triangle_area(pa, pd, pc) < 1e-12 || triangle_area(pb, pc, pd) < 1e-12) continue;

            std::vector<std::pair<int, Point3>> moved;
            for (std::size_t i = 0; i < mesh.markers.size(); ++i)
                if (mesh.markers[i].facet == f1 || mesh.markers[i].facet == f2)
                    moved.push_back({static_cast<int>(i), marker_position(mesh, mesh.markers[i])});

            mesh.facets[f1] = {a, d, c};
            mesh.facets[f2] = {b, c, d};
            hm.erase(edge_key(a, b));
            hm.erase(edge_key(b, a));
            hm[edge_key(a, d)] = f1;
            hm[edge_key(d, c)] = f1;
            hm[edge_key(c, a)] = f1;
            hm[edge_key(b, c)] = f2;
            hm[edge_key(c, d)] = f2;
            hm[edge_key(d, b)] = f2;

            for (const auto& [i, p] : moved) {
                auto b1 = barycentric(p, pa, pd, pc);
                auto b2 = barycentric(p, pb, pc, pd);
                const double m1 = std::min({b1[0], b1[1], b1[2]});
                const double m2 = std::min({b2[0], b2[1], b2[2]});
                Marker& mk = mesh.markers[i];
                auto& chosen = m1 >= m2 ? b1 : b2;
                mk.facet = m1 >= m2 ? f1 : f2;
                if (std::min({chosen[0], chosen[1], chosen[2]}) < 0) {
                    for (double& x : chosen) x = std::max(x, 0.0);
                    const double s = chosen[0] + chosen[1] + chosen[2];
                    for (double& x : chosen) x /= s;
                }
                mk.bary = chosen;
            }
            changed = true;
            if (++flips > guard) fail_numerical("equiangulation cycle");
        }
    }
    return mesh;
}

// Moves each free vertex to the area-weighted mean of its incident facet
// centroids, then restores the enclosed volume along vertex normals.
inline TriMesh vertex_average(TriMesh mesh) {
    const double volume = enclosed_volume(mesh);
    const auto star = vertex_facets(mesh);
    std::vector<Point3> next = mesh.vertices;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_free(v) || star[v].empty()) continue;
        Point3 sum = Point3::Zero();
        double weight = 0.0;
        for (int f : star[v]) {
            const double a = facet_area(mesh, f);
            sum += a * (mesh.corner(f, 0) + mesh.corner(f, 1) + mesh.corner(f, 2)) / 3.0;
            weight += a;
        }
        if (weight > 0) next[v] = sum / weight;
    }
    mesh.vertices = std::move(next);
    if (volume > 0) restore_volume(mesh, volume, 1e-10);
    return mesh;
}

} // namespace bsim
