#pragma once

// Discrete mean curvature from the cotangent formula with barycentric
// vertex areas:
//
//     K_i = 1/(2 A_i) * sum_j (cot a_ij + cot b_ij) (x_i - x_j)
//     H_i = |K_i| / 2, signed positive where K_i agrees with the outward normal.

#include "bsim/mesh.hpp"

#include <vector>

namespace bsim {

struct MeanCurvature {
    double H = 0.0;
    Vec3 normal = Vec3::Zero(); // unit direction of K_i (zero where K_i vanishes)
};

// Adds each facet's cotangent-weighted contributions sum_j w_ij (x_i - x_j) into `out`.
inline void accumulate_cotan_laplacian(const TriMesh& mesh, int f, std::vector<Vec3>& out) {
    const Facet& t = mesh.facets[f];
    for (int k = 0; k < 3; ++k) {
        const int i = t[(k + 1) % 3], j = t[(k + 2) % 3];
        const double w = cot_at(mesh.vertices[t[k]], mesh.vertices[i], mesh.vertices[j]);
        const Vec3 d = mesh.vertices[i] - mesh.vertices[j];
        out[i] += w * d;
        out[j] -= w * d;
    }
}

inline std::vector<Vec3> cotan_laplacian(const TriMesh& mesh) {
    std::vector<Vec3> lap(mesh.vertices.size(), Vec3::Zero());
    for (int f = 0; f < mesh.num_facets(); ++f) accumulate_cotan_laplacian(mesh, f, lap);
    return lap;
}

inline MeanCurvature curvature_from(const Vec3& laplacian, double vertex_area, const Vec3& outward) {
    if (!(vertex_area > 0.0)) fail_numerical("degenerate star");
    const Vec3 K = laplacian / (2.0 * vertex_area);
    MeanCurvature mc;
    const double len = K.norm();
    mc.H = 0.5 * len;
    if (len > 0.0) {
        mc.normal = K / len;
        if (K.dot(outward) < 0.0) mc.H = -mc.H;
    }
    return mc;
}

inline MeanCurvature mean_curvature(const TriMesh& mesh, int vertex) {
    if (vertex < 0 || vertex >= mesh.num_vertices()) fail_usage("vertex index out of range");
    std::vector<Vec3> lap(mesh.vertices.size(), Vec3::Zero());
    double area = 0.0;
    Vec3 outward = Vec3::Zero();
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Facet& t = mesh.facets[f];
        if (t[0] != vertex && t[1] != vertex && t[2] != vertex) continue;
        accumulate_cotan_laplacian(mesh, f, lap);
        area += facet_area(mesh, f) / 3.0;
        outward += area_vector2(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
    }
    return curvature_from(lap[vertex], area, outward);
}

// Mean curvature at every vertex in one pass.
inline std::vector<MeanCurvature> mean_curvatures(const TriMesh& mesh) {
    const auto lap = cotan_laplacian(mesh);
    const auto area = barycentric_vertex_areas(mesh);
    const auto normals = vertex_normals(mesh);
    std::vector<MeanCurvature> out(mesh.vertices.size());
    for (int v = 0; v < mesh.num_vertices(); ++v) out[v] = curvature_from(lap[v], area[v], normals[v]);
    return out;
}

} // namespace bsim
