#include "bsim/maintenance.hpp"
#include "bsim/primitives.hpp"
#include "test_meshes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace bsim {
namespace {

TEST(Refine, TetrahedronSplitsEveryEdgeAndKeepsVolume) {
    const TriMesh m = unit_tetrahedron();
    const TriMesh r = refine(m, 0.8);
    EXPECT_TRUE(is_valid(r));
    EXPECT_LE(max_edge_length(r), 0.8);
    EXPECT_GE(r.num_vertices(), m.num_vertices() + 6);
    EXPECT_NEAR(enclosed_volume(r), 1.0 / 6.0, 1e-14);
}

TEST(Refine, SatisfiedMeshUnchanged) {
    const TriMesh m = icosphere(2);
    const TriMesh r = refine(m, 10.0);
    EXPECT_EQ(r.num_vertices(), m.num_vertices());
    EXPECT_EQ(r.num_facets(), m.num_facets());
    EXPECT_EQ(r.vertices, m.vertices);
}

TEST(Refine, IcosphereBoundAndAreaPreserved) {
    const TriMesh m = icosphere(1);
    const TriMesh r = refine(m, 0.3);
    EXPECT_TRUE(is_valid(r));
    EXPECT_LE(max_edge_length(r), 0.3);
    EXPECT_NEAR(total_area(r), total_area(m), 1e-12 * total_area(m));
    EXPECT_NEAR(enclosed_volume(r), enclosed_volume(m), 1e-12 * enclosed_volume(m));
}

TEST(Refine, Idempotent) {
    const TriMesh r1 = refine(icosphere(1, 2.0), 0.5);
    const TriMesh r2 = refine(r1, 0.5);
    EXPECT_EQ(r1.num_vertices(), r2.num_vertices());
    EXPECT_EQ(r1.num_facets(), r2.num_facets());
}

TEST(Refine, FixedEdgeMidpointsAreFixed) {
    TriMesh m = unit_cube();
    for (int v : {0, 1, 2, 3}) m.vertex_role[v] = VertexRole::fixed;
    m.facet_role[0] = m.facet_role[1] = FacetRole::base_cap;
    const TriMesh r = refine(m, 0.6);
    EXPECT_TRUE(is_valid(r));
    for (int v = 8; v < r.num_vertices(); ++v) {
        const bool on_bottom = std::abs(r.vertices[v].z()) < 1e-15;
        EXPECT_EQ(r.is_fixed(v), on_bottom) << v;
    }
}

TEST(Refine, MarkersKeepTheirPositionExactly) {
    TriMesh m = icosphere(1);
    for (int f = 0; f < m.num_facets(); f += 7) m.markers.push_back({f, {0.2, 0.3, 0.5}, "m" + std::to_string(f)});
    m.markers.push_back({4, {0.7, 0.1, 0.2}, "a"});
    m.markers.push_back({9, {0.0, 0.0, 1.0}, "b"});
    std::vector<Point3> before;
    for (const auto& mk : m.markers) before.push_back(marker_position(m, mk));
    const TriMesh r = refine(m, 0.25);
    ASSERT_EQ(r.markers.size(), m.markers.size());
    for (std::size_t i = 0; i < r.markers.size(); ++i) {
        EXPECT_TRUE(valid_bary(r.markers[i].bary));
        EXPECT_LE((marker_position(r, r.markers[i]) - before[i]).norm(), 1e-12);
        EXPECT_EQ(r.markers[i].label, m.markers[i].label);
    }
}

TEST(Equiangulate, FlipsLongDiagonalOfRhombus) {
    const TriMesh r = equiangulate(testing::rhombus_patch());
    const auto edges = unique_edges(r);
    const bool has_short = std::any_of(edges.begin(), edges.end(), [](const auto& e) { return e[0] == 2 && e[1] == 3; });
    const bool has_long = std::any_of(edges.begin(), edges.end(), [](const auto& e) { return e[0] == 0 && e[1] == 1; });
    EXPECT_TRUE(has_short);
    EXPECT_FALSE(has_long);
    EXPECT_NEAR(total_area(r), 1.5, 1e-14);
}

TEST(Equiangulate, DelaunayPatchUnchanged) {
    const TriMesh m = testing::boxed_flat_patch(5);
    const TriMesh r = equiangulate(m);
    EXPECT_EQ(r.facets, m.facets);
}

TEST(Equiangulate, CoplanarFlipsPreserveVolume) {
    TriMesh m = testing::boxed_flat_patch(6);
    // Shear the interior grid in-plane so many right angles become obtuse.
    for (int v = 0; v < m.num_vertices(); ++v)
        if (m.is_free(v)) m.vertices[v].x() += 0.45 * (m.vertices[v].y() - 3.0) * 0.3;
    const double v0 = enclosed_volume(m);
    const TriMesh r = equiangulate(m);
    EXPECT_NE(r.facets, m.facets);
    EXPECT_TRUE(is_valid(r));
    EXPECT_NEAR(enclosed_volume(r), v0, 1e-12 * std::abs(v0));
}

TEST(Equiangulate, NoInteriorEdgeLeftNonDelaunay) {
    const TriMesh r = equiangulate(testing::jittered(icosphere(2), 0.04, 9));
    EXPECT_TRUE(is_valid(r));
    const auto hm = halfedge_map(r);
    for (const auto& e : unique_edges(r)) {
        const int f1 = hm.at(edge_key(e[0], e[1])), f2 = hm.at(edge_key(e[1], e[0]));
        auto opposite = [&](int f) {
            for (int v : r.facets[f])
                if (v != e[0] && v != e[1]) return v;
            return -1;
        };
        const int c = opposite(f1), d = opposite(f2);
        const double sum = angle_at(r.vertices[c], r.vertices[e[0]], r.vertices[e[1]]) +
                           angle_at(r.vertices[d], r.vertices[e[0]], r.vertices[e[1]]);
        const bool blocked = hm.count(edge_key(c, d)) > 0;
        if (!blocked) EXPECT_LE(sum, std::numbers::pi + 1e-9);
    }
}

TEST(Equiangulate, MarkersFollowFlips) {
    TriMesh m = testing::rhombus_patch();
    m.markers.push_back({0, {0.3, 0.3, 0.4}, "n"});
    m.markers.push_back({1, {0.1, 0.6, 0.3}, "k"});
    std::vector<Point3> before;
    for (const auto& mk : m.markers) before.push_back(marker_position(m, mk));
    const TriMesh r = equiangulate(m);
    for (std::size_t i = 0; i < r.markers.size(); ++i) {
        EXPECT_TRUE(valid_bary(r.markers[i].bary));
        EXPECT_LE((marker_position(r, r.markers[i]) - before[i]).norm(), 1e-12);
    }
}

TEST(Equiangulate, FixedEdgesNeverFlipped) {
    TriMesh m = testing::rhombus_patch();
    m.vertex_role[0] = VertexRole::fixed;
    EXPECT_EQ(equiangulate(m).facets, m.facets);
}

TEST(VertexAverage, UniformSphereBarelyMoves) {
    const TriMesh m = uniform_icosphere(4);
    const TriMesh r = vertex_average(m);
    double worst = 0;
    for (int v = 0; v < m.num_vertices(); ++v) worst = std::max(worst, (r.vertices[v] - m.vertices[v]).norm());
    EXPECT_LE(worst, 1e-3);
    EXPECT_NEAR(enclosed_volume(r), enclosed_volume(m), 1e-9 * enclosed_volume(m));
}

TEST(VertexAverage, FixedPointUnchanged) {
    const TriMesh m = testing::boxed_flat_patch(5);
    const TriMesh r = vertex_average(m);
    for (int v = 0; v < m.num_vertices(); ++v) EXPECT_LE((r.vertices[v] - m.vertices[v]).norm(), 1e-12);
}

TEST(VertexAverage, FixedVerticesBitwiseUnchanged) {
    TriMesh m = testing::jittered(testing::boxed_flat_patch(5), 0.1, 2);
    const TriMesh r = vertex_average(m);
    for (int v = 0; v < m.num_vertices(); ++v)
        if (m.is_fixed(v)) EXPECT_EQ(r.vertices[v], m.vertices[v]);
    EXPECT_NEAR(enclosed_volume(r), enclosed_volume(m), 1e-9 * enclosed_volume(m));
}

TEST(RestoreVolume, DoublesSphereVolume) {
    TriMesh m = icosphere(3);
    const double v0 = enclosed_volume(m);
    restore_volume(m, 2 * v0, 1e-12);
    EXPECT_NEAR(enclosed_volume(m), 2 * v0, 1e-12 * 2 * v0);
}

} // namespace
} // namespace bsim
