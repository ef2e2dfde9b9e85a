#pragma once

// Plane sections of a triangle surface: one segment per crossed facet,
// chained through shared edges into ordered polylines.

#include "bsim/mesh.hpp"

#include <unordered_map>
#include <vector>

namespace bsim {

struct Polyline {
    std::vector<Point3> points;
    // Undirected edge key of the mesh edge each point lies on.
    std::vector<std::uint64_t> edges;
    bool closed = false;

    double length() const {
        double sum = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i) sum += (points[i] - points[i - 1]).norm();
        if (closed && points.size() > 1) sum += (points.front() - points.back()).norm();
        return sum;
    }
};

// Intersects the facets passing `filter` with `plane`. When any vertex lies
// exactly on the plane the offset is nudged by +1e-9 cm so every crossing
// is a proper edge crossing.
inline std::vector<Polyline> plane_section(const TriMesh& mesh, Plane plane, RoleFilter filter = RoleFilter::all) {
    std::vector<double> dist(mesh.vertices.size());
    auto measure = [&] {
        bool touches = false;
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            dist[v] = plane.signed_distance(mesh.vertices[v]);
            touches |= dist[v] == 0.0;
        }
        return touches;
    };
    if (measure()) {
        plane.point += 1e-9 * plane.normal;
        measure();
    }

    auto crossing = [&](int a, int b) {
        const double t = dist[a] / (dist[a] - dist[b]);
        return Point3(mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a]));
    };

    // Segment per crossed facet, oriented so the surface lies consistently on one side.
    struct Segment {
        std::uint64_t from, to;
        Point3 p, q;
    };
    std::vector<Segment> segs;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (!selected(mesh.facet_role[f], filter)) continue;
        const Facet& t = mesh.facets[f];
        int ends[2][2];
        int n = 0;
        for (int k = 0; k < 3 && n < 2; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            if ((dist[a] < 0) != (dist[b] < 0)) {
                ends[n][0] = a;
                ends[n][1] = b;
                ++n;
            }
        }
        if (n != 2) continue;
        // Edge that goes from below to above is the entry point.
        int in = dist[ends[0][0]] < 0 ? 0 : 1;
        const int out = 1 - in;
        segs.push_back({undirected_key(ends[in][0], ends[in][1]), undirected_key(ends[out][0], ends[out][1]),
                        crossing(ends[in][0], ends[in][1]), crossing(ends[out][0], ends[out][1])});
    }

    std::unordered_map<std::uint64_t, int> starting_at, ending_at;
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        starting_at[segs[i].from] = i;
        ending_at[segs[i].to] = i;
    }
    std::vector<char> used(segs.size(), 0);
    std::vector<Polyline> out;
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        if (used[s]) continue;
        // Walk backwards to the start of an open chain (or around a loop back to s).
        int first = s;
        for (;;) {
            auto it = ending_at.find(segs[first].from);
            if (it == ending_at.end() || used[it->second] || it->second == s) break;
            first = it->second;
        }
        Polyline line;
        line.points.push_back(segs[first].p);
        line.edges.push_back(segs[first].from);
        int cur = first;
        for (;;) {
            used[cur] = 1;
            auto it = starting_at.find(segs[cur].to);
            if (it != starting_at.end() && it->second == first) {
                line.closed = true;
                break;
            }
            line.points.push_back(segs[cur].q);
            line.edges.push_back(segs[cur].to);
            if (it == starting_at.end() || used[it->second]) break;
            cur = it->second;
        }
        out.push_back(std::move(line));
    }
    return out;
}

} // namespace bsim
