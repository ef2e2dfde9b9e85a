#pragma once

// Thorax model, initial SRG breast mesh and per-stage configurations.
//
// Body frame: Ox lateral, Oy cranial, Oz anterior. The thorax is an elliptic
// cylinder x^2/a^2 + z^2/b^2 = 1 around Oy.

#include "bsim/energy.hpp"
#include "bsim/maintenance.hpp"
#include "bsim/solver.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace bsim {

enum class StageId { SRG, STU, LAT };

inline constexpr std::array<StageId, 3> all_stages{StageId::SRG, StageId::STU, StageId::LAT};

inline std::string to_string(StageId id) {
    switch (id) {
    case StageId::SRG: return "SRG";
    case StageId::STU: return "STU";
    case StageId::LAT: return "LAT";
    }
    return "?";
}

inline std::optional<StageId> parse_stage(const std::string& token) {
    for (StageId id : all_stages)
        if (to_string(id) == token) return id;
    return std::nullopt;
}

// Measured quantities a stage target may refer to.
inline const std::vector<std::string>& target_quantities() {
    static const std::vector<std::string> names{"area",   "volume",  "base_perim", "h_left",
                                                "h_right", "v_bottom", "v_top"};
    return names;
}

using StageTargets = std::map<StageId, std::map<std::string, double>>;

struct Anthropometry {
    double thorax_perimeter = 0;
    double thorax_a = 0;
    double thorax_b = 0;
    double base_perimeter_supported = 0;
    double base_perimeter_unsupported = 0;
    double breast_mass = 0;
    double rest_volume = 0;
    Point3 base_center = Point3::Zero();
    StageTargets stage_targets;
};

inline double ellipse_perimeter(double a, double b) {
    // Ramanujan's first approximation.
    return std::numbers::pi * (3.0 * (a + b) - std::sqrt((3.0 * a + b) * (a + 3.0 * b)));
}

// Signed distance from (x, z) to the ellipse x^2/a^2 + z^2/b^2 = 1,
// positive outside.
inline double ellipse_signed_distance(double a, double b, double x, double z) {
    x = std::abs(x);
    z = std::abs(z);
    const double level = (x * x) / (a * a) + (z * z) / (b * b) - 1.0;
    // The closest point is (a^2 x / (t + a^2), b^2 z / (t + b^2)) where t solves
    // (a x / (t + a^2))^2 + (b z / (t + b^2))^2 = 1.
    auto f = [&](double t) {
        const double p = a * x / (t + a * a), q = b * z / (t + b * b);
        return p * p + q * q - 1.0;
    };
    const double m = std::min(a, b);
    double lo = -m * m, hi;
    if (x == 0 && z == 0) return -m;
    if (x == 0) lo = -b * b + b * z;
    if (z == 0) lo = -a * a + a * x;
    hi = std::max(a, b) * std::hypot(x, z);
    if (f(lo) < 0) lo = std::nextafter(lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (f(mid) > 0 ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    const double px = a * a * x / (t + a * a), pz = b * b * z / (t + b * b);
    const double d = std::hypot(x - px, z - pz);
    return level >= 0 ? d : -d;
}

struct Thorax {
    double a = 0;
    double b = 0;
    Point3 base_center = Point3::Zero();
    Vec3 normal = Vec3::UnitZ();  // outward surface normal at base_center
    Vec3 tangent = Vec3::UnitX(); // lateral tangent at base_center
    Obstacle wall;

    double perimeter() const { return ellipse_perimeter(a, b); }

    double signed_distance(const Point3& p) const { return ellipse_signed_distance(a, b, p.x(), p.z()); }

    // Distance s >= 0 such that p - s * normal lies on the cylinder, taking
    // the root nearest p.
    std::optional<double> depth_along_normal(const Point3& p) const {
        const double aa = a * a, bb = b * b;
        const double A = normal.x() * normal.x() / aa + normal.z() * normal.z() / bb;
        const double B = p.x() * normal.x() / aa + p.z() * normal.z() / bb;
        const double C = p.x() * p.x() / aa + p.z() * p.z() / bb - 1.0;
        const double disc = B * B - A * C;
        if (disc < 0 || B <= 0) return std::nullopt;
        return C / (B + std::sqrt(disc));
    }
};

inline void check(const Anthropometry& an) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v)) fail_usage(std::string(name) + " must be > 0");
    };
    positive(an.thorax_perimeter, "thorax_perimeter");
    positive(an.thorax_a, "thorax_semi_axes[0]");
    positive(an.thorax_b, "thorax_semi_axes[1]");
    positive(an.base_perimeter_supported, "base_perimeter_supported");
    positive(an.base_perimeter_unsupported, "base_perimeter_unsupported");
    positive(an.breast_mass, "breast_mass");
    positive(an.rest_volume, "rest_volume");
    if (!is_finite(an.base_center)) fail_usage("base_center must be finite");
    if (an.base_perimeter_supported > an.base_perimeter_unsupported)
        fail_usage("perimeter ordering: base_perimeter_supported > base_perimeter_unsupported");
    for (const auto& [stage, targets] : an.stage_targets)
        for (const auto& [name, value] : targets) {
            if (std::find(target_quantities().begin(), target_quantities().end(), name) == target_quantities().end())
                fail_usage("unknown target quantity " + to_string(stage) + "." + name);
            if (!(value > 0) || !std::isfinite(value)) fail_usage("target " + to_string(stage) + "." + name + " must be > 0");
        }
}

inline Thorax build_thorax(const Anthropometry& an) {
    check(an);
    Thorax th;
    th.a = an.thorax_a;
    th.b = an.thorax_b;
    const double p = th.perimeter();
    if (std::abs(p - an.thorax_perimeter) > 0.02 * an.thorax_perimeter)
        fail_usage("thorax inconsistent: semi-axes give perimeter " + std::to_string(p) + " cm, expected " +
                   std::to_string(an.thorax_perimeter) + " cm");
    const Point3& c = an.base_center;
    const double level = c.x() * c.x() / (th.a * th.a) + c.z() * c.z() / (th.b * th.b);
    if (std::abs(std::sqrt(level) - 1.0) > 0.01) fail_usage("base_center is not on the thorax surface");
    if (c.z() <= 0) fail_usage("base_center must lie on the anterior thorax (z > 0)");
    // Radial projection onto the surface.
    const double s = 1.0 / std::sqrt(level);
    th.base_center = Point3(c.x() * s, c.y(), c.z() * s);
    th.normal = Vec3(th.base_center.x() / (th.a * th.a), 0.0, th.base_center.z() / (th.b * th.b)).normalized();
    th.tangent = Vec3(th.normal.z(), 0.0, -th.normal.x());
    th.wall = Obstacle{Plane(th.base_center, th.normal), "wall"};
    return th;
}

struct InitialBreast {
    TriMesh mesh;
    // Wall plane parallel to the tangent plane at base_center, moved back
    // to the deepest base vertex so the attached geometry is admissible.
    Obstacle wall;
    double apex_height = 0; // apex distance from the tangent plane
    double base_radius = 0; // radius of the base disk before wrapping
    int rings = 0;
};

namespace detail {

// Hexagonal lattice disk of `rings` rings mapped onto the unit disk:
// ring k becomes the circle of radius k/rings, with its 6k nodes evenly
// spaced. The map commutes with the mirror u -> -u exactly.
struct LatticeDisk {
    std::vector<std::array<double, 2>> uv;
    std::vector<int> ring;
    std::vector<std::array<int, 3>> triangles; // counter-clockwise in (u, v)
};

inline LatticeDisk lattice_disk(int rings) {
    LatticeDisk disk;
    const int n = rings;
    auto hex_dist = [](int q, int r) { return std::max({std::abs(q), std::abs(r), std::abs(q + r)}); };
    std::map<std::pair<int, int>, int> index;
    for (int k = 0; k <= n; ++k)
        for (int r = -n; r <= n; ++r)
            for (int q = -n; q <= n; ++q)
                if (hex_dist(q, r) == k) {
                    index[{q, r}] = static_cast<int>(disk.ring.size());
                    disk.ring.push_back(k);
                    disk.uv.push_back({0.0, 0.0});
                }
    const double s3 = std::sqrt(3.0);
    for (const auto& [qr, id] : index) {
        const auto [q, r] = qr;
        const int k = disk.ring[id];
        if (k == 0) continue;
        const int mq = -q - r; // mirror partner (mq, r)
        if (mq < q) continue;  // filled from the partner
        const double x = q + 0.5 * r, y = 0.5 * s3 * r;
        double theta = std::atan2(y, x);
        if (theta < 0) theta += 2.0 * std::numbers::pi;
        int side = static_cast<int>(std::floor(theta / (std::numbers::pi / 3.0) + 1e-12));
        side = std::min(side, 5);
        const double ca = side * std::numbers::pi / 3.0;
        const Eigen::Vector2d corner(k * std::cos(ca), k * std::sin(ca));
        const double t = (Eigen::Vector2d(x, y) - corner).norm() / k;
        const double phi = (side + t) * std::numbers::pi / 3.0;
        const double rad = static_cast<double>(k) / n;
        double u = rad * std::cos(phi), v = rad * std::sin(phi);
        if (mq == q) u = 0.0;
        disk.uv[id] = {u, v};
        disk.uv[index.at({mq, r})] = {-u, v};
    }
    for (int r = -n; r <= n; ++r)
        for (int q = -n; q <= n; ++q) {
            auto id = [&](int qq, int rr) -> int {
                auto it = index.find({qq, rr});
                return it == index.end() ? -1 : it->second;
            };
            const int a = id(q, r), b = id(q + 1, r), c = id(q, r + 1), d = id(q + 1, r + 1);
            if (a >= 0 && b >= 0 && c >= 0) disk.triangles.push_back({a, b, c});
            if (b >= 0 && d >= 0 && c >= 0) disk.triangles.push_back({b, d, c});
        }
    return disk;
}

// Dome plus base cap for a base disk of radius rho and cap height h.
inline TriMesh dome_mesh(const Thorax& th, const LatticeDisk& disk, int rings, double rho, double h) {
    const double rs = (rho * rho + h * h) / (2.0 * h);
    const double alpha_max = std::atan2(rho, rs - h);
    const Point3 center = th.base_center + (h - rs) * th.normal;
    const Vec3 ey = Vec3::UnitY();
    // Shear along the normal by the thorax depth below the lateral offset,
    // held constant beyond the base radius where a tall dome overhangs.
    auto wrap = [&](Point3 p) {
        const double x = std::clamp(th.tangent.dot(p - th.base_center), -rho, rho);
        const auto s = th.depth_along_normal(th.base_center + x * th.tangent);
        if (!s) fail_usage("base/volume inconsistent: base curve does not fit on the thorax");
        return Point3(p - *s * th.normal);
    };
    TriMesh mesh;
    const int nd = static_cast<int>(disk.uv.size());
    for (int i = 0; i < nd; ++i) {
        const auto [u, v] = disk.uv[i];
        const double r = std::hypot(u, v);
        Point3 p;
        if (disk.ring[i] == rings) {
            p = th.base_center + rho * (u * th.tangent + v * ey);
        } else if (r == 0) {
            p = th.base_center + h * th.normal;
        } else {
            const double alpha = r * alpha_max;
            p = center + rs * (std::sin(alpha) / r * (u * th.tangent + v * ey) + std::cos(alpha) * th.normal);
        }
        mesh.add_vertex(wrap(p), disk.ring[i] == rings ? VertexRole::fixed : VertexRole::free);
    }
    for (const auto& t : disk.triangles) mesh.add_facet(t[0], t[1], t[2]);
    std::vector<int> cap(nd);
    for (int i = 0; i < nd; ++i) {
        if (disk.ring[i] == rings) {
            cap[i] = i;
            continue;
        }
        const auto [u, v] = disk.uv[i];
        cap[i] = mesh.add_vertex(wrap(th.base_center + rho * (u * th.tangent + v * ey)), VertexRole::fixed);
    }
    for (const auto& t : disk.triangles) mesh.add_facet(cap[t[0]], cap[t[2]], cap[t[1]], FacetRole::base_cap);
    return mesh;
}

template <class F>
double bisect_increasing(F f, double target, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Spherical-cap dome over a base curve wrapped onto the thorax, closed by a
// fixed base cap. The base polygon length matches base_perimeter_supported
// and the enclosed volume matches rest_volume; the ring count grows until
// every edge is at most edge_target. The apex carries the "nipple" marker.
inline InitialBreast build_initial_breast(const Anthropometry& an, const Thorax& th, double edge_target) {
    if (!(edge_target > 0)) fail_usage("edge_target must be > 0");
    const double perimeter = an.base_perimeter_supported;
    int rings = std::max(2, static_cast<int>(std::ceil(perimeter / (6.0 * edge_target))));
    for (;; ++rings) {
        if (rings > 200) fail_usage("edge_target too small");
        const auto disk = detail::lattice_disk(rings);
        auto base_length = [&](double rho) {
            return base_boundary_length(detail::dome_mesh(th, disk, rings, rho, rho));
        };
        double hi = perimeter / (2.0 * std::numbers::pi);
        while (base_length(hi) < perimeter) hi *= 1.5;
        const double rho = detail::bisect_increasing(base_length, perimeter, 0.0, hi);

        auto volume = [&](double h) { return enclosed_volume(detail::dome_mesh(th, disk, rings, rho, h)); };
        const double h_max = 4.0 * rho;
        if (volume(h_max) < an.rest_volume) fail_usage("base/volume inconsistent: rest volume needs a cap taller than 4 base radii");
        if (volume(1e-6 * rho) > an.rest_volume) fail_usage("base/volume inconsistent: rest volume below the flat cap");
        const double h = detail::bisect_increasing(volume, an.rest_volume, 1e-6 * rho, h_max);

        TriMesh mesh = detail::dome_mesh(th, disk, rings, rho, h);
        if (max_edge_length(mesh) > edge_target) continue;

        InitialBreast out;
        for (int f = 0; f < mesh.num_facets(); ++f) {
            const Facet& t = mesh.facets[f];
            for (int k = 0; k < 3; ++k)
                if (t[k] == 0) {
                    Marker m{f, {0.0, 0.0, 0.0}, "nipple"};
                    m.bary[k] = 1.0;
                    mesh.markers.push_back(m);
                    break;
                }
            if (!mesh.markers.empty()) break;
        }
        double deepest = 0;
        for (int v = 0; v < mesh.num_vertices(); ++v)
            deepest = std::min(deepest, th.wall.gap(mesh.vertices[v]));
        out.wall = Obstacle{Plane(th.base_center + deepest * th.normal, th.normal), "wall"};
        out.apex_height = th.wall.gap(mesh.vertices[0]);
        out.base_radius = rho;
        out.rings = rings;
        out.mesh = std::move(mesh);
        return out;
    }
}

struct StageOverride {
    std::optional<Vec3> g_dir;
    std::optional<double> support;
};

struct StageOptions {
    double support_srg = 0.2;
    std::optional<double> d_table; // defaults to the apex height
    std::map<StageId, StageOverride> overrides;
};

inline constexpr std::array<double, 2> table_dims{18.0, 24.0};

struct StageConfig {
    StageId id = StageId::SRG;
    Vec3 g_dir = -Vec3::UnitZ();
    double support = 1.0;
    std::vector<Obstacle> obstacles;
    std::map<std::string, double> targets;
    std::optional<int> table; // index into obstacles
    std::optional<std::array<double, 2>> table_dims;
};

inline StageConfig stage_config(StageId id, const Anthropometry& an, const Thorax& th, const InitialBreast& breast,
                                const StageOptions& opt = {}) {
    StageConfig cfg;
    cfg.id = id;
    cfg.obstacles.push_back(breast.wall);
    switch (id) {
    case StageId::SRG:
        cfg.g_dir = Vec3(0, 0, -1);
        cfg.support = opt.support_srg;
        break;
    case StageId::STU:
        cfg.g_dir = Vec3(0, -1, 0);
        cfg.support = 1.0;
        break;
    case StageId::LAT: {
        cfg.g_dir = Vec3(0, 0, 1);
        cfg.support = 1.0;
        const double d = opt.d_table.value_or(breast.apex_height);
        if (!(d > 0)) fail_usage("d_table must be > 0");
        cfg.table = static_cast<int>(cfg.obstacles.size());
        cfg.obstacles.push_back(Obstacle{Plane(th.base_center + d * th.normal, -th.normal), "table"});
        cfg.table_dims = table_dims;
        break;
    }
    }
    if (auto it = opt.overrides.find(id); it != opt.overrides.end()) {
        if (it->second.g_dir) cfg.g_dir = *it->second.g_dir;
        if (it->second.support) cfg.support = *it->second.support;
    }
    if (!is_finite(cfg.g_dir) || std::abs(cfg.g_dir.norm() - 1.0) > 1e-12)
        fail_usage(to_string(id) + " g_dir must be a unit vector");
    if (!(cfg.support >= 0 && cfg.support <= 1)) fail_usage(to_string(id) + " support must lie in [0, 1]");
    if (auto it = an.stage_targets.find(id); it != an.stage_targets.end()) cfg.targets = it->second;
    return cfg;
}

} // namespace bsim
