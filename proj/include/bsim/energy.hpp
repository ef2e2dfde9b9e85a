#pragma once

// Energy functionals minimized by the solver, with exact gradients:
//
//   tension     sigma * area(breast facets)
//   gravity     support * rho * g * integral of height over the enclosed volume
//   willmore    w_b * sum over free vertices of A_i H_i^2
//   volume      K/2 * (V - V0)^2 / V0
//
// Heights are measured against gravity from `datum`. Sums are index-ordered.

#include "bsim/curvature.hpp"
#include "bsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bsim {

inline constexpr double standard_gravity = 980.665; // cm/s^2

struct EnergySpec {
    double sigma = 0.0;          // erg/cm^2
    double rho = 1.0;            // g/cm^3
    double g = standard_gravity; // cm/s^2
    Vec3 g_dir = -Vec3::UnitZ(); // direction gravity pulls
    double w_b = 0.0;            // erg
    double K = 0.0;              // erg/cm^3
    double V0 = 1.0;             // cm^3
    double support = 1.0;        // fraction of gravity acting
    Point3 datum = Point3::Zero();

    void check() const {
        if (!(sigma >= 0)) fail_usage("sigma must be >= 0");
        if (!(rho > 0)) fail_usage("rho must be > 0");
        if (!(g > 0)) fail_usage("g must be > 0");
        if (!is_finite(g_dir) || std::abs(g_dir.norm() - 1.0) > 1e-12) fail_usage("g_dir must be a unit vector");
        if (!(w_b >= 0)) fail_usage("w_b must be >= 0");
        if (!(K >= 0)) fail_usage("K must be >= 0");
        if (!(V0 > 0)) fail_usage("V0 must be > 0");
        if (!(support >= 0 && support <= 1)) fail_usage("support must lie in [0, 1]");
    }

    double height(const Point3& x) const { return -g_dir.dot(x - datum); }
};

struct EnergyTerms {
    double tension = 0, gravity = 0, willmore = 0, volume = 0;
    double total() const { return tension + gravity + willmore + volume; }
};

using Gradient = std::vector<Vec3>;

namespace kernel {

// Energy terms evaluated on `x` (positions indexed like mesh.vertices) in
// scalar type T. Double is the production path; fd_check evaluates in
// long double so central differences resolve small gradient components.

template <class T>
T tension(const TriMesh& mesh, const std::vector<Vec3T<T>>& x, const EnergySpec& spec) {
    if (spec.sigma == 0.0) return T(0);
    CompensatedSum<T> sum;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (mesh.facet_role[f] != FacetRole::breast) continue;
        const Facet& t = mesh.facets[f];
        sum += (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]).norm() / T(2);
    }
    return T(spec.sigma) * sum.value();
}

template <class T>
T gravity(const TriMesh& mesh, const std::vector<Vec3T<T>>& x, const EnergySpec& spec) {
    const double scale = spec.support * spec.rho * spec.g;
    if (scale == 0.0) return T(0);
    const Vec3T<T> up = (-spec.g_dir).cast<T>();
    const Vec3T<T> datum = spec.datum.cast<T>();
    CompensatedSum<T> sum;
    for (const Facet& t : mesh.facets) {
        const T h0 = up.dot(x[t[0]] - datum), h1 = up.dot(x[t[1]] - datum), h2 = up.dot(x[t[2]] - datum);
        const T q = h0 * h0 + h1 * h1 + h2 * h2 + h0 * h1 + h1 * h2 + h2 * h0;
        sum += up.dot((x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]])) * q;
    }
    return T(scale) * sum.value() / T(24);
}

template <class T>
T willmore(const TriMesh& mesh, const std::vector<Vec3T<T>>& x, const EnergySpec& spec) {
    if (spec.w_b == 0.0) return T(0);
    std::vector<Vec3T<T>> lap(x.size(), Vec3T<T>::Zero());
    std::vector<T> area(x.size(), T(0));
    for (const Facet& t : mesh.facets) {
        const T a = (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]).norm() / T(2);
        for (int k = 0; k < 3; ++k) {
            const int i = t[(k + 1) % 3], j = t[(k + 2) % 3];
            const Vec3T<T> u = x[i] - x[t[k]], v = x[j] - x[t[k]];
            const T w = u.dot(v) / u.cross(v).norm();
            lap[i] += w * (x[i] - x[j]);
            lap[j] -= w * (x[i] - x[j]);
            area[t[k]] += a / T(3);
        }
    }
    CompensatedSum<T> sum;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_free(v)) continue;
        if (!(area[v] > T(0))) fail_numerical("degenerate star");
        sum += lap[v].squaredNorm() / (T(16) * area[v]);
    }
    return T(spec.w_b) * sum.value();
}

template <class T>
T volume(const TriMesh& mesh, const std::vector<Vec3T<T>>& x, const EnergySpec& spec) {
    if (spec.K == 0.0) return T(0);
    const Vec3T<T> r = x.front();
    CompensatedSum<T> sum;
    for (const Facet& t : mesh.facets) sum += (x[t[0]] - r).dot((x[t[1]] - r).cross(x[t[2]] - r));
    const T dv = sum.value() / T(6) - T(spec.V0);
    return T(0.5 * spec.K) * dv * dv / T(spec.V0);
}

template <class T>
T total(const TriMesh& mesh, const std::vector<Vec3T<T>>& x, const EnergySpec& spec) {
    return tension(mesh, x, spec) + gravity(mesh, x, spec) + willmore(mesh, x, spec) + volume(mesh, x, spec);
}

} // namespace kernel

inline double tension_energy(const TriMesh& mesh, const EnergySpec& spec) {
    return kernel::tension(mesh, mesh.vertices, spec);
}

inline double gravity_energy(const TriMesh& mesh, const EnergySpec& spec) {
    return kernel::gravity(mesh, mesh.vertices, spec);
}

inline double willmore_energy(const TriMesh& mesh, const EnergySpec& spec) {
    return kernel::willmore(mesh, mesh.vertices, spec);
}

inline double volume_energy(const TriMesh& mesh, const EnergySpec& spec) {
    return kernel::volume(mesh, mesh.vertices, spec);
}

inline EnergyTerms energy_terms(const TriMesh& mesh, const EnergySpec& spec) {
    return {tension_energy(mesh, spec), gravity_energy(mesh, spec), willmore_energy(mesh, spec),
            volume_energy(mesh, spec)};
}

inline double total_energy(const TriMesh& mesh, const EnergySpec& spec) { return energy_terms(mesh, spec).total(); }

namespace detail {

inline void add_tension_gradient(const TriMesh& mesh, const EnergySpec& spec, Gradient& grad) {
    if (spec.sigma == 0.0) return;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (mesh.facet_role[f] != FacetRole::breast) continue;
        const auto ga = triangle_area_gradient(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
        for (int k = 0; k < 3; ++k) grad[mesh.facets[f][k]] += spec.sigma * ga[k];
    }
}

inline void add_gravity_gradient(const TriMesh& mesh, const EnergySpec& spec, Gradient& grad) {
    const double scale = spec.support * spec.rho * spec.g / 24.0;
    if (scale == 0.0) return;
    const Vec3 up = -spec.g_dir;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Point3* p[3] = {&mesh.corner(f, 0), &mesh.corner(f, 1), &mesh.corner(f, 2)};
        const double h[3] = {spec.height(*p[0]), spec.height(*p[1]), spec.height(*p[2])};
        const double q = h[0] * h[0] + h[1] * h[1] + h[2] * h[2] + h[0] * h[1] + h[1] * h[2] + h[2] * h[0];
        const double flux = up.dot(area_vector2(*p[0], *p[1], *p[2]));
        for (int k = 0; k < 3; ++k) {
            const Point3& next = *p[(k + 1) % 3];
            const Point3& prev = *p[(k + 2) % 3];
            const Vec3 d_flux = (next - prev).cross(up);
            const Vec3 d_q = (2 * h[k] + h[(k + 1) % 3] + h[(k + 2) % 3]) * up;
            grad[mesh.facets[f][k]] += scale * (d_flux * q + flux * d_q);
        }
    }
}

// With L_i the cotangent Laplacian and A_i the barycentric area, the energy
// is w_b * sum |L_i|^2 / (16 A_i). Its gradient is assembled facet by facet
// from the frozen multipliers lambda_i = dE/dL_i and mu_i = dE/dA_i.
inline void add_willmore_gradient(const TriMesh& mesh, const EnergySpec& spec, Gradient& grad) {
    if (spec.w_b == 0.0) return;
    const auto lap = cotan_laplacian(mesh);
    const auto area = barycentric_vertex_areas(mesh);
    std::vector<Vec3> lambda(mesh.vertices.size(), Vec3::Zero());
    std::vector<double> mu(mesh.vertices.size(), 0.0);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_free(v)) continue;
        if (!(area[v] > 0)) fail_numerical("degenerate star");
        lambda[v] = spec.w_b * lap[v] / (8.0 * area[v]);
        mu[v] = -spec.w_b * lap[v].squaredNorm() / (16.0 * area[v] * area[v]);
    }
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Facet& t = mesh.facets[f];
        const Point3* p[3] = {&mesh.vertices[t[0]], &mesh.vertices[t[1]], &mesh.vertices[t[2]]};
        const double a = triangle_area(*p[0], *p[1], *p[2]);
        if (!(a > 0)) fail_numerical("degenerate star");
        const auto ga = triangle_area_gradient(*p[0], *p[1], *p[2]);
        const double m = (mu[t[0]] + mu[t[1]] + mu[t[2]]) / 3.0;
        for (int k = 0; k < 3; ++k) grad[t[k]] += m * ga[k];

        for (int k = 0; k < 3; ++k) {
            const int i = (k + 1) % 3, j = (k + 2) % 3;
            const Vec3 u = *p[i] - *p[k];
            const Vec3 v = *p[j] - *p[k];
            const double cot = u.dot(v) / (2.0 * a);
            const Vec3 dl = lambda[t[i]] - lambda[t[j]];
            const double c = dl.dot(*p[i] - *p[j]);
            const Vec3 dcot_i = v / (2.0 * a) - cot * ga[i] / a;
            const Vec3 dcot_j = u / (2.0 * a) - cot * ga[j] / a;
            const Vec3 dcot_k = -(u + v) / (2.0 * a) - cot * ga[k] / a;
            grad[t[i]] += c * dcot_i + cot * dl;
            grad[t[j]] += c * dcot_j - cot * dl;
            grad[t[k]] += c * dcot_k;
        }
    }
}

inline void add_volume_gradient(const TriMesh& mesh, const EnergySpec& spec, Gradient& grad) {
    if (spec.K == 0.0) return;
    const double factor = spec.K * (enclosed_volume(mesh) - spec.V0) / spec.V0;
    const auto gv = volume_gradient(mesh);
    for (std::size_t v = 0; v < grad.size(); ++v) grad[v] += factor * gv[v];
}

} // namespace detail

// dE/dx per vertex; fixed vertices carry zero.
inline Gradient energy_gradient(const TriMesh& mesh, const EnergySpec& spec) {
    Gradient grad(mesh.vertices.size(), Vec3::Zero());
    detail::add_tension_gradient(mesh, spec, grad);
    detail::add_gravity_gradient(mesh, spec, grad);
    detail::add_willmore_gradient(mesh, spec, grad);
    detail::add_volume_gradient(mesh, spec, grad);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (!mesh.is_free(v)) grad[v].setZero();
    return grad;
}

// Worst disagreement between the analytic gradient and central differences
// over all free coordinates: relative error, or absolute error where the
// analytic component is below 1e-8. Energies are re-evaluated in long double.
inline double fd_check(const TriMesh& mesh, const EnergySpec& spec, double step) {
    using Real = long double;
    if (!(step > 0)) fail_usage("fd step must be positive");
    const Gradient grad = energy_gradient(mesh, spec);
    std::vector<Vec3T<Real>> x(mesh.vertices.size());
    for (std::size_t v = 0; v < x.size(); ++v) x[v] = mesh.vertices[v].cast<Real>();
    const Real h = step;
    double worst = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_free(v)) continue;
        for (int c = 0; c < 3; ++c) {
            const Real x0 = x[v][c];
            x[v][c] = x0 + h;
            const Real ep = kernel::total(mesh, x, spec);
            x[v][c] = x0 - h;
            const Real em = kernel::total(mesh, x, spec);
            x[v][c] = x0;
            const double fd = static_cast<double>((ep - em) / (2 * h));
            const double an = grad[v][c];
            const double err = std::abs(an) < 1e-8 ? std::abs(an - fd) : std::abs(an - fd) / std::abs(an);
            worst = std::max(worst, err);
        }
    }
    return worst;
}

} // namespace bsim
