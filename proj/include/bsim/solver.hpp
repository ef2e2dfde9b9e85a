#pragma once

// Projected gradient descent with backtracking over the free vertices,
// subject to one-sided plane obstacles and an optional hard volume target.
//
// A step moves every free vertex by t * d_i / max_j |d_j|, so the step
// length t is the largest vertex displacement in cm.

#include "bsim/energy.hpp"
#include "bsim/maintenance.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace bsim {

inline constexpr double contact_tolerance = 1e-9; // cm
inline constexpr double min_step = 1e-12;         // cm

struct Obstacle {
    Plane plane; // admissible side: (x - point) . normal >= 0
    std::string label;

    double gap(const Point3& x) const { return plane.signed_distance(x); }
};

struct Contact {
    int vertex;
    int obstacle;
};

struct SolverParams {
    int max_iters = 5000;
    double step0 = 0.1;
    double shrink = 0.5;
    double grad_tol = 1e-6;
    double energy_tol = 1e-12;
    bool hard_volume = false;
    double volume_tol = 1e-9;
    int maintenance_interval = 50;
    // Move vertices along their normals only; tangential gradient components
    // merely slide vertices within the surface and collapse facets.
    bool normal_motion = true;

    void check() const {
        if (max_iters < 1) fail_usage("max_iters must be >= 1");
        if (!(step0 > 0)) fail_usage("step0 must be > 0");
        if (!(shrink > 0 && shrink < 1)) fail_usage("shrink must lie in (0, 1)");
        if (!(grad_tol > 0) || !(energy_tol > 0) || !(volume_tol > 0)) fail_usage("tolerances must be > 0");
        if (maintenance_interval < 0) fail_usage("maintenance_interval must be >= 0");
    }
};

// Projects free vertices onto the admissible side of every obstacle.
inline std::pair<TriMesh, std::vector<Contact>> enforce_obstacles(TriMesh mesh, const std::vector<Obstacle>& obstacles) {
    std::vector<Contact> active;
    if (obstacles.empty()) return {std::move(mesh), active};
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_free(v)) continue;
        for (const Obstacle& o : obstacles)
            if (o.gap(mesh.vertices[v]) < -contact_tolerance) fail_numerical("infeasible fixed geometry");
    }
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_free(v)) continue;
        Point3& x = mesh.vertices[v];
        // Alternating projections; one pass suffices unless planes interact.
        for (int pass = 0; pass < 8; ++pass) {
            bool moved = false;
            for (const Obstacle& o : obstacles) {
                const double d = o.gap(x);
                if (d < 0) {
                    x -= d * o.plane.normal;
                    moved = true;
                }
            }
            if (!moved) break;
        }
        for (int k = 0; k < static_cast<int>(obstacles.size()); ++k) {
            const double d = obstacles[k].gap(x);
            if (d < -contact_tolerance) fail_numerical("infeasible obstacle set at vertex " + std::to_string(v));
            if (d <= contact_tolerance) active.push_back({v, k});
        }
    }
    return {std::move(mesh), active};
}

inline TriMesh project_volume(TriMesh mesh, double target, double volume_tol = 1e-9) {
    restore_volume(mesh, target, volume_tol, 50);
    return mesh;
}

struct StepResult {
    TriMesh mesh;
    double energy = 0;
    double step_len = 0;
    double grad_norm = 0; // projected gradient norm before the move
};

// Descent direction: -gradient, reduced to its vertex-normal components when
// normal_motion is set, with the volume-gradient component removed in hard
// mode and outward components removed at active contacts.
inline Gradient descent_direction(const TriMesh& mesh, const EnergySpec& spec, const std::vector<Obstacle>& obstacles,
                                  const std::vector<Contact>& contacts, const SolverParams& params) {
    Gradient d = energy_gradient(mesh, spec);
    for (Vec3& x : d) x = -x;
    if (params.normal_motion) {
        const auto n = vertex_normals(mesh);
        for (int v = 0; v < mesh.num_vertices(); ++v) d[v] = d[v].dot(n[v]) * n[v];
    }
    if (params.hard_volume) {
        auto gv = volume_gradient(mesh);
        double dot = 0, nn = 0;
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (!mesh.is_free(v)) continue;
            dot += d[v].dot(gv[v]);
            nn += gv[v].squaredNorm();
        }
        if (nn > 0)
            for (int v = 0; v < mesh.num_vertices(); ++v)
                if (mesh.is_free(v)) d[v] -= (dot / nn) * gv[v];
    }
    for (const Contact& c : contacts) {
        const Vec3& n = obstacles[c.obstacle].plane.normal;
        const double out = d[c.vertex].dot(n);
        if (out < 0) d[c.vertex] -= out * n;
    }
    return d;
}

inline double norm_of(const Gradient& g) {
    double s = 0;
    for (const Vec3& x : g) s += x.squaredNorm();
    return std::sqrt(s);
}

// Backtracking along d from a first trial displacement t0 (cm). Accepts the
// first trial that strictly lowers the energy.
inline StepResult line_search(const TriMesh& mesh, const EnergySpec& spec, const std::vector<Obstacle>& obstacles,
                              const SolverParams& params, const Gradient& d, double e0, double t0) {
    StepResult result{mesh, e0, 0.0, norm_of(d)};
    double dmax = 0;
    for (const Vec3& x : d) dmax = std::max(dmax, x.norm());
    if (dmax == 0) return result;
    for (double t = t0; t >= min_step; t *= params.shrink) {
        TriMesh trial = mesh;
        for (int v = 0; v < trial.num_vertices(); ++v)
            if (trial.is_free(v)) trial.vertices[v] += (t / dmax) * d[v];
        try {
            if (params.hard_volume) trial = project_volume(std::move(trial), spec.V0, params.volume_tol);
            trial = enforce_obstacles(std::move(trial), obstacles).first;
            const double e = total_energy(trial, spec);
            if (e < e0) {
                result.mesh = std::move(trial);
                result.energy = e;
                result.step_len = t;
                return result;
            }
        } catch (const Error& err) {
            if (err.kind() != ErrorKind::numerical) throw;
            // An overlong trial can tangle facets; shrink and retry.
        }
    }
    return result;
}

inline StepResult step(const TriMesh& mesh, const EnergySpec& spec, const std::vector<Obstacle>& obstacles,
                       const SolverParams& params) {
    const auto contacts = enforce_obstacles(mesh, obstacles).second;
    const Gradient d = descent_direction(mesh, spec, obstacles, contacts, params);
    return line_search(mesh, spec, obstacles, params, d, total_energy(mesh, spec), params.step0);
}

struct IterationLog {
    int iteration;
    double energy;
    double step_len;
    double grad_norm;
    const TriMesh& mesh;
};

struct MinimizeReport {
    int iters = 0;
    double final_energy = 0;
    double final_grad_norm = 0;
    bool converged = false;
    int maintenance_applied = 0;
    int maintenance_rolled_back = 0;
};

struct MinimizeResult {
    TriMesh mesh;
    MinimizeReport report;
};

using IterationObserver = std::function<void(const IterationLog&)>;

// Iterates `step` until the projected gradient norm drops below grad_tol,
// the relative energy change stays below energy_tol for 10 consecutive
// iterations, the step vanishes, or max_iters is reached. Every
// maintenance_interval iterations the mesh is equiangulated and vertex-
// averaged; that pass is kept only if it does not raise the energy.
inline MinimizeResult minimize(TriMesh mesh, const EnergySpec& spec, const std::vector<Obstacle>& obstacles,
                               const SolverParams& params, const IterationObserver& observer = {}) {
    spec.check();
    params.check();
    if (params.hard_volume) mesh = project_volume(std::move(mesh), spec.V0, params.volume_tol);
    mesh = enforce_obstacles(std::move(mesh), obstacles).first;

    MinimizeResult out{std::move(mesh), {}};
    MinimizeReport& rep = out.report;
    double energy = total_energy(out.mesh, spec);
    double last_step = params.step0;
    int quiet = 0;
    if (observer) observer({0, energy, 0.0, 0.0, out.mesh});

    // Previous iterate and direction for the Barzilai-Borwein trial step.
    std::vector<Point3> prev_x;
    Gradient prev_d;
    for (int it = 1; it <= params.max_iters; ++it) {
        const auto contacts = enforce_obstacles(out.mesh, obstacles).second;
        const Gradient d = descent_direction(out.mesh, spec, obstacles, contacts, params);
        double trial = std::min(params.step0, 2.0 * last_step);
        if (!prev_x.empty()) {
            double ss = 0, sy = 0, dmax = 0;
            for (int v = 0; v < out.mesh.num_vertices(); ++v) {
                if (!out.mesh.is_free(v)) continue;
                const Vec3 s = out.mesh.vertices[v] - prev_x[v];
                ss += s.squaredNorm();
                sy -= s.dot(d[v] - prev_d[v]);
                dmax = std::max(dmax, d[v].norm());
            }
            if (sy > 0 && ss > 0) trial = std::min(params.step0, ss / sy * dmax);
        }
        StepResult r = line_search(out.mesh, spec, obstacles, params, d, energy, trial);
        rep.iters = it;
        if (r.grad_norm <= params.grad_tol || r.step_len == 0.0) {
            rep.converged = true;
            break;
        }
        const double rel = std::abs(energy - r.energy) / std::max(std::abs(r.energy), 1e-300);
        quiet = rel <= params.energy_tol ? quiet + 1 : 0;
        prev_x = out.mesh.vertices;
        prev_d = d;
        out.mesh = std::move(r.mesh);
        energy = r.energy;
        last_step = r.step_len;

        if (params.maintenance_interval > 0 && it % params.maintenance_interval == 0) {
            try {
                TriMesh candidate = vertex_average(equiangulate(out.mesh));
                if (params.hard_volume) candidate = project_volume(std::move(candidate), spec.V0, params.volume_tol);
                candidate = enforce_obstacles(std::move(candidate), obstacles).first;
                const double e = total_energy(candidate, spec);
                if (e <= energy) {
                    out.mesh = std::move(candidate);
                    prev_x.clear();
                    energy = e;
                    ++rep.maintenance_applied;
                } else {
                    ++rep.maintenance_rolled_back;
                }
            } catch (const Error& err) {
                if (err.kind() != ErrorKind::numerical) throw;
                ++rep.maintenance_rolled_back;
            }
        }
        if (observer) observer({it, energy, r.step_len, r.grad_norm, out.mesh});
        if (quiet >= 10) {
            rep.converged = true;
            break;
        }
    }
    rep.final_energy = energy;
    const auto contacts = enforce_obstacles(out.mesh, obstacles).second;
    rep.final_grad_norm = norm_of(descent_direction(out.mesh, spec, obstacles, contacts, params));
    return out;
}

} // namespace bsim
